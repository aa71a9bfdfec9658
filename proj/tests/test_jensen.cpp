#include <gtest/gtest.h>

#include <limits>

#include "support.hpp"
#include "wkam/jensen.hpp"
#include "wkam/oracle.hpp"

using namespace wkam;
using namespace wkam::testing;

namespace {
GridDomain c4() { return make_grid(DomainKind::circle, 0.0, 4.0, 4); }
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Lipschitz subsolution with kinks for d²/t + V + W: the largest subsolution below a
// random function, lifted once by T⁻.
GridFunction kinked_subsolution(const Cost& c, Rng& rng) { return random_subsolution(c, rng, 0.5); }
} // namespace

TEST(JMinus, Examples) {
    EXPECT_EQ(j_minus(1.0, from(c4(), {0, 0, 3, 0})), from(c4(), {0, 0, 1, 0}));
    EXPECT_EQ(j_minus(1.0, from(c4(), {0, 1, 2, 1})), from(c4(), {0, 1, 2, 1}));
    for (double t : {0.01, 1.0, 100.0}) {
        auto k = GridFunction::constant(circle(17), -0.75);
        EXPECT_EQ(j_minus(t, k), k);
        EXPECT_EQ(j_plus(t, k), k);
    }
    EXPECT_THROW(j_minus(0.0, from(c4(), {0, 0, 0, 0})), std::invalid_argument);
    EXPECT_THROW(j_plus(-1.0, from(c4(), {0, 0, 0, 0})), std::invalid_argument);
}

TEST(JPlus, Examples) {
    EXPECT_EQ(j_plus(1.0, from(c4(), {0, 0, 3, 0})), from(c4(), {0, 2, 3, 2}));
}

TEST(JPlus, DualityIsExact) {
    Rng rng(31);
    for (int rep = 0; rep < 50; ++rep) {
        auto d = rep % 2 ? circle(77) : interval(60);
        auto u = random_function(d, rng);
        EXPECT_EQ(j_plus(0.05 + rep * 0.01, u), -j_minus(0.05 + rep * 0.01, -u));
    }
}

TEST(JMinus, LargeGridMatchesOracle) {
    Rng rng(32);
    for (std::size_t n : {4096u, 3001u}) {
        for (auto d : {circle(n, 1.0), interval(n, 0.0, 2.0)}) {
            auto u = random_function(d, rng);
            std::vector<std::size_t> a1, a2;
            EXPECT_EQ(j_minus_argmin(1e-3, u, a1), oracle::brute_moreau(1e-3, u, oracle::Sign::minus, &a2));
            EXPECT_EQ(a1, a2);
        }
    }
}

TEST(JensenProperties, SemigroupOrdering) {
    Rng rng(33);
    for (int rep = 0; rep < 50; ++rep) {
        auto d = rep % 2 ? circle(64) : interval(64);
        auto u = random_function(d, rng);
        const double t = 0.01 * (1 + rep % 5), s = 2.5 * t;
        auto ms = j_minus(s, u), mt = j_minus(t, u), pt = j_plus(t, u), ps = j_plus(s, u);
        const auto lo = GridFunction::constant(d, u.min()), hi = GridFunction::constant(d, u.max());
        EXPECT_LE(max_excess(lo, ms), 0.0);
        EXPECT_LE(max_excess(ms, mt), 0.0);
        EXPECT_LE(max_excess(mt, u), 0.0);
        EXPECT_LE(max_excess(u, pt), 0.0);
        EXPECT_LE(max_excess(pt, ps), 0.0);
        EXPECT_LE(max_excess(ps, hi), 0.0);
    }
}

TEST(JensenProperties, MonotoneInArgument) {
    Rng rng(34);
    auto d = circle(80);
    for (int rep = 0; rep < 50; ++rep) {
        auto u = random_function(d, rng);
        auto v = u + map(random_function(d, rng), [](double x) { return std::abs(x); });
        EXPECT_LE(max_excess(j_minus(0.02, u), j_minus(0.02, v)), 0.0);
        EXPECT_LE(max_excess(j_plus(0.02, u), j_plus(0.02, v)), 0.0);
    }
}

TEST(JensenProperties, CompositionInequalitiesExactOnDyadicData) {
    Rng rng(35);
    auto d = circle(64);
    for (int rep = 0; rep < 50; ++rep) {
        auto u = random_dyadic_function(d, rng);
        const double t = std::ldexp(1.0, -4 - rep % 4);
        EXPECT_LE(max_excess(u, j_minus(t, j_plus(t, u))), 0.0);
        EXPECT_LE(max_excess(j_plus(t, j_minus(t, u)), u), 0.0);
    }
}

TEST(JensenProperties, CompositionInequalitiesWithinRounding) {
    Rng rng(36);
    auto d = interval(101);
    for (int rep = 0; rep < 50; ++rep) {
        auto u = random_function(d, rng);
        EXPECT_LE(max_excess(u, j_minus(0.03, j_plus(0.03, u))), 4 * kEps);
        EXPECT_LE(max_excess(j_plus(0.03, j_minus(0.03, u)), u), 4 * kEps);
    }
}

TEST(JensenProperties, JMinusIsSemiconcave) {
    Rng rng(37);
    for (int rep = 0; rep < 50; ++rep) {
        auto d = rep % 2 ? circle(128) : interval(128);
        auto u = random_function(d, rng);
        const double t = 0.001 * (1 + rep);
        auto m = j_minus(t, u);
        EXPECT_LE(regularity_certificate(m).semiconcavity_constant, 1.0 / t + regularity_slack(m));
        auto p = j_plus(t, u);
        EXPECT_LE(regularity_certificate(p).semiconvexity_constant, 1.0 / t + regularity_slack(p));
    }
}

TEST(JensenProperties, SemiconcaveInputIsNearlyFixed) {
    // u − x²/t concave; the grid closing error scales like h², independently of N
    Rng rng(38);
    const double t = 0.05;
    std::uniform_real_distribution<double> U(0, 1);
    for (int rep = 0; rep < 10; ++rep) {
        const double a1 = U(rng), a2 = U(rng), p1 = U(rng), p2 = U(rng);
        auto f = [&](double x) {
            return a1 * std::cos(2 * std::numbers::pi * (x + p1)) + a2 * std::sin(4 * std::numbers::pi * (x + p2)) / 4;
        };
        // continuum semiconcavity estimated on a fine grid, then scaled to 0.8/t; right at
        // 1/t the inner minimisation is flat and the constant degrades like 1/margin
        const double curv = regularity_certificate(GridFunction::sample(circle(1 << 14), f)).semiconcavity_constant;
        const double scale = 1.0 / (t * curv * 1.25);
        std::vector<double> ratio;
        for (std::size_t n : {256u, 1024u, 4096u}) {
            auto d = circle(n);
            auto u = scale * GridFunction::sample(d, f);
            const double err = sup_distance(j_minus(t, j_plus(t, u)), u);
            const double h = d.spacing();
            ratio.push_back(err / (h * h));
            if (n == 1024) {
                EXPECT_LE(err, 0.01 * u.range());
            }
        }
        EXPECT_LE(ratio[1], 1.5 * ratio[0] + 1e-6);
        EXPECT_LE(ratio[2], 1.5 * ratio[0] + 1e-6);
    }
}

TEST(JensenProperties, SemigroupDefectBound) {
    Rng rng(39);
    for (int rep = 0; rep < 50; ++rep) {
        auto d = rep % 2 ? circle(200) : interval(200);
        auto u = random_function(d, rng);
        const double t = 0.002 * (1 + rep % 7), s = 0.003 * (1 + rep % 3);
        const double defect = sup_distance(j_minus(t, j_minus(s, u)), j_minus(t + s, u));
        const double h = d.spacing();
        EXPECT_LE(defect, 0.25 * h * h * (1 / t + 1 / s) + 8 * kEps);
    }
}

TEST(Hull, BetweenInputAndGridComposition) {
    Rng rng(40);
    for (int rep = 0; rep < 50; ++rep) {
        auto d = rep % 2 ? circle(150) : interval(150);
        auto u = random_function(d, rng);
        const double t = 0.0005 * (1 + rep);
        auto c = semiconcave_hull(t, u);
        EXPECT_LE(max_excess(u, c), 0.0);
        EXPECT_LE(max_excess(c, j_minus(t, j_plus(t, u))), 8 * kEps);
        EXPECT_LE(regularity_certificate(c).semiconcavity_constant, 1.0 / t + regularity_slack(c));
        auto o = semiconvex_hull(t, u);
        EXPECT_LE(max_excess(o, u), 0.0);
        EXPECT_LE(regularity_certificate(o).semiconvexity_constant, 1.0 / t + regularity_slack(o));
    }
}

TEST(Hull, FixesAdmissibleFunctionsAndIsIdempotent) {
    Rng rng(41);
    auto d = circle(90);
    for (int rep = 0; rep < 20; ++rep) {
        auto u = random_function(d, rng);
        auto c = semiconcave_hull(0.01, u);
        EXPECT_LE(sup_distance(semiconcave_hull(0.01, c), c), 8 * kEps);
        EXPECT_LE(sup_distance(semiconcave_hull(0.005, c), c), 8 * kEps);
    }
}

TEST(Hull, CircleTilingMatchesWiderTiling) {
    // reference: hull of five copies, read off the middle one
    Rng rng(42);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 40;
        auto d = circle(n);
        auto u = random_function(d, rng);
        const double t = 0.002 * (1 + rep) * (1 + rep);
        auto wide = make_grid(DomainKind::interval, 0.0, 5.0 - d.spacing(), 5 * n);
        std::vector<double> w(5 * n);
        for (std::size_t i = 0; i < 5 * n; ++i) w[i] = u[i % n];
        auto cw = semiconcave_hull(t, GridFunction(wide, w));
        auto c = semiconcave_hull(t, u);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(c[i], cw[2 * n + i], 1e-13);
    }
}

TEST(RegularizeUniform, CalibratedIsFixed) {
    auto u = from(c4(), {0, 1, 2, 1});
    auto r = regularize_uniform(Cost::quadratic(c4(), 1.0), u, {0.25, 0.25, JensenVariant::minus_plus_minus});
    EXPECT_EQ(r.w, u);
    EXPECT_TRUE(r.cert.sandwich_holds());
}

TEST(RegularizeUniform, ZeroIsFixed) {
    auto d = c4();
    auto c = Cost::quad_plus_potential(d, 1.0, GridFunction::constant(d, 1.0), GridFunction::constant(d, 0.0));
    for (auto v : {JensenVariant::minus_plus_minus, JensenVariant::plus_minus_plus}) {
        auto r = regularize_uniform(c, GridFunction::constant(d, 0.0), {0.25, 0.25, v});
        EXPECT_EQ(r.w, GridFunction::constant(d, 0.0));
        EXPECT_EQ(r.cert.sup_change, 0.0);
    }
}

TEST(RegularizeUniform, RejectsLargeParameters) {
    auto d = circle(32);
    auto c = Cost::quadratic(d, 1.0);
    const double K = estimate_K(c).K;
    try {
        regularize_uniform(c, GridFunction::constant(d, 0.0), {1.0 / K, 0.1, JensenVariant::minus_plus_minus});
        FAIL() << "expected PreconditionError";
    } catch (const PreconditionError& e) {
        EXPECT_NE(std::string(e.what()).find("1/K"), std::string::npos);
    }
}

TEST(RegularizeUniform, RejectsNonSubsolution) {
    EXPECT_THROW(regularize_uniform(Cost::quadratic(c4(), 1.0), from(c4(), {0, 0, 3, 0}), {0.25, 0.25, JensenVariant::minus_plus_minus}),
                 PreconditionError);
}

TEST(RegularizeUniform, SandwichAndRegularity) {
    Rng rng(43);
    for (int rep = 0; rep < 20; ++rep) {
        auto d = rep % 2 ? circle(256) : interval(256);
        auto c = random_potential_cost(d, rng, 0.5);
        auto u = kinked_subsolution(c, rng);
        const double K = estimate_K(c).K;
        for (auto v : {JensenVariant::minus_plus_minus, JensenVariant::plus_minus_plus}) {
            auto r = regularize_uniform(c, u, {0.4 / K, 0.3 / K, v});
            EXPECT_TRUE(r.cert.sandwich_holds()) << r.cert.sandwich_low_defect << " " << r.cert.sandwich_high_defect;
            EXPECT_TRUE(r.cert.regularity_holds());
            EXPECT_TRUE(analyze(c, r.w).is_subsolution);
        }
    }
}

TEST(RegularizeUniform, ConvergesAsParametersShrink) {
    Rng rng(44);
    auto d = circle(512);
    for (int rep = 0; rep < 5; ++rep) {
        auto c = random_potential_cost(d, rng, 0.5);
        auto u = kinked_subsolution(c, rng);
        const double K = estimate_K(c).K;
        double prev = std::numeric_limits<double>::infinity();
        for (double f : {0.2, 0.1, 0.05}) {
            const double ch = regularize_uniform(c, u, {f / K, f / K, JensenVariant::minus_plus_minus}).cert.sup_change;
            EXPECT_LE(ch, prev);
            prev = ch;
        }
    }
}

TEST(SelectTs, FirstRungForZeroAndFixedPoints) {
    auto d = circle(64);
    auto c = Cost::quad_plus_potential(d, 1.0, GridFunction::constant(d, 1.0), GridFunction::constant(d, 0.0));
    const double K = estimate_K(c).K;
    auto p = select_ts(c, GridFunction::constant(d, 0.0), 1e-12);
    EXPECT_EQ(p.t, 0.9 / K);
    Rng rng(45);
    auto u = random_subsolution(c, rng, 0.3);
    auto w = regularize_uniform(c, u, {0.9 / K, 0.9 / K, JensenVariant::minus_plus_minus}).w;
    auto q = select_ts(c, w, 1e-9);
    EXPECT_EQ(q.t, 0.9 / K);
}

TEST(SelectTs, MeetsEpsPostHoc) {
    Rng rng(46);
    auto d = circle(1024);
    auto c = random_potential_cost(d, rng, 0.5);
    auto u = kinked_subsolution(c, rng);
    auto p = select_ts(c, u, 1e-2);
    EXPECT_LE(regularize_uniform(c, u, p).cert.sup_change, 1e-2);
}
