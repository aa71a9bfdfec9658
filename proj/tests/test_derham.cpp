#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"
#include "wkam/derham.hpp"

using namespace wkam;
using namespace wkam::testing;

TEST(Profile, BoundaryBehaviour) {
    EXPECT_EQ(DeRhamMap::profile(0.2), 0.2);
    EXPECT_EQ(DeRhamMap::profile(1.0 / 3.0), 1.0 / 3.0);
    EXPECT_NEAR(DeRhamMap::profile(2.0 / 3.0) / std::exp(9.0), 1.0, 1e-12);
    EXPECT_EQ(DeRhamMap::profile(0.8), std::exp(1.0 / ((0.8 - 1.0) * (0.8 - 1.0))));
}

TEST(Profile, StrictlyIncreasingOnDenseSample) {
    double prev = -1.0;
    const int N = 10000;
    for (int k = 0; k < N; ++k) {
        const double r = 0.95 * k / (N - 1.0);
        const double v = DeRhamMap::profile(r);
        EXPECT_GT(v, prev) << "r=" << r;
        prev = v;
    }
}

TEST(Profile, MapIsOddAndInvertible) {
    Rng rng(51);
    std::uniform_real_distribution<double> U(-0.96, 0.96);
    for (int k = 0; k < 2000; ++k) {
        const double x = U(rng);
        EXPECT_EQ(DeRhamMap::map(-x), -DeRhamMap::map(x));
        EXPECT_NEAR(DeRhamMap::inverse(DeRhamMap::map(x)), x, 1e-10);
    }
}

TEST(Flow, Examples) {
    for (double x : {-0.9, -0.5, 0.0, 0.2, 0.7}) EXPECT_EQ(flow(0.0, x), x);
    EXPECT_EQ(flow(0.1, 0.0), 0.1);
    for (double y : {-0.7, 0.01, 0.9}) {
        EXPECT_EQ(flow(y, 1.5), 1.5);
        EXPECT_EQ(flow(y, -1.0), -1.0);
        EXPECT_EQ(flow(y, 1.0), 1.0);
    }
}

TEST(Flow, StaysInsideBallAndIsMonotone) {
    Rng rng(52);
    std::uniform_real_distribution<double> U(-0.999, 0.999), Y(-0.9, 0.9);
    for (int k = 0; k < 2000; ++k) {
        const double x = U(rng), x2 = U(rng), y = Y(rng);
        const double fx = flow(y, x);
        EXPECT_LT(std::abs(fx), 1.0);
        if (x < x2) {
            EXPECT_LE(fx, flow(y, x2));
        }
    }
}

TEST(GroupLaw, InversePairsAndRandomPairs) {
    Rng rng(53);
    std::uniform_real_distribution<double> U(-0.999, 0.999), Y(-0.5, 0.5);
    std::vector<double> xs(1000);
    for (auto& x : xs) x = U(rng);
    EXPECT_LE(group_law_defect(0.0, 0.0, xs), 1e-10);
    EXPECT_LE(group_law_defect(0.0, 0.3, xs), 1e-10);
    for (int k = 0; k < 20; ++k) {
        const double y = Y(rng);
        EXPECT_LE(group_law_defect(y, -y, xs), 1e-8);
        EXPECT_LE(group_law_defect(y, Y(rng), xs), 1e-8);
    }
}

TEST(Quadrature, WeightsNormalisedAndSymmetric) {
    for (std::size_t M : {64u, 100u, 4096u}) {
        Quadrature q(M);
        double s = 0.0;
        for (double w : q.w) s += w;
        EXPECT_NEAR(s, 1.0, 1e-10);
        for (std::size_t k = 0; k < M; ++k) {
            EXPECT_EQ(q.w[k], q.w[M - 1 - k]);
            EXPECT_NEAR(q.s[k], -q.s[M - 1 - k], 1e-15);
        }
    }
}

TEST(MollifyLocal, ConstantIsExact) {
    auto d = interval(201);
    auto f = GridFunction::constant(d, 2.75);
    EXPECT_EQ(mollify_local(f, 0.0, 0.6, {0.4, quadrature_count(0.4, 0.6, d.spacing())}), f);
}

TEST(MollifyLocal, AffineInTranslationRegion) {
    auto d = interval(401);
    auto f = GridFunction::sample(d, [](double x) { return 0.3 - 1.7 * x; });
    const double c = 0.1, rho = 0.6, eta = 0.2;
    auto g = mollify_local(f, c, rho, {eta, quadrature_count(eta, rho, d.spacing())});
    for (std::size_t i = 0; i < d.size(); ++i) {
        const double z = std::abs(d.node(i) - c) / rho;
        if (z + eta <= 1.0 / 3.0) {
            EXPECT_NEAR(g[i], f[i], 1e-8);
        }
    }
}

TEST(MollifyLocal, OutsideBallIsBitExact) {
    Rng rng(54);
    for (auto d : {interval(300), circle(300)}) {
        auto f = random_function(d, rng);
        const double c = d.node(120), rho = 0.37;
        auto g = mollify_local(f, c, rho, {0.3, 64});
        for (std::size_t i = 0; i < d.size(); ++i)
            if (d.metric(d.node(i), c) >= rho) {
                EXPECT_EQ(g[i], f[i]);
            }
    }
}

TEST(MollifyLocal, RejectsBallOutsideInterval) {
    auto d = interval(50);
    EXPECT_THROW(mollify_local(GridFunction::constant(d, 0.0), 0.9, 0.2, {0.2, 64}), std::invalid_argument);
}

namespace {
GridFunction kinked(const GridDomain& d, double x0, double slope_jump) {
    return GridFunction::sample(d, [&](double x) { return 0.2 * std::sin(3 * x) + slope_jump * std::abs(x - x0); });
}
} // namespace

TEST(SmoothOnOpen, ZeroEpsIsIdentity) {
    Rng rng(55);
    auto d = circle(128);
    auto f = random_function(d, rng);
    EXPECT_EQ(smooth_on_open(f, GridFunction::constant(d, 0.0)), f);
}

TEST(SmoothOnOpen, KinkIsSmoothedLocally) {
    auto d = interval(513);
    auto f = kinked(d, 0.1, 0.5);
    auto eps = GridFunction::sample(d, [](double x) { return std::abs(x - 0.1) < 0.4 ? 0.01 : 0.0; });
    SmoothingReport rep;
    auto g = smooth_on_open(f, eps, 0, &rep);
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (eps[i] == 0.0) {
            EXPECT_EQ(g[i], f[i]);
        }
        EXPECT_LE(std::abs(g[i] - f[i]), eps[i]);
    }
    EXPECT_LE(rep.max_budget_ratio, 1.0);
    EXPECT_LE(rep.c11_after, rep.c11_before + 1.0 + 1e-6);
    // third differences near the kink drop by at least a factor of five
    auto t3f = third_difference(f), t3g = third_difference(g);
    const double h = d.spacing();
    double before = 0, after = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (std::abs(d.node(i) - 0.1) < 0.05) {
            before = std::max(before, std::abs(t3f[i]) / (h * h * h));
            after = std::max(after, std::abs(t3g[i]) / (h * h * h));
        }
    EXPECT_LE(after, before / 5);
    EXPECT_GT(before, 0.5 / (h * h));
}

TEST(SmoothOnOpen, SmoothInputBarelyMoves) {
    auto d = circle(256);
    auto f = GridFunction::sample(d, [](double x) { return std::cos(2 * std::numbers::pi * x); });
    auto eps = GridFunction::constant(d, 1e-3);
    SmoothingReport rep;
    auto g = smooth_on_open(f, eps, 1, &rep);
    EXPECT_LE(sup_distance(f, g), 1e-3);
    EXPECT_LE(rep.c11_after, rep.c11_before + 1e-6 + 1.0);
}
