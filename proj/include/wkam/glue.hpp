#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "wkam/cost.hpp"
#include "wkam/derham.hpp"
#include "wkam/domain.hpp"
#include "wkam/error.hpp"
#include "wkam/jensen.hpp"
#include "wkam/jensen_transforms.hpp"
#include "wkam/lax.hpp"
#include "wkam/parallel.hpp"

namespace wkam {

/**
 * One interval chart of the circle. φ(z) = arc_center + z·arc_half_length maps the
 * padded window [−3, 3] onto a neighbourhood of the arc; the arc itself is |z| < 1.
 * The half-length is a whole number m of manifold steps, so chart node k sits over
 * manifold node center_node + (k − 3m) and the chart grid has spacing 1/m.
 */
struct Chart {
    double arc_center = 0.0;
    double arc_half_length = 0.0;
    GridDomain chart_grid;
    std::size_t center_node = 0;
    long m = 0;

    /// Manifold node under chart node k, or npos outside the open arc.
    std::size_t manifold_node(std::size_t k, std::size_t n) const {
        const long off = static_cast<long>(k) - 3 * m;
        if (off <= -m || off >= m) return npos;
        const long N = static_cast<long>(n);
        return static_cast<std::size_t>(((static_cast<long>(center_node) + off) % N + N) % N);
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

struct Atlas {
    std::vector<Chart> charts;
    std::vector<GridFunction> partition;             ///< g_i on the manifold grid
    std::vector<std::vector<std::size_t>> overlap_sets; ///< A_i, including i
    std::vector<std::size_t> cardinals;              ///< e_i = |A_i|

    const GridDomain& domain() const { return partition.front().domain(); }
    std::size_t size() const { return charts.size(); }
};

inline double bump(double z) { return std::abs(z) < 1.0 ? std::exp(-1.0 / (1.0 - z * z)) : 0.0; }

/// Evenly spaced arcs of length L(1+overlap)/n_charts, centres and half-lengths snapped
/// to the grid, with the normalised bump partition.
inline Atlas make_atlas(const GridDomain& d, std::size_t n_charts, double overlap_fraction) {
    if (!d.periodic()) throw InvalidDomain("make_atlas: charts are built on circle domains");
    if (n_charts < 2) throw std::invalid_argument("make_atlas: one interval chart cannot cover a circle");
    if (!(overlap_fraction > 0.0 && overlap_fraction < 1.0))
        throw std::invalid_argument("make_atlas: overlap_fraction must lie in (0,1)");
    const std::size_t n = d.size();
    const double h = d.spacing(), L = d.length();
    const double half = L * (1.0 + overlap_fraction) / (2.0 * static_cast<double>(n_charts));
    const long m = std::lround(half / h);
    // the open arc holds 2m − 1 nodes, so it reaches all but one node when 2m = n
    if (2 * m > static_cast<long>(n))
        throw std::invalid_argument("make_atlas: arcs of half-length " + format_double(half) +
                                    " wrap around the circle of length " + format_double(L));
    if (m < 2) throw std::invalid_argument("make_atlas: arcs span fewer than two grid steps");

    Atlas at;
    for (std::size_t i = 0; i < n_charts; ++i) {
        Chart ch;
        ch.center_node = static_cast<std::size_t>(std::lround(static_cast<double>(i * n) / static_cast<double>(n_charts))) % n;
        ch.arc_center = d.node(ch.center_node);
        ch.m = m;
        ch.arc_half_length = static_cast<double>(m) * h;
        ch.chart_grid = make_grid(DomainKind::interval, -3.0, 6.0, static_cast<std::size_t>(6 * m + 1));
        at.charts.push_back(ch);
    }

    std::vector<std::vector<double>> b(n_charts, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n_charts; ++i) {
        const auto& ch = at.charts[i];
        for (long off = -m + 1; off < m; ++off) {
            const long N = static_cast<long>(n);
            const auto x = static_cast<std::size_t>(((static_cast<long>(ch.center_node) + off) % N + N) % N);
            b[i][x] = bump(static_cast<double>(off) / static_cast<double>(m));
        }
    }
    std::vector<double> total(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        for (std::size_t i = 0; i < n_charts; ++i) total[x] += b[i][x];
        if (!(total[x] > 0.0))
            throw std::invalid_argument("make_atlas: node " + std::to_string(x) + " is not inside any arc");
    }
    for (std::size_t i = 0; i < n_charts; ++i) {
        std::vector<double> g(n);
        for (std::size_t x = 0; x < n; ++x) g[x] = b[i][x] / total[x];
        at.partition.emplace_back(d, std::move(g));
    }
    // open arcs of equal half-length meet when their centres are closer than 2m steps
    at.overlap_sets.resize(n_charts);
    for (std::size_t i = 0; i < n_charts; ++i) {
        for (std::size_t j = 0; j < n_charts; ++j)
            if (d.index_distance(at.charts[i].center_node, at.charts[j].center_node) < static_cast<std::size_t>(2 * m))
                at.overlap_sets[i].push_back(j);
        at.cardinals.push_back(at.overlap_sets[i].size());
    }
    return at;
}

namespace detail {

// (g_i·u)∘φ_i on the padded chart window, zero outside the arc.
inline GridFunction pull_back(const Atlas& at, std::size_t i, const GridFunction& u) {
    const auto& ch = at.charts[i];
    const std::size_t n = u.size();
    std::vector<double> v(ch.chart_grid.size(), 0.0);
    for (std::size_t k = 0; k < v.size(); ++k) {
        const std::size_t x = ch.manifold_node(k, n);
        if (x != Chart::npos) v[k] = at.partition[i][x] * u[x];
    }
    return GridFunction(ch.chart_grid, std::move(v));
}

// Σ_i [transform(i, pulled back piece)]∘φ_i⁻¹. Pieces are computed concurrently and
// summed in chart order; *confinement gets the largest piece value outside the arcs.
template <typename Transform>
GridFunction chart_sum(const Atlas& at, const GridFunction& u, Transform&& transform, double* confinement) {
    require_same_domain(at.domain(), u.domain(), "chart operator");
    const std::size_t n = u.size();
    std::vector<GridFunction> pieces(at.size());
    parallel_for(at.size(), [&](std::size_t i) { pieces[i] = transform(i, pull_back(at, i, u)); }, 1);
    std::vector<double> out(n, 0.0);
    double leak = 0.0;
    for (std::size_t i = 0; i < at.size(); ++i) {
        const auto& ch = at.charts[i];
        for (std::size_t k = 0; k < pieces[i].size(); ++k) {
            const std::size_t x = ch.manifold_node(k, n);
            if (x == Chart::npos) leak = std::max(leak, std::abs(pieces[i][k]));
            else out[x] += pieces[i][k];
        }
    }
    if (confinement) *confinement = leak;
    return GridFunction(u.domain(), std::move(out));
}

inline void check_chart_params(const Atlas& at, const std::vector<double>& p, const char* what) {
    if (p.size() != at.size())
        throw std::invalid_argument(std::string(what) + ": need one parameter per chart");
    for (double v : p)
        if (!(v > 0.0)) throw std::invalid_argument(std::string(what) + ": parameters must be positive");
}

} // namespace detail

/// S u = Σ_i [J^{-a_i}∘J^{+a_i}((g_i·u)∘φ_i)]∘φ_i⁻¹, with the closing on each chart grid.
inline GridFunction s_operator(const Atlas& at, const std::vector<double>& a, const GridFunction& u,
                               double* confinement = nullptr) {
    detail::check_chart_params(at, a, "s_operator");
    return detail::chart_sum(at, u, [&](std::size_t i, const GridFunction& p) { return semiconcave_hull(a[i], p); },
                             confinement);
}

/// Š u = Σ_i [J^{+b_i}∘J^{-b_i}((g_i·u)∘φ_i)]∘φ_i⁻¹.
inline GridFunction s_check_operator(const Atlas& at, const std::vector<double>& b, const GridFunction& u,
                                     double* confinement = nullptr) {
    detail::check_chart_params(at, b, "s_check_operator");
    return detail::chart_sum(at, u, [&](std::size_t i, const GridFunction& p) { return semiconvex_hull(b[i], p); },
                             confinement);
}

struct GlueParams {
    std::vector<double> a, b;
    std::vector<double> eps_budgets;
    GridFunction target_eps;
    /// max over i of Σ_{j∈A_i} ε_j / ((1/2)·min over arc i of ε)
    double petit_ratio = 0.0;
    std::vector<double> k_concave, k_convex; ///< chart-coordinate constants behind a_i, b_i

    bool petit_holds() const { return petit_ratio <= 1.0; }
};

namespace detail {

inline double arc_min(const Atlas& at, std::size_t i, const GridFunction& f) {
    double m = std::numeric_limits<double>::infinity();
    const std::size_t n = f.size();
    for (std::size_t k = 0; k < at.charts[i].chart_grid.size(); ++k) {
        const std::size_t x = at.charts[i].manifold_node(k, n);
        if (x != Chart::npos) m = std::min(m, f[x]);
    }
    return m;
}

inline double petit_ratio(const Atlas& at, const std::vector<double>& eps_i, const GridFunction& eps) {
    double worst = 0.0;
    for (std::size_t i = 0; i < at.size(); ++i) {
        double sum = 0.0;
        for (auto j : at.overlap_sets[i]) sum += eps_i[j];
        worst = std::max(worst, sum / (0.5 * arc_min(at, i, eps)));
    }
    return worst;
}

// Largest parameter on the ladder start·2^{-k} whose hull moves p by less than budget.
template <typename Hull>
double ladder(double start, double budget, const GridFunction& p, Hull&& hull, const char* what, std::size_t chart) {
    double best = std::numeric_limits<double>::infinity();
    for (double a = start; a > 1e-12 * start; a *= 0.5) {
        const double dev = sup_distance(hull(a, p), p);
        if (dev < budget) return a;
        best = std::min(best, dev);
    }
    throw PreconditionError(std::string(what) + ": ladder exhausted on chart " + std::to_string(chart) +
                            "; best deviation " + format_double(best) + " >= budget " + format_double(budget));
}

inline double rung_start(double k) { return k > 0.0 ? 0.9 / k : 1.0; }

} // namespace detail

/// ε_i budgets and the a_i ladder. The b_i need S u, so they are filled by
/// choose_check_params once S u is known.
inline GlueParams choose_params(const Atlas& at, const Cost& c, const GridFunction& u, const GridFunction& eps) {
    require_same_domain(at.domain(), u.domain(), "choose_params");
    require_same_domain(at.domain(), eps.domain(), "choose_params eps");
    for (double e : eps.values())
        if (!(e > 0.0)) throw std::invalid_argument("choose_params: eps must be positive at every node");
    const std::size_t I = at.size();
    GlueParams gp;
    gp.target_eps = eps;
    std::vector<double> arc_eps(I);
    for (std::size_t i = 0; i < I; ++i) arc_eps[i] = detail::arc_min(at, i, eps);
    gp.eps_budgets.resize(I);
    for (std::size_t i = 0; i < I; ++i) {
        double lo = std::numeric_limits<double>::infinity();
        std::size_t emax = 0;
        for (auto j : at.overlap_sets[i]) {
            lo = std::min(lo, arc_eps[j]);
            emax = std::max(emax, at.cardinals[j]);
        }
        gp.eps_budgets[i] = lo / (2.0 * static_cast<double>(emax));
    }
    // the formula gives the inequality in exact arithmetic; shave ulps if rounding broke it
    while (detail::petit_ratio(at, gp.eps_budgets, eps) > 1.0)
        for (double& e : gp.eps_budgets) e = std::nextafter(e, 0.0);
    gp.petit_ratio = detail::petit_ratio(at, gp.eps_budgets, eps);

    const auto tm = t_minus(c, u);
    gp.a.resize(I);
    gp.k_concave.resize(I);
    parallel_for(I, [&](std::size_t i) {
        gp.k_concave[i] = regularity_certificate(detail::pull_back(at, i, tm)).semiconcavity_constant;
        gp.a[i] = detail::ladder(detail::rung_start(gp.k_concave[i]), gp.eps_budgets[i], detail::pull_back(at, i, u),
                                 [](double a, const GridFunction& p) { return semiconcave_hull(a, p); },
                                 "choose_params (a)", i);
    }, 1);
    return gp;
}

/// Fills gp.b from the semiconvexity of (g_i·T⁺T⁻u)∘φ_i and the Š deviation on S u.
inline void choose_check_params(const Atlas& at, const Cost& c, const GridFunction& u, const GridFunction& su,
                                GlueParams& gp) {
    const auto tpm = t_plus(c, t_minus(c, u));
    const std::size_t I = at.size();
    gp.b.resize(I);
    gp.k_convex.resize(I);
    parallel_for(I, [&](std::size_t i) {
        gp.k_convex[i] = regularity_certificate(detail::pull_back(at, i, tpm)).semiconvexity_constant;
        gp.b[i] = detail::ladder(detail::rung_start(gp.k_convex[i]), gp.eps_budgets[i], detail::pull_back(at, i, su),
                                 [](double b, const GridFunction& p) { return semiconvex_hull(b, p); },
                                 "choose_params (b)", i);
    }, 1);
}

struct GeneralRegularized {
    GridFunction w;
    RegularizationCertificate cert;
    GlueParams params;
    double eps_excess = 0.0;  ///< max(|w − u| − eps), ≤ 0 when the budget holds
    double confinement = 0.0; ///< largest chart piece outside its arc, over both passes

    bool holds() const { return cert.holds() && eps_excess <= 0.0 && params.petit_holds(); }
};

struct AtlasSpec {
    std::size_t n_charts = 2;
    double overlap_fraction = 0.5;
};

/// Š∘S u: a C¹,¹ subsolution with T⁺T⁻u ≤ Š∘S u ≤ T⁻u and |Š∘S u − u| ≤ eps.
inline GeneralRegularized regularize_general(const Cost& c, const GridFunction& u, const GridFunction& eps,
                                             const Atlas& at, std::optional<double> tol = std::nullopt) {
    require_same_domain(c.domain(), u.domain(), "regularize_general");
    const double tl = tol ? *tol : default_tol(c, u);
    require_subsolution(c, u, tl, "regularize_general");
    GeneralRegularized r;
    // S and Š commute with constants only through the partition, so work on u centred at
    // zero: smaller pieces g_i·u give smaller chart constants and larger a_i, b_i
    const double mid = 0.5 * (u.max() + u.min());
    const auto u0 = u + (-mid);
    r.params = choose_params(at, c, u0, eps);
    double leak1 = 0.0, leak2 = 0.0;
    const auto su = s_operator(at, r.params.a, u0, &leak1);
    choose_check_params(at, c, u0, su, r.params);
    r.w = s_check_operator(at, r.params.b, su, &leak2) + mid;
    r.confinement = std::max(leak1, leak2);

    auto& cert = r.cert;
    cert.tol = tl;
    const auto tm = t_minus(c, u);
    cert.sandwich_low_defect = std::max(0.0, max_excess(t_plus(c, tm), r.w));
    cert.sandwich_high_defect = std::max(0.0, max_excess(r.w, tm));
    cert.sup_change = sup_distance(r.w, u);
    cert.output_regularity = regularity_certificate(r.w);
    // each node sees at most max e_i pieces; chart constants scale by 1/half-length²
    double kc = 0.0, kv = 0.0;
    std::size_t emax = 0;
    for (std::size_t i = 0; i < at.size(); ++i) {
        const double s2 = at.charts[i].arc_half_length * at.charts[i].arc_half_length;
        kc = std::max(kc, std::max(1.0 / r.params.a[i], 1.0 / r.params.b[i]) / s2);
        kv = std::max(kv, 1.0 / (r.params.b[i] * s2));
        emax = std::max(emax, at.cardinals[i]);
    }
    cert.semiconcavity_bound = static_cast<double>(emax) * kc;
    cert.semiconvexity_bound = static_cast<double>(emax) * kv;
    cert.regularity_slack = regularity_slack(r.w);
    r.eps_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < u.size(); ++i) r.eps_excess = std::max(r.eps_excess, std::abs(r.w[i] - u[i]) - eps[i]);
    return r;
}

inline GeneralRegularized regularize_general(const Cost& c, const GridFunction& u, const GridFunction& eps,
                                             const AtlasSpec& spec = {}, std::optional<double> tol = std::nullopt) {
    if (!c.domain().periodic())
        throw PreconditionError("regularize_general: the chart construction needs a circle domain");
    return regularize_general(c, u, eps, make_atlas(c.domain(), spec.n_charts, spec.overlap_fraction), tol);
}

/**
 * 0 ≤ ψ ≤ 0.9·λ with ψ > 0 exactly on the mask: one bump per masked node, of radius
 * min(R, distance to the nearest unmasked node), scaled by 0.9·(min of λ on its support)
 * and averaged where bumps overlap.
 */
inline GridFunction free_shift(const GridFunction& lambda, const std::vector<char>& mask, double R) {
    const auto& d = lambda.domain();
    const std::size_t n = d.size();
    std::vector<double> radius(n, 0.0);
    for (std::size_t x = 0; x < n; ++x) {
        if (!mask[x]) continue;
        double r = R;
        for (std::size_t y = 0; y < n; ++y)
            if (!mask[y]) r = std::min(r, d.distance(x, y));
        if (!d.periodic()) r = std::min({r, d.node(x) - d.origin() + d.spacing(), d.origin() + d.length() - d.node(x) + d.spacing()});
        radius[x] = r;
    }
    std::vector<double> num(n, 0.0), den(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        if (!mask[k]) continue;
        double lo = std::numeric_limits<double>::infinity();
        for (std::size_t y = 0; y < n; ++y)
            if (d.distance(k, y) < radius[k]) lo = std::min(lo, lambda[y]);
        const double ck = 0.9 * lo;
        for (std::size_t y = 0; y < n; ++y) {
            const double beta = bump(d.distance(k, y) / radius[k]);
            num[y] += ck * beta;
            den[y] += beta;
        }
    }
    std::vector<double> psi(n, 0.0);
    for (std::size_t y = 0; y < n; ++y)
        if (mask[y]) psi[y] = num[y] / std::max(1.0, den[y]);
    return GridFunction(d, std::move(psi));
}

struct FreeRegularized {
    GridFunction w, psi, w_minus, w_plus;
    GeneralRegularized minus_run, plus_run;
    double free_defect = 0.0;   ///< max over Ω of ψ/2 − (T⁻w − w) and ψ/2 − (w − T⁺w)
    double aubry_defect = 0.0;  ///< max over A_u of |w − u|
    double tol = 0.0;

    bool holds() const {
        return minus_run.holds() && plus_run.holds() && free_defect <= tol && aubry_defect <= tol;
    }
};

/// (w⁺ + w⁻)/2 from regularize_general under c − ψ(y) and c − ψ(x): free by ψ/6 on the mask.
inline FreeRegularized regularize_free(const Cost& c, const GridFunction& u, const GridFunction& eps,
                                       const std::vector<char>& omega_mask, const AtlasSpec& spec = {},
                                       std::optional<double> tol = std::nullopt) {
    require_same_domain(c.domain(), u.domain(), "regularize_free");
    if (omega_mask.size() != u.size()) throw std::invalid_argument("regularize_free: mask size mismatch");
    const double tl = tol ? *tol : default_tol(c, u);
    const auto rep = analyze(c, u, tl);
    if (!rep.is_subsolution)
        throw PreconditionError("regularize_free: input is not a subsolution (max violation " +
                                format_double(rep.max_violation) + ")");
    for (std::size_t x = 0; x < u.size(); ++x)
        if (omega_mask[x] && !(rep.leverage[x] > 0.0))
            throw PreconditionError("regularize_free: u is not free at node " + std::to_string(x) +
                                    " of the mask (leverage " + format_double(rep.leverage[x]) + ")");
    const auto& d = u.domain();
    const auto at = make_atlas(d, spec.n_charts, spec.overlap_fraction);
    FreeRegularized r;
    r.tol = tl;
    r.psi = free_shift(rep.leverage, omega_mask, d.length() / 8.0);
    const auto cm = Cost::shifted(c, r.psi, ShiftSide::target);
    const auto cp = Cost::shifted(c, r.psi, ShiftSide::source);
    r.minus_run = regularize_general(cm, u, eps, at, tl);
    r.plus_run = regularize_general(cp, u, eps, at, tl);
    r.w_minus = r.minus_run.w;
    r.w_plus = r.plus_run.w;
    std::vector<double> w(u.size());
    for (std::size_t x = 0; x < u.size(); ++x) w[x] = 0.5 * (r.w_plus[x] + r.w_minus[x]);
    r.w = GridFunction(d, std::move(w));

    const auto tm = t_minus(c, r.w), tp = t_plus(c, r.w);
    r.free_defect = -std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < u.size(); ++x) {
        if (!omega_mask[x]) continue;
        r.free_defect = std::max({r.free_defect, 0.5 * r.psi[x] - (tm[x] - r.w[x]), 0.5 * r.psi[x] - (r.w[x] - tp[x])});
    }
    r.free_defect = std::max(r.free_defect, 0.0);
    for (auto x : rep.aubry_nodes) r.aubry_defect = std::max(r.aubry_defect, std::abs(r.w[x] - u[x]));
    return r;
}

struct PipelineReport {
    GridFunction v1, v2, v3;
    GridFunction smoothing_eps;
    std::vector<std::size_t> aubry_nodes;       ///< A_u
    double aubry_defect = 0.0;                  ///< max over A_u of |v₃ − u|
    double min_leverage_off_aubry = 0.0;        ///< min of λ_{v₃} off A_u (+∞ if A_u is everything)
    std::size_t strict_pairs_checked = 0;
    std::size_t strict_pairs_lost = 0;          ///< pairs strict for u (slack > δ) not strict for v₃
    double max_violation = 0.0;                 ///< of v₃
    RegularityCertificate regularity;           ///< of v₃
    SmoothingReport smoothing;
    double tol = 0.0;

    bool holds() const {
        return aubry_defect <= tol && min_leverage_off_aubry > 0.0 && strict_pairs_lost == 0 && max_violation <= tol &&
               std::isfinite(regularity.c11_constant);
    }
};

struct PipelineOptions {
    AtlasSpec atlas;
    double eps_floor = 1e-6; ///< lower bound of the regularize_free budget
    double strict_delta = 1e-9;
};

/**
 * v₁ = free_average(u), free off A_u; v₂ = regularize_free(v₁) on Ω = M∖A_u, C¹,¹;
 * v₃ = smooth_on_open(v₂, ε) with 0 < ε ≤ 0.9·λ_{v₂} on Ω and ε = 0 on A_u.
 */
inline PipelineReport pipeline_uv(const Cost& c, const GridFunction& u, const PipelineOptions& opt = {},
                                  std::optional<double> tol = std::nullopt) {
    require_same_domain(c.domain(), u.domain(), "pipeline_uv");
    const double tl = tol ? *tol : default_tol(c, u);
    const auto& d = u.domain();
    const std::size_t n = u.size();
    const auto rep = analyze(c, u, tl);
    if (!rep.is_subsolution)
        throw PreconditionError("pipeline_uv: input is not a subsolution (max violation " +
                                format_double(rep.max_violation) + ")");
    PipelineReport r;
    r.tol = tl;
    r.aubry_nodes = rep.aubry_nodes;
    std::vector<char> on_aubry(n, 0);
    for (auto x : rep.aubry_nodes) on_aubry[x] = 1;

    if (rep.aubry_nodes.size() == n) {
        r.v1 = r.v2 = r.v3 = u;
        r.smoothing_eps = GridFunction::constant(d, 0.0);
    } else {
        r.v1 = free_average(c, u, tl);
        const auto lam1 = leverage(c, r.v1);
        std::vector<char> omega(n, 0);
        for (std::size_t x = 0; x < n; ++x) omega[x] = !on_aubry[x];
        // chart budgets take the minimum over each arc, and the sandwich already pins v₂
        // to u on A_u, so a constant budget at the scale of λ_{v₁} is used
        const double e2 = std::max(0.5 * lam1.max(), opt.eps_floor);
        r.v2 = regularize_free(c, r.v1, GridFunction::constant(d, e2), omega, opt.atlas, tl).w;
        const auto lam2 = leverage(c, r.v2);
        std::vector<double> dist(n, std::numeric_limits<double>::infinity());
        for (std::size_t x = 0; x < n; ++x)
            for (auto a : rep.aubry_nodes) dist[x] = std::min(dist[x], d.distance(x, a));
        std::vector<double> e3(n, 0.0);
        for (std::size_t x = 0; x < n; ++x)
            if (omega[x]) e3[x] = std::max(0.0, std::min(0.9 * lam2[x], dist[x]));
        r.smoothing_eps = GridFunction(d, std::move(e3));
        r.v3 = smooth_on_open(r.v2, r.smoothing_eps, 1, &r.smoothing);
    }

    for (auto x : rep.aubry_nodes) r.aubry_defect = std::max(r.aubry_defect, std::abs(r.v3[x] - u[x]));
    const auto lam3 = leverage(c, r.v3);
    r.min_leverage_off_aubry = std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < n; ++x)
        if (!on_aubry[x]) r.min_leverage_off_aubry = std::min(r.min_leverage_off_aubry, lam3[x]);
    c.with_kernel([&](auto&& k) {
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t y = 0; y < n; ++y) {
                if (k(x, y) - u[y] + u[x] <= opt.strict_delta) continue;
                ++r.strict_pairs_checked;
                if (!(k(x, y) - r.v3[y] + r.v3[x] > 0.0)) ++r.strict_pairs_lost;
            }
    });
    r.max_violation = max_violation(c, r.v3);
    r.regularity = regularity_certificate(r.v3);
    return r;
}

struct SmoothFreeReport {
    PipelineReport pipeline;
    AubryIntersection seed_aubry;    ///< ⋂ A_{seed} and ⋂ Ā_{seed}
    std::vector<std::size_t> order;  ///< seed order used for w₁
    double min_leverage_off_intersection = 0.0;
};

namespace detail {

inline std::vector<double> geometric_weights(std::size_t k) {
    std::vector<double> a(k);
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i) s += a[i] = std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(i, 1000)) - 1);
    for (double& v : a) v /= s;
    return a;
}

} // namespace detail

/// Finite-family version of the free-and-smooth construction: combine free-averaged seeds
/// (ordered by how many nodes each one is the most free at) and the raw seeds with
/// geometric weights, then run pipeline_uv on the midpoint.
inline SmoothFreeReport smoothfree_build(const Cost& c, const std::vector<GridFunction>& seeds,
                                         const PipelineOptions& opt = {}, std::optional<double> tol = std::nullopt) {
    if (seeds.empty()) throw std::invalid_argument("smoothfree_build: empty seed family");
    for (const auto& s : seeds) require_same_domain(c.domain(), s.domain(), "smoothfree_build");
    double tl = 0.0;
    if (tol) tl = *tol;
    else
        for (const auto& s : seeds) tl = std::max(tl, default_tol(c, s));
    std::vector<SubsolutionReport> reps;
    for (std::size_t k = 0; k < seeds.size(); ++k) {
        reps.push_back(analyze(c, seeds[k], tl));
        if (!reps.back().is_subsolution)
            throw PreconditionError("smoothfree_build: seed " + std::to_string(k) + " is not a subsolution (max violation " +
                                    format_double(reps.back().max_violation) + ")");
    }
    SmoothFreeReport r;
    r.seed_aubry = aubry_intersection(reps);
    const std::size_t n = seeds.front().size();
    GridFunction u;
    if (seeds.size() == 1) {
        u = seeds.front();
        r.order = {0};
    } else {
        std::vector<GridFunction> avg;
        std::vector<GridFunction> lam;
        for (const auto& s : seeds) {
            avg.push_back(free_average(c, s, tl));
            lam.push_back(leverage(c, avg.back()));
        }
        std::vector<std::size_t> wins(seeds.size(), 0);
        for (std::size_t x = 0; x < n; ++x) {
            std::size_t best = 0;
            for (std::size_t k = 1; k < seeds.size(); ++k)
                if (lam[k][x] > lam[best][x]) best = k;
            ++wins[best];
        }
        r.order.resize(seeds.size());
        std::iota(r.order.begin(), r.order.end(), std::size_t{0});
        std::stable_sort(r.order.begin(), r.order.end(), [&](auto a, auto b) { return wins[a] > wins[b]; });
        std::vector<GridFunction> ordered;
        for (auto k : r.order) ordered.push_back(avg[k]);
        const auto a = detail::geometric_weights(seeds.size());
        const auto w1 = convex_combine(a, ordered);
        const auto w2 = convex_combine(a, seeds);
        std::vector<double> mid(n);
        for (std::size_t x = 0; x < n; ++x) mid[x] = 0.5 * (w1[x] + w2[x]);
        u = GridFunction(seeds.front().domain(), std::move(mid));
    }
    r.pipeline = pipeline_uv(c, u, opt, tl);
    const auto lam = leverage(c, r.pipeline.v3);
    std::vector<char> in(n, 0);
    for (auto x : r.seed_aubry.nodes) in[x] = 1;
    r.min_leverage_off_intersection = std::numeric_limits<double>::infinity();
    for (std::size_t x = 0; x < n; ++x)
        if (!in[x]) r.min_leverage_off_intersection = std::min(r.min_leverage_off_intersection, lam[x]);
    return r;
}

} // namespace wkam
