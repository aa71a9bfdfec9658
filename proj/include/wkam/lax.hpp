#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "wkam/cost.hpp"
#include "wkam/domain.hpp"
#include "wkam/error.hpp"
#include "wkam/jensen_transforms.hpp"
#include "wkam/parallel.hpp"

namespace wkam {

using NodePair = std::pair<std::size_t, std::size_t>;

/// T⁻u(x_i) = min_j u(x_j) + c(x_j, x_i).
inline GridFunction t_minus(const Cost& c, const GridFunction& u) {
    require_same_domain(c.domain(), u.domain(), "t_minus");
    if (c.kind() == Cost::Kind::quadratic) return j_minus(c.t(), u);
    const std::size_t n = u.size();
    std::vector<double> out(n);
    c.with_kernel([&](auto&& k) {
        parallel_for(n, [&](std::size_t i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) best = std::min(best, u[j] + k(j, i));
            out[i] = best;
        }, 16);
    });
    return GridFunction(u.domain(), std::move(out));
}

/// T⁺u(x_i) = max_j u(x_j) − c(x_i, x_j).
inline GridFunction t_plus(const Cost& c, const GridFunction& u) {
    require_same_domain(c.domain(), u.domain(), "t_plus");
    if (c.kind() == Cost::Kind::quadratic) return j_plus(c.t(), u);
    const std::size_t n = u.size();
    std::vector<double> out(n);
    c.with_kernel([&](auto&& k) {
        parallel_for(n, [&](std::size_t i) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) best = std::max(best, u[j] - k(i, j));
            out[i] = best;
        }, 16);
    });
    return GridFunction(u.domain(), std::move(out));
}

/// λ_u = (1/3)·min(T⁻u − u, u − T⁺u).
inline GridFunction leverage(const GridFunction& u, const GridFunction& tm, const GridFunction& tp) {
    std::vector<double> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = std::min(tm[i] - u[i], u[i] - tp[i]) / 3.0;
    return GridFunction(u.domain(), std::move(out));
}

inline GridFunction leverage(const Cost& c, const GridFunction& u) {
    return leverage(u, t_minus(c, u), t_plus(c, u));
}

/// max over pairs of u(y) − u(x) − c(x,y).
inline double max_violation(const Cost& c, const GridFunction& u) {
    require_same_domain(c.domain(), u.domain(), "max_violation");
    const std::size_t n = u.size();
    std::vector<double> row(n);
    c.with_kernel([&](auto&& k) {
        parallel_for(n, [&](std::size_t i) {
            double m = -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j) m = std::max(m, u[j] - u[i] - k(i, j));
            row[i] = m;
        }, 16);
    });
    return *std::max_element(row.begin(), row.end());
}

/// Pairs (i,j) with c(x_i,x_j) − u(x_j) + u(x_i) > delta.
inline std::vector<NodePair> strict_pairs(const Cost& c, const GridFunction& u, double delta) {
    const std::size_t n = u.size();
    std::vector<std::vector<NodePair>> rows(n);
    c.with_kernel([&](auto&& k) {
        parallel_for(n, [&](std::size_t i) {
            for (std::size_t j = 0; j < n; ++j)
                if (k(i, j) - u[j] + u[i] > delta) rows[i].emplace_back(i, j);
        }, 16);
    });
    std::vector<NodePair> out;
    for (auto& r : rows) out.insert(out.end(), r.begin(), r.end());
    return out;
}

struct SubsolutionReport {
    double max_violation = 0.0;
    bool is_subsolution = false;
    std::vector<std::size_t> aubry_nodes;
    std::vector<NodePair> contact_pairs;
    GridFunction leverage;
    std::vector<std::size_t> free_nodes;
    double tol = 0.0;
    GridFunction t_minus_u, t_plus_u;
};

inline SubsolutionReport analyze(const Cost& c, const GridFunction& u, double tol) {
    require_same_domain(c.domain(), u.domain(), "analyze");
    if (!(tol >= 0.0)) throw std::invalid_argument("tol must be non-negative");
    const std::size_t n = u.size();
    SubsolutionReport r;
    r.tol = tol;
    r.t_minus_u = t_minus(c, u);
    r.t_plus_u = t_plus(c, u);
    r.max_violation = max_violation(c, u);
    r.is_subsolution = r.max_violation <= tol;
    r.leverage = leverage(u, r.t_minus_u, r.t_plus_u);
    for (std::size_t i = 0; i < n; ++i) {
        if (r.t_minus_u[i] - u[i] <= tol && u[i] - r.t_plus_u[i] <= tol) r.aubry_nodes.push_back(i);
        if (r.leverage[i] > tol) r.free_nodes.push_back(i);
    }
    std::vector<std::vector<NodePair>> rows(n);
    c.with_kernel([&](auto&& k) {
        parallel_for(n, [&](std::size_t i) {
            for (std::size_t j = 0; j < n; ++j)
                if (std::abs(u[j] - u[i] - k(i, j)) <= tol) rows[i].emplace_back(i, j);
        }, 16);
    });
    for (auto& row : rows) r.contact_pairs.insert(r.contact_pairs.end(), row.begin(), row.end());
    return r;
}

inline SubsolutionReport analyze(const Cost& c, const GridFunction& u) {
    return analyze(c, u, default_tol(c, u));
}

inline void require_subsolution(const Cost& c, const GridFunction& u, double tol, const char* what) {
    const double v = max_violation(c, u);
    if (!(v <= tol))
        throw PreconditionError(std::string(what) + ": input is not a subsolution (max violation " +
                                format_double(v) + " > tol " + format_double(tol) + ")");
}

/// v = (T⁺u + T⁺T⁻u + T⁻T⁺u + T⁻u)/4.
inline GridFunction free_average(const Cost& c, const GridFunction& u, double tol) {
    require_subsolution(c, u, tol, "free_average");
    const auto tm = t_minus(c, u);
    const auto tp = t_plus(c, u);
    const auto tpm = t_plus(c, tm);
    const auto tmp = t_minus(c, tp);
    std::vector<double> out(u.size());
    // paired sums keep v = u exactly where all four terms equal u
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = 0.25 * ((tp[i] + tpm[i]) + (tmp[i] + tm[i]));
    return GridFunction(u.domain(), std::move(out));
}

inline GridFunction free_average(const Cost& c, const GridFunction& u) {
    return free_average(c, u, default_tol(c, u));
}

/// Σ a_n u_n, summed left to right.
inline GridFunction convex_combine(std::span<const double> weights, std::span<const GridFunction> us) {
    if (us.empty()) throw std::invalid_argument("convex_combine: empty family");
    if (weights.size() != us.size()) throw std::invalid_argument("convex_combine: weight count mismatch");
    double sum = 0.0;
    for (double a : weights) {
        if (!(a > 0.0)) throw std::invalid_argument("convex_combine: weights must be positive");
        sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("convex_combine: weights sum to " + format_double(sum) + ", not 1");
    const auto& d = us.front().domain();
    std::vector<double> out(d.size(), 0.0);
    for (std::size_t k = 0; k < us.size(); ++k) {
        require_same_domain(d, us[k].domain(), "convex_combine");
        for (std::size_t i = 0; i < d.size(); ++i) out[i] += weights[k] * us[k][i];
    }
    return GridFunction(d, std::move(out));
}

struct IdentityDiagnostics {
    double plus_identity_defect = 0.0;  ///< max |T⁺T⁻T⁺u − T⁺u|
    double minus_identity_defect = 0.0; ///< max |T⁻T⁺T⁻u − T⁻u|
    /// max excess of each link of T⁺u ≤ T⁺T⁻u ≤ u ≤ T⁻T⁺u ≤ T⁻u
    double chain[4] = {0, 0, 0, 0};
};

inline IdentityDiagnostics operator_identity_check(const Cost& c, const GridFunction& u) {
    const auto tm = t_minus(c, u);
    const auto tp = t_plus(c, u);
    const auto tpm = t_plus(c, tm);
    const auto tmp = t_minus(c, tp);
    IdentityDiagnostics d;
    d.plus_identity_defect = sup_distance(t_plus(c, tmp), tp);
    d.minus_identity_defect = sup_distance(t_minus(c, tpm), tm);
    d.chain[0] = std::max(0.0, max_excess(tp, tpm));
    d.chain[1] = std::max(0.0, max_excess(tpm, u));
    d.chain[2] = std::max(0.0, max_excess(u, tmp));
    d.chain[3] = std::max(0.0, max_excess(tmp, tm));
    return d;
}

struct AubryIntersection {
    std::vector<std::size_t> nodes;
    std::vector<NodePair> pairs;
    /// nodes of the intersection that are not the first (resp. second) coordinate of
    /// any intersected pair
    std::vector<std::size_t> missing_outgoing, missing_incoming;
};

/// Intersection of A_u and Ā_u over a finite family of reports. Over a finite family
/// this is an outer estimate of the Aubry sets.
inline AubryIntersection aubry_intersection(std::span<const SubsolutionReport> reports) {
    if (reports.empty()) throw std::invalid_argument("aubry_intersection: empty family");
    AubryIntersection out;
    std::set<std::size_t> nodes(reports[0].aubry_nodes.begin(), reports[0].aubry_nodes.end());
    std::set<NodePair> pairs(reports[0].contact_pairs.begin(), reports[0].contact_pairs.end());
    for (std::size_t k = 1; k < reports.size(); ++k) {
        if (reports[k].leverage.size() != reports[0].leverage.size() || reports[k].tol != reports[0].tol)
            throw std::invalid_argument("aubry_intersection: reports differ in domain or tol");
        std::set<std::size_t> n2;
        for (auto i : reports[k].aubry_nodes)
            if (nodes.count(i)) n2.insert(i);
        std::set<NodePair> p2;
        for (const auto& p : reports[k].contact_pairs)
            if (pairs.count(p)) p2.insert(p);
        nodes.swap(n2);
        pairs.swap(p2);
    }
    out.nodes.assign(nodes.begin(), nodes.end());
    out.pairs.assign(pairs.begin(), pairs.end());
    for (auto x : out.nodes) {
        bool first = false, second = false;
        for (const auto& [a, b] : out.pairs) {
            first = first || a == x;
            second = second || b == x;
        }
        if (!first) out.missing_outgoing.push_back(x);
        if (!second) out.missing_incoming.push_back(x);
    }
    return out;
}

} // namespace wkam
