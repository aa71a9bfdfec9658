#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "wkam/domain.hpp"

namespace wkam {

namespace detail {

inline void check_transform_t(double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("transform parameter t must be positive");
}

// Lower envelope of the parabolas q ↦ u[q mod n] + α(x − q)² over source positions
// q ∈ [q_lo, q_hi) (tiled three times on the circle), queried at every node i.
// Breakpoints only steer the search: the returned value is always recomputed as
// u[j] + d*d/t with d = (index distance)*h, the same expression the brute-force scan
// uses, and exact ties resolve to the smallest j.
struct Envelope {
    const GridDomain& d;
    const std::vector<double>& u;
    double t;

    std::size_t wrap(long q) const {
        const long n = static_cast<long>(d.size());
        return static_cast<std::size_t>(((q % n) + n) % n);
    }

    double value(long q, std::size_t i) const {
        const double r = static_cast<double>(d.index_distance(i, wrap(q))) * d.spacing();
        return u[wrap(q)] + r * r / t;
    }

    void run(std::vector<double>& out, std::vector<std::size_t>* arg) const {
        const long n = static_cast<long>(d.size());
        const long q_lo = d.periodic() ? -n : 0;
        const long q_hi = d.periodic() ? 2 * n : n;
        const double alpha = d.spacing() * d.spacing() / t;

        std::vector<long> v;
        std::vector<double> z;
        v.reserve(static_cast<std::size_t>(q_hi - q_lo));
        z.reserve(static_cast<std::size_t>(q_hi - q_lo) + 1);
        v.push_back(q_lo);
        z.push_back(-std::numeric_limits<double>::infinity());
        for (long q = q_lo + 1; q < q_hi; ++q) {
            const double uq = u[wrap(q)];
            double s = 0.0;
            for (;;) {
                const long p = v.back();
                s = 0.5 * static_cast<double>(p + q) +
                    (uq - u[wrap(p)]) / (2.0 * alpha * static_cast<double>(q - p));
                if (v.size() > 1 && s < z.back()) {
                    v.pop_back();
                    z.pop_back();
                    continue;
                }
                break;
            }
            v.push_back(q);
            z.push_back(s);
        }

        // segment k covers [z[k], z[k+1]]
        const std::size_t m = v.size();
        auto upper = [&](std::size_t k) {
            return k + 1 < m ? z[k + 1] : std::numeric_limits<double>::infinity();
        };
        std::size_t k = 0;
        for (std::size_t i = 0; i < d.size(); ++i) {
            const double x = static_cast<double>(i);
            while (upper(k) < x) ++k;
            std::size_t best = k;
            double bv = value(v[k], i);
            for (bool moved = true; moved;) {
                moved = false;
                if (best > 0) {
                    const double w = value(v[best - 1], i);
                    if (w < bv) { bv = w; --best; moved = true; continue; }
                }
                if (best + 1 < m) {
                    const double w = value(v[best + 1], i);
                    if (w < bv) { bv = w; ++best; moved = true; }
                }
            }
            std::size_t j = wrap(v[best]);
            for (std::size_t a = best; a > 0 && value(v[a - 1], i) == bv; --a) j = std::min(j, wrap(v[a - 1]));
            for (std::size_t a = best + 1; a < m && value(v[a], i) == bv; ++a) j = std::min(j, wrap(v[a]));
            out[i] = bv;
            if (arg) (*arg)[i] = j;
        }
    }
};

} // namespace detail

/// J^{-t}u(x_i) = min_j u(x_j) + d(x_i,x_j)²/t over grid nodes, in linear time.
inline GridFunction j_minus(double t, const GridFunction& u) {
    detail::check_transform_t(t);
    std::vector<double> vals(u.values().begin(), u.values().end());
    std::vector<double> out(u.size());
    detail::Envelope{u.domain(), vals, t}.run(out, nullptr);
    return GridFunction(u.domain(), std::move(out));
}

/// Same as j_minus, also returning the smallest minimising index per node.
inline GridFunction j_minus_argmin(double t, const GridFunction& u, std::vector<std::size_t>& arg) {
    detail::check_transform_t(t);
    std::vector<double> vals(u.values().begin(), u.values().end());
    std::vector<double> out(u.size());
    arg.assign(u.size(), 0);
    detail::Envelope{u.domain(), vals, t}.run(out, &arg);
    return GridFunction(u.domain(), std::move(out));
}

/// J^{+t}u = −J^{-t}(−u).
inline GridFunction j_plus(double t, const GridFunction& u) { return -j_minus(t, -u); }

/// Smallest majorant of u whose second differences stay ≤ 2h²/t.
///
/// This is J^{-t}∘J^{+t}u with the intermediate variable ranging over the whole line
/// instead of the grid: κx² plus the upper concave hull of u − κx², κ = 1/t. Hull
/// vertices keep u exactly; in between the value is the κ-parabola through the two
/// neighbouring vertices.
inline GridFunction semiconcave_hull(double t, const GridFunction& u) {
    detail::check_transform_t(t);
    const auto& d = u.domain();
    const long n = static_cast<long>(d.size());
    const double c = d.spacing() * d.spacing() / t;
    const long lo = d.periodic() ? -n : 0;
    const long hi = d.periodic() ? 2 * n : n;
    auto w = [&](long q) { return u[static_cast<std::size_t>(((q % n) + n) % n)]; };

    // b between a and c is dropped when the κ-parabola through a and c lies on or above it
    auto drop = [&](long a, long b, long cc) {
        return (w(b) - w(a)) / static_cast<double>(b - a) - (w(cc) - w(b)) / static_cast<double>(cc - b) +
                   c * static_cast<double>(cc - a) <= 0.0;
    };
    std::vector<long> hull;
    hull.reserve(static_cast<std::size_t>(hi - lo));
    for (long q = lo; q < hi; ++q) {
        while (hull.size() >= 2 && drop(hull[hull.size() - 2], hull.back(), q)) hull.pop_back();
        hull.push_back(q);
    }

    std::vector<double> out(static_cast<std::size_t>(n));
    std::size_t k = 0;
    for (long i = 0; i < n; ++i) {
        while (k + 1 < hull.size() && hull[k + 1] <= i) ++k;
        const long a = hull[k];
        const double ui = w(i);
        if (a == i) {
            out[static_cast<std::size_t>(i)] = ui;
            continue;
        }
        const long b = hull[k + 1];
        const double theta = static_cast<double>(i - a) / static_cast<double>(b - a);
        const double v = (1.0 - theta) * w(a) + theta * w(b) - c * static_cast<double>(i - a) * static_cast<double>(b - i);
        out[static_cast<std::size_t>(i)] = std::max(ui, v);
    }
    return GridFunction(d, std::move(out));
}

/// Largest minorant of u whose second differences stay ≥ −2h²/t; −semiconcave_hull(t, −u).
inline GridFunction semiconvex_hull(double t, const GridFunction& u) { return -semiconcave_hull(t, -u); }

} // namespace wkam
