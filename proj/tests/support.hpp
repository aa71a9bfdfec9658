#pragma once

// Shared fixtures for the test suites: fixed-seed random grids, functions and costs.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "wkam/cost.hpp"
#include "wkam/domain.hpp"
#include "wkam/lax.hpp"

namespace wkam::testing {

using Rng = std::mt19937_64;

inline GridDomain circle(std::size_t n, double L = 1.0) { return make_grid(DomainKind::circle, 0.0, L, n); }
inline GridDomain interval(std::size_t n, double a = -1.0, double b = 1.0) {
    return make_grid(DomainKind::interval, a, b - a, n);
}

inline GridFunction from(const GridDomain& d, std::vector<double> v) { return GridFunction(d, std::move(v)); }

inline GridFunction random_function(const GridDomain& d, Rng& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> U(lo, hi);
    std::vector<double> v(d.size());
    for (auto& x : v) x = U(rng);
    return GridFunction(d, std::move(v));
}

/// Small integers, to provoke exact ties.
inline GridFunction random_integer_function(const GridDomain& d, Rng& rng, int lo = 0, int hi = 3) {
    std::uniform_int_distribution<int> U(lo, hi);
    std::vector<double> v(d.size());
    for (auto& x : v) x = U(rng);
    return GridFunction(d, std::move(v));
}

/// Multiples of 2^-bits in [lo, hi]. With dyadic spacing and t these keep every sum and
/// difference in the operators exact.
inline GridFunction random_dyadic_function(const GridDomain& d, Rng& rng, int bits = 16, double lo = -1.0, double hi = 1.0) {
    const double q = std::ldexp(1.0, bits);
    std::uniform_int_distribution<long> U(static_cast<long>(lo * q), static_cast<long>(hi * q));
    std::vector<double> v(d.size());
    for (auto& x : v) x = static_cast<double>(U(rng)) / q;
    return GridFunction(d, std::move(v));
}

/// Random trigonometric polynomial, periodic on the domain's length.
inline GridFunction random_smooth(const GridDomain& d, Rng& rng, int modes = 3, double amp = 1.0) {
    std::normal_distribution<double> N(0.0, 1.0);
    std::vector<double> a(modes), b(modes);
    for (int k = 0; k < modes; ++k) {
        a[k] = amp * N(rng) / (k + 1);
        b[k] = amp * N(rng) / (k + 1);
    }
    const double L = d.length();
    return GridFunction::sample(d, [&](double x) {
        double s = 0.0;
        for (int k = 0; k < modes; ++k) {
            const double w = 2.0 * std::numbers::pi * (k + 1) * (x - d.origin()) / L;
            s += a[k] * std::cos(w) + b[k] * std::sin(w);
        }
        return s;
    });
}

/// d²/t + V(y) + W(x) with smooth non-negative random potentials.
inline Cost random_potential_cost(const GridDomain& d, Rng& rng, double t = 1.0) {
    auto V = random_smooth(d, rng, 2, 0.3);
    auto W = random_smooth(d, rng, 2, 0.3);
    V = V + (-V.min());
    W = W + (-W.min());
    return Cost::quad_plus_potential(d, t, V, W);
}

/// d²/t + V(y) + W(x) with dyadic V, W ≥ 0; exact arithmetic on dyadic grids.
inline Cost random_dyadic_potential_cost(const GridDomain& d, Rng& rng, double t = 0.5) {
    return Cost::quad_plus_potential(d, t, random_dyadic_function(d, rng, 16, 0.0, 0.5),
                                     random_dyadic_function(d, rng, 16, 0.0, 0.5));
}

inline Cost random_matrix_cost(const GridDomain& d, Rng& rng) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    std::vector<double> C(d.size() * d.size());
    for (auto& x : C) x = U(rng);
    return Cost::matrix(d, std::move(C));
}

/// Largest subsolution below v: u(x) = min over chains y₀…x of v(y₀) + Σ c(y_k, y_{k+1}).
/// Dense Dijkstra, valid for costs with non-negative entries.
inline GridFunction subsolution_below(const Cost& c, const GridFunction& v) {
    const std::size_t n = v.size();
    std::vector<double> label(v.values().begin(), v.values().end());
    std::vector<char> done(n, 0);
    for (std::size_t it = 0; it < n; ++it) {
        std::size_t y = n;
        for (std::size_t i = 0; i < n; ++i)
            if (!done[i] && (y == n || label[i] < label[y])) y = i;
        done[y] = 1;
        for (std::size_t x = 0; x < n; ++x)
            if (!done[x]) label[x] = std::min(label[x], label[y] + c(y, x));
    }
    return GridFunction(v.domain(), std::move(label));
}

/// T⁻ of the largest subsolution below a random function; always a subsolution.
inline GridFunction random_subsolution(const Cost& c, Rng& rng, double amp = 1.0) {
    return t_minus(c, subsolution_below(c, random_function(c.domain(), rng, -amp, amp)));
}

} // namespace wkam::testing
