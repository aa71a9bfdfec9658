#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "wkam/domain.hpp"
#include "wkam/error.hpp"
#include "wkam/parallel.hpp"

namespace wkam {

/**
 * The radial profile h and the odd map 𝔥(x) = sign(x)·h(|x|) on (−1,1):
 *   h(r) = r                                  r ≤ 1/3
 *   h(r) = exp((r−1)⁻²)                       r ≥ 2/3
 *   h(r) = (1−σ(r))·r + σ(r)·exp((r−1)⁻²)     in between,
 * with σ the standard C^∞ step from 0 at 1/3 to 1 at 2/3. Every term of h' is
 * non-negative and 1−σ+σ·E' > 0, so h is strictly increasing.
 *
 * 𝔱_y(x) = 𝔥⁻¹(𝔥(x) + y) inside the unit ball and x outside is a one-parameter group
 * of diffeomorphisms equal to the identity outside (−1,1).
 */
class DeRhamMap {
public:
    /// (1−r)⁻² above this makes 𝔥 overflow-adjacent; the flow is the identity there to
    /// double precision anyway, since |y| ≪ 𝔥(x).
    static constexpr double kFrozenExponent = 700.0;

    /// log h at 1/3 + j/(3K), j = 0..K.
    static const std::vector<double>& log_table() {
        static const std::vector<double> tab = [] {
            const std::size_t K = 1024;
            std::vector<double> t(K + 1);
            for (std::size_t j = 0; j <= K; ++j)
                t[j] = std::log(profile(1.0 / 3.0 + static_cast<double>(j) / (3.0 * static_cast<double>(K))));
            return t;
        }();
        return tab;
    }

    static double step(double r) {
        auto phi = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
        const double tau = 3.0 * (r - 1.0 / 3.0);
        if (tau <= 0.0) return 0.0;
        if (tau >= 1.0) return 1.0;
        const double a = phi(tau), b = phi(1.0 - tau);
        return a / (a + b);
    }

    /// h and h' on the blend region (1/3, 2/3).
    static std::pair<double, double> blend_with_derivative(double r) {
        const double tau = 3.0 * (r - 1.0 / 3.0);
        const double a = std::exp(-1.0 / tau), b = std::exp(-1.0 / (1.0 - tau));
        const double sig = a / (a + b);
        const double dsig = a * b * 3.0 * (1.0 / (tau * tau) + 1.0 / ((1.0 - tau) * (1.0 - tau))) / ((a + b) * (a + b));
        const double q = 1.0 - r;
        const double e = std::exp(1.0 / (q * q));
        const double de = 2.0 * e / (q * q * q);
        return {(1.0 - sig) * r + sig * e, (1.0 - sig) + dsig * (e - r) + sig * de};
    }

    static double profile(double r) {
        if (r <= 1.0 / 3.0) return r;
        const double e = std::exp(1.0 / ((r - 1.0) * (r - 1.0)));
        if (r >= 2.0 / 3.0) return e;
        const double s = step(r);
        return (1.0 - s) * r + s * e;
    }

    /// Inverse of the profile on [0, ∞).
    static double profile_inverse(double H) {
        if (H <= 1.0 / 3.0) return H;
        if (H >= std::exp(9.0)) return 1.0 - 1.0 / std::sqrt(std::log(H));
        // blend region: bracket from a table of log h, then Newton on log h, bisecting
        // when a step leaves the bracket or fails to halve the previous one
        const auto& tab = log_table();
        const double target = std::log(H);
        const std::size_t K = tab.size() - 1;
        const std::size_t k = static_cast<std::size_t>(std::upper_bound(tab.begin(), tab.end(), target) - tab.begin());
        const std::size_t kk = std::clamp<std::size_t>(k, 1, K);
        auto node = [&](std::size_t j) { return 1.0 / 3.0 + static_cast<double>(j) / (3.0 * static_cast<double>(K)); };
        double lo = node(kk - 1), hi = node(kk);
        double r = lo + (hi - lo) * std::clamp((target - tab[kk - 1]) / (tab[kk] - tab[kk - 1]), 0.0, 1.0);
        lo = std::max(1.0 / 3.0, lo - 1e-9);
        hi = std::min(2.0 / 3.0, hi + 1e-9);
        double last = hi - lo;
        for (int it = 0; it < 200; ++it) {
            const auto [v, dv] = blend_with_derivative(r);
            const double f = std::log(v) - target;
            if (f == 0.0) return r;
            if (f > 0) hi = r; else lo = r;
            const double dx = f * v / dv;
            if (std::abs(dx) <= 2 * std::numeric_limits<double>::epsilon() * r) return r - dx;
            double next = r - dx;
            if (!(next > lo && next < hi) || 2 * std::abs(next - r) > last) next = 0.5 * (lo + hi);
            last = std::abs(next - r);
            if (next == r || !(next > lo && next < hi)) break;
            r = next;
        }
        return r;
    }

    static double map(double x) { return std::copysign(profile(std::abs(x)), x); }
    static double inverse(double H) { return std::copysign(profile_inverse(std::abs(H)), H); }

    static bool frozen(double x) {
        const double r = std::abs(x);
        return r >= 1.0 || 1.0 / ((1.0 - r) * (1.0 - r)) > kFrozenExponent;
    }

    /// 𝔱_y(x).
    static double flow(double y, double x) {
        if (y == 0.0 || frozen(x)) return x;
        const double r = std::abs(x);
        // translation region: 𝔥 is the identity on [−1/3, 1/3]
        if (r <= 1.0 / 3.0 && std::abs(x + y) <= 1.0 / 3.0) return x + y;
        return inverse(map(x) + y);
    }
};

inline double flow(double y, double x) { return DeRhamMap::flow(y, x); }

/// max over xs of |𝔱_y(𝔱_{y2}(x)) − 𝔱_{y+y2}(x)|.
inline double group_law_defect(double y, double y2, std::span<const double> xs) {
    double m = 0.0;
    for (double x : xs) m = std::max(m, std::abs(flow(y, flow(y2, x)) - flow(y + y2, x)));
    return m;
}

struct MollifierParams {
    double eta = 0.25;
    std::size_t quadrature_nodes = 64;
};

/// Midpoint nodes s_k on (−1,1) and normalised weights of the symmetric bump
/// K₁(s) ∝ exp(−1/(1−s²)). Weights sum to 1; node k and M−1−k are mirror images.
struct Quadrature {
    std::vector<double> s, w;

    explicit Quadrature(std::size_t M) : s(M), w(M) {
        double total = 0.0;
        for (std::size_t k = 0; k < M; ++k) {
            s[k] = -1.0 + (2.0 * static_cast<double>(k) + 1.0) / static_cast<double>(M);
            w[k] = std::exp(-1.0 / (1.0 - s[k] * s[k]));
        }
        for (std::size_t k = 0; k < M / 2; ++k) w[M - 1 - k] = w[k];
        for (double v : w) total += v;
        for (double& v : w) v /= total;
    }
};

/// Quadrature node count for a ball of radius rho on spacing h: keeps the sample spacing
/// of the displacement below h/4 where 𝔱 is a translation.
inline std::size_t quadrature_count(double eta, double rho, double h) {
    const double want = std::ceil(8.0 * eta * rho / h);
    std::size_t M = std::max<std::size_t>(64, static_cast<std::size_t>(want));
    return M + (M % 2);
}

namespace detail {

// Linear interpolation of f at coordinate X, periodic on circles, clamped on intervals.
inline double interpolate(const GridFunction& f, double X) {
    const auto& d = f.domain();
    const double h = d.spacing();
    double s = (X - d.origin()) / h;
    const auto n = static_cast<long>(d.size());
    if (d.periodic()) {
        s = std::fmod(s, static_cast<double>(n));
        if (s < 0) s += static_cast<double>(n);
        long i = static_cast<long>(std::floor(s));
        if (i >= n) i = n - 1;
        const double th = s - static_cast<double>(i);
        const double a = f[static_cast<std::size_t>(i)], b = f[static_cast<std::size_t>((i + 1) % n)];
        return a + th * (b - a);
    }
    s = std::clamp(s, 0.0, static_cast<double>(n - 1));
    const long i = std::min(static_cast<long>(std::floor(s)), n - 2);
    const double th = s - static_cast<double>(i);
    const double a = f[static_cast<std::size_t>(i)], b = f[static_cast<std::size_t>(i + 1)];
    return a + th * (b - a);
}

} // namespace detail

/// f_η(x) = ∫ f(c + ρ·𝔱_y((x−c)/ρ)) K_η(−y) dy on the ball B(c, ρ); f elsewhere.
inline GridFunction mollify_local(const GridFunction& f, double center, double radius, const MollifierParams& p) {
    const auto& d = f.domain();
    if (!(radius > 0.0)) throw std::invalid_argument("mollify_local: radius must be positive");
    if (!(p.eta > 0.0 && p.eta < 1.0)) throw std::invalid_argument("mollify_local: eta must lie in (0,1)");
    if (d.periodic()) {
        if (radius > d.length() / 2) throw std::invalid_argument("mollify_local: ball wraps around the circle");
    } else if (center - radius < d.origin() - 1e-12 * d.length() ||
               center + radius > d.origin() + d.length() + 1e-12 * d.length()) {
        throw std::invalid_argument("mollify_local: ball leaves the interval");
    }
    const Quadrature q(p.quadrature_nodes);
    const std::size_t M = q.s.size();
    std::vector<double> out(f.values().begin(), f.values().end());
    parallel_for(d.size(), [&](std::size_t i) {
        const double off = d.periodic() ? d.offset(center, d.node(i)) : d.node(i) - center;
        const double z = off / radius;
        if (!(std::abs(z) < 1.0)) return;
        // accumulate deviations from f(x) over mirror pairs: constants come out exact and
        // affine data nearly so
        const double fx = f[i];
        double acc = 0.0;
        for (std::size_t k = 0; k < M / 2; ++k) {
            const double y = p.eta * q.s[k];
            const double a = detail::interpolate(f, center + radius * flow(y, z));
            const double b = detail::interpolate(f, center + radius * flow(-y, z));
            acc += q.w[k] * ((a - fx) + (b - fx));
        }
        out[i] = fx + acc;
    }, 32);
    return GridFunction(d, std::move(out));
}

/// Edge-wise first-difference deviation |Δ(g−f)|/h, maximised over the edges at each node
/// whose both ends satisfy inside(·).
template <typename Inside>
std::vector<double> first_difference_deviation(const GridFunction& f, const GridFunction& g, Inside&& inside) {
    const auto& d = f.domain();
    const std::size_t n = d.size();
    const double h = d.spacing();
    std::vector<double> dev(n, 0.0);
    const std::size_t edges = d.periodic() ? n : n - 1;
    for (std::size_t a = 0; a < edges; ++a) {
        const std::size_t b = d.next(a);
        if (!inside(a) || !inside(b)) continue;
        const double e = std::abs((g[b] - f[b]) - (g[a] - f[a])) / h;
        dev[a] = std::max(dev[a], e);
        dev[b] = std::max(dev[b], e);
    }
    return dev;
}

/// max |Δ³f| over the nodes whose third-difference stencil meets the ball B(center, radius).
inline double third_difference_peak(const GridFunction& f, double center, double radius) {
    const auto& d = f.domain();
    const auto t3 = third_difference(f);
    double m = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d.metric(d.node(i), center) < radius + 2 * d.spacing()) m = std::max(m, std::abs(t3[i]));
    return m;
}

struct SmoothingReport {
    std::size_t balls = 0;
    double max_budget_ratio = 0.0; ///< max over Ω of (|g−f| + k·first-difference deviation)/ε
    double c11_before = 0.0;
    double c11_after = 0.0;
};

/**
 * Smooths f on Ω = {eps > 0} while leaving it bit-identical where eps = 0.
 *
 * Ω is covered by balls B(c, ρ) with ρ the distance from c to the nearest eps = 0
 * node; each ball is responsible for the nodes in its inner third, and the uncovered
 * rest of a run is handled recursively. Sweeps repeat the cover with ball radii capped at
 * ρ_max/2, ρ_max/4, … down to 8h. Each ball takes the largest η on the ladder 1/2, 1/4, …
 * whose change (+ first-difference deviation when k = 1) stays within half of the
 * node-wise budget still unused, whose C¹,¹ constant stays below c11 + 2^{−s−1} in sweep s,
 * and which does not raise the peak third difference in the ball.
 */
inline GridFunction smooth_on_open(const GridFunction& f, const GridFunction& eps, int k = 1,
                                   SmoothingReport* report = nullptr) {
    require_same_domain(f.domain(), eps.domain(), "smooth_on_open");
    if (k != 0 && k != 1) throw std::invalid_argument("smooth_on_open: k must be 0 or 1");
    const auto& d = f.domain();
    const std::size_t n = d.size();
    const double h = d.spacing();
    for (double e : eps.values())
        if (e < 0.0) throw std::invalid_argument("smooth_on_open: eps must be non-negative");
    auto inside = [&](std::size_t i) { return eps[i] > 0.0; };

    // distance to the nearest eps = 0 node (or to the interval ends, which are treated as
    // outside so balls stay in the domain)
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    bool any_zero = false;
    for (std::size_t i = 0; i < n; ++i) any_zero = any_zero || !inside(i);
    for (std::size_t i = 0; i < n; ++i) {
        if (!inside(i)) {
            dist[i] = 0.0;
            continue;
        }
        for (std::size_t j = 0; j < n; ++j)
            if (!inside(j)) dist[i] = std::min(dist[i], d.distance(i, j));
        if (!d.periodic())
            dist[i] = std::min({dist[i], d.node(i) - d.origin(), d.origin() + d.length() - d.node(i)});
        if (!any_zero && d.periodic()) dist[i] = d.length() / 2;
    }

    // runs of Ω as index ranges [l, r] (r may exceed n on the circle: indices taken mod n)
    struct Range { long l, r; };
    std::vector<Range> todo;
    if (!any_zero && d.periodic()) {
        todo.push_back({0, static_cast<long>(n) - 1});
    } else {
        std::size_t start = 0;
        if (d.periodic())
            while (inside(start)) ++start; // start at an eps = 0 node
        for (std::size_t s = 0; s < n; ++s) {
            const std::size_t i = (start + s) % n;
            if (!inside(i)) continue;
            const long l = static_cast<long>(start + s);
            std::size_t len = 0;
            while (s + len < n && inside((start + s + len) % n)) ++len;
            todo.push_back({l, l + static_cast<long>(len) - 1});
            s += len;
        }
    }
    auto wrap = [&](long i) { return static_cast<std::size_t>(((i % static_cast<long>(n)) + static_cast<long>(n)) % static_cast<long>(n)); };

    // balls of radius min(cap, ρ), centred mid-run; each covers its inner third and the
    // rest of the run is handled recursively
    struct Ball { double center, radius; };
    auto cover = [&](double cap) {
        std::vector<Ball> out;
        std::vector<Range> work = todo;
        for (std::size_t next = 0; next < work.size(); ++next) {
            const Range rg = work[next];
            if (rg.l > rg.r) continue;
            const long m = rg.l + (rg.r - rg.l) / 2;
            const std::size_t mi = wrap(m);
            const double rho = std::min(cap, dist[mi]);
            out.push_back({d.node(mi), rho});
            const long span = std::max(0L, static_cast<long>(std::ceil(rho / (3.0 * h))) - 1);
            work.push_back({rg.l, m - span - 1});
            work.push_back({m + span + 1, rg.r});
        }
        return out;
    };
    // sweeps at decreasing radius caps: large balls remove broad features, small ones reach
    // kinks where the blend region of a large ball would cost too much C¹,¹
    std::vector<std::vector<Ball>> sweeps{cover(std::numeric_limits<double>::infinity())};
    double rmax = 0.0;
    for (const auto& b : sweeps[0]) rmax = std::max(rmax, b.radius);
    for (double cap = rmax / 2; cap >= 8 * h; cap /= 2) sweeps.push_back(cover(cap));

    GridFunction g = f;
    SmoothingReport rep;
    rep.c11_before = regularity_certificate(f).c11_constant;
    std::vector<double> used(n, 0.0); // accumulated deviation per node
    double c11 = rep.c11_before;
    for (std::size_t s = 0; s < sweeps.size(); ++s) {
        // sweep s may lift the C¹,¹ constant by 2^{-s-1} over its starting value
        const double limit = c11 + std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(s, 1000)) - 1);
        for (const auto& ball : sweeps[s]) {
            ++rep.balls;
            if (ball.radius < 2 * h) continue;
            for (double eta = 0.5; eta > 1e-6; eta *= 0.5) {
                MollifierParams p{eta, quadrature_count(eta, ball.radius, h)};
                auto raw = mollify_local(g, ball.center, ball.radius, p);
                std::vector<double> cv(raw.values().begin(), raw.values().end());
                for (std::size_t i = 0; i < n; ++i)
                    if (!inside(i)) cv[i] = g[i];
                GridFunction cand(d, std::move(cv));
                auto dev1 = first_difference_deviation(g, cand, inside);
                bool ok = true;
                for (std::size_t i = 0; i < n && ok; ++i) {
                    const double dv = std::abs(cand[i] - g[i]) + (k == 1 ? dev1[i] : 0.0);
                    // each pass may spend half of what is left of the node's budget
                    if (dv > 0.0 && !(dv <= 0.5 * (eps[i] - used[i]))) ok = false;
                }
                if (!ok) continue;
                const double c11_new = regularity_certificate(cand).c11_constant;
                if (c11_new > limit) continue;
                // a pass must not roughen the ball at grid scale (interpolation and
                // quadrature noise show up in third differences first)
                if (third_difference_peak(cand, ball.center, ball.radius) > third_difference_peak(g, ball.center, ball.radius))
                    continue;
                for (std::size_t i = 0; i < n; ++i)
                    used[i] += std::abs(cand[i] - g[i]) + (k == 1 ? dev1[i] : 0.0);
                g = std::move(cand);
                break;
            }
            // a ball with no admissible η keeps the current values, which stays within budget
        }
        c11 = regularity_certificate(g).c11_constant;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (inside(i)) rep.max_budget_ratio = std::max(rep.max_budget_ratio, used[i] / eps[i]);
    rep.c11_after = regularity_certificate(g).c11_constant;
    if (report) *report = rep;
    return g;
}

} // namespace wkam
