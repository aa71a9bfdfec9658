#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "wkam/domain.hpp"
#include "wkam/parallel.hpp"

namespace wkam {

enum class ShiftSide { source, target };

/**
 * Cost c(x,y) on the nodes of a grid.
 *
 * Base kernels:
 *   quadratic(t)                   d(x,y)²/t
 *   quad_plus_potential(t, V, W)   d(x,y)²/t + V(y) + W(x)
 *   separable(f, g)                g(x) + f(y)
 *   matrix(C)                      C[i][j]
 * A shifted cost subtracts ψ(y) (target) or ψ(x) (source) from another cost. Shifts
 * stack; they are applied in the order they were added.
 */
class Cost {
public:
    enum class Kind { quadratic, quad_plus_potential, separable, matrix, shifted };

    struct Shift {
        ShiftSide side;
        GridFunction psi;
    };

    static Cost quadratic(const GridDomain& d, double t) {
        check_t(t);
        Cost c(d, Kind::quadratic);
        c.t_ = t;
        return c;
    }

    static Cost quad_plus_potential(const GridDomain& d, double t, GridFunction V, GridFunction W) {
        check_t(t);
        require_same_domain(d, V.domain(), "potential V");
        require_same_domain(d, W.domain(), "potential W");
        Cost c(d, Kind::quad_plus_potential);
        c.t_ = t;
        c.a_ = std::move(V);
        c.b_ = std::move(W);
        return c;
    }

    /// c(x,y) = g(x) + f(y).
    static Cost separable(GridFunction f, GridFunction g) {
        require_same_domain(f.domain(), g.domain(), "separable cost");
        Cost c(f.domain(), Kind::separable);
        c.a_ = std::move(f);
        c.b_ = std::move(g);
        return c;
    }

    /// Row-major n×n matrix, C[i*n + j] = c(x_i, x_j).
    static Cost matrix(const GridDomain& d, std::vector<double> C) {
        const std::size_t n = d.size();
        if (C.size() != n * n)
            throw DomainMismatch("cost matrix has " + std::to_string(C.size()) + " entries, need " +
                                 std::to_string(n * n));
        for (double v : C)
            if (!std::isfinite(v)) throw std::invalid_argument("cost matrix has a non-finite entry");
        Cost c(d, Kind::matrix);
        c.matrix_ = std::move(C);
        return c;
    }

    static Cost shifted(Cost base, GridFunction psi, ShiftSide side) {
        require_same_domain(base.domain_, psi.domain(), "shifted cost");
        base.shifts_.push_back({side, std::move(psi)});
        return base;
    }

    const GridDomain& domain() const { return domain_; }
    std::size_t size() const { return domain_.size(); }

    Kind kind() const { return shifts_.empty() ? base_ : Kind::shifted; }
    Kind base_kind() const { return base_; }
    const std::vector<Shift>& shifts() const { return shifts_; }

    double t() const { return t_; }
    const GridFunction& V() const { return a_; }
    const GridFunction& W() const { return b_; }
    const GridFunction& f() const { return a_; }
    const GridFunction& g() const { return b_; }
    const std::vector<double>& matrix_entries() const { return matrix_; }

    /// c(x_i, x_j).
    double operator()(std::size_t i, std::size_t j) const {
        double v = base_eval(i, j);
        for (const auto& s : shifts_) v -= s.side == ShiftSide::target ? s.psi[j] : s.psi[i];
        return v;
    }

    double eval(std::size_t i, std::size_t j) const {
        if (i >= size() || j >= size())
            throw std::out_of_range("cost index (" + std::to_string(i) + "," + std::to_string(j) +
                                    ") outside grid of " + std::to_string(size()) + " nodes");
        return (*this)(i, j);
    }

    /// Calls f(kernel) once with a callable kernel(i, j) specialised to this cost's kind.
    /// Used by the hot scans so the kind switch happens outside the double loop.
    template <typename F>
    decltype(auto) with_kernel(F&& f) const {
        auto finish = [&](auto&& base) -> decltype(auto) {
            if (shifts_.empty()) return f(base);
            return f([&](std::size_t i, std::size_t j) {
                double v = base(i, j);
                for (const auto& s : shifts_) v -= s.side == ShiftSide::target ? s.psi[j] : s.psi[i];
                return v;
            });
        };
        const double h = domain_.spacing(), t = t_;
        const GridDomain& d = domain_;
        switch (base_) {
        case Kind::quadratic:
            return finish([&d, h, t](std::size_t i, std::size_t j) {
                const double r = static_cast<double>(d.index_distance(i, j)) * h;
                return r * r / t;
            });
        case Kind::quad_plus_potential:
            return finish([&d, h, t, this](std::size_t i, std::size_t j) {
                const double r = static_cast<double>(d.index_distance(i, j)) * h;
                return r * r / t + a_[j] + b_[i];
            });
        case Kind::separable:
            return finish([this](std::size_t i, std::size_t j) { return b_[i] + a_[j]; });
        default:
            return finish([this](std::size_t i, std::size_t j) { return matrix_[i * size() + j]; });
        }
    }

private:
    Cost(const GridDomain& d, Kind k) : domain_(d), base_(k) {}

    static void check_t(double t) {
        if (!(t > 0.0) || !std::isfinite(t)) throw std::invalid_argument("cost parameter t must be positive");
    }

    double base_eval(std::size_t i, std::size_t j) const {
        switch (base_) {
        case Kind::quadratic: {
            const double r = static_cast<double>(domain_.index_distance(i, j)) * domain_.spacing();
            return r * r / t_;
        }
        case Kind::quad_plus_potential: {
            const double r = static_cast<double>(domain_.index_distance(i, j)) * domain_.spacing();
            return r * r / t_ + a_[j] + b_[i];
        }
        case Kind::separable:
            return b_[i] + a_[j];
        default:
            return matrix_[i * size() + j];
        }
    }

    GridDomain domain_;
    Kind base_;
    double t_ = 1.0;
    GridFunction a_, b_; // V,W or f,g
    std::vector<double> matrix_;
    std::vector<Shift> shifts_;
};

inline double eval_cost(const Cost& c, std::size_t i, std::size_t j) { return c.eval(i, j); }

struct KCertificate {
    double K = 0.0;
};

/// Largest discrete semiconcavity constant over all slices y ↦ c(x,y) and x ↦ c(x,y).
inline KCertificate estimate_K(const Cost& c) {
    const auto& d = c.domain();
    const std::size_t n = d.size();
    const double h2 = d.spacing() * d.spacing();
    std::vector<double> row_max(n, 0.0);
    c.with_kernel([&](auto&& k) {
        parallel_for(n, [&](std::size_t a) {
            double m = 0.0;
            for (std::size_t b = 0; b < n; ++b) {
                if (!d.interior(b)) continue;
                const std::size_t bn = d.next(b), bp = d.prev(b);
                m = std::max(m, k(a, bn) + k(a, bp) - 2.0 * k(a, b));
                m = std::max(m, k(bn, a) + k(bp, a) - 2.0 * k(b, a));
            }
            row_max[a] = m;
        }, 16);
    });
    return {*std::max_element(row_max.begin(), row_max.end()) / (2.0 * h2)};
}

struct CostDiagnostics {
    double K = 0.0;
    double min = 0.0;
    double max = 0.0;
    double diagonal_min = 0.0;
    bool diagonal_negative = false;
};

inline CostDiagnostics validate_cost(const Cost& c) {
    const std::size_t n = c.size();
    CostDiagnostics out;
    out.K = estimate_K(c).K;
    std::vector<double> lo(n), hi(n);
    c.with_kernel([&](auto&& k) {
        parallel_for(n, [&](std::size_t i) {
            double a = std::numeric_limits<double>::infinity(), b = -a;
            for (std::size_t j = 0; j < n; ++j) {
                const double v = k(i, j);
                a = std::min(a, v);
                b = std::max(b, v);
            }
            lo[i] = a;
            hi[i] = b;
        }, 16);
    });
    out.min = *std::min_element(lo.begin(), lo.end());
    out.max = *std::max_element(hi.begin(), hi.end());
    out.diagonal_min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) out.diagonal_min = std::min(out.diagonal_min, c(i, i));
    out.diagonal_negative = out.diagonal_min < 0.0;
    return out;
}

/// max |c(x,y)| over all node pairs.
inline double cost_sup_norm(const Cost& c) {
    const std::size_t n = c.size();
    std::vector<double> m(n, 0.0);
    c.with_kernel([&](auto&& k) {
        parallel_for(n, [&](std::size_t i) {
            double a = 0.0;
            for (std::size_t j = 0; j < n; ++j) a = std::max(a, std::abs(k(i, j)));
            m[i] = a;
        }, 16);
    });
    return *std::max_element(m.begin(), m.end());
}

/// Default equality tolerance 1e-9·(1 + ‖u‖∞ + ‖c‖∞).
inline double default_tol(const Cost& c, const GridFunction& u) {
    return 1e-9 * (1.0 + u.sup_norm() + cost_sup_norm(c));
}

} // namespace wkam
