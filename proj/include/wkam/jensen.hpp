#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "wkam/cost.hpp"
#include "wkam/domain.hpp"
#include "wkam/error.hpp"
#include "wkam/jensen_transforms.hpp"
#include "wkam/lax.hpp"

namespace wkam {

enum class JensenVariant { minus_plus_minus, plus_minus_plus };

struct JensenParams {
    double t = 0.0;
    double s = 0.0;
    JensenVariant variant = JensenVariant::minus_plus_minus;
};

struct RegularizationCertificate {
    double sandwich_low_defect = 0.0;  ///< max(lower bound − result)
    double sandwich_high_defect = 0.0; ///< max(result − upper bound)
    double sup_change = 0.0;           ///< ‖result − u‖∞
    RegularityCertificate output_regularity;
    double semiconcavity_bound = std::numeric_limits<double>::infinity();
    double semiconvexity_bound = std::numeric_limits<double>::infinity();
    double tol = 0.0;

    /// Rounding allowance for the regularity constants: 64 ulp of the values over 2h².
    double regularity_slack = 0.0;

    bool sandwich_holds() const { return sandwich_low_defect <= tol && sandwich_high_defect <= tol; }
    bool regularity_holds() const {
        return output_regularity.semiconcavity_constant <= semiconcavity_bound + regularity_slack &&
               output_regularity.semiconvexity_constant <= semiconvexity_bound + regularity_slack;
    }
    bool holds() const { return sandwich_holds() && regularity_holds(); }
};

struct Regularized {
    GridFunction w;
    RegularizationCertificate cert;
};

inline double regularity_slack(const GridFunction& w) {
    const double h = w.domain().spacing();
    return 64.0 * std::numeric_limits<double>::epsilon() * (1.0 + w.sup_norm()) / (h * h);
}

/// J^{-t}∘J^{+(t+s)}∘J^{-s}u (or the dual variant), as the closing/opening pair on the grid.
inline GridFunction jensen_regularize(const GridFunction& u, const JensenParams& p) {
    if (p.variant == JensenVariant::minus_plus_minus) return semiconcave_hull(p.t, semiconvex_hull(p.s, u));
    return semiconvex_hull(p.t, semiconcave_hull(p.s, u));
}

/// Sandwich and regularity certificate of w against u, per variant.
inline RegularizationCertificate certify_uniform(const Cost& c, const GridFunction& u, const GridFunction& w,
                                                 const JensenParams& p, double tol) {
    RegularizationCertificate cert;
    cert.tol = tol;
    const auto tm = t_minus(c, u);
    const auto tp = t_plus(c, u);
    if (p.variant == JensenVariant::minus_plus_minus) {
        cert.sandwich_low_defect = std::max(0.0, max_excess(t_plus(c, tm), w));
        cert.sandwich_high_defect = std::max(0.0, max_excess(w, tm));
    } else {
        cert.sandwich_low_defect = std::max(0.0, max_excess(tp, w));
        cert.sandwich_high_defect = std::max(0.0, max_excess(w, t_minus(c, tp)));
    }
    cert.sup_change = sup_distance(w, u);
    cert.output_regularity = regularity_certificate(w);
    cert.semiconcavity_bound = 1.0 / (p.variant == JensenVariant::minus_plus_minus ? p.t : p.s);
    cert.semiconvexity_bound = 1.0 / (p.variant == JensenVariant::minus_plus_minus ? p.s : p.t);
    cert.regularity_slack = regularity_slack(w);
    return cert;
}

inline void check_params_against_K(const JensenParams& p, double K) {
    if (!(p.t > 0.0) || !(p.s > 0.0)) throw PreconditionError("t and s must be positive");
    if (K > 0.0 && (p.t >= 1.0 / K || p.s >= 1.0 / K))
        throw PreconditionError("t and s must be < 1/K = " + format_double(1.0 / K) + " (K = " +
                                format_double(K) + "), got t = " + format_double(p.t) +
                                ", s = " + format_double(p.s));
}

/// Uniform-case regularization of a subsolution. Requires t, s < 1/K for the cost's K.
inline Regularized regularize_uniform(const Cost& c, const GridFunction& u, const JensenParams& p,
                                      std::optional<double> tol = std::nullopt) {
    require_same_domain(c.domain(), u.domain(), "regularize_uniform");
    const double tl = tol ? *tol : default_tol(c, u);
    check_params_against_K(p, estimate_K(c).K);
    require_subsolution(c, u, tl, "regularize_uniform");
    auto w = jensen_regularize(u, p);
    auto cert = certify_uniform(c, u, w, p, tl);
    return {std::move(w), cert};
}

/// Largest t = s on the ladder (0.9/K)·2^{-k} (or 2^{-k} when K = 0) whose output moves
/// u by at most eps.
inline JensenParams select_ts(const Cost& c, const GridFunction& u, double eps,
                              JensenVariant variant = JensenVariant::minus_plus_minus) {
    if (!(eps > 0.0)) throw std::invalid_argument("select_ts: eps must be positive");
    const double K = estimate_K(c).K;
    const double h = u.domain().spacing();
    double t = K > 0.0 ? 0.9 / K : 1.0;
    double best = std::numeric_limits<double>::infinity();
    for (; t > 1e-6 * h * h; t *= 0.5) {
        const JensenParams p{t, t, variant};
        const double change = sup_distance(jensen_regularize(u, p), u);
        if (change <= eps) return p;
        best = std::min(best, change);
    }
    throw PreconditionError("select_ts: ladder exhausted; best sup change " + format_double(best) +
                            " > eps " + format_double(eps));
}

} // namespace wkam
