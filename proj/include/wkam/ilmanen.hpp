#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include "wkam/cost.hpp"
#include "wkam/domain.hpp"
#include "wkam/error.hpp"
#include "wkam/jensen.hpp"
#include "wkam/lax.hpp"

namespace wkam {

struct IlmanenResult {
    GridFunction u;          ///< w − min(w + g), squeezed between −g and f
    GridFunction w;          ///< regularized subsolution of the separable cost
    RegularizationCertificate cert; ///< of w against u₀ = −g
    JensenParams params;
    double K = 0.0;             ///< semiconcavity constant of the separable cost
    double normalization = 0.0; ///< min(w + g)
    double lower_defect = 0.0;  ///< max(−g − u), ≤ tol when the bound holds
    double upper_defect = 0.0;  ///< max(u − f)

    bool holds() const { return cert.holds() && lower_defect <= cert.tol && upper_defect <= cert.tol; }
};

/**
 * A C¹,¹ function between −g and f, for f + g ≥ 0. u₀ = −g is a subsolution of
 * c(x,y) = g(x) + f(y); its uniform regularization w is one too, and any subsolution
 * satisfies w − f ≤ min(w + g), so w − min(w + g) lies between the bounds.
 * t = s = 0.9/K with K the larger semiconcavity constant of f and g (t = s = L² when both
 * are concave).
 */
inline IlmanenResult ilmanen_sandwich(const GridFunction& f, const GridFunction& g,
                                      std::optional<double> tol = std::nullopt) {
    require_same_domain(f.domain(), g.domain(), "ilmanen_sandwich");
    std::size_t worst = 0;
    for (std::size_t i = 1; i < f.size(); ++i)
        if (f[i] + g[i] < f[worst] + g[worst]) worst = i;
    if (f[worst] + g[worst] < 0.0)
        throw PreconditionError("ilmanen_sandwich: f + g < 0 at node " + std::to_string(worst) + " (x = " +
                                format_double(f.domain().node(worst)) + ", f + g = " +
                                format_double(f[worst] + g[worst]) + ")");
    const auto c = Cost::separable(f, g);
    const auto u0 = -g;
    IlmanenResult r;
    r.K = estimate_K(c).K;
    const double L = f.domain().length();
    const double t = r.K > 0.0 ? 0.9 / r.K : L * L;
    r.params = JensenParams{t, t, JensenVariant::minus_plus_minus};
    auto reg = regularize_uniform(c, u0, r.params, tol);
    r.w = std::move(reg.w);
    r.cert = reg.cert;
    r.normalization = (r.w + g).min();
    r.u = r.w + (-r.normalization);
    r.lower_defect = max_excess(-g, r.u);
    r.upper_defect = max_excess(r.u, f);
    return r;
}

} // namespace wkam
