#pragma once

// Brute-force O(N²) references. Deliberately plain loops with no shared helpers from
// the fast paths, so agreement is a genuine cross-check.

#include <cstddef>
#include <cstdlib>
#include <limits>
#include <vector>

#include "wkam/cost.hpp"
#include "wkam/domain.hpp"

namespace wkam::oracle {

enum class Sign { minus, plus };

/// min_j u_j + d²/t (minus) or max_j u_j − d²/t (plus); argmin/argmax is the smallest index.
inline GridFunction brute_moreau(double t, const GridFunction& u, Sign sign,
                                 std::vector<std::size_t>* arg = nullptr) {
    const auto& d = u.domain();
    const std::size_t n = d.size();
    const double h = d.spacing();
    std::vector<double> out(n);
    if (arg) arg->assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        double best = 0.0;
        std::size_t bj = 0;
        for (std::size_t j = 0; j < n; ++j) {
            std::size_t k = i > j ? i - j : j - i;
            if (d.periodic() && n - k < k) k = n - k;
            const double r = static_cast<double>(k) * h;
            const double v = sign == Sign::minus ? u[j] + r * r / t : u[j] - r * r / t;
            if (j == 0 || (sign == Sign::minus ? v < best : v > best)) {
                best = v;
                bj = j;
            }
        }
        out[i] = best;
        if (arg) (*arg)[i] = bj;
    }
    return GridFunction(d, std::move(out));
}

/// T⁻u(x_i) = min_j u_j + c(x_j, x_i); T⁺u(x_i) = max_j u_j − c(x_i, x_j).
inline GridFunction brute_lax(const Cost& c, const GridFunction& u, Sign sign) {
    const std::size_t n = u.size();
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        double best = sign == Sign::minus ? std::numeric_limits<double>::infinity()
                                          : -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (sign == Sign::minus) {
                const double v = u[j] + c.eval(j, i);
                if (v < best) best = v;
            } else {
                const double v = u[j] - c.eval(i, j);
                if (v > best) best = v;
            }
        }
        out[i] = best;
    }
    return GridFunction(u.domain(), std::move(out));
}

struct PairScan {
    double min_slack = 0.0;         ///< min over pairs of c(x,y) − u(y) + u(x)
    double max_violation = 0.0;     ///< −min_slack
    std::vector<double> node_slack; ///< per x: min over y of the slack of (x,y) and (y,x)
};

inline PairScan brute_pair_scan(const Cost& c, const GridFunction& u) {
    const std::size_t n = u.size();
    PairScan s;
    s.min_slack = std::numeric_limits<double>::infinity();
    s.node_slack.assign(n, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double slack = c.eval(i, j) - u[j] + u[i];
            if (slack < s.min_slack) s.min_slack = slack;
            if (slack < s.node_slack[i]) s.node_slack[i] = slack;
            if (slack < s.node_slack[j]) s.node_slack[j] = slack;
        }
    s.max_violation = -s.min_slack;
    return s;
}

} // namespace wkam::oracle
