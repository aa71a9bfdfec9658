#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "wkam/error.hpp"

namespace wkam {

enum class DomainKind { circle, interval };

/**
 * Uniform one-dimensional grid on a circle (periodic) or on a closed interval.
 *
 * Circle of circumference L with n nodes: h = L/n, nodes origin + i*h.
 * Interval [a, a+length] with n nodes: h = length/(n-1), both endpoints are nodes.
 * Node coordinates are always computed as origin + i*h, never accumulated.
 */
class GridDomain {
public:
    GridDomain() = default;

    static GridDomain make(DomainKind kind, double origin, double length, std::size_t n_points) {
        if (!(length > 0.0) || !std::isfinite(length))
            throw InvalidDomain("grid length must be positive and finite");
        if (n_points < 2) throw InvalidDomain("grid needs at least 2 nodes");
        if (!std::isfinite(origin)) throw InvalidDomain("grid origin must be finite");
        GridDomain d;
        d.kind_ = kind;
        d.origin_ = origin;
        d.length_ = length;
        d.n_ = n_points;
        d.h_ = kind == DomainKind::circle ? length / static_cast<double>(n_points)
                                          : length / static_cast<double>(n_points - 1);
        return d;
    }

    DomainKind kind() const { return kind_; }
    bool periodic() const { return kind_ == DomainKind::circle; }
    double origin() const { return origin_; }
    double length() const { return length_; }
    std::size_t size() const { return n_; }
    double spacing() const { return h_; }

    double node(std::size_t i) const { return origin_ + static_cast<double>(i) * h_; }

    /// Index distance between nodes: |i-j|, or min(|i-j|, n-|i-j|) on the circle.
    std::size_t index_distance(std::size_t i, std::size_t j) const {
        const std::size_t k = i > j ? i - j : j - i;
        return periodic() ? std::min(k, n_ - k) : k;
    }

    /// Metric between nodes, k*h with k the index distance.
    double distance(std::size_t i, std::size_t j) const {
        return static_cast<double>(index_distance(i, j)) * h_;
    }

    /// Metric between arbitrary coordinates.
    double metric(double x, double y) const {
        double d = std::abs(x - y);
        if (periodic()) {
            d = std::fmod(d, length_);
            d = std::min(d, length_ - d);
        }
        return d;
    }

    /// Signed offset y - x, reduced to (-L/2, L/2] on the circle.
    double offset(double x, double y) const {
        double d = y - x;
        if (periodic()) {
            d = std::remainder(d, length_);
            if (d <= -length_ / 2) d += length_;
        }
        return d;
    }

    /// Neighbor indices with periodic wrap; on intervals the caller must stay interior.
    std::size_t next(std::size_t i) const { return i + 1 == n_ ? 0 : i + 1; }
    std::size_t prev(std::size_t i) const { return i == 0 ? n_ - 1 : i - 1; }

    /// Nodes where a centred second difference exists.
    bool interior(std::size_t i) const { return periodic() || (i > 0 && i + 1 < n_); }

    friend bool operator==(const GridDomain& a, const GridDomain& b) {
        return a.kind_ == b.kind_ && a.origin_ == b.origin_ && a.length_ == b.length_ && a.n_ == b.n_;
    }

    std::string describe() const {
        std::ostringstream os;
        os << (periodic() ? "circle" : "interval") << "(origin=" << origin_ << ", length=" << length_
           << ", n=" << n_ << ")";
        return os.str();
    }

private:
    DomainKind kind_ = DomainKind::interval;
    double origin_ = 0.0;
    double length_ = 1.0;
    std::size_t n_ = 2;
    double h_ = 1.0;
};

inline GridDomain make_grid(DomainKind kind, double origin, double length, std::size_t n_points) {
    return GridDomain::make(kind, origin, length, n_points);
}

/// Real values sampled at the nodes of a GridDomain. Every value is finite.
class GridFunction {
public:
    GridFunction() = default;

    GridFunction(GridDomain domain, std::vector<double> values)
        : domain_(std::move(domain)), values_(std::move(values)) {
        if (values_.size() != domain_.size())
            throw DomainMismatch("grid function has " + std::to_string(values_.size()) +
                                 " values for " + std::to_string(domain_.size()) + " nodes");
        for (std::size_t i = 0; i < values_.size(); ++i)
            if (!std::isfinite(values_[i]))
                throw std::invalid_argument("non-finite value at node " + std::to_string(i));
    }

    static GridFunction constant(const GridDomain& d, double value) {
        return GridFunction(d, std::vector<double>(d.size(), value));
    }

    template <typename F>
    static GridFunction sample(const GridDomain& d, F&& f) {
        std::vector<double> v(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) v[i] = f(d.node(i));
        return GridFunction(d, std::move(v));
    }

    const GridDomain& domain() const { return domain_; }
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    std::span<const double> values() const { return values_; }

    double max() const { return *std::max_element(values_.begin(), values_.end()); }
    double min() const { return *std::min_element(values_.begin(), values_.end()); }
    double sup_norm() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }
    double range() const { return max() - min(); }

    friend bool operator==(const GridFunction& a, const GridFunction& b) {
        return a.domain_ == b.domain_ && a.values_ == b.values_;
    }

private:
    GridDomain domain_;
    std::vector<double> values_;
};

inline void require_same_domain(const GridDomain& a, const GridDomain& b, const char* what) {
    if (!(a == b))
        throw DomainMismatch(std::string(what) + ": " + a.describe() + " vs " + b.describe());
}

/// Node-wise combination f(a_i, b_i).
template <typename F>
GridFunction zip_with(const GridFunction& a, const GridFunction& b, F&& f) {
    require_same_domain(a.domain(), b.domain(), "zip_with");
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return GridFunction(a.domain(), std::move(out));
}

template <typename F>
GridFunction map(const GridFunction& a, F&& f) {
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return GridFunction(a.domain(), std::move(out));
}

inline GridFunction operator+(const GridFunction& a, const GridFunction& b) {
    return zip_with(a, b, std::plus<>{});
}
inline GridFunction operator-(const GridFunction& a, const GridFunction& b) {
    return zip_with(a, b, std::minus<>{});
}
inline GridFunction operator-(const GridFunction& a) {
    return map(a, [](double v) { return -v; });
}
inline GridFunction operator+(const GridFunction& a, double c) {
    return map(a, [c](double v) { return v + c; });
}
inline GridFunction operator*(double c, const GridFunction& a) {
    return map(a, [c](double v) { return c * v; });
}

/// Δ²u(x_i) = u(x_{i+1}) + u(x_{i-1}) - 2u(x_i). Interval endpoints carry 0 and are
/// excluded from every statistic built on top of this.
inline GridFunction second_difference(const GridFunction& u) {
    const auto& d = u.domain();
    const std::size_t n = d.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (d.interior(i)) out[i] = u[d.next(i)] + u[d.prev(i)] - 2.0 * u[i];
    return GridFunction(d, std::move(out));
}

/// Third difference u(i+2) - 3u(i+1) + 3u(i) - u(i-1), anchored at i; zero where the
/// stencil leaves an interval. Used as a smoothness proxy.
inline GridFunction third_difference(const GridFunction& u) {
    const auto& d = u.domain();
    const std::size_t n = d.size();
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!d.periodic() && (i == 0 || i + 2 >= n)) continue;
        const std::size_t ip = d.next(i), ipp = d.next(ip), im = d.prev(i);
        out[i] = u[ipp] - 3.0 * u[ip] + 3.0 * u[i] - u[im];
    }
    return GridFunction(d, std::move(out));
}

/// Discrete regularity of a grid function.
struct RegularityCertificate {
    double semiconcavity_constant = 0.0; ///< least k >= 0 with Δ²u <= 2kh²
    double semiconvexity_constant = 0.0; ///< least k >= 0 with Δ²u >= -2kh²
    double c11_constant = 0.0;           ///< max |Δ²u| / h²
    double max_step = 0.0;               ///< max |u(x+h) - u(x)|
};

inline RegularityCertificate regularity_certificate(const GridFunction& u) {
    const auto& d = u.domain();
    const double h2 = d.spacing() * d.spacing();
    RegularityCertificate cert;
    double hi = 0.0, lo = 0.0, amax = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (!d.interior(i)) continue;
        const double dd = u[d.next(i)] + u[d.prev(i)] - 2.0 * u[i];
        hi = std::max(hi, dd);
        lo = std::min(lo, dd);
        amax = std::max(amax, std::abs(dd));
    }
    cert.semiconcavity_constant = hi / (2.0 * h2);
    cert.semiconvexity_constant = -lo / (2.0 * h2);
    cert.c11_constant = amax / h2;
    const std::size_t steps = d.periodic() ? d.size() : d.size() - 1;
    for (std::size_t i = 0; i < steps; ++i)
        cert.max_step = std::max(cert.max_step, std::abs(u[d.next(i)] - u[i]));
    return cert;
}

inline double sup_distance(const GridFunction& u, const GridFunction& v) {
    require_same_domain(u.domain(), v.domain(), "sup_distance");
    double m = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) m = std::max(m, std::abs(u[i] - v[i]));
    return m;
}

/// max_i (a_i - b_i); non-positive exactly when a <= b node-wise.
inline double max_excess(const GridFunction& a, const GridFunction& b) {
    require_same_domain(a.domain(), b.domain(), "max_excess");
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, a[i] - b[i]);
    return m;
}

// CSV serialisation: header `x,value`, %.17g, LF line endings.

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv(std::ostream& os, const GridFunction& u) {
    os << "x,value\n";
    for (std::size_t i = 0; i < u.size(); ++i)
        os << format_double(u.domain().node(i)) << ',' << format_double(u[i]) << '\n';
}

inline void write_csv(const std::string& path, const GridFunction& u) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_csv(os, u);
}

/// Parses `x,value` rows onto the given domain; the x column must match the nodes.
inline GridFunction read_csv(std::istream& is, const GridDomain& d) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty CSV");
    if (line != "x,value") throw std::runtime_error("expected header `x,value`, got `" + line + "`");
    std::vector<double> values;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("malformed CSV row `" + line + "`");
        const double x = std::stod(line.substr(0, comma));
        const double v = std::stod(line.substr(comma + 1));
        const std::size_t i = values.size();
        if (i >= d.size()) throw DomainMismatch("CSV has more rows than grid nodes");
        if (std::abs(x - d.node(i)) > 1e-9 * (1.0 + std::abs(d.node(i))))
            throw DomainMismatch("CSV row " + std::to_string(i) + " has x=" + format_double(x) +
                                 ", grid node is " + format_double(d.node(i)));
        values.push_back(v);
    }
    return GridFunction(d, std::move(values));
}

inline GridFunction read_csv(const std::string& path, const GridDomain& d) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_csv(is, d);
}

} // namespace wkam
