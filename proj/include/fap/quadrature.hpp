#pragma once

// Adaptive 10/21-point Gauss-Kronrod quadrature over finite and infinite
// domains. Infinite domains are mapped onto finite charts: half-lines through
// t = a + s*exp(u) (or a tan chart), the full line through x = c + s*tan(theta).

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>
#include <vector>

#include "fap/error.hpp"

namespace fap {

struct QuadratureConfig {
    double relative_tolerance = 1e-10;
    double absolute_tolerance = std::numeric_limits<double>::min();
    int max_subdivisions = 2000;

    void validate() const {
        if (!(relative_tolerance > 0.0) || !(absolute_tolerance > 0.0))
            throw ConfigError("quadrature tolerances must be positive");
        if (max_subdivisions < 10)
            throw ConfigError("quadrature max_subdivisions must be at least 10");
    }
};

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    int subdivisions = 0;
};

/// Integration domain plus the chart used to reach it.
class Domain {
public:
    enum class Chart { finite, upper_exp, lower_exp, upper_tan, lower_tan, full_tan };

    static Domain finite(double a, double b) { return Domain(Chart::finite, a, b, 1.0); }
    /// [a, inf) through t = a + scale*exp(u), u in [-log_span, log_span].
    static Domain half_line(double a, double scale = 1.0, double log_span = 40.0) {
        return Domain(Chart::upper_exp, a, log_span, scale);
    }
    /// (-inf, b] through t = b - scale*exp(u).
    static Domain half_line_below(double b, double scale = 1.0, double log_span = 40.0) {
        return Domain(Chart::lower_exp, b, log_span, scale);
    }
    /// [a, inf) through t = a + scale*tan(theta); exact, no truncation.
    static Domain half_line_tan(double a, double scale = 1.0) {
        return Domain(Chart::upper_tan, a, 0.0, scale);
    }
    /// (-inf, b] through t = b - scale*tan(theta).
    static Domain half_line_below_tan(double b, double scale = 1.0) {
        return Domain(Chart::lower_tan, b, 0.0, scale);
    }
    /// (-inf, inf) through x = center + scale*tan(theta).
    static Domain full_line(double center = 0.0, double scale = 1.0) {
        return Domain(Chart::full_tan, center, 0.0, scale);
    }

    Chart chart() const noexcept { return chart_; }

    /// Bounds of the chart variable.
    std::pair<double, double> chart_bounds() const {
        constexpr double half_pi = std::numbers::pi / 2.0;
        switch (chart_) {
        case Chart::finite: return {a_, b_};
        case Chart::upper_exp:
        case Chart::lower_exp: return {-b_, b_};
        case Chart::upper_tan:
        case Chart::lower_tan: return {0.0, half_pi};
        case Chart::full_tan: return {-half_pi, half_pi};
        }
        return {a_, b_};
    }

    /// Maps the chart variable to (x, dx/dchart).
    std::pair<double, double> map(double s) const {
        switch (chart_) {
        case Chart::finite: return {s, 1.0};
        case Chart::upper_exp: {
            const double e = scale_ * std::exp(s);
            return {a_ + e, e};
        }
        case Chart::lower_exp: {
            const double e = scale_ * std::exp(s);
            return {a_ - e, e};
        }
        case Chart::upper_tan: {
            const double c = std::cos(s);
            return {a_ + scale_ * std::tan(s), scale_ / (c * c)};
        }
        case Chart::lower_tan: {
            const double c = std::cos(s);
            return {a_ - scale_ * std::tan(s), scale_ / (c * c)};
        }
        case Chart::full_tan: {
            const double c = std::cos(s);
            return {a_ + scale_ * std::tan(s), scale_ / (c * c)};
        }
        }
        return {s, 1.0};
    }

private:
    Domain(Chart chart, double a, double b, double scale) : chart_(chart), a_(a), b_(b), scale_(scale) {
        if (!std::isfinite(a) || !std::isfinite(b) || !(scale > 0.0) || !std::isfinite(scale))
            throw ConfigError("integration domain bounds must be finite and the scale positive");
        if (chart == Chart::finite && !(a <= b))
            throw ConfigError("finite integration domain requires a <= b");
    }

    Chart chart_;
    double a_;
    double b_;
    double scale_;
};

namespace detail {

// QUADPACK qk21 abscissae and weights.
inline constexpr std::array<double, 11> kXgk{
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> kWgk{
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208965243210, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg{
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
    double a;
    double b;
    double value;
    double error;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class G>
Segment gauss_kronrod21(G& g, double a, double b) {
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = g(center);
    double resg = 0.0;
    double resk = fc * kWgk[10];
    double resabs = std::abs(resk);
    std::array<double, 10> f1{};
    std::array<double, 10> f2{};
    for (int j = 0; j < 10; ++j) {
        const double dx = half * kXgk[j];
        f1[j] = g(center - dx);
        f2[j] = g(center + dx);
        const double sum = f1[j] + f2[j];
        resk += kWgk[j] * sum;
        resabs += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
        if (j % 2 == 1) resg += kWg[j / 2] * sum;
    }
    const double reskh = resk * 0.5;
    double resasc = kWgk[10] * std::abs(fc - reskh);
    for (int j = 0; j < 10; ++j)
        resasc += kWgk[j] * (std::abs(f1[j] - reskh) + std::abs(f2[j] - reskh));

    const double value = resk * half;
    resabs *= std::abs(half);
    resasc *= std::abs(half);
    double err = std::abs((resk - resg) * half);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
        err = std::max(50.0 * eps * resabs, err);
    return {a, b, value, err};
}

} // namespace detail

/// Globally adaptive bisection driven by the largest local error estimate.
/// Throws ConvergenceError when max_subdivisions is exhausted before the
/// tolerance max(absolute, relative*|value|) is met.
template <class F>
QuadResult adaptive_integrate(F&& f, const Domain& domain, const QuadratureConfig& cfg = {}) {
    cfg.validate();
    auto g = [&](double s) {
        const auto [x, jac] = domain.map(s);
        if (!std::isfinite(x)) return 0.0;
        const double fx = f(x);
        if (fx == 0.0) return 0.0;
        const double v = fx * jac;
        return std::isfinite(v) ? v : 0.0;
    };
    const auto [lo, hi] = domain.chart_bounds();
    if (lo == hi) return {0.0, 0.0, 0};

    std::priority_queue<detail::Segment> heap;
    heap.push(detail::gauss_kronrod21(g, lo, hi));
    double total = heap.top().value;
    double error = heap.top().error;
    int subdivisions = 1;
    std::vector<detail::Segment> frozen;  // too narrow to split further

    auto tolerance = [&] { return std::max(cfg.absolute_tolerance, cfg.relative_tolerance * std::abs(total)); };

    while (error > tolerance() && !heap.empty()) {
        if (subdivisions >= cfg.max_subdivisions) {
            std::ostringstream msg;
            msg << "adaptive quadrature did not converge after " << subdivisions
                << " subdivisions (estimate " << total << ", error " << error << ")";
            throw ConvergenceError(msg.str(), total, error);
        }
        const detail::Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            frozen.push_back(worst);
            continue;
        }
        const auto left = detail::gauss_kronrod21(g, worst.a, mid);
        const auto right = detail::gauss_kronrod21(g, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++subdivisions;

        // Re-sum periodically; the running totals drift by roundoff.
        if (subdivisions % 64 == 0) {
            auto copy = heap;
            total = 0.0;
            error = 0.0;
            while (!copy.empty()) {
                total += copy.top().value;
                error += copy.top().error;
                copy.pop();
            }
            for (const auto& s : frozen) {
                total += s.value;
                error += s.error;
            }
        }
    }

    double sum = 0.0;
    double err = 0.0;
    while (!heap.empty()) {
        sum += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    for (const auto& s : frozen) {
        sum += s.value;
        err += s.error;
    }
    return {sum, err, subdivisions};
}

/// Integrals of f over consecutive intervals [points[i-1], points[i]] plus the
/// tail (-inf, points[0]], accumulated into a running cumulative integral.
/// points must be non-decreasing. tail_scale sets the chart scale of the tail.
template <class F>
std::vector<double> cumulative_integral(F&& f, const std::vector<double>& points, double tail_scale,
                                        const QuadratureConfig& cfg = {}) {
    std::vector<double> out(points.size(), 0.0);
    if (points.empty()) return out;
    double acc = adaptive_integrate(f, Domain::half_line_below_tan(points.front(), tail_scale), cfg).value;
    out[0] = acc;
    QuadratureConfig piece = cfg;
    piece.absolute_tolerance = std::max(cfg.absolute_tolerance, 1e-16);
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (points[i] < points[i - 1]) throw ConfigError("cumulative_integral requires sorted points");
        if (points[i] > points[i - 1])
            acc += adaptive_integrate(f, Domain::finite(points[i - 1], points[i]), piece).value;
        out[i] = acc;
    }
    return out;
}

} // namespace fap
