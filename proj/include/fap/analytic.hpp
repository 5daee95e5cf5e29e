#pragma once

// Closed-form first-arrival-position densities and the formula-level oracles
// used to check them.
//
// 2D (receiver line x_2 = 0, source (x_1, d)):
//   f(xi) = |v| d / (sigma2 pi) * exp(-v_2 d / sigma2) * exp(-v_1 (x_1 - xi) / sigma2)
//           * K_1(|v| r / sigma2) / r,                 r = sqrt((x_1 - xi)^2 + d^2)
// 3D (receiver plane x_3 = 0, source (x_1, x_2, lambda)):
//   f(xi, eta) = lambda / (2 pi) * exp(-v_3 lambda / sigma2)
//                * exp((v_1 (xi - x_1) + v_2 (eta - x_2)) / sigma2)
//                * exp(-|v| R / sigma2) * (1 + |v| R / sigma2) / R^3
//
// Everything is evaluated in log space and exponentiated once, so the growing
// drift exponentials never meet an underflowed Bessel factor.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

#include "fap/error.hpp"
#include "fap/model.hpp"
#include "fap/quadrature.hpp"
#include "fap/specfun.hpp"

namespace fap {

/// Below this value of |v| r / sigma2 the zero-drift limit replaces the Bessel factor.
inline constexpr double kZeroDriftThreshold = 1e-8;

namespace detail {

inline void require_dimension(const ChannelParams& params, int dimension, const char* op) {
    if (params.dimension() != dimension) {
        std::ostringstream msg;
        msg << op << " requires a " << dimension << "D channel, got dimension " << params.dimension();
        throw ConfigError(msg.str());
    }
}

inline void require_offsets(const ChannelParams& params, const SourceOffset& source, const BoundaryOffset& arrival,
                            const char* op) {
    const std::size_t expected = static_cast<std::size_t>(params.dimension() - 1);
    if (source.size() != expected || arrival.size() != expected) {
        std::ostringstream msg;
        msg << op << ": offsets must have " << expected << " tangential component(s)";
        throw ConfigError(msg.str());
    }
}

inline void require_no_tangential_drift(const ChannelParams& params, const char* op) {
    const auto v = params.drift();
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
        if (v[i] != 0.0) {
            std::ostringstream msg;
            msg << op << " is only valid for purely normal drift (tangential component " << i << " is " << v[i] << ")";
            throw PreconditionError(msg.str());
        }
    }
}

inline void require_positive_time(double t, const char* op) {
    if (!(t > 0.0) || !std::isfinite(t)) {
        std::ostringstream msg;
        msg << op << ": time must be positive and finite, got " << t;
        throw DomainError(msg.str());
    }
}

/// log of the normal CDF, accurate deep into the lower tail.
inline double log_normal_cdf(double x) {
    if (x > -20.0) return std::log(0.5 * std::erfc(-x / std::numbers::sqrt2));
    const double z = -x / std::numbers::sqrt2;
    const double z2 = z * z;
    const double series = 1.0 - 1.0 / (2.0 * z2) + 3.0 / (4.0 * z2 * z2) - 15.0 / (8.0 * z2 * z2 * z2);
    return std::log(0.5) - z2 - std::log(z * std::sqrt(std::numbers::pi)) + std::log(series);
}

} // namespace detail

/// gamma(x) = exp(v . x / sigma2). Throws DomainError if the exponent exceeds 700 in magnitude.
inline double drift_factor(const ChannelParams& params, std::span<const double> point) {
    if (point.size() != static_cast<std::size_t>(params.dimension()))
        throw ConfigError("drift_factor: point dimension does not match the channel");
    double exponent = 0.0;
    const auto v = params.drift();
    for (std::size_t i = 0; i < point.size(); ++i) exponent += v[i] * point[i];
    exponent /= params.sigma2();
    if (std::abs(exponent) > 700.0) throw DomainError("drift_factor: exponent magnitude exceeds 700");
    return std::exp(exponent);
}

namespace detail {

// v.w - |v||w| without cancellation when w is nearly parallel to v, via
// |v|^2 |w|^2 - (v.w)^2 = |v x w|^2.
inline double aligned_exponent(double dot, double cross_sq, double norm_product) {
    if (dot <= 0.0) return dot - norm_product;
    return -cross_sq / (norm_product + dot);
}

} // namespace detail

inline double fap_density_2d(const ChannelParams& params, const SourceOffset& source, const BoundaryOffset& arrival) {
    detail::require_dimension(params, 2, "fap_density_2d");
    detail::require_offsets(params, source, arrival, "fap_density_2d");
    const double sigma2 = params.sigma2();
    const double d = params.distance();
    const auto v = params.drift();
    const double dx = source[0] - arrival[0];
    const double r = std::hypot(dx, d);
    const double s = params.drift_norm() / sigma2;
    const double z = s * r;
    const double drift_exponent = (-v[1] * d - v[0] * dx) / sigma2;
    if (z < kZeroDriftThreshold) return std::exp(drift_exponent) * d / (std::numbers::pi * r * r);
    // w = (xi - x1, -d); drift_exponent - z = (v.w - |v| r) / sigma2
    const double cross = -v[0] * d + v[1] * dx;
    const double exponent = detail::aligned_exponent(drift_exponent * sigma2, cross * cross, z * sigma2) / sigma2;
    const double log_f = std::log(s * d / std::numbers::pi) + exponent + std::log(bessel_k1_scaled(z)) - std::log(r);
    return std::exp(log_f);
}

/// The purely normal drift case, written with D = sigma2 / 2.
inline double fap_density_2d_longitudinal(const ChannelParams& params, const SourceOffset& source,
                                          const BoundaryOffset& arrival) {
    detail::require_dimension(params, 2, "fap_density_2d_longitudinal");
    detail::require_offsets(params, source, arrival, "fap_density_2d_longitudinal");
    detail::require_no_tangential_drift(params, "fap_density_2d_longitudinal");
    const double diffusion = params.diffusion_d();
    const double d = params.distance();
    const double v = params.normal_drift();
    const double r = std::hypot(arrival[0] - source[0], d);
    const double z = std::abs(v) * r / (2.0 * diffusion);
    const double drift_exponent = -v * d / (2.0 * diffusion);
    if (z < kZeroDriftThreshold) return std::exp(drift_exponent) * d / (std::numbers::pi * r * r);
    const double log_f = std::log(std::abs(v) * d / (2.0 * std::numbers::pi * diffusion)) + drift_exponent +
                         std::log(bessel_k1_scaled(z)) - z - std::log(r);
    return std::exp(log_f);
}

inline double fap_density_3d(const ChannelParams& params, const SourceOffset& source, const BoundaryOffset& arrival) {
    detail::require_dimension(params, 3, "fap_density_3d");
    detail::require_offsets(params, source, arrival, "fap_density_3d");
    const double sigma2 = params.sigma2();
    const double lambda = params.distance();
    const auto v = params.drift();
    const double dxi = arrival[0] - source[0];
    const double deta = arrival[1] - source[1];
    const double rr = std::sqrt(dxi * dxi + deta * deta + lambda * lambda);
    const double z = params.drift_norm() * rr / sigma2;
    const double drift_exponent = (-v[2] * lambda + v[0] * dxi + v[1] * deta) / sigma2;
    if (z < kZeroDriftThreshold)
        return std::exp(drift_exponent) * lambda / (2.0 * std::numbers::pi * rr * rr * rr);
    // w = (dxi, deta, -lambda); drift_exponent - z = (v.w - |v| R) / sigma2
    const double c1 = -v[1] * lambda - v[2] * deta;
    const double c2 = v[2] * dxi + v[0] * lambda;
    const double c3 = v[0] * deta - v[1] * dxi;
    const double exponent =
        detail::aligned_exponent(drift_exponent * sigma2, c1 * c1 + c2 * c2 + c3 * c3, z * sigma2) / sigma2;
    const double log_f = std::log(lambda / (2.0 * std::numbers::pi)) + exponent + std::log1p(z) - 3.0 * std::log(rr);
    return std::exp(log_f);
}

/// Dispatches on the channel dimension.
inline double fap_density(const ChannelParams& params, const SourceOffset& source, const BoundaryOffset& arrival) {
    return params.dimension() == 2 ? fap_density_2d(params, source, arrival) : fap_density_3d(params, source, arrival);
}

/// Density with the source given as a full point (tangential..., normal); the
/// normal coordinate plays the role of the channel distance.
inline double fap_density_from_point(const ChannelParams& params, std::span<const double> source_point,
                                     const BoundaryOffset& arrival) {
    if (source_point.size() != static_cast<std::size_t>(params.dimension()))
        throw ConfigError("source point dimension does not match the channel");
    const auto moved = params.with_distance(source_point.back());
    const SourceOffset source(TangentialVector(source_point.first(source_point.size() - 1)));
    return fap_density(moved, source, arrival);
}

/// Half-space Poisson kernel z / (2 pi (rho^2 + z^2)^{3/2}).
inline double poisson_kernel_halfspace_3d(double height, std::array<double, 2> offset) {
    if (!(height > 0.0)) throw DomainError("poisson_kernel_halfspace_3d: height must be positive");
    const double rr2 = offset[0] * offset[0] + offset[1] * offset[1] + height * height;
    return height / (2.0 * std::numbers::pi * rr2 * std::sqrt(rr2));
}

/// Boundary data g(xi, eta) on the receiver plane.
struct SurfaceData {
    std::function<double(double, double)> g;

    static SurfaceData constant(double c) {
        return {[c](double, double) { return c; }};
    }
    /// 1 inside the disk, 1/2 on its rim, 0 outside.
    static SurfaceData disk_indicator(double cx, double cy, double radius) {
        return {[=](double x, double y) {
            const double rho = std::hypot(x - cx, y - cy);
            if (rho < radius) return 1.0;
            return rho == radius ? 0.5 : 0.0;
        }};
    }
    static SurfaceData gaussian_bump(double cx, double cy, double width) {
        return {[=](double x, double y) {
            const double rho2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            return std::exp(-rho2 / (2.0 * width * width));
        }};
    }
};

/// Bounded harmonic extension u(x, y, z) = int g * poisson_kernel over the plane.
/// Uses polar coordinates about (x, y) with rho = z tan(theta), which turns the
/// kernel measure into sin(theta) dtheta dphi / (2 pi).
inline double harmonic_extension_3d(const SurfaceData& data, std::array<double, 3> point,
                                    const QuadratureConfig& quad = {}) {
    const double x = point[0];
    const double y = point[1];
    const double z = point[2];
    if (!(z > 0.0)) throw DomainError("harmonic_extension_3d: point must lie above the plane (z > 0)");
    QuadratureConfig inner = quad;
    inner.relative_tolerance = std::max(quad.relative_tolerance * 0.1, 1e-14);
    auto radial = [&](double phi) {
        const double c = std::cos(phi);
        const double s = std::sin(phi);
        auto f = [&](double theta) {
            const double rho = z * std::tan(theta);
            return data.g(x + rho * c, y + rho * s) * std::sin(theta);
        };
        return adaptive_integrate(f, Domain::finite(0.0, std::numbers::pi / 2.0), inner).value;
    };
    return adaptive_integrate(radial, Domain::finite(0.0, 2.0 * std::numbers::pi), quad).value /
           (2.0 * std::numbers::pi);
}

/// a(x0) = exp(-x0 v / D), the weight of the mirrored source.
inline double image_coefficient(const ChannelParams& params, double x0) {
    detail::require_dimension(params, 2, "image_coefficient");
    return std::exp(-x0 * params.normal_drift() / params.diffusion_d());
}

/// Absorbing-boundary Green's function by the image method. Here x is the
/// transmission axis (x >= 0) and y the receiver axis.
/// G_abs = G(x; x0) - a(x0) G(x; -x0) = G(x; x0) * (1 - exp(-x0 x / (D t))).
inline double absorbing_green_2d(const ChannelParams& params, double x, double y, double x0, double y0, double t) {
    detail::require_dimension(params, 2, "absorbing_green_2d");
    detail::require_no_tangential_drift(params, "absorbing_green_2d");
    detail::require_positive_time(t, "absorbing_green_2d");
    if (!(x0 > 0.0)) throw DomainError("absorbing_green_2d: source coordinate x0 must be positive");
    if (!(x >= 0.0)) throw DomainError("absorbing_green_2d: x must be non-negative");
    const double diffusion = params.diffusion_d();
    const double v = params.normal_drift();
    const double four_dt = 4.0 * diffusion * t;
    const double free = std::exp(-((x - x0 - v * t) * (x - x0 - v * t) + (y - y0) * (y - y0)) / four_dt) /
                        (std::numbers::pi * four_dt);
    return free * -std::expm1(-x0 * x / (diffusion * t));
}

/// Arrival rate per unit length at (0, y): D * dG_abs/dx at x = 0, i.e. the
/// magnitude of the Fick flux into the receiver.
inline double flux_2d(const ChannelParams& params, double y, double x0, double y0, double t) {
    detail::require_dimension(params, 2, "flux_2d");
    detail::require_no_tangential_drift(params, "flux_2d");
    detail::require_positive_time(t, "flux_2d");
    if (!(x0 > 0.0)) throw DomainError("flux_2d: source coordinate x0 must be positive");
    const double diffusion = params.diffusion_d();
    const double v = params.normal_drift();
    const double a = x0 + v * t;
    const double log_j = std::log(x0 / (4.0 * std::numbers::pi * diffusion * t * t)) -
                         (a * a + (y - y0) * (y - y0)) / (4.0 * diffusion * t);
    return std::exp(log_j);
}

/// The time-integrated flux int_0^inf J(0, xi, t) dt, evaluated numerically on
/// the chart t = tau0 * exp(u), u in [-40, 40].
inline double fap_via_time_integration(const ChannelParams& params, const SourceOffset& source,
                                       const BoundaryOffset& arrival, const QuadratureConfig& quad = {}) {
    detail::require_dimension(params, 2, "fap_via_time_integration");
    detail::require_offsets(params, source, arrival, "fap_via_time_integration");
    detail::require_no_tangential_drift(params, "fap_via_time_integration");
    const double d = params.distance();
    const double r2 = d * d + (arrival[0] - source[0]) * (arrival[0] - source[0]);
    const double tau0 = r2 / (2.0 * params.diffusion_d());
    auto integrand = [&](double t) { return flux_2d(params, arrival[0], d, source[0], t); };
    return adaptive_integrate(integrand, Domain::half_line(0.0, tau0), quad).value;
}

/// Density of the hitting time of the receiver plane (inverse Gaussian law of
/// the normal coordinate).
inline double first_passage_time_density(const ChannelParams& params, double t) {
    detail::require_positive_time(t, "first_passage_time_density");
    const double diffusion = params.diffusion_d();
    const double d = params.distance();
    const double a = d + params.normal_drift() * t;
    const double log_f = std::log(d) - 0.5 * std::log(4.0 * std::numbers::pi * diffusion * t * t * t) -
                         a * a / (4.0 * diffusion * t);
    return std::exp(log_f);
}

/// P(tau <= t). Tends to hitting_probability as t grows.
inline double first_passage_cdf(const ChannelParams& params, double t) {
    if (t == std::numeric_limits<double>::infinity()) {
        const double vn = params.normal_drift();
        return vn <= 0.0 ? 1.0 : std::exp(-2.0 * vn * params.distance() / params.sigma2());
    }
    detail::require_positive_time(t, "first_passage_cdf");
    const double sigma = std::sqrt(params.sigma2());
    const double d = params.distance();
    const double mu = params.normal_drift();
    const double root_t = std::sqrt(t);
    const double first = detail::log_normal_cdf(-(d + mu * t) / (sigma * root_t));
    const double second = -2.0 * mu * d / params.sigma2() + detail::log_normal_cdf(-(d - mu * t) / (sigma * root_t));
    return std::min(1.0, std::exp(first) + std::exp(second));
}

/// Total arrival mass: 1 if v_n <= 0, else exp(-2 v_n d / sigma2).
inline double hitting_probability(const ChannelParams& params) {
    const double vn = params.normal_drift();
    return vn <= 0.0 ? 1.0 : std::exp(-2.0 * vn * params.distance() / params.sigma2());
}

/// Arrival density restricted to hits no later than t_max, in any dimension:
/// int_0^{t_max} f_tau(t) prod_i N(xi_i; x_i + v_i t, sigma2 t) dt.
inline double time_marginal_density(const ChannelParams& params, const SourceOffset& source,
                                    const BoundaryOffset& arrival, double t_max, const QuadratureConfig& quad = {}) {
    detail::require_offsets(params, source, arrival, "time_marginal_oracle");
    const double sigma2 = params.sigma2();
    const double diffusion = params.diffusion_d();
    const double d = params.distance();
    const double vn = params.normal_drift();
    const auto v = params.drift();
    const std::size_t m = source.size();
    double r2 = d * d;
    for (std::size_t i = 0; i < m; ++i) r2 += (arrival[i] - source[i]) * (arrival[i] - source[i]);
    auto log_integrand = [&](double t) {
        const double a = d + vn * t;
        double log_f = std::log(d) - 0.5 * std::log(4.0 * std::numbers::pi * diffusion * t * t * t) -
                       a * a / (4.0 * diffusion * t);
        for (std::size_t i = 0; i < m; ++i) {
            const double e = arrival[i] - source[i] - v[i] * t;
            log_f += -0.5 * std::log(2.0 * std::numbers::pi * sigma2 * t) - e * e / (2.0 * sigma2 * t);
        }
        return log_f;
    };
    auto integrand = [&](double t) { return std::exp(log_integrand(t)); };
    const double tau0 = r2 / (2.0 * diffusion);
    if (t_max == std::numeric_limits<double>::infinity())
        return adaptive_integrate(integrand, Domain::half_line(0.0, tau0), quad).value;
    detail::require_positive_time(t_max, "time_marginal_density");
    auto in_log_time = [&](double u) {
        const double t = std::exp(u);
        return std::exp(log_integrand(t) + u);
    };
    const double upper = std::log(t_max);
    const double lower = std::min(std::log(tau0) - 40.0, upper - 1.0);
    return adaptive_integrate(in_log_time, Domain::finite(lower, upper), quad).value;
}

/// Independent arrival density for arbitrary drift: the normal hitting time and
/// the tangential Gaussian motion are independent, so the density is the time
/// marginal of their product.
inline double time_marginal_oracle(const ChannelParams& params, const SourceOffset& source,
                                   const BoundaryOffset& arrival, const QuadratureConfig& quad = {}) {
    return time_marginal_density(params, source, arrival, std::numeric_limits<double>::infinity(), quad);
}

/// Second-order central-difference evaluation of the generator
/// A f = sum_i v_i d_i f + (sigma2 / 2) sum_i d_ii f at an interior point.
template <class Field>
double generator_apply(const ChannelParams& params, Field&& field, std::span<const double> point, double step) {
    if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("generator_apply: step must be positive");
    if (point.size() != static_cast<std::size_t>(params.dimension()))
        throw ConfigError("generator_apply: point dimension does not match the channel");
    if (!(point.back() > step)) throw DomainError("generator_apply: point is within one step of the boundary");
    std::vector<double> p(point.begin(), point.end());
    const auto v = params.drift();
    const double f0 = field(std::span<const double>(p));
    double out = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double xi = p[i];
        p[i] = xi + step;
        const double fp = field(std::span<const double>(p));
        p[i] = xi - step;
        const double fm = field(std::span<const double>(p));
        p[i] = xi;
        out += v[i] * (fp - fm) / (2.0 * step) + 0.5 * params.sigma2() * (fp - 2.0 * f0 + fm) / (step * step);
    }
    return out;
}

} // namespace fap
