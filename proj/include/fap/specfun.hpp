#pragma once

// Modified Bessel functions of the second kind, orders 0 and 1.
//
// x < 2  : ascending series with the logarithmic term.
// x >= 2 : Steed/Temme continued fraction for exp(x) K_nu(x), which converges
//          to full double precision from x = 2 upwards.
//
// The exponentially scaled values exp(x) K_nu(x) are the primary outputs; the
// density code composes them in log space.

#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

#include "fap/error.hpp"
#include "fap/quadrature.hpp"

namespace fap {

struct BesselAccuracy {
    double target_relative_error = 1e-10;
    int max_oracle_subdivisions = 2000;

    void validate() const {
        if (!(target_relative_error > 0.0 && target_relative_error <= 1e-6))
            throw ConfigError("Bessel target_relative_error must lie in (0, 1e-6]");
        if (max_oracle_subdivisions < 10)
            throw ConfigError("Bessel max_oracle_subdivisions must be at least 10");
    }
};

namespace detail {

inline void check_bessel_argument(double x, const char* name) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        std::ostringstream msg;
        msg << name << ": argument must be positive and finite, got " << x;
        throw DomainError(msg.str());
    }
}

/// Unscaled (K0, K1) from the ascending series; intended for 0 < x < 2.
inline std::pair<double, double> bessel_k01_series(double x) {
    constexpr double euler_gamma = std::numbers::egamma;
    const double y = 0.25 * x * x;
    const double log_half_x = std::log(0.5 * x);

    // term0_k = y^k / (k!)^2, term1_k = y^k / (k! (k+1)!)
    double term0 = 1.0;
    double term1 = 1.0;
    double harmonic = 0.0;  // H_k
    double i0 = 1.0;
    double i1_series = 1.0;
    double k0_tail = 0.0;
    double k1_tail = (-2.0 * euler_gamma + 1.0);  // psi(1) + psi(2) at k = 0
    for (int k = 1; k < 60; ++k) {
        term0 *= y / (static_cast<double>(k) * k);
        term1 *= y / (static_cast<double>(k) * (k + 1));
        harmonic += 1.0 / k;
        const double harmonic_next = harmonic + 1.0 / (k + 1);
        i0 += term0;
        i1_series += term1;
        k0_tail += harmonic * term0;
        k1_tail += (-2.0 * euler_gamma + harmonic + harmonic_next) * term1;
        if (term0 < 1e-18 * i0 && term1 < 1e-18 * i1_series) break;
    }
    const double i1 = 0.5 * x * i1_series;
    const double k0 = -(log_half_x + euler_gamma) * i0 + k0_tail;
    const double k1 = 1.0 / x + log_half_x * i1 - 0.25 * x * k1_tail;
    return {k0, k1};
}

/// Scaled (exp(x) K0, exp(x) K1) by Steed's continued fraction; intended for x >= 2.
inline std::pair<double, double> bessel_k01_scaled_cf(double x) {
    constexpr double eps = 1e-17;
    constexpr int max_iterations = 10000;
    constexpr double a1 = 0.25;  // 1/4 - nu^2 with nu = 0
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double delh = d;
    double h = d;
    double q1 = 0.0;
    double q2 = 1.0;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i <= max_iterations; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < eps) break;
    }
    h *= a1;
    const double k0e = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
    const double k1e = k0e * (x + 0.5 - h) / x;
    return {k0e, k1e};
}

inline constexpr double kSeriesSwitch = 2.0;

} // namespace detail

/// exp(x) K_0(x).
inline double bessel_k0_scaled(double x) {
    detail::check_bessel_argument(x, "bessel_k0_scaled");
    if (x < detail::kSeriesSwitch) return detail::bessel_k01_series(x).first * std::exp(x);
    return detail::bessel_k01_scaled_cf(x).first;
}

/// exp(x) K_1(x); finite and well conditioned far past the point where K_1 underflows.
inline double bessel_k1_scaled(double x) {
    detail::check_bessel_argument(x, "bessel_k1_scaled");
    if (x < detail::kSeriesSwitch) return detail::bessel_k01_series(x).second * std::exp(x);
    return detail::bessel_k01_scaled_cf(x).second;
}

inline double bessel_k0(double x) {
    detail::check_bessel_argument(x, "bessel_k0");
    if (x < detail::kSeriesSwitch) return detail::bessel_k01_series(x).first;
    return detail::bessel_k01_scaled_cf(x).first * std::exp(-x);
}

inline double bessel_k1(double x) {
    detail::check_bessel_argument(x, "bessel_k1");
    if (x < detail::kSeriesSwitch) return detail::bessel_k01_series(x).second;
    return detail::bessel_k01_scaled_cf(x).second * std::exp(-x);
}

/// Reference value K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt by adaptive
/// quadrature on [0, acosh(1 + 60/x)], where the integrand has dropped below
/// exp(-60) of its value at t = 0. Slow; meant for cross-checks.
inline double bessel_k_oracle(int order, double x, const BesselAccuracy& accuracy = {}) {
    if (order != 0 && order != 1) throw DomainError("bessel_k_oracle: order must be 0 or 1");
    detail::check_bessel_argument(x, "bessel_k_oracle");
    accuracy.validate();
    const double t_max = std::acosh(1.0 + 60.0 / x);
    auto integrand = [x, order](double t) {
        const double c = std::cosh(t);
        const double exponent = x * c;
        if (!(exponent < 745.0)) return 0.0;
        const double weight = order == 0 ? 1.0 : c;
        return std::exp(-exponent) * weight;
    };
    QuadratureConfig cfg;
    cfg.relative_tolerance = std::max(1e-14, accuracy.target_relative_error * 1e-2);
    cfg.max_subdivisions = accuracy.max_oracle_subdivisions;
    return adaptive_integrate(integrand, Domain::finite(0.0, t_max), cfg).value;
}

} // namespace fap
