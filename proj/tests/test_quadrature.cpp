#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "fap/analytic.hpp"
#include "fap/quadrature.hpp"

namespace {

using namespace fap;
using std::numbers::pi;

TEST(Quadrature, CauchyMassOnFullLine) {
    auto f = [](double x) { return 1.0 / (pi * (1.0 + x * x)); };
    EXPECT_NEAR(adaptive_integrate(f, Domain::full_line()).value, 1.0, 1e-10);
}

TEST(Quadrature, ExponentialOnHalfLine) {
    auto f = [](double t) { return std::exp(-t); };
    EXPECT_NEAR(adaptive_integrate(f, Domain::half_line(0.0)).value, 1.0, 1e-10);
    EXPECT_NEAR(adaptive_integrate(f, Domain::half_line_tan(0.0)).value, 1.0, 1e-10);
    auto g = [](double t) { return std::exp(t); };
    EXPECT_NEAR(adaptive_integrate(g, Domain::half_line_below(0.0)).value, 1.0, 1e-10);
    EXPECT_NEAR(adaptive_integrate(g, Domain::half_line_below_tan(0.0)).value, 1.0, 1e-10);
}

TEST(Quadrature, DensityNormalizesForDriftTowardReceiver) {
    const auto p = params_new(2, {0.0, -1.0}, 1.0, 1.0);
    auto f = [&](double xi) { return fap_density_2d(p, SourceOffset::planar(0.0), BoundaryOffset::planar(xi)); };
    EXPECT_NEAR(adaptive_integrate(f, Domain::full_line(0.0, 1.0)).value, 1.0, 1e-6);
}

TEST(Quadrature, FiniteIntervalsAndEmptyRange) {
    auto f = [](double x) { return std::sin(x); };
    EXPECT_NEAR(adaptive_integrate(f, Domain::finite(0.0, pi)).value, 2.0, 1e-12);
    EXPECT_EQ(adaptive_integrate(f, Domain::finite(1.0, 1.0)).value, 0.0);
}

TEST(Quadrature, ErrorEstimatesAreConservative) {
    struct Case {
        std::function<double(double)> f;
        Domain domain;
        double exact;
    };
    const std::vector<Case> cases{
        {[](double x) { return std::exp(-x * x); }, Domain::full_line(), std::sqrt(pi)},
        {[](double x) { return 1.0 / (1.0 + x * x); }, Domain::half_line_tan(0.0), pi / 2.0},
        {[](double x) { return std::sqrt(x); }, Domain::finite(0.0, 1.0), 2.0 / 3.0},
        {[](double x) { return std::log(x); }, Domain::finite(0.0, 1.0), -1.0},
        {[](double x) { return std::exp(-2.0 * x); }, Domain::half_line(0.0), 0.5},
        {[](double x) { return std::cos(10.0 * x); }, Domain::finite(0.0, pi / 20.0), 0.1},
        {[](double x) { return 1.0 / std::sqrt(x); }, Domain::finite(0.0, 4.0), 4.0},
        {[](double x) { return std::pow(1.0 + x * x, -1.5); }, Domain::full_line(), 2.0},
        {[](double x) { return x * std::exp(-x); }, Domain::half_line_tan(0.0, 2.0), 1.0},
        {[](double x) { return 1.0 / (x * x); }, Domain::half_line(1.0), 1.0},
    };
    QuadratureConfig cfg;
    cfg.relative_tolerance = 1e-6;
    int conservative = 0;
    for (const auto& c : cases) {
        const auto r = adaptive_integrate(c.f, c.domain, cfg);
        EXPECT_NEAR(r.value, c.exact, 1e-5 * std::abs(c.exact));
        if (std::abs(r.value - c.exact) <= r.error) ++conservative;
    }
    EXPECT_GE(conservative, 9);
}

TEST(Quadrature, ThrowsWhenBudgetIsExhausted) {
    QuadratureConfig cfg;
    cfg.relative_tolerance = 1e-14;
    cfg.max_subdivisions = 10;
    auto f = [](double x) { return std::sin(1.0 / x); };
    EXPECT_THROW(adaptive_integrate(f, Domain::finite(1e-3, 1.0), cfg), ConvergenceError);
}

TEST(Quadrature, ValidatesConfig) {
    QuadratureConfig cfg;
    cfg.relative_tolerance = 0.0;
    EXPECT_THROW(adaptive_integrate([](double) { return 1.0; }, Domain::finite(0, 1), cfg), ConfigError);
    cfg = {};
    cfg.max_subdivisions = 3;
    EXPECT_THROW(adaptive_integrate([](double) { return 1.0; }, Domain::finite(0, 1), cfg), ConfigError);
}

TEST(Quadrature, CumulativeIntegralIsCauchyCdf) {
    auto f = [](double x) { return 1.0 / (pi * (1.0 + x * x)); };
    const std::vector<double> points{-10.0, -1.0, 0.0, 0.5, 0.5, 3.0};
    const auto c = cumulative_integral(f, points, 1.0);
    for (std::size_t i = 0; i < points.size(); ++i) EXPECT_NEAR(c[i], 0.5 + std::atan(points[i]) / pi, 1e-10);
    EXPECT_THROW(cumulative_integral(f, std::vector<double>{1.0, 0.0}, 1.0), ConfigError);
}

} // namespace
