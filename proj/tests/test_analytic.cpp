#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "fap/analytic.hpp"

namespace {

using namespace fap;
using std::numbers::pi;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

TEST(DriftFactor, Examples) {
    const std::array<double, 2> p{3.0, 4.0};
    EXPECT_EQ(drift_factor(params_new(2, {0.0, 0.0}, 1.0, 1.0), p), 1.0);
    EXPECT_LT(rel(drift_factor(params_new(2, {1.0, 2.0}, 1.0, 1.0), p), std::exp(11.0)), 1e-15);
    const std::array<double, 2> q{2.0, 0.0};
    EXPECT_LT(rel(drift_factor(params_new(2, {1.0, 0.0}, 2.0, 1.0), q), std::numbers::e), 1e-15);
}

TEST(DriftFactor, RejectsOverflow) {
    const std::array<double, 2> p{1000.0, 0.0};
    EXPECT_THROW(drift_factor(params_new(2, {1.0, 0.0}, 1.0, 1.0), p), DomainError);
    const std::array<double, 3> wrong{0.0, 0.0, 0.0};
    EXPECT_THROW(drift_factor(params_new(2, {1.0, 0.0}, 1.0, 1.0), wrong), ConfigError);
}

TEST(Density2D, ZeroDriftIsCauchy) {
    const auto p = params_new(2, {0.0, 0.0}, 1.0, 1.0);
    EXPECT_NEAR(fap_density_2d(p, SourceOffset::planar(0.0), BoundaryOffset::planar(0.0)), 1.0 / pi, 1e-15);
    for (double xi : {-3.0, 0.5, 7.0})
        EXPECT_LT(rel(fap_density_2d(p, SourceOffset::planar(0.0), BoundaryOffset::planar(xi)), 1.0 / (pi * (1 + xi * xi))),
                  1e-14);
}

TEST(Density2D, SymmetricWithoutTangentialDrift) {
    const auto p = params_new(2, {0.0, -1.0}, 1.0, 1.0);
    const auto s = SourceOffset::planar(0.0);
    EXPECT_DOUBLE_EQ(fap_density_2d(p, s, BoundaryOffset::planar(1.0)), fap_density_2d(p, s, BoundaryOffset::planar(-1.0)));
}

TEST(Density2D, MatchesTimeMarginalOracle) {
    const auto p = params_new(2, {0.5, -1.0}, 1.0, 1.0);
    const auto s = SourceOffset::planar(0.0);
    for (double xi : {-2.0, 0.0, 0.7, 3.0}) {
        const auto a = BoundaryOffset::planar(xi);
        EXPECT_LT(rel(fap_density_2d(p, s, a), time_marginal_oracle(p, s, a)), 1e-6) << xi;
    }
}

TEST(Density2D, LongitudinalFormIsIdentical) {
    const auto p = params_new(2, {0.0, -1.0}, 1.0, 1.0);
    const auto s = SourceOffset::planar(0.3);
    for (double xi : {-4.0, 0.0, 1.0, 10.0}) {
        const auto a = BoundaryOffset::planar(xi);
        EXPECT_LT(rel(fap_density_2d_longitudinal(p, s, a), fap_density_2d(p, s, a)), 1e-14);
    }
    EXPECT_THROW(fap_density_2d_longitudinal(params_new(2, {0.1, -1.0}, 1.0, 1.0), s, BoundaryOffset::planar(0.0)),
                 PreconditionError);
}

TEST(Density2D, StableAlongTheDrift) {
    // Purely tangential drift: along the drift the exponent cancels to O(1/xi)
    // and the density decays like xi^(-3/2).
    const auto p = params_new(2, {1.0, 0.0}, 1.0, 1.0);
    const auto s = SourceOffset::planar(0.0);
    auto f = [&](double xi) { return fap_density_2d(p, s, BoundaryOffset::planar(xi)); };
    for (double xi : {1.0, 1e3, 1e8, 1e15}) EXPECT_GT(f(xi), 0.0) << xi;
    EXPECT_NEAR(f(1e15) / f(1e8), std::pow(1e7, -1.5), 1e-6 * std::pow(1e7, -1.5));
    const auto a = BoundaryOffset::planar(1e3);
    EXPECT_LT(rel(f(1e3), time_marginal_oracle(p, s, a)), 1e-6);
}

TEST(Density2D, RejectsWrongShapes) {
    const auto p = params_new(2, {0.0, 0.0}, 1.0, 1.0);
    EXPECT_THROW(fap_density_2d(p, SourceOffset::spatial(0, 0), BoundaryOffset::planar(0)), ConfigError);
    EXPECT_THROW(fap_density_2d(params_new(3, {0, 0, 0}, 1, 1), SourceOffset::planar(0), BoundaryOffset::planar(0)),
                 ConfigError);
}

TEST(Density3D, ZeroDriftIsPoissonKernel) {
    const auto p = params_new(3, {0.0, 0.0, 0.0}, 1.0, 1.0);
    const auto s = SourceOffset::spatial(0.0, 0.0);
    EXPECT_NEAR(fap_density_3d(p, s, BoundaryOffset::spatial(0.0, 0.0)), 1.0 / (2.0 * pi), 1e-15);
    EXPECT_LT(rel(fap_density_3d(p, s, BoundaryOffset::spatial(0.3, -1.2)), poisson_kernel_halfspace_3d(1.0, {0.3, -1.2})),
              1e-14);
}

TEST(Density3D, MatchesTimeMarginalOracle) {
    const auto p = params_new(3, {0.3, -0.1, -0.8}, 1.0, 2.0);
    const auto s = SourceOffset::spatial(0.0, 0.0);
    const auto a = BoundaryOffset::spatial(0.5, 0.5);
    EXPECT_LT(rel(fap_density_3d(p, s, a), time_marginal_oracle(p, s, a)), 1e-6);
}

TEST(Density, ContinuousAtZeroDriftThreshold) {
    const auto s2 = SourceOffset::planar(0.0);
    const auto a2 = BoundaryOffset::planar(0.4);
    const double c2 = fap_density_2d(params_new(2, {0.0, 0.0}, 1.0, 1.0), s2, a2);
    const double n2 = fap_density_2d(params_new(2, {0.0, 1.1e-8}, 1.0, 1.0), s2, a2);
    EXPECT_LT(rel(n2, c2), 1e-4);
    const auto s3 = SourceOffset::spatial(0.0, 0.0);
    const auto a3 = BoundaryOffset::spatial(0.4, -0.2);
    const double c3 = fap_density_3d(params_new(3, {0.0, 0.0, 0.0}, 1.0, 1.0), s3, a3);
    const double n3 = fap_density_3d(params_new(3, {1e-8, 0.0, 1e-8}, 1.0, 1.0), s3, a3);
    EXPECT_LT(rel(n3, c3), 1e-4);
}

TEST(Density, FromPointUsesNormalCoordinate) {
    const auto p = params_new(2, {0.2, -0.5}, 1.0, 1.0);
    const std::array<double, 2> x{0.3, 2.0};
    EXPECT_DOUBLE_EQ(fap_density_from_point(p, x, BoundaryOffset::planar(1.0)),
                     fap_density_2d(p.with_distance(2.0), SourceOffset::planar(0.3), BoundaryOffset::planar(1.0)));
}

TEST(PoissonKernel, Examples) {
    EXPECT_NEAR(poisson_kernel_halfspace_3d(1.0, {0.0, 0.0}), 1.0 / (2.0 * pi), 1e-16);
    EXPECT_NEAR(poisson_kernel_halfspace_3d(2.0, {0.0, 0.0}), 1.0 / (8.0 * pi), 1e-16);
    EXPECT_THROW(poisson_kernel_halfspace_3d(0.0, {0.0, 0.0}), DomainError);
}

TEST(PoissonKernel, IntegratesToOne) {
    // radial form: int_0^inf 2 pi rho P(rho) drho
    auto f = [](double rho) { return 2.0 * pi * rho * poisson_kernel_halfspace_3d(1.3, {rho, 0.0}); };
    EXPECT_NEAR(adaptive_integrate(f, Domain::half_line_tan(0.0, 1.3)).value, 1.0, 1e-8);
}

TEST(HarmonicExtension, ConstantData) {
    EXPECT_NEAR(harmonic_extension_3d(SurfaceData::constant(1.0), {0.4, -2.0, 0.7}), 1.0, 1e-8);
}

TEST(HarmonicExtension, DiskIndicator) {
    const auto disk = SurfaceData::disk_indicator(0.0, 0.0, 1.0);
    EXPECT_NEAR(harmonic_extension_3d(disk, {0.0, 0.0, 1.0}), 1.0 - 1.0 / std::sqrt(2.0), 1e-8);
    EXPECT_GT(harmonic_extension_3d(disk, {0.0, 0.0, 1e-3}), 0.998);
    EXPECT_THROW(harmonic_extension_3d(disk, {0.0, 0.0, 0.0}), DomainError);
}

TEST(HarmonicExtension, MatchesDensityIntegral) {
    // Zero drift: the density in the source argument is the Poisson kernel.
    const auto bump = SurfaceData::gaussian_bump(0.5, 0.0, 0.8);
    const double u = harmonic_extension_3d(bump, {0.0, 0.0, 1.0});
    auto row = [&](double y) {
        auto f = [&](double x) { return bump.g(x, y) * poisson_kernel_halfspace_3d(1.0, {x, y}); };
        return adaptive_integrate(f, Domain::full_line(0.5, 1.0)).value;
    };
    EXPECT_NEAR(u, adaptive_integrate(row, Domain::full_line(0.0, 1.0)).value, 1e-8);
}

TEST(Images, CoefficientAndBoundary) {
    const auto zero = params_new(2, {0.0, 0.0}, 1.0, 1.0);
    EXPECT_EQ(image_coefficient(zero, 2.0), 1.0);
    const auto p = params_new(2, {0.0, 0.7}, 1.3, 1.0);
    EXPECT_LT(rel(image_coefficient(p, 2.0), std::exp(-2.0 * 0.7 / 0.65)), 1e-15);
    for (double t : {1e-3, 0.1, 5.0})
        for (double y : {-1.0, 0.0, 2.0}) EXPECT_EQ(absorbing_green_2d(p, 0.0, y, 1.0, 0.3, t), 0.0);
}

TEST(Images, ConcentratesAtSource) {
    const auto p = params_new(2, {0.0, 0.0}, 1.0, 1.0);
    const double D = p.diffusion_d();
    for (double t : {1e-4, 1e-6}) EXPECT_LT(rel(absorbing_green_2d(p, 1.0, 0.0, 1.0, 0.0, t), 1.0 / (4 * pi * D * t)), 1e-6);
}

TEST(Images, FluxMatchesFiniteDifference) {
    const auto p = params_new(2, {0.0, -0.6}, 1.4, 1.0);
    const double D = p.diffusion_d();
    const double h = 1e-4;
    for (double t : {0.3, 1.0, 4.0}) {
        for (double y : {-0.5, 0.0, 1.5}) {
            const double g1 = absorbing_green_2d(p, h, y, 1.0, 0.2, t);
            const double g2 = absorbing_green_2d(p, 2.0 * h, y, 1.0, 0.2, t);
            const double fd = D * (4.0 * g1 - g2) / (2.0 * h);
            EXPECT_NEAR(flux_2d(p, y, 1.0, 0.2, t), fd, 1e-6) << t << ' ' << y;
        }
    }
}

TEST(Images, FluxDecays) {
    const auto p = params_new(2, {0.0, 0.0}, 1.0, 1.0);
    EXPECT_LT(flux_2d(p, 0.0, 1.0, 0.0, 1e6), 1e-12);
    EXPECT_LT(flux_2d(params_new(2, {0.0, 1.0}, 1.0, 1.0), 0.0, 1.0, 0.0, 1e3), 1e-100);
    EXPECT_THROW(flux_2d(p, 0.0, 1.0, 0.0, 0.0), DomainError);
    EXPECT_THROW(flux_2d(params_new(2, {1.0, 0.0}, 1.0, 1.0), 0.0, 1.0, 0.0, 1.0), PreconditionError);
}

TEST(TimeIntegration, MatchesClosedForm) {
    const auto p = params_new(2, {0.0, -1.0}, 1.0, 1.0);
    const auto s = SourceOffset::planar(0.0);
    for (double xi : {0.0, 1.5, -4.0}) {
        const auto a = BoundaryOffset::planar(xi);
        EXPECT_LT(rel(fap_via_time_integration(p, s, a), fap_density_2d(p, s, a)), 1e-8) << xi;
    }
    const auto zero = params_new(2, {0.0, 0.0}, 1.0, 1.0);
    EXPECT_LT(rel(fap_via_time_integration(zero, s, BoundaryOffset::planar(1.0)), 1.0 / (2.0 * pi)), 1e-8);
}

TEST(FirstPassage, DensityIntegratesToHittingProbability) {
    const auto toward = params_new(2, {0.0, -1.0}, 1.0, 1.0);
    const auto away = params_new(2, {0.0, 1.0}, 1.0, 1.0);
    auto mass = [](const ChannelParams& p) {
        auto f = [&](double t) { return first_passage_time_density(p, t); };
        return adaptive_integrate(f, Domain::half_line(0.0, 1.0)).value;
    };
    EXPECT_NEAR(mass(toward), 1.0, 1e-8);
    EXPECT_NEAR(mass(away), std::exp(-2.0), 1e-8);
}

TEST(FirstPassage, LevyModeAtZeroDrift) {
    const auto p = params_new(2, {0.0, 0.0}, 1.0, 2.0);
    const double mode = p.distance() * p.distance() / (6.0 * p.diffusion_d());
    const double h = 1e-4 * mode;
    const double f0 = first_passage_time_density(p, mode);
    EXPECT_GT(f0, first_passage_time_density(p, mode - h));
    EXPECT_GT(f0, first_passage_time_density(p, mode + h));
}

TEST(FirstPassage, CdfMatchesDensityIntegral) {
    const auto p = params_new(3, {0.2, 0.0, 0.4}, 1.5, 1.0);
    for (double t : {0.1, 1.0, 30.0}) {
        auto f = [&](double s) { return first_passage_time_density(p, s); };
        const double integral = adaptive_integrate(f, Domain::finite(0.0, t)).value;
        EXPECT_NEAR(first_passage_cdf(p, t), integral, 1e-9) << t;
    }
    EXPECT_EQ(first_passage_cdf(p, std::numeric_limits<double>::infinity()), hitting_probability(p));
}

TEST(HittingProbability, Examples) {
    EXPECT_EQ(hitting_probability(params_new(2, {0.0, 0.0}, 1.0, 1.0)), 1.0);
    EXPECT_LT(rel(hitting_probability(params_new(2, {0.0, 1.0}, 1.0, 1.0)), std::exp(-2.0)), 1e-15);
    EXPECT_EQ(hitting_probability(params_new(2, {0.0, -5.0}, 1.0, 1.0)), 1.0);
}

TEST(Oracle, ZeroDriftIsCauchy) {
    const auto p = params_new(2, {0.0, 0.0}, 1.0, 1.5);
    const auto s = SourceOffset::planar(0.0);
    for (double xi : {0.0, 2.0}) {
        const double r2 = 1.5 * 1.5 + xi * xi;
        EXPECT_LT(rel(time_marginal_oracle(p, s, BoundaryOffset::planar(xi)), 1.5 / (pi * r2)), 1e-8);
    }
}

TEST(Oracle, FiniteHorizonIsBelowFullDensity) {
    const auto p = params_new(2, {0.3, -0.5}, 1.0, 1.0);
    const auto s = SourceOffset::planar(0.0);
    const auto a = BoundaryOffset::planar(0.5);
    const double full = time_marginal_oracle(p, s, a);
    const double part = time_marginal_density(p, s, a, 2.0);
    EXPECT_GT(part, 0.0);
    EXPECT_LT(part, full);
    EXPECT_LT(rel(time_marginal_density(p, s, a, 1e5), full), 1e-8);
}

TEST(Generator, AnnihilatesConstantsAndStationaryExponential) {
    const auto p = params_new(2, {0.4, -0.7}, 1.2, 1.0);
    const std::array<double, 2> x{0.3, 1.5};
    auto constant = [](std::span<const double>) { return 3.0; };
    EXPECT_NEAR(generator_apply(p, constant, x, 1e-2), 0.0, 1e-10);
    auto stationary = [&](std::span<const double> y) {
        return std::exp(-2.0 * (p.drift()[0] * y[0] + p.drift()[1] * y[1]) / p.sigma2());
    };
    const double r1 = std::abs(generator_apply(p, stationary, x, 2e-2));
    const double r2 = std::abs(generator_apply(p, stationary, x, 1e-2));
    EXPECT_LT(r1, 1e-2);
    EXPECT_NEAR(r1 / r2, 4.0, 0.2);
}

TEST(Generator, DensityIsHarmonicInSource) {
    for (int dim : {2, 3}) {
        const auto p = dim == 2 ? params_new(2, {0.5, -0.8}, 1.0, 1.0) : params_new(3, {0.3, -0.1, -0.8}, 1.0, 1.0);
        const BoundaryOffset a = dim == 2 ? BoundaryOffset::planar(0.4) : BoundaryOffset::spatial(0.4, -0.3);
        auto field = [&](std::span<const double> y) { return fap_density_from_point(p, y, a); };
        std::vector<double> x(static_cast<std::size_t>(dim), 0.1);
        x.back() = 1.2;
        const double r1 = std::abs(generator_apply(p, field, x, 0.04));
        const double r2 = std::abs(generator_apply(p, field, x, 0.02));
        EXPECT_NEAR(std::log2(r1 / r2), 2.0, 0.2) << dim;
    }
}

TEST(Generator, RejectsBoundaryPoints) {
    const auto p = params_new(2, {0.0, 0.0}, 1.0, 1.0);
    const std::array<double, 2> x{0.0, 0.005};
    auto constant = [](std::span<const double>) { return 1.0; };
    EXPECT_THROW(generator_apply(p, constant, x, 0.01), DomainError);
}

} // namespace
