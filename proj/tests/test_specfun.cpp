#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fap/specfun.hpp"

namespace {

using namespace fap;

struct Reference {
    double x;
    double k0;
    double k1;
};

// 30-digit reference values, rounded to double.
constexpr Reference kTable[] = {
    {1e-6, 13.931442073626419, 999999.99999278428},
    {1e-3, 7.0236888005623813, 999.99623815608557},
    {0.5, 0.92441907122766586, 1.6564411200033009},
    {1.0, 0.42102443824070833, 0.60190723019723457},
    {2.0, 0.11389387274953344, 0.13986588181652243},
    {5.0, 0.0036910983340425943, 0.0040446134454521642},
    {20.0, 5.7412378153365243e-10, 5.8830579695570382e-10},
    {50.0, 3.41016774978949551e-23, 3.4441022267175556e-23},
    {700.0, 4.669776431685377e-306, 4.673110796707966e-306},
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

TEST(Bessel, MatchesReferenceTable) {
    for (const auto& r : kTable) {
        EXPECT_LT(rel(bessel_k0(r.x), r.k0), 1e-13) << "K0 at " << r.x;
        EXPECT_LT(rel(bessel_k1(r.x), r.k1), 1e-13) << "K1 at " << r.x;
    }
}

TEST(Bessel, ScaledMatchesReference) {
    EXPECT_LT(rel(bessel_k1_scaled(1.0), 1.6361534862632582), 1e-13);
    EXPECT_LT(rel(bessel_k1_scaled(2.0), 1.0334768470686886), 1e-13);
    EXPECT_LT(rel(bessel_k1_scaled(0.5), 2.7310097082117857), 1e-13);
    EXPECT_LT(rel(bessel_k1_scaled(1e-3), 1000.9967345590685), 1e-13);
    EXPECT_LT(rel(bessel_k1_scaled(20.0), 0.28542549694072645), 1e-13);
    EXPECT_LT(rel(bessel_k1_scaled(700.0), 0.047396187653494544), 1e-13);
}

TEST(Bessel, ValuesAtOne) {
    EXPECT_NEAR(bessel_k0(1.0), 0.4210244382, 1e-9);
    EXPECT_NEAR(bessel_k1(1.0), 0.6019072302, 1e-9);
    EXPECT_NEAR(bessel_k1_scaled(1.0), std::numbers::e * 0.6019072302, 1e-6);
}

TEST(Bessel, SmallArgumentLimits) {
    constexpr double euler_gamma = 0.57721566490153286;
    for (double x : {1e-6, 1e-8, 1e-10}) {
        EXPECT_NEAR(bessel_k0(x) + std::log(x / 2.0) + euler_gamma, 0.0, 10.0 * x);
        EXPECT_NEAR(x * bessel_k1(x), 1.0, x);
    }
    EXPECT_NEAR(bessel_k1_scaled(1e-3), 1000.5, 0.6);
}

TEST(Bessel, LargeArgumentAsymptotics) {
    const double x = 20.0;
    const double mu0 = 0.0;
    double series = 1.0;
    double term = 1.0;
    for (int k = 1; k <= 8; ++k) {
        term *= (mu0 - (2.0 * k - 1) * (2.0 * k - 1)) / (k * 8.0 * x);
        series += term;
    }
    EXPECT_LT(rel(bessel_k0(x), std::exp(-x) * std::sqrt(std::numbers::pi / (2.0 * x)) * series), 1e-8);

    const double big = 700.0;
    const double approx = std::sqrt(std::numbers::pi / (2.0 * big)) * (1.0 + 3.0 / (8.0 * big));
    const double scaled = bessel_k1_scaled(big);
    EXPECT_TRUE(std::isfinite(scaled));
    EXPECT_LT(rel(scaled, approx), 1e-5);
}

TEST(Bessel, DerivativeIdentity) {
    const double h = 1e-5;
    const double fd = -(bessel_k0(2.0 + h) - bessel_k0(2.0 - h)) / (2.0 * h);
    EXPECT_NEAR(bessel_k1(2.0), fd, 1e-9);
}

TEST(Bessel, ContinuousAcrossSeriesSwitch) {
    const double below = std::nextafter(detail::kSeriesSwitch, 0.0);
    const double above = std::nextafter(detail::kSeriesSwitch, 10.0);
    EXPECT_LT(rel(bessel_k0(below), bessel_k0(above)), 1e-14);
    EXPECT_LT(rel(bessel_k1(below), bessel_k1(above)), 1e-14);
}

TEST(Bessel, MonotoneAndOrdered) {
    double prev0 = bessel_k0(1e-4);
    double prev1 = bessel_k1(1e-4);
    for (double x = 1e-3; x < 60.0; x *= 1.1) {
        const double k0 = bessel_k0(x);
        const double k1 = bessel_k1(x);
        EXPECT_LT(k0, prev0);
        EXPECT_LT(k1, prev1);
        EXPECT_GT(k1, k0);
        prev0 = k0;
        prev1 = k1;
    }
}

TEST(Bessel, UnscaledUnderflowsToZero) {
    EXPECT_EQ(bessel_k0(800.0), 0.0);
    EXPECT_GT(bessel_k0_scaled(800.0), 0.0);
}

TEST(Bessel, RejectsNonPositive) {
    EXPECT_THROW(bessel_k0(0.0), DomainError);
    EXPECT_THROW(bessel_k1(-1.0), DomainError);
    EXPECT_THROW(bessel_k1_scaled(std::nan("")), DomainError);
    EXPECT_THROW(bessel_k_oracle(2, 1.0), DomainError);
}

TEST(BesselOracle, AgreesWithProduction) {
    EXPECT_NEAR(bessel_k_oracle(0, 1.0), 0.4210244382, 1e-10);
    EXPECT_NEAR(bessel_k_oracle(1, 1.0), 0.6019072302, 1e-10);
    EXPECT_LT(rel(bessel_k_oracle(1, 1e-4), 1e4), 1e-3);
    EXPECT_LT(rel(bessel_k_oracle(1, 1e-4), 9999.9995086864045), 1e-10);
    for (double x : {0.01, 0.3, 1.7, 2.3, 8.0, 40.0}) {
        EXPECT_LT(rel(bessel_k_oracle(0, x), bessel_k0(x)), 1e-10) << x;
        EXPECT_LT(rel(bessel_k_oracle(1, x), bessel_k1(x)), 1e-10) << x;
    }
}

} // namespace
