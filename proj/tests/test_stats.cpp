#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "fap/stats.hpp"

namespace {

using namespace fap;

double cauchy_cdf(double x) { return 0.5 + std::atan(x) / std::numbers::pi; }

TEST(KsDistance, QuantileSamplesAreClose) {
    const int n = 999;
    std::vector<double> samples;
    for (int i = 1; i <= n; ++i) samples.push_back(std::tan(std::numbers::pi * (static_cast<double>(i) / (n + 1) - 0.5)));
    EXPECT_LE(ks_distance(samples, cauchy_cdf), 1.0 / (n + 1) + 1e-12);
}

TEST(KsDistance, DegenerateSample) {
    const std::vector<double> samples(50, 1.0);
    const double f = cauchy_cdf(1.0);
    EXPECT_NEAR(ks_distance(samples, cauchy_cdf), std::max(f, 1.0 - f), 1e-15);
}

TEST(KsDistance, RejectsBadInput) {
    EXPECT_THROW(ks_distance(std::vector<double>{}, cauchy_cdf), ConfigError);
    EXPECT_THROW(ks_distance(std::vector<double>{2.0, 1.0}, cauchy_cdf), ConfigError);
}

TEST(ChiSquare, ExactFit) {
    const std::vector<double> masses{0.1, 0.2, 0.3, 0.4};
    const std::vector<double> observed{100, 200, 300, 400};
    const auto r = chi_square_gof(observed, masses);
    EXPECT_NEAR(r.statistic, 0.0, 1e-12);
    EXPECT_NEAR(r.p_value, 1.0, 1e-12);
    EXPECT_EQ(r.degrees_of_freedom, 3);
}

TEST(ChiSquare, DisplacedBin) {
    const std::vector<double> masses{0.25, 0.25, 0.25, 0.25};
    const std::vector<double> observed{1000, 0, 0, 0};
    const auto r = chi_square_gof(observed, masses);
    EXPECT_GT(r.statistic, 1000.0);
    EXPECT_LT(r.p_value, 1e-100);
}

TEST(ChiSquare, MergesSparseBins) {
    const std::vector<double> masses{0.001, 0.001, 0.498, 0.5};
    const std::vector<double> observed{1, 0, 49, 50};
    const auto r = chi_square_gof(observed, masses);
    EXPECT_LT(r.bins, 4);
    EXPECT_GT(r.p_value, 0.5);
    EXPECT_THROW(chi_square_gof(std::vector<double>{1.0}, masses), ConfigError);
}

TEST(ChiSquare, SurvivalMatchesClosedForms) {
    // dof 2: exp(-x/2); dof 1: erfc(sqrt(x/2)).
    for (double x : {0.1, 1.0, 5.0, 40.0}) {
        EXPECT_NEAR(chi_square_survival(x, 2), std::exp(-x / 2.0), 1e-14);
        EXPECT_NEAR(chi_square_survival(x, 1), std::erfc(std::sqrt(x / 2.0)), 1e-13);
    }
    for (int dof : {3, 10, 29})
        for (double x : {0.5, 12.0, 29.0, 80.0})
            EXPECT_NEAR(chi_square_survival(x, dof), boost::math::gamma_q(0.5 * dof, 0.5 * x), 1e-13) << dof << ' ' << x;
}

TEST(Report, EvaluatesBounds) {
    ValidationReport r("demo");
    r.set("err", 1e-3);
    r.set("order", 2.0);
    r.require_at_most("err", 1e-2);
    r.require_at_least("order", 1.8);
    EXPECT_TRUE(r.evaluate());
    r.set("err", std::nan(""));
    EXPECT_FALSE(r.evaluate());
    ValidationReport missing("missing");
    missing.require_at_most("err", 1.0);
    EXPECT_FALSE(missing.evaluate());
    EXPECT_FALSE(ValidationReport("empty").evaluate());
}

TEST(Report, JsonRoundTrip) {
    ValidationReport r("demo");
    r.set("err", 1e-3);
    r.set("bad", std::nan(""));
    r.require_at_most("err", 1e-2);
    r.config = {{"n", 3}};
    r.evaluate();
    const nlohmann::json j = r;
    const auto back = validation_report_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back.name, "demo");
    EXPECT_EQ(back.metrics.at("err"), 1e-3);
    EXPECT_TRUE(std::isnan(back.metrics.at("bad")));
    EXPECT_EQ(back.pass, r.pass);
    EXPECT_EQ(back.config, r.config);
    EXPECT_EQ(back.tolerances.at("err").value, 1e-2);
}

} // namespace
