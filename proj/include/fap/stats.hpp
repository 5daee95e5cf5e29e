#pragma once

// Comparison machinery: validation reports, Kolmogorov-Smirnov distance and
// Pearson chi-square goodness of fit. Quadrature lives in quadrature.hpp.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "fap/error.hpp"
#include "fap/quadrature.hpp"

namespace fap {

/// Outcome of one oracle comparison. pass holds iff every tolerance refers to a
/// populated, finite metric that satisfies its bound.
struct ValidationReport {
    struct Bound {
        enum class Kind { at_most, at_least };
        Kind kind;
        double value;
    };

    std::string name;
    std::map<std::string, double> metrics;
    std::map<std::string, Bound> tolerances;
    bool pass = false;
    nlohmann::json params = nlohmann::json::object();
    nlohmann::json config = nlohmann::json::object();

    ValidationReport() = default;
    explicit ValidationReport(std::string n) : name(std::move(n)) {}

    void set(const std::string& metric, double value) { metrics[metric] = value; }
    void require_at_most(const std::string& metric, double limit) {
        tolerances[metric] = {Bound::Kind::at_most, limit};
    }
    void require_at_least(const std::string& metric, double limit) {
        tolerances[metric] = {Bound::Kind::at_least, limit};
    }

    bool evaluate() {
        pass = !tolerances.empty();
        for (const auto& [metric, bound] : tolerances) {
            const auto it = metrics.find(metric);
            if (it == metrics.end() || !std::isfinite(it->second)) {
                pass = false;
                continue;
            }
            const bool ok = bound.kind == Bound::Kind::at_most ? it->second <= bound.value : it->second >= bound.value;
            pass = pass && ok;
        }
        return pass;
    }
};

inline void to_json(nlohmann::json& j, const ValidationReport& r) {
    nlohmann::json metrics = nlohmann::json::object();
    for (const auto& [k, v] : r.metrics) metrics[k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    nlohmann::json tolerances = nlohmann::json::object();
    for (const auto& [k, b] : r.tolerances)
        tolerances[k] = {{b.kind == ValidationReport::Bound::Kind::at_most ? "max" : "min", b.value}};
    j = nlohmann::json{{"name", r.name},   {"metrics", metrics}, {"tolerances", tolerances},
                       {"pass", r.pass},   {"params", r.params}, {"config", r.config}};
}

inline ValidationReport validation_report_from_json(const nlohmann::json& j) {
    ValidationReport r(j.at("name").get<std::string>());
    for (const auto& [k, v] : j.at("metrics").items())
        r.metrics[k] = v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    for (const auto& [k, v] : j.at("tolerances").items()) {
        if (v.contains("max"))
            r.require_at_most(k, v.at("max").get<double>());
        else
            r.require_at_least(k, v.at("min").get<double>());
    }
    r.pass = j.at("pass").get<bool>();
    r.params = j.at("params");
    r.config = j.at("config");
    return r;
}

/// sup |F_n - F| given the model CDF evaluated at the sorted samples.
inline double ks_distance_from_cdf_values(std::span<const double> cdf_at_sorted_samples) {
    const std::size_t n = cdf_at_sorted_samples.size();
    if (n == 0) throw ConfigError("ks_distance: empty sample");
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = cdf_at_sorted_samples[i];
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return std::min(1.0, d);
}

/// Kolmogorov-Smirnov distance between the empirical CDF of sorted samples and cdf.
template <class Cdf>
double ks_distance(std::span<const double> sorted_samples, Cdf&& cdf) {
    if (sorted_samples.empty()) throw ConfigError("ks_distance: empty sample");
    if (!std::is_sorted(sorted_samples.begin(), sorted_samples.end()))
        throw ConfigError("ks_distance: samples must be sorted");
    std::vector<double> values(sorted_samples.size());
    std::transform(sorted_samples.begin(), sorted_samples.end(), values.begin(), [&](double x) { return cdf(x); });
    return ks_distance_from_cdf_values(values);
}

namespace detail {

// Regularised incomplete gamma: series for x < a + 1, Lentz continued fraction otherwise.
inline double gamma_p_series(double a, double x) {
    double sum = 1.0 / a;
    double term = sum;
    double ap = a;
    for (int n = 0; n < 10000; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_continued_fraction(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace detail

/// Q(a, x) = Gamma(a, x) / Gamma(a).
inline double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0) || !(x >= 0.0)) throw DomainError("regularized_gamma_q: need a > 0 and x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_continued_fraction(a, x);
}

inline double chi_square_survival(double statistic, int dof) {
    if (dof < 1) throw DomainError("chi_square_survival: degrees of freedom must be >= 1");
    return regularized_gamma_q(0.5 * dof, 0.5 * std::max(0.0, statistic));
}

struct ChiSquareResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int bins = 0;  // after merging
    int degrees_of_freedom = 0;
};

/// Pearson goodness of fit of observed counts against model bin masses (any
/// positive scale; rescaled to the observed total). Adjacent bins are merged
/// left to right until each expected count is at least min_expected.
inline ChiSquareResult chi_square_gof(std::span<const double> observed, std::span<const double> model_masses,
                                      double min_expected = 5.0) {
    if (observed.size() != model_masses.size()) throw ConfigError("chi_square_gof: bin count mismatch");
    double total_observed = 0.0;
    double total_model = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (observed[i] < 0.0 || model_masses[i] < 0.0) throw ConfigError("chi_square_gof: negative bin content");
        total_observed += observed[i];
        total_model += model_masses[i];
    }
    if (!(total_observed > 0.0) || !(total_model > 0.0)) throw ConfigError("chi_square_gof: degenerate binning");

    std::vector<double> obs;
    std::vector<double> exp;
    double o_acc = 0.0;
    double e_acc = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        o_acc += observed[i];
        e_acc += model_masses[i] / total_model * total_observed;
        if (e_acc >= min_expected) {
            obs.push_back(o_acc);
            exp.push_back(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if (e_acc > 0.0 || o_acc > 0.0) {
        if (exp.empty()) {
            obs.push_back(o_acc);
            exp.push_back(e_acc);
        } else {
            obs.back() += o_acc;
            exp.back() += e_acc;
        }
    }
    if (obs.size() < 2) throw ConfigError("chi_square_gof: degenerate binning (fewer than two usable bins)");

    ChiSquareResult out;
    for (std::size_t i = 0; i < obs.size(); ++i) out.statistic += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
    out.bins = static_cast<int>(obs.size());
    out.degrees_of_freedom = out.bins - 1;
    out.p_value = chi_square_survival(out.statistic, out.degrees_of_freedom);
    return out;
}

} // namespace fap
