#pragma once

// Validation suites: each builds ValidationReports from the oracles in the
// other modules. Used by `fap validate` and by the acceptance test.
//
// Fast mode scales Monte Carlo N down 10x and the grid spacing up 10x, with the
// widened tolerances listed in the README.

#include <array>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "json.hpp"

#include "fap/analytic.hpp"
#include "fap/error.hpp"
#include "fap/model.hpp"
#include "fap/pde_oracle.hpp"
#include "fap/quadrature.hpp"
#include "fap/simulate.hpp"
#include "fap/specfun.hpp"
#include "fap/stats.hpp"

namespace fap {

struct SuiteOptions {
    bool fast = false;
    int threads = 0;
};

namespace detail {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / (n - 1);
    return out;
}

inline std::vector<double> logspace(double a, double b, std::size_t n) {
    auto out = linspace(std::log(a), std::log(b), n);
    for (double& x : out) x = std::exp(x);
    out.front() = a;
    out.back() = b;
    return out;
}

inline void finish(ValidationReport& report, const Stopwatch& clock) {
    report.set("runtime_s", clock.seconds());
    report.evaluate();
}

} // namespace detail

/// Conditional arrival CDF P(xi_1 <= x | hit) at each sorted point (2D).
inline std::vector<double> fap_cdf_2d(const ChannelParams& params, const std::vector<double>& sorted_points,
                                      const QuadratureConfig& quad = {}) {
    detail::require_dimension(params, 2, "fap_cdf_2d");
    auto f = [&](double x) { return fap_density_2d(params, SourceOffset::planar(0.0), BoundaryOffset::planar(x)); };
    auto out = cumulative_integral(f, sorted_points, params.distance(), quad);
    const double mass = hitting_probability(params);
    for (double& v : out) v = std::min(1.0, v / mass);
    return out;
}

/// Integral of the arrival density over the whole receiver plane. With v_n = 0
/// and transverse drift the density has a xi^(-3/2) tail along the drift; the
/// substitution |xi| = d t^2 turns that into t^(-2), which the tan chart maps
/// to a bounded integrand.
inline double boundary_mass(const ChannelParams& params, const QuadratureConfig& quad = {}) {
    const double d = params.distance();
    if (params.dimension() == 2) {
        double total = 0.0;
        for (double sign : {-1.0, 1.0}) {
            auto g = [&](double t) {
                return 2.0 * d * t * fap_density_2d(params, SourceOffset::planar(0.0), BoundaryOffset::planar(sign * d * t * t));
            };
            total += adaptive_integrate(g, Domain::half_line_tan(0.0, 1.0), quad).value;
        }
        return total;
    }
    // Cartesian coordinates (a, b) along and across the tangential drift. In
    // polar coordinates the radial integral along the drift ray decays only
    // like 1 / rho when v_n = 0.
    const auto v = params.drift();
    const double vt = std::hypot(v[0], v[1]);
    const double ca = vt > 0.0 ? v[0] / vt : 1.0;
    const double sa = vt > 0.0 ? v[1] / vt : 0.0;
    auto marginal = [&](double a) {
        const double scale = std::max(d, std::sqrt(d * std::abs(a)));
        auto inner = [&](double b) {
            return fap_density_3d(params, SourceOffset::spatial(0.0, 0.0),
                                  BoundaryOffset::spatial(a * ca - b * sa, a * sa + b * ca));
        };
        return adaptive_integrate(inner, Domain::half_line_below_tan(0.0, scale), quad).value +
               adaptive_integrate(inner, Domain::half_line_tan(0.0, scale), quad).value;
    };
    double total = 0.0;
    for (double sign : {-1.0, 1.0}) {
        auto g = [&](double t) { return 2.0 * d * t * marginal(sign * d * t * t); };
        total += adaptive_integrate(g, Domain::half_line_tan(0.0, 1.0), quad).value;
    }
    return total;
}

inline ValidationReport validate_bessel() {
    detail::Stopwatch clock;
    ValidationReport report("bessel");
    double err0 = 0.0;
    double err1 = 0.0;
    double scaling = 0.0;
    const BesselAccuracy accuracy{1e-11, 4000};
    for (double x : detail::logspace(1e-6, 50.0, 60)) {
        const double o0 = bessel_k_oracle(0, x, accuracy);
        const double o1 = bessel_k_oracle(1, x, accuracy);
        err0 = std::max(err0, std::abs(bessel_k0(x) - o0) / o0);
        err1 = std::max(err1, std::abs(bessel_k1(x) - o1) / o1);
        if (x <= 30.0) scaling = std::max(scaling, std::abs(bessel_k1_scaled(x) * std::exp(-x) / bessel_k1(x) - 1.0));
    }
    report.set("max_rel_err_k0", err0);
    report.set("max_rel_err_k1", err1);
    report.set("scaling_rel_err", scaling);
    report.require_at_most("max_rel_err_k0", 1e-9);
    report.require_at_most("max_rel_err_k1", 1e-9);
    report.require_at_most("scaling_rel_err", 1e-14);
    report.config = {{"grid", "60 log-spaced points on [1e-6, 50]"}};
    detail::finish(report, clock);
    return report;
}

/// Drift cases: zero, longitudinal toward, longitudinal away, transverse only, oblique.
inline std::vector<std::vector<double>> drift_matrix(int dimension) {
    if (dimension == 2) return {{0.0, 0.0}, {0.0, -1.0}, {0.0, 1.0}, {1.0, 0.0}, {0.5, -1.0}};
    return {{0.0, 0.0, 0.0}, {0.0, 0.0, -1.0}, {0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}, {0.5, 0.3, -1.0}};
}

/// Closed form against the time-marginal oracle over
/// sigma2 in {0.5, 1, 2} x d in {0.5, 1, 3} x drift_matrix x 11 offsets.
inline ValidationReport validate_oracle(int dimension) {
    detail::Stopwatch clock;
    ValidationReport report(dimension == 2 ? "oracle2d" : "oracle3d");
    QuadratureConfig quad;
    quad.relative_tolerance = 1e-11;
    double worst = 0.0;
    nlohmann::json worst_case;
    int evaluations = 0;
    for (double sigma2 : {0.5, 1.0, 2.0})
        for (double d : {0.5, 1.0, 3.0})
            for (const auto& v : drift_matrix(dimension)) {
                const auto params = ChannelParams::create(dimension, v, sigma2, d);
                const double floor = 1e-12 / std::pow(d, dimension - 1);
                for (int k = 0; k <= 10; ++k) {
                    const double r = -5.0 * d + d * k;
                    SourceOffset source;
                    BoundaryOffset arrival;
                    if (dimension == 2) {
                        source = SourceOffset::planar(0.0);
                        arrival = BoundaryOffset::planar(r);
                    } else {
                        // Radial offsets along x1 for even k, along the diagonal for odd k.
                        const double angle = k % 2 == 0 ? 0.0 : 0.25 * std::numbers::pi;
                        source = SourceOffset::spatial(0.0, 0.0);
                        arrival = BoundaryOffset::spatial(r * std::cos(angle), r * std::sin(angle));
                    }
                    const double closed = fap_density(params, source, arrival);
                    const double oracle = time_marginal_oracle(params, source, arrival, quad);
                    const double err = std::abs(closed - oracle) / std::max(oracle, floor);
                    ++evaluations;
                    if (err > worst) {
                        worst = err;
                        worst_case = {{"params", params}, {"offset", r}, {"closed", closed}, {"oracle", oracle}};
                    }
                }
            }
    report.set("max_rel_err", worst);
    report.set("evaluations", evaluations);
    report.require_at_most("max_rel_err", 1e-6);
    report.config = {{"worst_case", worst_case}};
    detail::finish(report, clock);
    return report;
}

/// Time-integrated image-method flux against the longitudinal closed form.
inline ValidationReport validate_old_method() {
    detail::Stopwatch clock;
    ValidationReport report("old_method");
    QuadratureConfig quad;
    quad.relative_tolerance = 1e-12;
    double worst = 0.0;
    int points = 0;
    for (double v2 : {-2.0, -1.0, 0.0, 0.5, 1.0})
        for (double xi : {0.0, 0.5, 1.0, 2.5, 5.0}) {
            const auto params = ChannelParams::create(2, {0.0, v2}, 1.0, 1.0);
            const auto src = SourceOffset::planar(0.0);
            const auto arr = BoundaryOffset::planar(xi);
            const double closed = fap_density_2d_longitudinal(params, src, arr);
            const double integrated = fap_via_time_integration(params, src, arr, quad);
            worst = std::max(worst, std::abs(integrated - closed) / closed);
            ++points;
        }
    report.set("max_rel_err", worst);
    report.set("points", points);
    report.require_at_most("max_rel_err", 1e-8);
    detail::finish(report, clock);
    return report;
}

inline ValidationReport validate_normalization() {
    detail::Stopwatch clock;
    ValidationReport report("normalization");
    QuadratureConfig quad;
    quad.relative_tolerance = 1e-9;
    std::vector<ChannelParams> cases;
    for (const auto& v : std::vector<std::vector<double>>{{0.0, 0.0}, {0.0, -1.0}, {0.0, 1.0}, {1.0, 0.0}, {0.5, -1.0}, {-0.7, 0.4}}) {
        cases.push_back(ChannelParams::create(2, v, 1.0, 1.0));
        cases.push_back(ChannelParams::create(2, v, 0.5, 3.0));
    }
    for (const auto& v : std::vector<std::vector<double>>{{0.0, 0.0, 0.0}, {0.0, 0.0, -1.0}, {0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}, {0.5, 0.3, -1.0}, {-0.4, 0.2, 0.6}}) {
        cases.push_back(ChannelParams::create(3, v, 1.0, 1.0));
        cases.push_back(ChannelParams::create(3, v, 2.0, 0.5));
    }
    double worst2 = 0.0;
    double worst3 = 0.0;
    for (const auto& p : cases) {
        const double err = std::abs(boundary_mass(p, quad) - hitting_probability(p));
        (p.dimension() == 2 ? worst2 : worst3) = std::max(p.dimension() == 2 ? worst2 : worst3, err);
    }
    report.set("max_abs_err_2d", worst2);
    report.set("max_abs_err_3d", worst3);
    report.require_at_most("max_abs_err_2d", 1e-6);
    report.require_at_most("max_abs_err_3d", 1e-6);
    detail::finish(report, clock);
    return report;
}

/// Limit branches against Cauchy / Poisson kernel, and continuity at |v| = 1e-8.
inline ValidationReport validate_limits(int dimension) {
    detail::Stopwatch clock;
    ValidationReport report(dimension == 2 ? "limits2d" : "limits3d");
    double exact = 0.0;
    double near = 0.0;
    for (double d : {0.5, 1.0, 3.0})
        for (double r : {0.0, 0.3, 1.0, 2.5, 7.0, 40.0}) {
            const std::vector<double> zero(static_cast<std::size_t>(dimension), 0.0);
            const auto p0 = ChannelParams::create(dimension, zero, 1.0, d);
            double ref;
            double limit;
            if (dimension == 2) {
                ref = d / (std::numbers::pi * (r * r + d * d));
                limit = fap_density_2d(p0, SourceOffset::planar(0.0), BoundaryOffset::planar(r));
            } else {
                const std::array<double, 2> off{r * 0.6, r * 0.8};
                ref = poisson_kernel_halfspace_3d(d, off);
                limit = fap_density_3d(p0, SourceOffset::spatial(0.0, 0.0), BoundaryOffset::spatial(off[0], off[1]));
            }
            exact = std::max(exact, std::abs(limit - ref) / ref);
            for (const auto& dir : drift_matrix(dimension)) {
                double norm = 0.0;
                for (double c : dir) norm += c * c;
                if (norm == 0.0) continue;
                std::vector<double> v(dir);
                for (double& c : v) c *= 1e-8 / std::sqrt(norm);
                const auto p = ChannelParams::create(dimension, v, 1.0, d);
                const double value = dimension == 2
                                         ? fap_density_2d(p, SourceOffset::planar(0.0), BoundaryOffset::planar(r))
                                         : fap_density_3d(p, SourceOffset::spatial(0.0, 0.0),
                                                          BoundaryOffset::spatial(r * 0.6, r * 0.8));
                near = std::max(near, std::abs(value - ref) / ref);
            }
        }
    report.set("limit_branch_rel_err", exact);
    report.set("small_drift_rel_err", near);
    report.require_at_most("limit_branch_rel_err", 4.0 * std::numeric_limits<double>::epsilon());
    report.require_at_most("small_drift_rel_err", 1e-4);
    detail::finish(report, clock);
    return report;
}

/// Finite-difference generator applied to the density in its source argument;
/// the residual must shrink like step^2 at each of 5 probes.
inline ValidationReport validate_generator(int dimension) {
    detail::Stopwatch clock;
    ValidationReport report(dimension == 2 ? "generator2d" : "generator3d");
    const auto params = dimension == 2 ? ChannelParams::create(2, {0.5, -1.0}, 1.0, 1.0)
                                       : ChannelParams::create(3, {0.5, 0.3, -1.0}, 1.0, 1.0);
    const BoundaryOffset arrival = dimension == 2 ? BoundaryOffset::planar(0.0) : BoundaryOffset::spatial(0.0, 0.0);
    const std::vector<std::vector<double>> probes =
        dimension == 2 ? std::vector<std::vector<double>>{{0.0, 1.0}, {1.0, 0.5}, {-1.0, 2.0}, {2.0, 1.5}, {0.5, 3.0}}
                       : std::vector<std::vector<double>>{{0.0, 0.0, 1.0}, {1.0, 0.0, 0.5}, {-1.0, 0.5, 2.0},
                                                          {2.0, -1.0, 1.5}, {0.5, 0.5, 3.0}};
    auto field = [&](std::span<const double> x) { return fap_density_from_point(params, x, arrival); };
    double min_order = std::numeric_limits<double>::infinity();
    double max_order = 0.0;
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& x : probes) {
        const double r1 = std::abs(generator_apply(params, field, x, 0.04));
        const double r2 = std::abs(generator_apply(params, field, x, 0.02));
        const double r3 = std::abs(generator_apply(params, field, x, 0.01));
        const double order = std::log2(std::sqrt((r1 / r2) * (r2 / r3)));
        min_order = std::min(min_order, order);
        max_order = std::max(max_order, order);
        rows.push_back({{"point", x}, {"residuals", {r1, r2, r3}}, {"order", order}});
    }
    report.set("min_observed_order", min_order);
    report.set("max_observed_order", max_order);
    report.require_at_least("min_observed_order", 1.8);
    report.require_at_most("max_observed_order", 2.2);
    report.params = params;
    report.config = {{"steps", {0.04, 0.02, 0.01}}, {"probes", rows}};
    detail::finish(report, clock);
    return report;
}

/// One Monte Carlo comparison in 2D. The absorbed fraction is compared with
/// P(tau <= t_max), the finite-horizon hitting mass the simulator can reach.
inline ValidationReport validate_monte_carlo_case(const std::string& name, const ChannelParams& params,
                                                  const SuiteOptions& options, std::uint64_t seed) {
    detail::Stopwatch clock;
    ValidationReport report("montecarlo_" + name);
    SimConfig sim;
    sim.particle_count = options.fast ? 10000 : 100000;
    sim.dt = 1e-3;
    sim.seed = seed;
    sim.threads = options.threads;
    const auto records = simulate_hits(params, sim);

    std::vector<double> xs;
    for (const auto& r : records)
        if (r.absorbed()) xs.push_back(r.tangential_position[0]);
    std::sort(xs.begin(), xs.end());
    const auto cdf = fap_cdf_2d(params, xs);

    // Equal-probability bins under the model: bin = floor(30 F(xi)).
    constexpr int bins = 30;
    std::vector<double> observed(bins, 0.0);
    for (double f : cdf) observed[std::min(bins - 1, static_cast<int>(f * bins))] += 1.0;
    const std::vector<double> masses(bins, 1.0 / bins);
    const auto chi = chi_square_gof(observed, masses);

    const double n = static_cast<double>(records.size());
    const double frac = static_cast<double>(xs.size()) / n;
    const double t_max = sim.resolved_t_max(params);
    const double p_ref = first_passage_cdf(params, t_max);
    const double se = std::sqrt(std::max(p_ref * (1.0 - p_ref), 0.25 / n) / n);

    report.set("ks_distance", ks_distance_from_cdf_values(cdf));
    report.set("chi2_stat", chi.statistic);
    report.set("p_value", chi.p_value);
    report.set("absorbed_fraction", frac);
    report.set("finite_horizon_mass", p_ref);
    report.set("hitting_probability", hitting_probability(params));
    report.set("fraction_z", std::abs(frac - p_ref) / se);
    report.require_at_most("ks_distance", options.fast ? 0.03 : 0.01);
    report.require_at_least("p_value", 0.001);
    report.require_at_most("fraction_z", 4.0);
    report.params = params;
    nlohmann::json sim_json = sim;
    sim_json["t_max"] = t_max;
    report.config = {{"sim", sim_json}, {"bins", bins}};
    detail::finish(report, clock);
    return report;
}

/// Zero drift, longitudinal toward, oblique, plus drift away (which pins the sign convention).
inline std::vector<ValidationReport> validate_monte_carlo(const SuiteOptions& options) {
    return {validate_monte_carlo_case("zero", ChannelParams::create(2, {0.0, 0.0}, 1.0, 1.0), options, 101),
            validate_monte_carlo_case("toward", ChannelParams::create(2, {0.0, -1.0}, 1.0, 1.0), options, 102),
            validate_monte_carlo_case("oblique", ChannelParams::create(2, {0.5, -1.0}, 1.0, 1.0), options, 103),
            validate_monte_carlo_case("away", ChannelParams::create(2, {0.0, 1.0}, 1.0, 1.0), options, 104)};
}

/// Grid solve against representation at probes (0, d), (+-2, d) for spacing h
/// and h/2. Also records, without a tolerance, the error with Dirichlet data
/// on the core edges themselves.
inline ValidationReport validate_bvp_case(const std::string& name, const ChannelParams& params,
                                          const SuiteOptions& options) {
    detail::Stopwatch clock;
    ValidationReport report("bvp_" + name);
    const auto g = BoundaryData::indicator(0.0, 1.0);
    const std::vector<SourceOffset> probes{SourceOffset::planar(0.0), SourceOffset::planar(2.0), SourceOffset::planar(-2.0)};
    GridConfig grid;
    grid.spacing = options.fast ? 0.2 : 0.02;
    QuadratureConfig quad;
    quad.relative_tolerance = 1e-12;
    const auto coarse = compare_bvp_vs_representation(params, g, grid, quad, probes);
    GridConfig half = grid;
    half.spacing = grid.spacing / 2.0;
    const auto fine = compare_bvp_vs_representation(params, g, half, quad, probes);
    GridConfig literal = grid;
    literal.far_field_extent = 0.0;
    const auto edge = compare_bvp_vs_representation(params, g, literal, quad, probes);

    report.set("max_rel_err", coarse.metrics.at("max_rel_err"));
    report.set("max_rel_err_half_spacing", fine.metrics.at("max_rel_err"));
    report.set("halving_ratio", coarse.metrics.at("max_abs_err") / fine.metrics.at("max_abs_err"));
    report.set("max_rel_err_core_edge_dirichlet", edge.metrics.at("max_rel_err"));
    report.require_at_most("max_rel_err", options.fast ? 0.03 : 0.01);
    report.require_at_least("halving_ratio", options.fast ? 2.0 : 2.5);
    report.params = params;
    report.config = {{"coarse", coarse.config}, {"fine", fine.config}};
    detail::finish(report, clock);
    return report;
}

inline std::vector<ValidationReport> validate_bvp(const SuiteOptions& options) {
    return {validate_bvp_case("zero", ChannelParams::create(2, {0.0, 0.0}, 1.0, 1.0), options),
            validate_bvp_case("toward", ChannelParams::create(2, {0.0, -1.0}, 1.0, 1.0), options),
            validate_bvp_case("oblique", ChannelParams::create(2, {0.5, -1.0}, 1.0, 1.0), options)};
}

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"bessel", "oracle2d", "oracle3d", "normalization", "montecarlo", "bvp", "all"};
    return names;
}

inline std::vector<ValidationReport> run_suite(const std::string& suite, const SuiteOptions& options = {}) {
    std::vector<ValidationReport> out;
    auto append = [&](std::vector<ValidationReport> more) {
        for (auto& r : more) out.push_back(std::move(r));
    };
    const bool all = suite == "all";
    bool known = all;
    if (all || suite == "bessel") {
        known = true;
        out.push_back(validate_bessel());
    }
    if (all || suite == "oracle2d") {
        known = true;
        append({validate_oracle(2), validate_old_method(), validate_limits(2), validate_generator(2)});
    }
    if (all || suite == "oracle3d") {
        known = true;
        append({validate_oracle(3), validate_limits(3), validate_generator(3)});
    }
    if (all || suite == "normalization") {
        known = true;
        out.push_back(validate_normalization());
    }
    if (all || suite == "montecarlo") {
        known = true;
        append(validate_monte_carlo(options));
    }
    if (all || suite == "bvp") {
        known = true;
        append(validate_bvp(options));
    }
    if (!known) throw ConfigError("unknown suite '" + suite + "'");
    return out;
}

} // namespace fap
