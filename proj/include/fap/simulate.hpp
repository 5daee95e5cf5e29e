#pragma once

// Particle-level Monte Carlo of dX = v dt + sigma dB from (0, ..., 0, d) until
// the receiver plane {x_n = 0} absorbs it.
//
// Each step is Euler-Maruyama, which is exact in law for constant coefficients;
// the only discretisation error is missed crossings between grid times. With
// bridge_correction the walker is also absorbed with the Brownian-bridge
// crossing probability exp(-2 a b / (sigma2 dt)).
//
// Far from the receiver the step is enlarged to
//   max(dt, min((x_n / (k sigma))^2, x_n / (k |v_n|)))   with k = far_field_ratio,
// which keeps both the noise and the normal drift of a step below x_n / k. The
// per-step crossing probability there is below exp(-2 k^2 / 3), so the law of
// the arrival position is unchanged while zero-drift runs, whose hitting times
// are heavy tailed, stay affordable. far_field_ratio = 0 disables this.
//
// Particle j uses stream j mod streams; stream i owns an mt19937_64 seeded from
// (seed, i). Records are stored by particle index, so output does not depend on
// thread count or scheduling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include "json.hpp"

#include "fap/error.hpp"
#include "fap/model.hpp"

namespace fap {

struct SimConfig {
    std::int64_t particle_count = 100000;
    double dt = 1e-3;
    /// Time horizon; defaults to default_t_max(params).
    std::optional<double> t_max;
    std::uint64_t seed = 1;
    int streams = 16;
    bool bridge_correction = true;
    double far_field_ratio = 8.0;
    /// Worker threads; 0 means hardware concurrency. Does not affect results.
    int threads = 0;

    /// 1e6 d^2 / sigma2 with far-field steps, 200 d^2 / sigma2 without.
    double default_t_max(const ChannelParams& params) const {
        const double scale = params.distance() * params.distance() / params.sigma2();
        return (far_field_ratio > 0.0 ? 1e6 : 200.0) * scale;
    }
    double resolved_t_max(const ChannelParams& params) const { return t_max ? *t_max : default_t_max(params); }

    void validate(const ChannelParams& params) const {
        if (particle_count < 1) throw ConfigError("particle_count must be at least 1");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
        const double horizon = resolved_t_max(params);
        if (!(horizon > dt) || !std::isfinite(horizon)) throw ConfigError("t_max must be finite and exceed dt");
        if (streams < 1) throw ConfigError("streams must be at least 1");
        if (!(far_field_ratio == 0.0 || far_field_ratio >= 2.0) || !std::isfinite(far_field_ratio))
            throw ConfigError("far_field_ratio must be 0 (disabled) or at least 2");
        if (threads < 0) throw ConfigError("threads must be non-negative");
    }
};

inline void to_json(nlohmann::json& j, const SimConfig& c) {
    j = nlohmann::json{{"particle_count", c.particle_count},
                       {"dt", c.dt},
                       {"t_max", c.t_max ? nlohmann::json(*c.t_max) : nlohmann::json(nullptr)},
                       {"seed", c.seed},
                       {"streams", c.streams},
                       {"bridge_correction", c.bridge_correction},
                       {"far_field_ratio", c.far_field_ratio}};
}

enum class HitStatus { absorbed, censored };

struct HitRecord {
    /// Tangential position at absorption, or at t_max when censored.
    TangentialVector tangential_position;
    double hit_time = 0.0;
    HitStatus status = HitStatus::censored;

    bool absorbed() const noexcept { return status == HitStatus::absorbed; }
    bool operator==(const HitRecord&) const = default;
};

/// Probability that a Brownian bridge from a > 0 to b > 0 over dt touches 0.
inline double crossing_probability(double a, double b, const ChannelParams& params, double dt) {
    if (a <= 0.0 || b <= 0.0) return 1.0;
    return std::exp(-2.0 * a * b / (params.sigma2() * dt));
}

namespace detail {

inline std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x46415043u};
    return std::mt19937_64(seq);
}

class ParticleWalker {
public:
    ParticleWalker(const ChannelParams& params, const SimConfig& config)
        : params_(params), config_(config), t_max_(config.resolved_t_max(params)),
          sigma_(std::sqrt(params.sigma2())), tangential_(static_cast<std::size_t>(params.dimension() - 1)) {
        const auto v = params.drift();
        for (std::size_t i = 0; i < tangential_; ++i) v_tan_[i] = v[i];
        v_n_ = v.back();
    }

    template <class Engine>
    HitRecord run(Engine& engine, boost::random::normal_distribution<double>& normal,
                  boost::random::uniform_01<double>& uniform) const {
        std::array<double, 2> p{};
        double z = params_.distance();
        double t = 0.0;
        const double dt = config_.dt;
        const double k = config_.far_field_ratio;
        while (true) {
            const double remaining = t_max_ - t;
            if (remaining <= 1e-12 * t_max_) return censored(p, t_max_);
            double step = dt;
            if (k > 0.0) {
                double far = (z / (k * sigma_)) * (z / (k * sigma_));
                if (v_n_ != 0.0) far = std::min(far, z / (k * std::abs(v_n_)));
                step = std::max(dt, far);
            }
            step = std::min(step, remaining);
            const double root = sigma_ * std::sqrt(step);

            std::array<double, 2> q{};
            for (std::size_t i = 0; i < tangential_; ++i) q[i] = p[i] + v_tan_[i] * step + root * normal(engine);
            const double z_next = z + v_n_ * step + root * normal(engine);

            if (z_next <= 0.0) {
                const double frac = z / (z - z_next);
                return absorbed(lerp(p, q, frac), t + frac * step);
            }
            if (config_.bridge_correction) {
                const double prob = std::exp(-2.0 * z * z_next / (params_.sigma2() * step));
                if (prob > 0.0 && uniform(engine) < prob) return absorbed(lerp(p, q, 0.5), t + 0.5 * step);
            }
            p = q;
            z = z_next;
            t += step;
        }
    }

private:
    std::array<double, 2> lerp(const std::array<double, 2>& a, const std::array<double, 2>& b, double f) const {
        std::array<double, 2> out{};
        for (std::size_t i = 0; i < tangential_; ++i) out[i] = a[i] + f * (b[i] - a[i]);
        return out;
    }
    HitRecord make(const std::array<double, 2>& p, double t, HitStatus status) const {
        HitRecord rec;
        rec.tangential_position = TangentialVector(std::span<const double>(p.data(), tangential_));
        rec.hit_time = t;
        rec.status = status;
        return rec;
    }
    HitRecord absorbed(const std::array<double, 2>& p, double t) const { return make(p, t, HitStatus::absorbed); }
    HitRecord censored(const std::array<double, 2>& p, double t) const { return make(p, t, HitStatus::censored); }

    const ChannelParams& params_;
    const SimConfig& config_;
    double t_max_;
    double sigma_;
    std::size_t tangential_;
    std::array<double, 2> v_tan_{};
    double v_n_ = 0.0;
};

} // namespace detail

/// Simulates config.particle_count independent particles; one record each, in particle order.
inline std::vector<HitRecord> simulate_hits(const ChannelParams& params, const SimConfig& config) {
    config.validate(params);
    const auto n = static_cast<std::size_t>(config.particle_count);
    const auto streams = static_cast<std::size_t>(config.streams);
    std::vector<HitRecord> records(n);
    const detail::ParticleWalker walker(params, config);

    auto run_stream = [&](std::size_t stream) {
        auto engine = detail::stream_engine(config.seed, stream);
        boost::random::normal_distribution<double> normal(0.0, 1.0);
        boost::random::uniform_01<double> uniform;
        for (std::size_t j = stream; j < n; j += streams) records[j] = walker.run(engine, normal, uniform);
    };

    std::size_t workers = config.threads > 0 ? static_cast<std::size_t>(config.threads)
                                             : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, streams);
    if (workers <= 1) {
        for (std::size_t s = 0; s < streams; ++s) run_stream(s);
        return records;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            for (std::size_t s = w; s < streams; s += workers) run_stream(s);
        });
    pool.clear();
    return records;
}

struct HitSummary {
    std::size_t total = 0;
    std::size_t absorbed = 0;
    double absorbed_fraction = 0.0;
    double mean_hit_time = 0.0;  // over absorbed records
};

inline HitSummary summarize_hits(std::span<const HitRecord> records) {
    HitSummary s;
    s.total = records.size();
    double time_sum = 0.0;
    for (const auto& r : records) {
        if (!r.absorbed()) continue;
        ++s.absorbed;
        time_sum += r.hit_time;
    }
    if (s.total > 0) s.absorbed_fraction = static_cast<double>(s.absorbed) / s.total;
    if (s.absorbed > 0) s.mean_hit_time = time_sum / s.absorbed;
    return s;
}

enum class Projection { axis0, axis1, radial };

struct Histogram {
    std::vector<double> edges;
    std::vector<double> counts;
    /// counts / (total records * bin measure); sums to the absorbed fraction
    /// (times bin measure) when every absorbed record falls inside the edges.
    std::vector<double> density;
    double absorbed_fraction = 0.0;
    std::size_t total = 0;
    std::size_t absorbed = 0;
    std::size_t outside = 0;
};

/// Histogram of absorbed arrival positions, normalised per unit length (axis
/// projections) or per unit area (radial annuli). Censored records only count
/// towards the total.
inline Histogram empirical_density(std::span<const HitRecord> records, std::span<const double> bin_edges,
                                   Projection projection = Projection::axis0) {
    if (records.empty()) throw ConfigError("empirical_density: empty record set");
    if (bin_edges.size() < 2) throw ConfigError("empirical_density: need at least two bin edges");
    for (std::size_t i = 1; i < bin_edges.size(); ++i)
        if (!(bin_edges[i] > bin_edges[i - 1])) throw ConfigError("empirical_density: bin edges must be strictly increasing");

    Histogram h;
    h.edges.assign(bin_edges.begin(), bin_edges.end());
    h.counts.assign(bin_edges.size() - 1, 0.0);
    h.total = records.size();
    for (const auto& r : records) {
        if (!r.absorbed()) continue;
        ++h.absorbed;
        double x = 0.0;
        const auto& p = r.tangential_position;
        switch (projection) {
        case Projection::axis0: x = p[0]; break;
        case Projection::axis1:
            if (p.size() < 2) throw ConfigError("empirical_density: axis1 needs 3D records");
            x = p[1];
            break;
        case Projection::radial: x = p.size() < 2 ? std::abs(p[0]) : std::hypot(p[0], p[1]); break;
        }
        const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), x);
        if (it == bin_edges.begin() || (it == bin_edges.end() && x > bin_edges.back())) {
            ++h.outside;
            continue;
        }
        const auto bin = std::min<std::size_t>(static_cast<std::size_t>(it - bin_edges.begin()) - 1, h.counts.size() - 1);
        h.counts[bin] += 1.0;
    }
    h.absorbed_fraction = static_cast<double>(h.absorbed) / h.total;
    h.density.resize(h.counts.size());
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
        const double a = bin_edges[i];
        const double b = bin_edges[i + 1];
        const double measure = projection == Projection::radial && records.front().tangential_position.size() == 2
                                   ? std::numbers::pi * (b * b - a * a)
                                   : b - a;
        h.density[i] = h.counts[i] / (static_cast<double>(h.total) * measure);
    }
    return h;
}

/// CSV with header xi[,eta],tau,status; 17 significant digits, LF line endings.
inline void write_hits_csv(std::ostream& out, std::span<const HitRecord> records, int dimension) {
    out << (dimension == 3 ? "xi,eta,tau,status\n" : "xi,tau,status\n");
    out << std::setprecision(17);
    for (const auto& r : records) {
        for (double x : r.tangential_position) out << x << ',';
        out << r.hit_time << ',' << (r.absorbed() ? "absorbed" : "censored") << '\n';
    }
}

} // namespace fap
