#pragma once

// Channel parameterisation shared by every module.
//
// Coordinates: the receiver is the plane {x_n = 0}; the transmitter sits at
// x_n = distance. Only tangential coordinates are passed around explicitly.
// Drift sign: a positive normal component v_n points away from the receiver,
// so hitting is certain for v_n <= 0 and has probability exp(-2 v_n d / sigma2)
// otherwise.

#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <sstream>
#include <vector>

#include "json.hpp"

#include "fap/error.hpp"

namespace fap {

/// Up to two tangential coordinates (one in 2D, two in 3D).
class TangentialVector {
public:
    TangentialVector() = default;
    TangentialVector(std::initializer_list<double> values) {
        if (values.size() > 2) throw ConfigError("tangential vectors have at most two components");
        for (double v : values) data_[size_++] = v;
    }
    explicit TangentialVector(std::span<const double> values) {
        if (values.size() > 2) throw ConfigError("tangential vectors have at most two components");
        for (double v : values) data_[size_++] = v;
    }

    std::size_t size() const noexcept { return size_; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    std::span<const double> span() const noexcept { return {data_.data(), size_}; }
    const double* begin() const noexcept { return data_.data(); }
    const double* end() const noexcept { return data_.data() + size_; }
    bool all_finite() const noexcept {
        for (double v : span())
            if (!std::isfinite(v)) return false;
        return true;
    }
    bool operator==(const TangentialVector& o) const noexcept {
        if (size_ != o.size_) return false;
        for (std::size_t i = 0; i < size_; ++i)
            if (data_[i] != o.data_[i]) return false;
        return true;
    }

private:
    std::array<double, 2> data_{};
    std::size_t size_ = 0;
};

template <class Tag>
struct Offset {
    TangentialVector coords;

    Offset() = default;
    explicit Offset(TangentialVector c) : coords(c) {
        if (!coords.all_finite()) throw ConfigError("offset components must be finite");
    }
    static Offset planar(double a) { return Offset(TangentialVector{a}); }
    static Offset spatial(double a, double b) { return Offset(TangentialVector{a, b}); }

    std::size_t size() const noexcept { return coords.size(); }
    double operator[](std::size_t i) const noexcept { return coords[i]; }
};

/// Tangential transmitter coordinates; the normal coordinate is the channel distance.
using SourceOffset = Offset<struct SourceTag>;
/// Tangential arrival coordinates on the receiver plane.
using BoundaryOffset = Offset<struct BoundaryTag>;

struct DriftSplit {
    TangentialVector tangential;
    double normal = 0.0;
};

class ChannelParams {
public:
    /// Validating constructor. Throws ConfigError on any invalid input.
    static ChannelParams create(int dimension, std::span<const double> drift, double sigma2, double distance) {
        if (dimension != 2 && dimension != 3) {
            std::ostringstream msg;
            msg << "dimension must be 2 or 3, got " << dimension;
            throw ConfigError(msg.str());
        }
        if (drift.size() != static_cast<std::size_t>(dimension)) {
            std::ostringstream msg;
            msg << "drift has " << drift.size() << " components but dimension is " << dimension;
            throw ConfigError(msg.str());
        }
        for (double v : drift)
            if (!std::isfinite(v)) throw ConfigError("drift components must be finite");
        if (!std::isfinite(sigma2) || !(sigma2 > 0.0)) throw ConfigError("nonpositive diffusion: sigma2 must be > 0");
        if (!std::isfinite(distance) || !(distance > 0.0)) throw ConfigError("distance must be > 0");
        ChannelParams p;
        p.dimension_ = dimension;
        for (std::size_t i = 0; i < drift.size(); ++i) p.drift_[i] = drift[i];
        p.sigma2_ = sigma2;
        p.distance_ = distance;
        return p;
    }
    static ChannelParams create(int dimension, std::initializer_list<double> drift, double sigma2, double distance) {
        return create(dimension, std::span<const double>(drift.begin(), drift.size()), sigma2, distance);
    }

    int dimension() const noexcept { return dimension_; }
    std::span<const double> drift() const noexcept { return {drift_.data(), static_cast<std::size_t>(dimension_)}; }
    double sigma2() const noexcept { return sigma2_; }
    double distance() const noexcept { return distance_; }
    /// D = sigma^2 / 2.
    double diffusion_d() const noexcept { return sigma2_ / 2.0; }

    double normal_drift() const noexcept { return drift_[dimension_ - 1]; }
    double drift_norm() const noexcept {
        double s = 0.0;
        for (double v : drift()) s += v * v;
        return std::sqrt(s);
    }

    ChannelParams with_distance(double distance) const {
        return create(dimension_, drift(), sigma2_, distance);
    }

private:
    ChannelParams() = default;

    int dimension_ = 2;
    std::array<double, 3> drift_{};
    double sigma2_ = 1.0;
    double distance_ = 1.0;
};

inline ChannelParams params_new(int dimension, std::span<const double> drift, double sigma2, double distance) {
    return ChannelParams::create(dimension, drift, sigma2, distance);
}

inline ChannelParams params_new(int dimension, std::initializer_list<double> drift, double sigma2, double distance) {
    return ChannelParams::create(dimension, drift, sigma2, distance);
}

/// (tangential drift, normal drift); the normal component is the last axis.
inline DriftSplit drift_split(const ChannelParams& params) {
    const auto v = params.drift();
    return {TangentialVector(v.first(v.size() - 1)), v.back()};
}

inline void to_json(nlohmann::json& j, const ChannelParams& p) {
    j = nlohmann::json{{"dimension", p.dimension()},
                       {"drift", std::vector<double>(p.drift().begin(), p.drift().end())},
                       {"sigma2", p.sigma2()},
                       {"distance", p.distance()}};
}

inline ChannelParams channel_params_from_json(const nlohmann::json& j) {
    try {
        const auto drift = j.at("drift").get<std::vector<double>>();
        return ChannelParams::create(j.at("dimension").get<int>(), drift, j.at("sigma2").get<double>(),
                                     j.at("distance").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid channel JSON: ") + e.what());
    }
}

} // namespace fap
