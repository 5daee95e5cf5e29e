#pragma once

// Finite-difference solve of the stationary problem
//   A u = v . grad u + (sigma2 / 2) lap u = 0  on {x2 > 0},  u = g on {x2 = 0},
// compared with the kernel representation u(x) = int f(xi | x) g(xi) dxi.
//
// Grid: a uniform core [-L, L] x [0, H] with spacing h, optionally surrounded by
// a geometrically stretched buffer whose cell ratio is 1 + stretch_rate h / d.
// The buffer carries homogeneous Dirichlet data at far_field_extent * max(L, H)
// instead of at the core edge; with far_field_extent = 0 the core edges are the
// artificial boundary. Because the ratio tends to 1 with h, the scheme stays
// second order in the core.
//
// Stencil per axis (constant coefficients, so it is separable): non-uniform
// central second differences; weighted central first differences where the
// cell Peclet number |v_k| max(hW, hE) / sigma2 is at most 1, first-order upwind
// otherwise. Every off-diagonal is non-negative and the diagonal is minus their
// sum, so the matrix is an M-matrix and the discrete maximum principle holds.
//
// Solver: vertex-centred geometric multigrid V(2,2) cycles with alternating
// zebra line Gauss-Seidel, area-weighted restriction, bilinear prolongation,
// rediscretised coarse operators and a banded LU on the coarsest level.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"

#include "fap/analytic.hpp"
#include "fap/error.hpp"
#include "fap/model.hpp"
#include "fap/quadrature.hpp"
#include "fap/stats.hpp"

namespace fap {

/// Boundary data g on the receiver line x2 = 0.
class BoundaryData {
public:
    struct Indicator {
        double center;
        double halfwidth;
    };
    struct GaussianBump {
        double center;
        double width;
    };
    struct Tabulated {
        std::vector<double> abscissae;
        std::vector<double> values;
    };

    /// 1 on (c - a, c + a), 1/2 at the two jumps, 0 elsewhere.
    static BoundaryData indicator(double center, double halfwidth) {
        if (!std::isfinite(center) || !(halfwidth > 0.0) || !std::isfinite(halfwidth))
            throw ConfigError("indicator: need finite center and positive halfwidth");
        return BoundaryData(Indicator{center, halfwidth});
    }
    /// exp(-(x - c)^2 / (2 w^2)).
    static BoundaryData gaussian_bump(double center, double width) {
        if (!std::isfinite(center) || !(width > 0.0) || !std::isfinite(width))
            throw ConfigError("gaussian_bump: need finite center and positive width");
        return BoundaryData(GaussianBump{center, width});
    }
    /// Piecewise linear through the samples, 0 outside them.
    static BoundaryData tabulated(std::vector<double> abscissae, std::vector<double> values) {
        if (abscissae.size() != values.size() || abscissae.size() < 2)
            throw ConfigError("tabulated: need matching abscissae and values, at least two");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!std::isfinite(values[i]) || !std::isfinite(abscissae[i]))
                throw ConfigError("tabulated: entries must be finite");
            if (i > 0 && !(abscissae[i] > abscissae[i - 1]))
                throw ConfigError("tabulated: abscissae must be strictly increasing");
        }
        return BoundaryData(Tabulated{std::move(abscissae), std::move(values)});
    }

    double value(double x) const {
        return std::visit(
            [x](const auto& g) -> double {
                using T = std::decay_t<decltype(g)>;
                if constexpr (std::is_same_v<T, Indicator>) {
                    const double dist = std::abs(x - g.center);
                    const double tol = 1e-12 * std::max(1.0, g.halfwidth);
                    if (std::abs(dist - g.halfwidth) <= tol) return 0.5;
                    return dist < g.halfwidth ? 1.0 : 0.0;
                } else if constexpr (std::is_same_v<T, GaussianBump>) {
                    const double z = (x - g.center) / g.width;
                    return std::exp(-0.5 * z * z);
                } else {
                    const auto& a = g.abscissae;
                    if (x < a.front() || x > a.back()) return 0.0;
                    const auto it = std::upper_bound(a.begin(), a.end(), x);
                    if (it == a.end()) return g.values.back();
                    const auto k = static_cast<std::size_t>(it - a.begin());
                    const double t = (x - a[k - 1]) / (a[k] - a[k - 1]);
                    return g.values[k - 1] + t * (g.values[k] - g.values[k - 1]);
                }
            },
            data_);
    }

    /// Largest |x| at which |g| can exceed 1e-12 (relative to its peak).
    double support_radius() const {
        return std::visit(
            [](const auto& g) -> double {
                using T = std::decay_t<decltype(g)>;
                if constexpr (std::is_same_v<T, Indicator>) {
                    return std::abs(g.center) + g.halfwidth;
                } else if constexpr (std::is_same_v<T, GaussianBump>) {
                    return std::abs(g.center) + g.width * std::sqrt(2.0 * std::log(1e12));
                } else {
                    return std::max(std::abs(g.abscissae.front()), std::abs(g.abscissae.back()));
                }
            },
            data_);
    }

    /// Integral of k(xi) g(xi) over the line, split at the kinks of g.
    template <class Kernel>
    QuadResult integrate_against(Kernel&& kernel, double scale, const QuadratureConfig& quad) const {
        auto integrand = [&](double x) { return kernel(x) * value(x); };
        return std::visit(
            [&](const auto& g) -> QuadResult {
                using T = std::decay_t<decltype(g)>;
                if constexpr (std::is_same_v<T, Indicator>) {
                    return adaptive_integrate(kernel, Domain::finite(g.center - g.halfwidth, g.center + g.halfwidth),
                                              quad);
                } else if constexpr (std::is_same_v<T, GaussianBump>) {
                    auto left = adaptive_integrate(integrand, Domain::half_line_below_tan(g.center, std::max(g.width, scale)),
                                                   quad);
                    auto right = adaptive_integrate(integrand, Domain::half_line_tan(g.center, std::max(g.width, scale)),
                                                    quad);
                    return {left.value + right.value, left.error + right.error, left.subdivisions + right.subdivisions};
                } else {
                    QuadResult total{0.0, 0.0, 0};
                    for (std::size_t k = 1; k < g.abscissae.size(); ++k) {
                        const auto piece = adaptive_integrate(integrand, Domain::finite(g.abscissae[k - 1], g.abscissae[k]), quad);
                        total.value += piece.value;
                        total.error += piece.error;
                        total.subdivisions += piece.subdivisions;
                    }
                    return total;
                }
            },
            data_);
    }

    nlohmann::json to_json() const {
        return std::visit(
            [](const auto& g) -> nlohmann::json {
                using T = std::decay_t<decltype(g)>;
                if constexpr (std::is_same_v<T, Indicator>)
                    return {{"kind", "indicator"}, {"center", g.center}, {"halfwidth", g.halfwidth}};
                else if constexpr (std::is_same_v<T, GaussianBump>)
                    return {{"kind", "gaussian_bump"}, {"center", g.center}, {"width", g.width}};
                else
                    return {{"kind", "tabulated"}, {"abscissae", g.abscissae}, {"values", g.values}};
            },
            data_);
    }

private:
    using Variant = std::variant<Indicator, GaussianBump, Tabulated>;
    explicit BoundaryData(Variant d) : data_(std::move(d)) {}
    Variant data_;
};

struct GridConfig {
    double half_width = 20.0;
    double height = 8.0;
    double spacing = 0.02;
    double solver_tolerance = 1e-9;
    int max_iterations = 200;
    /// Far boundary at this multiple of max(L, H); 0 puts it on the core edges.
    double far_field_extent = 1000.0;
    double stretch_rate = 2.5;

    void validate(const ChannelParams& params, const BoundaryData& g) const {
        if (params.dimension() != 2) throw PreconditionError("solve_bvp_2d: 2D channel required");
        for (double v : {half_width, height, spacing, solver_tolerance})
            if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError("grid: lengths and tolerance must be positive");
        if (max_iterations < 1) throw ConfigError("grid: max_iterations must be at least 1");
        if (!(far_field_extent == 0.0 || far_field_extent >= 1.5) || !std::isfinite(far_field_extent))
            throw ConfigError("grid: far_field_extent must be 0 or at least 1.5");
        if (!(stretch_rate > 0.0) || !std::isfinite(stretch_rate)) throw ConfigError("grid: stretch_rate must be positive");
        auto divides = [&](double length) {
            const double n = length / spacing;
            return std::abs(n - std::round(n)) <= 1e-9 * std::max(1.0, n) && std::round(n) >= 2.0;
        };
        if (!divides(2.0 * half_width) || !divides(height)) throw ConfigError("grid: spacing must divide 2L and H");
        const double d = params.distance();
        const double support = g.support_radius();
        if (half_width < 10.0 * std::max(d, support)) {
            std::ostringstream msg;
            msg << "grid: half_width " << half_width << " < 10 max(d, support radius) = " << 10.0 * std::max(d, support);
            throw ConfigError(msg.str());
        }
        if (height < 5.0 * d) throw ConfigError("grid: height must be at least 5 d");
        if (support > 0.5 * half_width) throw ConfigError("grid: boundary data must decay inside [-L/2, L/2]");
    }
};

inline void to_json(nlohmann::json& j, const GridConfig& c) {
    j = nlohmann::json{{"half_width", c.half_width},           {"height", c.height},
                       {"spacing", c.spacing},                 {"solver_tolerance", c.solver_tolerance},
                       {"max_iterations", c.max_iterations},   {"far_field_extent", c.far_field_extent},
                       {"stretch_rate", c.stretch_rate}};
}

/// Nodal field on the full (core plus buffer) grid, row-major with x1 fastest.
class ScalarField2D {
public:
    ScalarField2D(std::vector<double> x1, std::vector<double> x2, std::vector<double> values, std::size_t core_x_begin,
                  std::size_t core_x_end, std::size_t core_y_end)
        : x1_(std::move(x1)), x2_(std::move(x2)), values_(std::move(values)), core_x_begin_(core_x_begin),
          core_x_end_(core_x_end), core_y_end_(core_y_end) {}

    std::size_t nx() const noexcept { return x1_.size(); }
    std::size_t ny() const noexcept { return x2_.size(); }
    const std::vector<double>& x1() const noexcept { return x1_; }
    const std::vector<double>& x2() const noexcept { return x2_; }
    const std::vector<double>& values() const noexcept { return values_; }
    double at(std::size_t i, std::size_t j) const { return values_[j * nx() + i]; }

    /// Core node index ranges: x1 in [core_x_begin, core_x_end], x2 in [0, core_y_end].
    std::size_t core_x_begin() const noexcept { return core_x_begin_; }
    std::size_t core_x_end() const noexcept { return core_x_end_; }
    std::size_t core_y_end() const noexcept { return core_y_end_; }

    int iterations = 0;
    double relative_residual = 0.0;

    /// Bilinear interpolation; throws outside the grid.
    double interpolate(double a, double b) const {
        if (a < x1_.front() || a > x1_.back() || b < x2_.front() || b > x2_.back())
            throw DomainError("ScalarField2D::interpolate: point outside the grid");
        const auto [i, s] = locate(x1_, a);
        const auto [j, t] = locate(x2_, b);
        const double u00 = at(i, j);
        const double u10 = at(i + 1, j);
        const double u01 = at(i, j + 1);
        const double u11 = at(i + 1, j + 1);
        return (1 - s) * (1 - t) * u00 + s * (1 - t) * u10 + (1 - s) * t * u01 + s * t * u11;
    }

    /// CSV rows x1,x2,u over the core (or the full grid), x1 fastest.
    void write_csv(std::ostream& out, bool include_buffer = false) const {
        out << "x1,x2,u\n" << std::setprecision(17);
        const std::size_t i0 = include_buffer ? 0 : core_x_begin_;
        const std::size_t i1 = include_buffer ? nx() - 1 : core_x_end_;
        const std::size_t j1 = include_buffer ? ny() - 1 : core_y_end_;
        for (std::size_t j = 0; j <= j1; ++j)
            for (std::size_t i = i0; i <= i1; ++i) out << x1_[i] << ',' << x2_[j] << ',' << at(i, j) << '\n';
    }

private:
    static std::pair<std::size_t, double> locate(const std::vector<double>& nodes, double x) {
        auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
        std::size_t k = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
        k = std::min(k, nodes.size() - 2);
        return {k, (x - nodes[k]) / (nodes[k + 1] - nodes[k])};
    }

    std::vector<double> x1_;
    std::vector<double> x2_;
    std::vector<double> values_;
    std::size_t core_x_begin_;
    std::size_t core_x_end_;
    std::size_t core_y_end_;
};

namespace detail {

/// Smallest ratio r > 1 with first * (r + r^2 + ... + r^n) = extent.
inline double stretch_ratio(double first, std::size_t n, double extent) {
    auto total = [&](double r) {
        double s = 0.0;
        double p = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            p *= r;
            s += p;
            if (first * s > extent * 10.0) break;
        }
        return first * s;
    };
    double lo = 1.0;
    double hi = 2.0;
    while (total(hi) < extent) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (total(mid) < extent ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline std::size_t round_up_to(std::size_t n, std::size_t m) { return (n + m - 1) / m * m; }

/// Outward buffer offsets h r, h (r + r^2), ... reaching extent after n cells.
inline std::vector<double> buffer_offsets(double h, std::size_t n, double extent) {
    std::vector<double> out;
    if (n == 0) return out;
    const double r = stretch_ratio(h, n, extent);
    double cell = h;
    double pos = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        cell *= r;
        pos += cell;
        out.push_back(pos);
    }
    out.back() = extent;
    return out;
}

inline std::size_t min_buffer_cells(double h, double extent, double ratio) {
    // smallest n with h (r + ... + r^n) >= extent at the nominal ratio
    std::size_t n = 0;
    double cell = h;
    double pos = 0.0;
    while (pos < extent) {
        cell *= ratio;
        pos += cell;
        ++n;
    }
    return n;
}

struct GridLayout {
    std::vector<double> x;
    std::vector<double> y;
    std::size_t core_x_begin = 0;
    std::size_t core_x_end = 0;
    std::size_t core_y_end = 0;
};

inline GridLayout build_layout(const ChannelParams& params, const GridConfig& grid) {
    const double h = grid.spacing;
    const auto ncx = static_cast<std::size_t>(std::llround(2.0 * grid.half_width / h));
    const auto ncy = static_cast<std::size_t>(std::llround(grid.height / h));
    GridLayout layout;
    std::size_t bx = 0;
    std::size_t by = 0;
    double ext_x = 0.0;
    double ext_y = 0.0;
    if (grid.far_field_extent > 0.0) {
        const double far = grid.far_field_extent * std::max(grid.half_width, grid.height);
        ext_x = far - grid.half_width;
        ext_y = far - grid.height;
        const double ratio = 1.0 + grid.stretch_rate * h / params.distance();
        const std::size_t nx_min = min_buffer_cells(h, ext_x, ratio);
        const std::size_t ny_min = min_buffer_cells(h, ext_y, ratio);
        // Pad so both axes coarsen down to a handful of cells in x2.
        std::size_t levels = 0;
        while (((ncy + ny_min) >> (levels + 1)) >= 4) ++levels;
        const std::size_t m = std::size_t{1} << levels;
        by = round_up_to(ncy + ny_min, m) - ncy;
        bx = (round_up_to(ncx + 2 * nx_min, 2 * m) - ncx) / 2;
        if ((ncx + 2 * bx) % m != 0) bx = (round_up_to(ncx + 2 * bx, m) - ncx + 1) / 2;
    }
    const auto left = buffer_offsets(h, bx, ext_x);
    for (std::size_t k = left.size(); k-- > 0;) layout.x.push_back(-grid.half_width - left[k]);
    layout.core_x_begin = layout.x.size();
    const auto half = static_cast<std::ptrdiff_t>(ncx / 2);
    for (std::ptrdiff_t i = -half; i <= static_cast<std::ptrdiff_t>(ncx) - half; ++i)
        layout.x.push_back(static_cast<double>(i) * h);
    layout.core_x_end = layout.x.size() - 1;
    for (double off : left) layout.x.push_back(grid.half_width + off);

    for (std::size_t j = 0; j <= ncy; ++j) layout.y.push_back(static_cast<double>(j) * h);
    layout.core_y_end = ncy;
    for (double off : buffer_offsets(h, by, ext_y)) layout.y.push_back(grid.height + off);
    return layout;
}

/// Per-axis stencil weights towards the lower (west) and upper (east) neighbour.
struct AxisStencil {
    std::vector<double> west;
    std::vector<double> east;
};

inline AxisStencil axis_stencil(const std::vector<double>& nodes, double v, double sigma2) {
    const std::size_t n = nodes.size();
    AxisStencil s{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
    for (std::size_t k = 1; k + 1 < n; ++k) {
        const double hw = nodes[k] - nodes[k - 1];
        const double he = nodes[k + 1] - nodes[k];
        double cw = sigma2 / (hw * (hw + he));
        double ce = sigma2 / (he * (hw + he));
        if (std::abs(v) * std::max(hw, he) <= sigma2) {
            ce += v * hw / (he * (hw + he));
            cw -= v * he / (hw * (hw + he));
        } else if (v > 0.0) {
            ce += v / he;
        } else {
            cw -= v / hw;
        }
        s.west[k] = cw;
        s.east[k] = ce;
    }
    return s;
}

/// Dual cell lengths (hW + hE) / 2; half cells at the ends.
inline std::vector<double> dual_lengths(const std::vector<double>& nodes) {
    const std::size_t n = nodes.size();
    std::vector<double> w(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double lo = k > 0 ? nodes[k] - nodes[k - 1] : 0.0;
        const double hi = k + 1 < n ? nodes[k + 1] - nodes[k] : 0.0;
        w[k] = 0.5 * (lo + hi);
    }
    return w;
}

/// Banded LU without pivoting for the coarsest level; the M-matrix is
/// diagonally dominant so elimination is stable.
class BandedSolver {
public:
    BandedSolver() = default;
    BandedSolver(std::size_t nx, std::size_t ny, const AxisStencil& ax, const AxisStencil& ay)
        : mx_(nx - 2), m_((nx - 2) * (ny - 2)), bw_(nx - 2), band_(m_ * (2 * bw_ + 1), 0.0) {
        for (std::size_t j = 1; j + 1 < ny; ++j)
            for (std::size_t i = 1; i + 1 < nx; ++i) {
                const std::size_t k = idx(i, j);
                entry(k, k) = -(ax.west[i] + ax.east[i] + ay.west[j] + ay.east[j]);
                if (i > 1) entry(k, k - 1) = ax.west[i];
                if (i + 2 < nx) entry(k, k + 1) = ax.east[i];
                if (j > 1) entry(k, k - bw_) = ay.west[j];
                if (j + 2 < ny) entry(k, k + bw_) = ay.east[j];
            }
        for (std::size_t k = 0; k < m_; ++k) {
            const double pivot = entry(k, k);
            const std::size_t last = std::min(m_ - 1, k + bw_);
            for (std::size_t r = k + 1; r <= last; ++r) {
                double& l = entry(r, k);
                if (l == 0.0) continue;
                l /= pivot;
                for (std::size_t c = k + 1; c <= last; ++c) entry(r, c) -= l * entry(k, c);
            }
        }
    }

    /// Solves the interior system for right-hand side f (grid layout); writes into u.
    void solve(std::size_t nx, const std::vector<double>& f, std::vector<double>& u) const {
        std::vector<double> y(m_);
        for (std::size_t k = 0; k < m_; ++k) y[k] = f[grid_index(k, nx)];
        for (std::size_t k = 0; k < m_; ++k) {
            const std::size_t first = k > bw_ ? k - bw_ : 0;
            double s = y[k];
            for (std::size_t c = first; c < k; ++c) s -= entry(k, c) * y[c];
            y[k] = s;
        }
        for (std::size_t k = m_; k-- > 0;) {
            const std::size_t last = std::min(m_ - 1, k + bw_);
            double s = y[k];
            for (std::size_t c = k + 1; c <= last; ++c) s -= entry(k, c) * y[c];
            y[k] = s / entry(k, k);
        }
        for (std::size_t k = 0; k < m_; ++k) u[grid_index(k, nx)] = y[k];
    }

private:
    std::size_t idx(std::size_t i, std::size_t j) const { return (j - 1) * mx_ + (i - 1); }
    std::size_t grid_index(std::size_t k, std::size_t nx) const { return (k / mx_ + 1) * nx + (k % mx_ + 1); }
    double& entry(std::size_t r, std::size_t c) { return band_[r * (2 * bw_ + 1) + (c + bw_ - r)]; }
    double entry(std::size_t r, std::size_t c) const { return band_[r * (2 * bw_ + 1) + (c + bw_ - r)]; }

    std::size_t mx_ = 0;
    std::size_t m_ = 0;
    std::size_t bw_ = 0;
    std::vector<double> band_;
};

struct MultigridLevel {
    std::vector<double> x;
    std::vector<double> y;
    AxisStencil ax;
    AxisStencil ay;
    std::vector<double> wx;
    std::vector<double> wy;
    std::vector<double> u;
    std::vector<double> f;
    std::vector<double> r;

    MultigridLevel(std::vector<double> xn, std::vector<double> yn, const ChannelParams& params)
        : x(std::move(xn)), y(std::move(yn)) {
        ax = axis_stencil(x, params.drift()[0], params.sigma2());
        ay = axis_stencil(y, params.drift()[1], params.sigma2());
        wx = dual_lengths(x);
        wy = dual_lengths(y);
        u.assign(x.size() * y.size(), 0.0);
        f.assign(u.size(), 0.0);
        r.assign(u.size(), 0.0);
    }
    std::size_t nx() const { return x.size(); }
    std::size_t ny() const { return y.size(); }

    double apply(std::size_t i, std::size_t j) const {
        const std::size_t n = nx();
        const std::size_t k = j * n + i;
        return ax.west[i] * u[k - 1] + ax.east[i] * u[k + 1] + ay.west[j] * u[k - n] + ay.east[j] * u[k + n] -
               (ax.west[i] + ax.east[i] + ay.west[j] + ay.east[j]) * u[k];
    }

    double compute_residual() {
        const std::size_t n = nx();
        double sum = 0.0;
        for (std::size_t j = 1; j + 1 < ny(); ++j)
            for (std::size_t i = 1; i + 1 < n; ++i) {
                const double v = f[j * n + i] - apply(i, j);
                r[j * n + i] = v;
                sum += v * v;
            }
        return std::sqrt(sum);
    }

    void relax_rows(std::size_t parity, std::vector<double>& cp, std::vector<double>& dp) {
        const std::size_t n = nx();
        const std::size_t m = n - 2;
        cp.resize(m);
        dp.resize(m);
        for (std::size_t j = 1 + parity; j + 1 < ny(); j += 2) {
            const double yw = ay.west[j];
            const double ye = ay.east[j];
            const std::size_t row = j * n;
            double denom_prev = 0.0;
            for (std::size_t q = 0; q < m; ++q) {
                const std::size_t i = q + 1;
                const double diag = -(ax.west[i] + ax.east[i] + yw + ye);
                double rhs = f[row + i] - yw * u[row + i - n] - ye * u[row + i + n];
                if (i == 1) rhs -= ax.west[i] * u[row];
                if (i == m) rhs -= ax.east[i] * u[row + n - 1];
                const double lower = i > 1 ? ax.west[i] : 0.0;
                denom_prev = diag - (q > 0 ? lower * cp[q - 1] : 0.0);
                cp[q] = ax.east[i] / denom_prev;
                dp[q] = (rhs - (q > 0 ? lower * dp[q - 1] : 0.0)) / denom_prev;
            }
            u[row + m] = dp[m - 1];
            for (std::size_t q = m - 1; q-- > 0;) u[row + q + 1] = dp[q] - cp[q] * u[row + q + 2];
        }
    }

    void relax_columns(std::size_t parity, std::vector<double>& cp, std::vector<double>& dp) {
        const std::size_t n = nx();
        const std::size_t m = ny() - 2;
        cp.resize(m);
        dp.resize(m);
        for (std::size_t i = 1 + parity; i + 1 < n; i += 2) {
            const double xw = ax.west[i];
            const double xe = ax.east[i];
            for (std::size_t q = 0; q < m; ++q) {
                const std::size_t j = q + 1;
                const std::size_t k = j * n + i;
                const double diag = -(xw + xe + ay.west[j] + ay.east[j]);
                double rhs = f[k] - xw * u[k - 1] - xe * u[k + 1];
                if (j == 1) rhs -= ay.west[j] * u[k - n];
                if (j == m) rhs -= ay.east[j] * u[k + n];
                const double lower = j > 1 ? ay.west[j] : 0.0;
                const double denom = diag - (q > 0 ? lower * cp[q - 1] : 0.0);
                cp[q] = ay.east[j] / denom;
                dp[q] = (rhs - (q > 0 ? lower * dp[q - 1] : 0.0)) / denom;
            }
            u[m * n + i] = dp[m - 1];
            for (std::size_t q = m - 1; q-- > 0;) u[(q + 1) * n + i] = dp[q] - cp[q] * u[(q + 2) * n + i];
        }
    }

    void smooth(std::vector<double>& cp, std::vector<double>& dp) {
        relax_rows(0, cp, dp);
        relax_rows(1, cp, dp);
        relax_columns(0, cp, dp);
        relax_columns(1, cp, dp);
    }
};

inline std::vector<double> every_other(const std::vector<double>& nodes) {
    std::vector<double> out;
    for (std::size_t k = 0; k < nodes.size(); k += 2) out.push_back(nodes[k]);
    return out;
}

class Multigrid {
public:
    Multigrid(std::vector<double> x, std::vector<double> y, const ChannelParams& params) {
        levels_.emplace_back(std::move(x), std::move(y), params);
        while (true) {
            const auto& fine = levels_.back();
            const std::size_t cx = fine.nx() - 1;
            const std::size_t cy = fine.ny() - 1;
            if (cx % 2 != 0 || cy % 2 != 0 || cx / 2 < 4 || cy / 2 < 4) break;
            if ((cx - 1) * (cy - 1) <= 400) break;
            levels_.emplace_back(every_other(fine.x), every_other(fine.y), params);
        }
        const auto& coarsest = levels_.back();
        direct_ = BandedSolver(coarsest.nx(), coarsest.ny(), coarsest.ax, coarsest.ay);
    }

    MultigridLevel& finest() { return levels_.front(); }
    std::size_t level_count() const { return levels_.size(); }

    void cycle(std::size_t l = 0) {
        auto& lev = levels_[l];
        if (l + 1 == levels_.size()) {
            direct_.solve(lev.nx(), lev.f, lev.u);
            return;
        }
        for (int s = 0; s < 2; ++s) lev.smooth(cp_, dp_);
        lev.compute_residual();
        auto& coarse = levels_[l + 1];
        restrict_residual(lev, coarse);
        std::fill(coarse.u.begin(), coarse.u.end(), 0.0);
        cycle(l + 1);
        prolong_add(coarse, lev);
        for (int s = 0; s < 2; ++s) lev.smooth(cp_, dp_);
    }

private:
    // r_c = diag(w_c)^-1 P^T diag(w_f) r_f, separably.
    static void restrict_residual(const MultigridLevel& fine, MultigridLevel& coarse) {
        const std::size_t nf = fine.nx();
        const std::size_t nc = coarse.nx();
        std::vector<double> tmp(fine.ny() * nc, 0.0);
        for (std::size_t j = 1; j + 1 < fine.ny(); ++j)
            for (std::size_t ic = 1; ic + 1 < nc; ++ic) {
                const std::size_t i = 2 * ic;
                const double pl = 1.0 - (coarse.x[ic] - fine.x[i - 1]) / (coarse.x[ic] - coarse.x[ic - 1]);
                const double pr = 1.0 - (fine.x[i + 1] - coarse.x[ic]) / (coarse.x[ic + 1] - coarse.x[ic]);
                const std::size_t row = j * nf;
                tmp[j * nc + ic] = (fine.wx[i] * fine.r[row + i] + pl * fine.wx[i - 1] * fine.r[row + i - 1] +
                                    pr * fine.wx[i + 1] * fine.r[row + i + 1]) /
                                   coarse.wx[ic];
            }
        std::fill(coarse.f.begin(), coarse.f.end(), 0.0);
        for (std::size_t jc = 1; jc + 1 < coarse.ny(); ++jc) {
            const std::size_t j = 2 * jc;
            const double pl = 1.0 - (coarse.y[jc] - fine.y[j - 1]) / (coarse.y[jc] - coarse.y[jc - 1]);
            const double pr = 1.0 - (fine.y[j + 1] - coarse.y[jc]) / (coarse.y[jc + 1] - coarse.y[jc]);
            for (std::size_t ic = 1; ic + 1 < nc; ++ic)
                coarse.f[jc * nc + ic] = (fine.wy[j] * tmp[j * nc + ic] + pl * fine.wy[j - 1] * tmp[(j - 1) * nc + ic] +
                                          pr * fine.wy[j + 1] * tmp[(j + 1) * nc + ic]) /
                                         coarse.wy[jc];
        }
    }

    static void prolong_add(const MultigridLevel& coarse, MultigridLevel& fine) {
        const std::size_t nf = fine.nx();
        const std::size_t nc = coarse.nx();
        // interpolate along x2 onto fine rows, coarse columns
        std::vector<double> tmp(fine.ny() * nc, 0.0);
        for (std::size_t j = 0; j < fine.ny(); ++j) {
            const std::size_t jc = j / 2;
            if (j % 2 == 0) {
                for (std::size_t ic = 0; ic < nc; ++ic) tmp[j * nc + ic] = coarse.u[jc * nc + ic];
            } else {
                const double t = (fine.y[j] - coarse.y[jc]) / (coarse.y[jc + 1] - coarse.y[jc]);
                for (std::size_t ic = 0; ic < nc; ++ic)
                    tmp[j * nc + ic] = (1 - t) * coarse.u[jc * nc + ic] + t * coarse.u[(jc + 1) * nc + ic];
            }
        }
        for (std::size_t j = 1; j + 1 < fine.ny(); ++j)
            for (std::size_t i = 1; i + 1 < nf; ++i) {
                const std::size_t ic = i / 2;
                double e;
                if (i % 2 == 0) {
                    e = tmp[j * nc + ic];
                } else {
                    const double t = (fine.x[i] - coarse.x[ic]) / (coarse.x[ic + 1] - coarse.x[ic]);
                    e = (1 - t) * tmp[j * nc + ic] + t * tmp[j * nc + ic + 1];
                }
                fine.u[j * nf + i] += e;
            }
    }

    std::vector<MultigridLevel> levels_;
    BandedSolver direct_;
    std::vector<double> cp_;
    std::vector<double> dp_;
};

} // namespace detail

/// Solves A u = 0 with u = g on x2 = 0 and u = 0 on the far boundary.
inline ScalarField2D solve_bvp_2d(const ChannelParams& params, const BoundaryData& g, const GridConfig& grid) {
    grid.validate(params, g);
    auto layout = detail::build_layout(params, grid);
    const std::size_t nx = layout.x.size();

    std::vector<double> bottom(nx, 0.0);
    for (std::size_t i = 1; i + 1 < nx; ++i) bottom[i] = g.value(layout.x[i]);

    detail::Multigrid mg(layout.x, layout.y, params);
    auto& lev = mg.finest();
    for (std::size_t i = 0; i < nx; ++i) lev.u[i] = bottom[i];

    // Norm of the right-hand side after eliminating the Dirichlet nodes.
    double b_norm = 0.0;
    for (std::size_t i = 1; i + 1 < nx; ++i) b_norm += std::pow(lev.ay.west[1] * bottom[i], 2);
    b_norm = std::sqrt(b_norm);

    int iterations = 0;
    double rel = 0.0;
    if (b_norm > 0.0) {
        rel = lev.compute_residual() / b_norm;
        while (rel > grid.solver_tolerance) {
            if (iterations >= grid.max_iterations) {
                std::ostringstream msg;
                msg << "solve_bvp_2d: relative residual " << rel << " after " << iterations << " cycles";
                throw ConvergenceError(msg.str(), rel, grid.solver_tolerance);
            }
            mg.cycle();
            ++iterations;
            rel = lev.compute_residual() / b_norm;
        }
    }
    ScalarField2D field(std::move(layout.x), std::move(layout.y), std::move(lev.u), layout.core_x_begin,
                        layout.core_x_end, layout.core_y_end);
    field.iterations = iterations;
    field.relative_residual = rel;
    return field;
}

/// u(x) = int f(xi | source) g(xi) dxi along the receiver line.
inline double representation_value(const ChannelParams& params, const BoundaryData& g, const SourceOffset& source,
                                   const QuadratureConfig& quad = {}) {
    detail::require_dimension(params, 2, "representation_value");
    auto kernel = [&](double xi) { return fap_density_2d(params, source, BoundaryOffset::planar(xi)); };
    return g.integrate_against(kernel, params.distance(), quad).value;
}

/// Evaluates u at each probe by grid solve and by representation. Relative
/// error is taken against the representation value.
inline ValidationReport compare_bvp_vs_representation(const ChannelParams& params, const BoundaryData& g,
                                                      const GridConfig& grid, const QuadratureConfig& quad,
                                                      const std::vector<SourceOffset>& probes, double tolerance = 0.01) {
    if (probes.empty()) throw ConfigError("compare_bvp_vs_representation: no probes");
    for (const auto& p : probes)
        if (p.size() != 1 || std::abs(p[0]) > grid.half_width / 4 || params.distance() > grid.height / 4)
            throw PreconditionError("compare_bvp_vs_representation: probes must satisfy |x1| <= L/4 and d <= H/4");
    const auto field = solve_bvp_2d(params, g, grid);
    ValidationReport report("bvp_vs_representation");
    double max_rel = 0.0;
    double max_abs = 0.0;
    double sum_rel = 0.0;
    nlohmann::json details = nlohmann::json::array();
    for (std::size_t k = 0; k < probes.size(); ++k) {
        const double u_grid = field.interpolate(probes[k][0], params.distance());
        const double u_repr = representation_value(params, g, probes[k], quad);
        const double abs_err = std::abs(u_grid - u_repr);
        const double rel = abs_err / std::abs(u_repr);
        max_rel = std::max(max_rel, rel);
        max_abs = std::max(max_abs, abs_err);
        sum_rel += rel;
        details.push_back({{"x1", probes[k][0]}, {"u_grid", u_grid}, {"u_repr", u_repr}, {"abs_err", abs_err}, {"rel_err", rel}});
    }
    report.set("max_rel_err", max_rel);
    report.set("mean_rel_err", sum_rel / static_cast<double>(probes.size()));
    report.set("max_abs_err", max_abs);
    report.set("solver_cycles", field.iterations);
    report.set("relative_residual", field.relative_residual);
    report.require_at_most("max_rel_err", tolerance);
    report.params = params;
    report.config = {{"grid", grid}, {"boundary_data", g.to_json()}, {"probes", details}};
    report.evaluate();
    return report;
}

} // namespace fap
