// fap: density tables, particle sampling, validation suites and grid solves.
// Exit codes: 0 success, 1 validation failure or numerical error, 2 usage error.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fap/fap.hpp"

namespace {

using nlohmann::json;

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

double parse_number(const std::string& text, const std::string& what) {
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || text.empty()) throw fap::ConfigError(what + ": cannot parse '" + text + "'");
    return value;
}

std::vector<double> parse_list(const std::string& text, char sep, const std::string& what) {
    std::vector<double> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) out.push_back(parse_number(item, what));
    if (!text.empty() && text.back() == sep) throw fap::ConfigError(what + ": trailing separator");
    return out;
}

struct ChannelFlags {
    std::optional<int> dim;
    std::string drift;
    std::optional<double> sigma2;
    std::optional<double> distance;
    std::string config_path;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--dim", dim, "Dimension (2 or 3)");
        cmd.add_option("--drift", drift, "Drift vector, comma separated, length = --dim; last component is normal");
        cmd.add_option("--sigma2", sigma2, "Diffusion sigma^2");
        cmd.add_option("--distance", distance, "Transmitter distance d to the receiver plane");
        cmd.add_option("--config", config_path, "JSON file with dimension, drift, sigma2, distance (and sim/grid objects)");
    }

    json config() const {
        if (config_path.empty()) return json::object();
        std::ifstream in(config_path);
        if (!in) throw fap::ConfigError("cannot open config file '" + config_path + "'");
        try {
            return json::parse(in);
        } catch (const json::exception& e) {
            throw fap::ConfigError(std::string("invalid config JSON: ") + e.what());
        }
    }

    /// Flags override config values.
    fap::ChannelParams resolve(const json& cfg) const {
        json merged = json::object();
        for (const char* key : {"dimension", "drift", "sigma2", "distance"})
            if (cfg.contains(key)) merged[key] = cfg[key];
        if (dim) merged["dimension"] = *dim;
        if (!drift.empty()) merged["drift"] = parse_list(drift, ',', "--drift");
        if (sigma2) merged["sigma2"] = *sigma2;
        if (distance) merged["distance"] = *distance;
        for (const char* key : {"dimension", "drift", "sigma2", "distance"})
            if (!merged.contains(key))
                throw fap::ConfigError(std::string("missing channel parameter '") + key + "' (flag or --config)");
        return fap::channel_params_from_json(merged);
    }
};

struct Output {
    std::string path;
    std::string format = "csv";

    void add_to(CLI::App& cmd, bool with_format = true) {
        cmd.add_option("-o,--output", path, "Output file (default: standard output)");
        if (with_format) cmd.add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    }

    template <class Writer>
    void write(Writer&& writer) const {
        if (path.empty()) {
            writer(std::cout);
            std::cout.flush();
            return;
        }
        std::ofstream out(path, std::ios::binary);
        if (!out) throw fap::ConfigError("cannot open output file '" + path + "'");
        writer(out);
        if (!out) throw std::runtime_error("failed writing '" + path + "'");
    }
};

template <class T>
void read_if(const json& obj, const char* key, T& target) {
    if (obj.contains(key) && !obj[key].is_null()) target = obj[key].get<T>();
}

// ---------------------------------------------------------------- density

struct DensityCommand {
    ChannelFlags channel;
    Output output;
    std::string xi_range;
    std::vector<std::string> points;
    std::string source;
    double eta = 0.0;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("density", "Tabulate the first-arrival-position density");
        channel.add_to(*cmd);
        output.add_to(*cmd);
        cmd->add_option("--xi-range", xi_range, "a:b:step, inclusive, along the first tangential axis");
        cmd->add_option("--eta", eta, "Second tangential coordinate for --xi-range rows (3D)");
        cmd->add_option("--point", points, "Arrival offset xi[,eta]; repeatable");
        cmd->add_option("--source", source, "Source tangential offset (default origin)");
    }

    std::vector<std::vector<double>> offsets(int dim) const {
        std::vector<std::vector<double>> out;
        if (!xi_range.empty()) {
            const auto parts = parse_list(xi_range, ':', "--xi-range");
            if (parts.size() != 3 || !(parts[2] > 0.0) || !(parts[1] >= parts[0]))
                throw fap::ConfigError("--xi-range must be a:b:step with b >= a and step > 0");
            const auto n = static_cast<long long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9)) + 1;
            for (long long k = 0; k < n; ++k) {
                std::vector<double> p{parts[0] + static_cast<double>(k) * parts[2]};
                if (dim == 3) p.push_back(eta);
                out.push_back(p);
            }
        }
        for (const auto& text : points) {
            auto p = parse_list(text, ',', "--point");
            if (p.size() != static_cast<std::size_t>(dim - 1))
                throw fap::ConfigError("--point needs " + std::to_string(dim - 1) + " component(s)");
            out.push_back(p);
        }
        if (out.empty()) throw fap::ConfigError("density: give --xi-range or --point");
        return out;
    }

    int run() const {
        const auto params = channel.resolve(channel.config());
        const auto rows = offsets(params.dimension());
        std::vector<double> src(static_cast<std::size_t>(params.dimension() - 1), 0.0);
        if (!source.empty()) {
            src = parse_list(source, ',', "--source");
            if (src.size() != static_cast<std::size_t>(params.dimension() - 1))
                throw fap::ConfigError("--source needs dimension - 1 components");
        }
        const fap::SourceOffset s{fap::TangentialVector(std::span<const double>(src))};
        std::vector<double> values;
        for (const auto& p : rows)
            values.push_back(fap::fap_density(params, s, fap::BoundaryOffset(fap::TangentialVector(std::span<const double>(p)))));

        output.write([&](std::ostream& out) {
            if (output.format == "json") {
                json doc{{"params", params}, {"source", src}, {"rows", json::array()}};
                for (std::size_t k = 0; k < rows.size(); ++k)
                    doc["rows"].push_back({{"offset", rows[k]}, {"density", values[k]}});
                out << doc.dump(2) << '\n';
                return;
            }
            out << (params.dimension() == 3 ? "xi,eta,density\n" : "xi,density\n") << std::setprecision(17);
            for (std::size_t k = 0; k < rows.size(); ++k) {
                for (double c : rows[k]) out << c << ',';
                out << values[k] << '\n';
            }
        });
        return 0;
    }
};

// ----------------------------------------------------------------- sample

struct SampleCommand {
    ChannelFlags channel;
    Output output;
    std::optional<long long> particles;
    std::optional<double> dt;
    std::optional<double> t_max;
    std::optional<std::uint64_t> seed;
    std::optional<int> streams;
    std::optional<double> far_field_ratio;
    bool no_bridge = false;
    int threads = 0;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("sample", "Simulate particles to the receiver and write hit records");
        channel.add_to(*cmd);
        output.add_to(*cmd);
        cmd->add_option("-n,--particles", particles, "Particle count");
        cmd->add_option("--dt", dt, "Base time step");
        cmd->add_option("--t-max", t_max, "Time horizon (default 1e6 d^2/sigma2, or 200 d^2/sigma2 without far-field steps)");
        cmd->add_option("--seed", seed, "64-bit seed");
        cmd->add_option("--streams", streams, "Random streams; particle j uses stream j mod streams");
        cmd->add_option("--far-field-ratio", far_field_ratio, "Far-field step control k; 0 disables enlarged steps");
        cmd->add_flag("--no-bridge", no_bridge, "Disable the Brownian-bridge crossing correction");
        cmd->add_option("--threads", threads, "Worker threads (0 = hardware); results do not depend on it");
    }

    int run() const {
        const auto cfg = channel.config();
        const auto params = channel.resolve(cfg);
        fap::SimConfig sim;
        if (cfg.contains("sim")) {
            const auto& s = cfg["sim"];
            read_if(s, "particle_count", sim.particle_count);
            read_if(s, "dt", sim.dt);
            if (s.contains("t_max") && !s["t_max"].is_null()) sim.t_max = s["t_max"].get<double>();
            read_if(s, "seed", sim.seed);
            read_if(s, "streams", sim.streams);
            read_if(s, "bridge_correction", sim.bridge_correction);
            read_if(s, "far_field_ratio", sim.far_field_ratio);
        }
        if (particles) sim.particle_count = *particles;
        if (dt) sim.dt = *dt;
        if (t_max) sim.t_max = *t_max;
        if (seed) sim.seed = *seed;
        if (streams) sim.streams = *streams;
        if (far_field_ratio) sim.far_field_ratio = *far_field_ratio;
        if (no_bridge) sim.bridge_correction = false;
        sim.threads = threads;
        sim.validate(params);

        const auto records = fap::simulate_hits(params, sim);
        const auto summary = fap::summarize_hits(records);
        output.write([&](std::ostream& out) {
            if (output.format == "json") {
                json doc{{"params", params}, {"sim", sim}, {"records", json::array()}};
                doc["sim"]["t_max"] = sim.resolved_t_max(params);
                for (const auto& r : records)
                    doc["records"].push_back({{"tangential_position", std::vector<double>(r.tangential_position.begin(),
                                                                                          r.tangential_position.end())},
                                              {"hit_time", r.hit_time},
                                              {"status", r.absorbed() ? "absorbed" : "censored"}});
                out << doc.dump() << '\n';
                return;
            }
            fap::write_hits_csv(out, records, params.dimension());
        });
        std::cerr << std::setprecision(10) << "particles=" << summary.total << " absorbed_fraction=" << summary.absorbed_fraction
                  << " mean_hit_time=" << summary.mean_hit_time << '\n';
        return 0;
    }
};

// --------------------------------------------------------------- validate

struct ValidateCommand {
    Output output;
    std::string suite = "all";
    bool fast = false;
    int threads = 0;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("validate", "Run validation suites and write their JSON reports");
        output.add_to(*cmd, false);
        cmd->add_option("--suite", suite, "bessel | oracle2d | oracle3d | normalization | montecarlo | bvp | all")
            ->check(CLI::IsMember(fap::suite_names()));
        cmd->add_flag("--fast", fast, "10x fewer particles and 10x coarser grids, widened tolerances");
        cmd->add_option("--threads", threads, "Worker threads for the simulator");
    }

    int run() const {
        fap::SuiteOptions options;
        options.fast = fast;
        options.threads = threads;
        const auto reports = fap::run_suite(suite, options);
        bool pass = true;
        json doc = json::array();
        for (const auto& r : reports) {
            pass = pass && r.pass;
            doc.push_back(r);
            std::cerr << (r.pass ? "PASS " : "FAIL ") << r.name << '\n';
        }
        output.write([&](std::ostream& out) { out << doc.dump(2) << '\n'; });
        return pass ? 0 : kExitFailure;
    }
};

// -------------------------------------------------------------------- bvp

struct BvpCommand {
    ChannelFlags channel;
    Output output;
    std::string data = "indicator:0:1";
    std::vector<double> probes;
    bool full_grid = false;
    std::optional<double> half_width;
    std::optional<double> height;
    std::optional<double> spacing;
    std::optional<double> tolerance;
    std::optional<int> max_iterations;
    std::optional<double> far_field_extent;
    std::optional<double> stretch_rate;

    void add(CLI::App& app) {
        auto* cmd = app.add_subcommand("bvp", "Solve the 2D boundary value problem; CSV field or probe report");
        channel.add_to(*cmd);
        output.add_to(*cmd, false);
        cmd->add_option("--data", data, "indicator:c:a | gaussian:c:w | tabulated:x0,x1,...:g0,g1,...");
        cmd->add_option("--probe", probes, "Tangential probe offset at height d; repeatable. Writes a JSON report");
        cmd->add_flag("--full-grid", full_grid, "Include the stretched buffer in the CSV");
        cmd->add_option("--half-width", half_width, "Core half width L");
        cmd->add_option("--height", height, "Core height H");
        cmd->add_option("--spacing", spacing, "Core spacing h");
        cmd->add_option("--tol", tolerance, "Relative residual tolerance");
        cmd->add_option("--max-iterations", max_iterations, "Multigrid cycle limit");
        cmd->add_option("--far-field-extent", far_field_extent, "Far boundary at this multiple of max(L, H); 0 = core edges");
        cmd->add_option("--stretch-rate", stretch_rate, "Buffer cell ratio is 1 + rate h / d");
    }

    fap::BoundaryData boundary_data() const {
        std::vector<std::string> parts;
        std::string item;
        std::istringstream in(data);
        while (std::getline(in, item, ':')) parts.push_back(item);
        if (parts.size() == 3 && parts[0] == "indicator")
            return fap::BoundaryData::indicator(parse_number(parts[1], "--data"), parse_number(parts[2], "--data"));
        if (parts.size() == 3 && parts[0] == "gaussian")
            return fap::BoundaryData::gaussian_bump(parse_number(parts[1], "--data"), parse_number(parts[2], "--data"));
        if (parts.size() == 3 && parts[0] == "tabulated")
            return fap::BoundaryData::tabulated(parse_list(parts[1], ',', "--data"), parse_list(parts[2], ',', "--data"));
        throw fap::ConfigError("--data must be indicator:c:a, gaussian:c:w or tabulated:xs:gs");
    }

    int run() const {
        const auto cfg = channel.config();
        const auto params = channel.resolve(cfg);
        fap::GridConfig grid;
        if (cfg.contains("grid")) {
            const auto& g = cfg["grid"];
            read_if(g, "half_width", grid.half_width);
            read_if(g, "height", grid.height);
            read_if(g, "spacing", grid.spacing);
            read_if(g, "solver_tolerance", grid.solver_tolerance);
            read_if(g, "max_iterations", grid.max_iterations);
            read_if(g, "far_field_extent", grid.far_field_extent);
            read_if(g, "stretch_rate", grid.stretch_rate);
        }
        if (half_width) grid.half_width = *half_width;
        if (height) grid.height = *height;
        if (spacing) grid.spacing = *spacing;
        if (tolerance) grid.solver_tolerance = *tolerance;
        if (max_iterations) grid.max_iterations = *max_iterations;
        if (far_field_extent) grid.far_field_extent = *far_field_extent;
        if (stretch_rate) grid.stretch_rate = *stretch_rate;
        const auto g = boundary_data();
        grid.validate(params, g);

        if (!probes.empty()) {
            std::vector<fap::SourceOffset> offsets;
            for (double p : probes) offsets.push_back(fap::SourceOffset::planar(p));
            const auto report = fap::compare_bvp_vs_representation(params, g, grid, {}, offsets);
            output.write([&](std::ostream& out) { out << json(report).dump(2) << '\n'; });
            std::cerr << (report.pass ? "PASS " : "FAIL ") << report.name << '\n';
            return report.pass ? 0 : kExitFailure;
        }
        const auto field = fap::solve_bvp_2d(params, g, grid);
        output.write([&](std::ostream& out) { field.write_csv(out, full_grid); });
        std::cerr << "cycles=" << field.iterations << " relative_residual=" << field.relative_residual << '\n';
        return 0;
    }
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"First-arrival-position channel toolkit"};
    app.require_subcommand(1);
    DensityCommand density;
    SampleCommand sample;
    ValidateCommand validate;
    BvpCommand bvp;
    density.add(app);
    sample.add(app);
    validate.add(app);
    bvp.add(app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (app.got_subcommand("density")) return density.run();
        if (app.got_subcommand("sample")) return sample.run();
        if (app.got_subcommand("validate")) return validate.run();
        if (app.got_subcommand("bvp")) return bvp.run();
    } catch (const fap::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fap::PreconditionError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitUsage;
}
