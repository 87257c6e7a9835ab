#pragma once

#include "tsf/csv.hpp"
#include "tsf/ode.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace tsf {

struct ManifestEntry {
    std::string name;
    std::string file;
    Index dim = 0;
    double dt = 0.0;
    Index steps = 0;
    Index transient_steps = 0;
    std::uint64_t seed = 0;
    std::map<std::string, double> params;
    std::vector<std::string> state_names;
    std::set<std::string> toolkit_defaults;
};

struct Manifest {
    std::vector<ManifestEntry> datasets;
};

inline nlohmann::json to_json(const Manifest& manifest) {
    nlohmann::json out;
    out["datasets"] = nlohmann::json::array();
    for (const auto& e : manifest.datasets) {
        nlohmann::json params = nlohmann::json::object();
        for (const auto& [k, v] : e.params) params[k] = v;
        out["datasets"].push_back({{"name", e.name},
                                   {"file", e.file},
                                   {"dim", e.dim},
                                   {"dt", e.dt},
                                   {"steps", e.steps},
                                   {"transient_steps", e.transient_steps},
                                   {"seed", e.seed},
                                   {"params", params},
                                   {"state_names", e.state_names},
                                   {"toolkit_defaults", e.toolkit_defaults}});
    }
    return out;
}

inline Manifest manifest_from_json(const nlohmann::json& j) {
    Manifest m;
    for (const auto& d : j.at("datasets")) {
        ManifestEntry e;
        e.name = d.at("name").get<std::string>();
        e.file = d.at("file").get<std::string>();
        e.dim = d.at("dim").get<Index>();
        e.dt = d.at("dt").get<double>();
        e.steps = d.at("steps").get<Index>();
        e.transient_steps = d.at("transient_steps").get<Index>();
        e.seed = d.at("seed").get<std::uint64_t>();
        for (const auto& [k, v] : d.at("params").items()) e.params[k] = v.get<double>();
        if (d.contains("state_names")) e.state_names = d.at("state_names").get<std::vector<std::string>>();
        if (d.contains("toolkit_defaults")) e.toolkit_defaults = d.at("toolkit_defaults").get<std::set<std::string>>();
        m.datasets.push_back(std::move(e));
    }
    return m;
}

inline Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest '" + path.string() + "'");
    return manifest_from_json(nlohmann::json::parse(in));
}

/// Integrates each system in `systems` with `cfg` and writes `<Name>.csv` per
/// system plus `manifest.json` into `out_dir`.
inline Manifest generate_benchmark(const std::filesystem::path& out_dir, const IntegratorConfig& cfg,
                                   const std::vector<OdeSystem>& systems) {
    std::filesystem::create_directories(out_dir);
    Manifest manifest;
    for (const auto& system : systems) {
        const TimeSeries series = integrate(system, cfg);
        const std::string file = system.name + ".csv";
        write_csv(series, out_dir / file);
        manifest.datasets.push_back(ManifestEntry{system.name, file, system.dim, cfg.dt, cfg.steps,
                                                  cfg.transient_steps, cfg.seed, system.params, system.state_names,
                                                  system.toolkit_defaults});
    }
    std::ofstream out(out_dir / "manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest in '" + out_dir.string() + "'");
    out << to_json(manifest).dump(2) << '\n';
    if (!out) throw std::runtime_error("I/O failure writing manifest in '" + out_dir.string() + "'");
    return manifest;
}

inline Manifest generate_benchmark(const std::filesystem::path& out_dir, const IntegratorConfig& cfg) {
    std::vector<OdeSystem> systems;
    for (auto kind : kBenchmarkSystems) systems.push_back(make_system(kind));
    return generate_benchmark(out_dir, cfg, systems);
}

}  // namespace tsf
