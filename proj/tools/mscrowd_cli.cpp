// mscrowd command-line driver: single runs, parameter sweeps and convergence
// studies. Exit status 0 ok, 1 runtime failure, 2 invalid input.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mscrowd/convergence.hpp"
#include "mscrowd/scenario_io.hpp"
#include "mscrowd/simulation.hpp"
#include "mscrowd/snapshot_io.hpp"
#include "mscrowd/version.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace mscrowd;

namespace {

// Bad user input; reported with exit status 2.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Source {
    std::string preset;
    std::string scenario_path;
    std::vector<std::string> overrides;
    std::string out = "out";
    long snapshot_every = -1;  // -1: keep the scenario's cadence
    unsigned threads = 1;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read scenario file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Scenario load(const Source& src, const std::vector<std::string>& extra = {}) {
    Scenario base;
    if (!src.preset.empty()) base = preset(src.preset);
    else base = parse_scenario(read_file(src.scenario_path));
    std::vector<std::string> all = src.overrides;
    all.insert(all.end(), extra.begin(), extra.end());
    Scenario s = with_overrides(base, all);
    if (src.snapshot_every >= 0) s.snapshot_every = src.snapshot_every;
    if (auto v = validate(s); !v.empty()) throw InvalidScenario(std::move(v));
    return s;
}

std::string step_tag(long step) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06ld", step);
    return buf;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

json outflow_json(const RunResult& r) {
    json a = json::array();
    for (const OutflowTimes& o : r.outflow_times) a.push_back({{"mu", o.mu}, {"micro", o.micro}, {"macro", o.macro}});
    return a;
}

// Runs one scenario into `dir`: diagnostics.csv, snapshots, scenario.txt and
// manifest.json.
RunResult run_into(const Scenario& s, const fs::path& dir, const Source& src, const std::vector<std::string>& overrides) {
    fs::create_directories(dir);
    RunOptions opt;
    opt.workers = src.threads;
    opt.snapshot_every = s.snapshot_every;
    opt.on_snapshot = [&](const World& w) {
        const std::string tag = step_tag(w.steps);
        for (std::size_t p = 0; p < w.populations.size(); ++p) {
            const std::string suffix = "_t" + tag + "_p" + std::to_string(p) + ".dat";
            std::ostringstream d, a;
            write_density(d, w.populations[p].mass.macro, w.time);
            write_agents(a, w.populations[p].mass.micro);
            write_text(dir / ("density" + suffix), d.str());
            write_text(dir / ("agents" + suffix), a.str());
        }
    };
    RunResult r = run(s, opt);

    std::ostringstream csv;
    write_csv(csv, r.record);
    write_text(dir / "diagnostics.csv", csv.str());
    const std::string text = serialize(s);
    write_text(dir / "scenario.txt", text);

    json m;
    m["tool"] = "mscrowd";
    m["version"] = version;
    m["versions"] = {{"cli11", CLI11_VERSION},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                     {"cxx", __cplusplus}};
    m["source"] = src.preset.empty() ? json{{"scenario", src.scenario_path}} : json{{"preset", src.preset}};
    m["overrides"] = overrides;
    m["scenario"] = text;
    m["threads"] = src.threads;
    m["snapshot_every"] = s.snapshot_every;
    m["dt_count"] = r.dts.size();
    m["total_steps"] = r.world.steps;
    m["final_time"] = r.world.time;
    m["emptied"] = r.emptied;
    m["outflow_times"] = outflow_json(r);
    write_text(dir / "manifest.json", m.dump(2) + "\n");
    return r;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = detail::trim(item);
        if (item.empty()) throw InputError("empty entry in list '" + s + "'");
        out.push_back(item);
    }
    return out;
}

int cmd_run(const Source& src) {
    const Scenario s = load(src);
    const RunResult r = run_into(s, src.out, src, src.overrides);
    std::cout << "steps " << r.world.steps << ", t = " << r.world.time << ", output in " << src.out << "\n";
    return 0;
}

int cmd_sweep(const Source& src, const std::string& key, const std::string& values) {
    const std::vector<std::string> vals = split_list(values);
    if (vals.empty()) throw InputError("sweep needs at least one value");
    // resolve every point first so a bad value fails before any run
    std::vector<Scenario> points;
    for (const auto& v : vals) points.push_back(load(src, {key + "=" + v}));

    fs::create_directories(src.out);
    std::ostringstream csv;
    const std::size_t np = points.front().populations.size();
    csv << "value,steps,final_time,emptied";
    for (std::size_t p = 0; p < np; ++p) csv << ",p" << p << "_T_ave_mu,p" << p << "_T_ave_m,p" << p << "_T_ave_M";
    csv << '\n';
    for (std::size_t k = 0; k < vals.size(); ++k) {
        std::vector<std::string> ov = src.overrides;
        ov.push_back(key + "=" + vals[k]);
        const RunResult r = run_into(points[k], fs::path(src.out) / ("point_" + std::to_string(k)), src, ov);
        csv << vals[k] << ',' << r.world.steps << ',' << format_value(r.world.time) << ',' << (r.emptied ? 1 : 0);
        for (const OutflowTimes& o : r.outflow_times)
            csv << ',' << format_value(o.mu) << ',' << format_value(o.micro) << ',' << format_value(o.macro);
        csv << '\n';
        std::cout << key << " = " << vals[k] << ": T_ave " << format_value(r.outflow_times.front().mu) << "\n";
    }
    write_text(fs::path(src.out) / "sweep_summary.csv", csv.str());
    return 0;
}

int cmd_convergence(const std::string& id, const std::string& hs, const std::string& out) {
    const auto cases = convergence_cases();
    if (std::find(cases.begin(), cases.end(), id) == cases.end()) throw InputError("unknown convergence case '" + id + "'");
    std::vector<double> h;
    for (const auto& s : split_list(hs)) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || !(v > 0.0)) throw InputError("bad grid size '" + s + "'");
        h.push_back(v);
    }
    const fs::path path(out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ostringstream csv;
    csv << "h,l1_cell_error\n";
    for (const ConvergencePoint& p : convergence_study(id, h)) csv << format_value(p.h) << ',' << format_value(p.error) << '\n';
    write_text(path, csv.str());
    return 0;
}

void add_source(CLI::App* app, Source& src) {
    auto* pre = app->add_option("--preset", src.preset, "preset name")->check(CLI::IsMember(preset_names()));
    auto* file = app->add_option("--scenario", src.scenario_path, "scenario file");
    pre->excludes(file);
    app->add_option("--override", src.overrides, "section.key=value, repeatable")->allow_extra_args(false);
    app->add_option("--out", src.out, "output directory");
    app->add_option("--snapshot-every", src.snapshot_every, "snapshot cadence in steps (0: none)")->check(CLI::NonNegativeNumber);
    app->add_option("--threads", src.threads, "worker threads per run")->check(CLI::Range(1u, 256u));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multiscale crowd simulator"};
    app.set_version_flag("--version", std::string(version));
    app.require_subcommand(1);

    Source run_src, sweep_src;
    std::string key, values, conv_case = "rotation", conv_h, conv_out = "convergence.csv";

    auto* run_cmd = app.add_subcommand("run", "run one scenario");
    add_source(run_cmd, run_src);

    auto* sweep_cmd = app.add_subcommand("sweep", "run a scenario for a list of values of one key");
    add_source(sweep_cmd, sweep_src);
    sweep_cmd->add_option("--sweep-key,--key", key, "dotted key, e.g. populations.0.theta")->required();
    sweep_cmd->add_option("--sweep-values,--values", values, "comma-separated values")->required();

    auto* conv_cmd = app.add_subcommand("convergence", "grid refinement study against an exact push-forward");
    conv_cmd->add_option("--case", conv_case, "translation or rotation");
    conv_cmd->add_option("--h-list", conv_h, "comma-separated grid sizes (none: empty CSV)");
    conv_cmd->add_option("--out", conv_out, "output CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*run_cmd || *sweep_cmd) {
            const Source& src = *run_cmd ? run_src : sweep_src;
            if (src.preset.empty() && src.scenario_path.empty()) throw InputError("one of --preset or --scenario is required");
            return *run_cmd ? cmd_run(src) : cmd_sweep(src, key, values);
        }
        return cmd_convergence(conv_case, conv_h, conv_out);
    } catch (const InvalidScenario& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const ScenarioParseError& e) {
        std::cerr << "scenario: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
