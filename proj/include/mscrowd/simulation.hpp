#pragma once

// Time loop: steps a world until t_final, a step cap, or until the probe
// regions are (numerically) empty, and records one diagnostics row per step.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mscrowd/diagnostics.hpp"
#include "mscrowd/scenario.hpp"

namespace mscrowd {

struct RunOptions {
    unsigned workers = 1;
    long max_steps = std::numeric_limits<long>::max();
    long snapshot_every = 0;  // 0: no snapshots
    std::function<void(const World&)> on_snapshot;
    bool audit = true;  // structure and mass-balance checks after each step
};

struct OutflowTimes {
    double mu = std::numeric_limits<double>::quiet_NaN();
    double micro = std::numeric_limits<double>::quiet_NaN();
    double macro = std::numeric_limits<double>::quiet_NaN();
};

struct RunResult {
    World world;
    DiagnosticsRecord record;
    std::vector<OutflowTimes> outflow_times;  // per population, over its probe
    std::vector<double> dts;
    bool emptied = false;
};

class AuditFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

constexpr double nan_v = std::numeric_limits<double>::quiet_NaN();

// Leaders take no part in the crowd observables.
inline CrowdMeasure followers_of(const CrowdMeasure& cm) {
    CrowdMeasure out{{}, cm.macro, cm.theta, cm.lambda};
    for (const Agent& a : cm.micro.agents)
        if (a.role == Role::follower) out.micro.agents.push_back(a);
    return out;
}

inline const char* const population_fields[] = {
    "n_agents", "macro_mass", "mu_mass", "probe_mu", "probe_m", "probe_M", "com_x",       "com_y",
    "m_I1",     "m_I2",       "m_IG",    "M_I1",     "M_I2",    "M_IG",    "mu_I1",       "mu_I2",
    "mu_IG",    "max_density", "flux",   "flux_M",   "outflow_M"};

inline std::vector<std::string> diagnostic_columns(std::size_t populations, std::size_t doors) {
    std::vector<std::string> c{"step", "time", "dt"};
    for (std::size_t p = 0; p < populations; ++p) {
        const std::string q = "p" + std::to_string(p) + "_";
        for (const char* n : population_fields) c.push_back(q + n);
        for (std::size_t d = 0; d < doors; ++d) {
            c.push_back(q + "door" + std::to_string(d) + "_out");
            c.push_back(q + "door" + std::to_string(d) + "_in");
        }
    }
    return c;
}

struct Tally {
    double probe_mu = 0.0;  // previous row's probe masses, for the flux
    double probe_M = 0.0;
    double outflow_M = 0.0;
    std::vector<long> out, in;
};

inline void append_moments(std::vector<double>& row, const CrowdMeasure& cm, const Rect& region, Scale s) {
    try {
        const Moments m = moments(cm, region, s);
        row.insert(row.end(), {m.i1, m.i2, m.ig});
    } catch (const ZeroMassError&) {
        row.insert(row.end(), {nan_v, nan_v, nan_v});
    }
}

inline std::vector<double> diagnostic_row(const World& w, const std::vector<Rect>& probes, double dt,
                                          std::vector<Tally>& tally) {
    std::vector<double> row{static_cast<double>(w.steps), w.time, dt};
    const Rect box = w.geometry.domain();
    for (std::size_t p = 0; p < w.populations.size(); ++p) {
        const CrowdMeasure f = followers_of(w.populations[p].mass);
        const Rect& probe = probes[p];
        const double probe_mu = measure_of(f, probe);
        const double probe_M = macro_mass_in(f.macro, probe);
        row.push_back(static_cast<double>(f.micro.size()));
        row.push_back(f.macro.total_mass());
        row.push_back(measure_of(f, box));
        row.push_back(probe_mu);
        row.push_back(static_cast<double>(agents_in(f.micro, probe)));
        row.push_back(probe_M);
        try {
            const Vec2 c = center_of_mass(f, box, Scale::multi);
            row.insert(row.end(), {c.x, c.y});
        } catch (const ZeroMassError&) {
            row.insert(row.end(), {nan_v, nan_v});
        }
        append_moments(row, f, box, Scale::micro);
        append_moments(row, f, box, Scale::macro);
        append_moments(row, f, box, Scale::multi);
        row.push_back(f.macro.max_density());
        row.push_back(dt > 0.0 ? (tally[p].probe_mu - probe_mu) / dt : 0.0);
        row.push_back(dt > 0.0 ? (tally[p].probe_M - probe_M) / dt : 0.0);
        row.push_back(tally[p].outflow_M);
        for (std::size_t d = 0; d < tally[p].out.size(); ++d) {
            row.push_back(static_cast<double>(tally[p].out[d]));
            row.push_back(static_cast<double>(tally[p].in[d]));
        }
        tally[p].probe_mu = probe_mu;
        tally[p].probe_M = probe_M;
    }
    return row;
}

inline double total_probe_mass(const World& w, const std::vector<Rect>& probes) {
    double s = 0.0;
    for (std::size_t p = 0; p < w.populations.size(); ++p) s += measure_of(followers_of(w.populations[p].mass), probes[p]);
    return s;
}

inline double time_integral(const std::vector<double>& t, const std::vector<double>& m) {
    if (m.empty() || !(m.front() > 0.0)) return nan_v;
    std::vector<std::pair<double, double>> series;
    series.reserve(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) series.emplace_back(t[k], m[k]);
    return average_outflow_time(series);
}

}  // namespace detail

/// Steps `world` and records diagnostics. `probes` holds one region per
/// population; the run stops early once the summed probe mass drops to
/// `stop_fraction` of its initial value.
inline RunResult run(World world, const std::vector<Rect>& probes, double stop_fraction, const RunOptions& opt = {}) {
    if (probes.size() != world.populations.size()) throw std::invalid_argument("run: one probe region per population required");
    const std::size_t np = world.populations.size();
    const std::size_t nd = world.geometry.doors().size();
    RunResult res;
    res.record.columns = detail::diagnostic_columns(np, nd);
    std::vector<detail::Tally> tally(np);
    for (auto& t : tally) {
        t.out.assign(nd, 0);
        t.in.assign(nd, 0);
    }

    const double initial = detail::total_probe_mass(world, probes);
    res.record.rows.push_back(detail::diagnostic_row(world, probes, 0.0, tally));
    auto snapshot = [&] {
        if (opt.on_snapshot && opt.snapshot_every > 0 && world.steps % opt.snapshot_every == 0) opt.on_snapshot(world);
    };
    snapshot();

    res.emptied = !(initial > 0.0);
    while (!res.emptied && world.time < world.controls.t_final && world.steps < opt.max_steps) {
        std::vector<double> before(np);
        for (std::size_t p = 0; p < np; ++p) before[p] = world.populations[p].mass.macro.total_mass();

        const StepReport rep = step(world, opt.workers);
        res.dts.push_back(rep.dt);

        for (std::size_t p = 0; p < np; ++p) {
            const PopulationStep& ps = rep.populations[p];
            tally[p].outflow_M += ps.macro.outflow;
            for (const AgentMove& m : ps.micro.moves) {
                if (m.role != Role::follower) continue;
                for (std::size_t d = 0; d < nd; ++d) {
                    int dir = 0;
                    if (crosses(world.geometry.doors()[d], m.from, m.to, dir)) ++(dir > 0 ? tally[p].out[d] : tally[p].in[d]);
                }
            }
            if (opt.audit) {
                const double after = world.populations[p].mass.macro.total_mass();
                const double residual = std::abs(after - (before[p] - ps.macro.outflow));
                if (residual > 1e-12 * std::max(before[p], 1.0) * std::sqrt(static_cast<double>(world.geometry.grid().cell_count())))
                    throw AuditFailure("mass balance residual " + std::to_string(residual) + " at step " + std::to_string(world.steps));
            }
        }
        if (opt.audit)
            if (auto issues = audit_structure(world); !issues.empty()) throw AuditFailure(issues.front());

        res.record.rows.push_back(detail::diagnostic_row(world, probes, rep.dt, tally));
        snapshot();
        if (detail::total_probe_mass(world, probes) <= stop_fraction * initial) res.emptied = true;
    }
    if (opt.on_snapshot && opt.snapshot_every > 0 && world.steps % opt.snapshot_every != 0) opt.on_snapshot(world);

    const std::vector<double> t = res.record.series("time");
    for (std::size_t p = 0; p < np; ++p) {
        const std::string q = "p" + std::to_string(p) + "_";
        OutflowTimes o;
        o.mu = detail::time_integral(t, res.record.series(q + "probe_mu"));
        o.micro = detail::time_integral(t, res.record.series(q + "probe_m"));
        o.macro = detail::time_integral(t, res.record.series(q + "probe_M"));
        res.outflow_times.push_back(o);
    }
    res.world = std::move(world);
    return res;
}

/// Builds the scenario's world and runs it with the scenario's probes,
/// stopping rule and snapshot cadence (unless `opt` sets its own cadence).
inline RunResult run(const Scenario& s, RunOptions opt = {}) {
    if (opt.snapshot_every == 0) opt.snapshot_every = s.snapshot_every;
    std::vector<Rect> probes;
    for (std::size_t p = 0; p < s.populations.size(); ++p) probes.push_back(s.probe_of(p));
    return run(build_world(s), probes, s.stop_fraction, opt);
}

}  // namespace mscrowd
