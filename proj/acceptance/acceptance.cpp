// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
//
//   acceptance                       exit 1 if any criterion fails
//   acceptance --known-failures 5,7  exit 0 iff exactly the listed ones fail

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "mscrowd/convergence.hpp"
#include "mscrowd/simulation.hpp"

using namespace mscrowd;

namespace {

constexpr double conservation_tol = 1e-9;
constexpr double pushforward_tol = 0.01;
constexpr long pushforward_samples = 1'000'000;
constexpr double convergence_min_order = 0.8;
constexpr double ig_spread_tol = 0.15;
constexpr double front_shift_tol = 0.05;
constexpr double test3_remaining_tol = 0.01;
constexpr double test3_flux_tol = 1e-3;
constexpr double test4_transient_end = 2.0;
constexpr double interpolation_tol = 1e-12;

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double total_macro(const World& w) {
    double m = 0.0;
    for (const auto& p : w.populations) m += p.mass.macro.total_mass();
    return m;
}

double min_density(const World& w) {
    double m = 0.0;
    for (const auto& p : w.populations)
        for (double r : p.mass.macro.rho) m = std::min(m, r);
    return m;
}

std::string csv_of(const RunResult& r) {
    std::ostringstream os;
    write_csv(os, r.record);
    return os.str();
}

// 1. sealed presets, 500 steps
Verdict conservation() {
    double worst = 0.0;
    bool counts = true;
    for (const std::string& name : preset_names()) {
        Scenario s = preset(name);
        s.seal_doors = true;
        s.controls.t_final = 1e9;
        World w = build_world(s);
        const double m0 = total_macro(w);
        std::vector<std::size_t> n0;
        for (const auto& p : w.populations) n0.push_back(p.mass.micro.size());
        for (int k = 0; k < 500; ++k) step(w);
        worst = std::max(worst, std::abs(total_macro(w) - m0) / m0);
        for (std::size_t p = 0; p < n0.size(); ++p) counts = counts && w.populations[p].mass.micro.size() == n0[p];
    }
    return {worst <= conservation_tol && counts,
            "max relative mass drift " + fmt("%.3g", worst) + (counts ? ", agent counts constant" : ", agent count changed")};
}

// Small random room: one obstacle, an exit, one or two populations.
Scenario random_scenario(std::mt19937& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    constexpr double half_pi = 1.5707963267948966;
    Scenario s;
    s.name = "random";
    s.size = {3.0, 2.0};
    s.h = 0.1;
    s.controls = {0.02, 0.9, 1.0};
    const double ox = 1.0 + 0.1 * std::floor(8 * u(rng)), oy = 0.4 + 0.1 * std::floor(6 * u(rng));
    s.obstacles.push_back({{{ox, oy}, {ox + 0.3, oy + 0.5}}});
    s.doors.push_back({{3.0, 0.8}, {3.0, 1.2}, {1.0, 0.0}});
    const int np = u(rng) < 0.5 ? 1 : 2;
    for (int p = 0; p < np; ++p) {
        PopulationConfig c;
        c.theta = u(rng);
        const int n = 5 + static_cast<int>(20 * u(rng));
        while (static_cast<int>(c.layout.points.size()) < n) {
            const Vec2 q{0.1 + 2.8 * u(rng), 0.1 + 1.8 * u(rng)};
            if (!s.obstacles[0].rect.contains_interior(q)) c.layout.points.push_back(q);
        }
        c.macro_mass = 0.5 + u(rng);
        c.endogenous = {0.05 + 0.15 * u(rng), 0.0, 0.2 + 0.3 * u(rng), 0.5, half_pi};
        c.exogenous = c.endogenous;
        c.exogenous_weight = np == 2 ? u(rng) : 0.0;
        c.desired = {DesiredSpec::Kind::toward, {3.0, 1.0}, 0.5 + u(rng), 0.0, 0.0, 0.0, 1, ""};
        s.populations.push_back(c);
    }
    return s;
}

// 2. presets to their horizon plus 20 random rooms, every step checked
Verdict positivity() {
    double worst = 0.0;
    RunOptions opt;
    opt.snapshot_every = 1;
    opt.on_snapshot = [&](const World& w) { worst = std::min(worst, min_density(w)); };
    for (const std::string& name : preset_names()) run(preset(name), opt);
    std::mt19937 rng(2024);
    for (int k = 0; k < 20; ++k) run(random_scenario(rng), opt);
    return {worst >= 0.0, "min density coefficient " + fmt("%.3g", worst)};
}

// 3. scheme against a stratified sampling of the exact push-forward
Verdict pushforward() {
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    constexpr double pi = 3.141592653589793;
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const Grid g({0, 0}, 0.1, 20, 20);
        const double dt = 0.05;
        MacroDensity d(g);
        std::vector<Vec2> vel(g.cell_count());
        for (int j = 1; j + 1 < g.ny; ++j)
            for (int i = 1; i + 1 < g.nx; ++i) {
                if (u(rng) < 0.2) continue;
                d.at(i, j) = 5.0 * u(rng);
                const double sp = u(rng) * g.h / dt, a = 2 * pi * u(rng);
                vel[g.flat(i, j)] = {sp * std::cos(a), sp * std::sin(a)};
            }
        const MacroDensity scheme = advance_macro(d, vel, dt, Geometry(g, {}, {})).next;

        // samples per cell proportional to its mass, jittered on a sub-lattice
        const double total = d.total_mass();
        MacroDensity mc(g);
        for (std::size_t k = 0; k < g.cell_count(); ++k) {
            if (d.rho[k] == 0.0) continue;
            const double mass = d.rho[k] * g.cell_area();
            const long n = std::max(1L, std::lround(pushforward_samples * mass / total));
            const long side = std::max(1L, static_cast<long>(std::sqrt(static_cast<double>(n))));
            const CellIndex c = g.unflat(k);
            for (long s = 0; s < n; ++s) {
                double fx, fy;
                if (s < side * side) {
                    fx = (static_cast<double>(s % side) + u(rng)) / static_cast<double>(side);
                    fy = (static_cast<double>(s / side) + u(rng)) / static_cast<double>(side);
                } else {
                    fx = u(rng);
                    fy = u(rng);
                }
                const Vec2 x{g.edge_x(c.i) + fx * g.h, g.edge_y(c.j) + fy * g.h};
                const auto e = cell_index(x + vel[k] * dt, g);
                if (e) mc.at(e->i, e->j) += d.rho[k] / static_cast<double>(n);
            }
        }
        double diff = 0.0;
        for (std::size_t k = 0; k < g.cell_count(); ++k) diff += std::abs(mc.rho[k] - scheme.rho[k]) * g.cell_area();
        worst = std::max(worst, diff / total);
    }
    return {worst <= pushforward_tol, "max relative L1 discrepancy " + fmt("%.3g", worst)};
}

// 4. grid refinement on the rotation case
Verdict convergence() {
    const auto pts = convergence_study("rotation", {0.2, 0.1, 0.05, 0.025});
    const auto orders = empirical_orders(pts);
    bool ok = true;
    std::string d = "errors";
    for (const auto& p : pts) d += " " + fmt("%.3g", p.error);
    d += ", orders";
    for (std::size_t k = 0; k < orders.size(); ++k) {
        ok = ok && pts[k + 1].error < pts[k].error && orders[k] >= convergence_min_order;
        d += " " + fmt("%.2f", orders[k]);
    }
    return {ok, d};
}

// 5. crowd at rest: inertia moments flat in theta, front column in place
Verdict test1_trend() {
    std::vector<double> ig;
    double shift = 0.0;
    for (double th : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        Scenario s = preset("test1");
        s.populations[0].theta = th;
        const World w0 = build_world(s);
        const RunResult r = run(s);
        ig.push_back(r.record.series("p0_mu_IG").back());
        const auto& a0 = w0.populations[0].mass.micro.agents;
        const auto& a1 = r.world.populations[0].mass.micro.agents;
        double front = -1e300;
        for (const Agent& a : a0) front = std::max(front, a.position.x);
        for (std::size_t k = 0; k < a0.size(); ++k)
            if (a0[k].position.x == front) shift = std::max(shift, std::abs(a1[k].position.x - a0[k].position.x));
    }
    double mean = 0.0;
    for (double v : ig) mean += v / static_cast<double>(ig.size());
    const auto [lo, hi] = std::minmax_element(ig.begin(), ig.end());
    const double spread = (*hi - *lo) / mean;
    return {spread <= ig_spread_tol && shift <= front_shift_tol,
            "I_G spread " + fmt("%.3f", spread) + " of mean, front shift " + fmt("%.3f", shift)};
}

// 6. evacuation time falls as theta grows
Verdict test2_trend() {
    std::vector<double> t;
    for (double th : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        Scenario s = preset("test2_large");
        s.populations[0].theta = th;
        t.push_back(run(s).outflow_times[0].mu);
    }
    bool ok = true;
    std::string d = "T_ave";
    for (std::size_t k = 0; k < t.size(); ++k) {
        d += " " + fmt("%.3f", t[k]);
        if (k) ok = ok && t[k] < t[k - 1];
    }
    return {ok, d};
}

// 7. bottleneck: micro crowds clear by t = 8, macro crowds clog after t = 5
Verdict test3_trend() {
    Scenario micro = preset("test3");
    for (auto& c : micro.populations) c.theta = 1.0;
    micro.controls.t_final = 8.0;
    const RunResult a = run(micro);
    double remaining = 0.0;
    for (const char* q : {"p0_probe_mu", "p1_probe_mu"}) {
        const auto m = a.record.series(q);
        remaining = std::max(remaining, m.back() / m.front());
    }

    Scenario macro = preset("test3");
    for (auto& c : macro.populations) c.theta = 0.0;
    macro.controls.t_final = 10.0;
    const RunResult b = run(macro);
    const auto t = b.record.series("time"), f = b.record.series("p1_flux_M");
    double flux = 0.0;
    for (std::size_t k = 0; k < t.size(); ++k)
        if (t[k] >= 5.0) flux = std::max(flux, std::abs(f[k]));
    return {remaining < test3_remaining_tol && flux < test3_flux_tol,
            "theta=1 max remaining " + fmt("%.4f", remaining) + " at t=" + fmt("%.2f", a.world.time) +
                ", theta=0 max |outflux| for t>=5 " + fmt("%.3g", flux)};
}

// 8. the group follows its leader and stays together
Verdict test4_trend() {
    const RunResult r = run(preset("test4"));
    const auto t = r.record.series("time"), x = r.record.series("p0_com_x"), ig = r.record.series("p0_mu_IG");
    std::size_t k0 = 0;
    while (k0 < t.size() && t[k0] < test4_transient_end) ++k0;
    if (k0 + 1 >= t.size()) return {false, "run ended before the transient"};
    bool forward = true;
    double ig_max = 0.0;
    for (std::size_t k = k0; k < t.size(); ++k) {
        if (k > k0) forward = forward && x[k] > x[k - 1];
        ig_max = std::max(ig_max, ig[k]);
    }
    return {forward && ig_max <= 2.0 * ig[k0],
            std::string(forward ? "COM x increasing" : "COM x not monotone") + " after t=" + fmt("%.2f", t[k0]) +
                " (" + fmt("%.3f", x[k0]) + " -> " + fmt("%.3f", x.back()) + "), max I_G " + fmt("%.3f", ig_max) +
                " vs bound " + fmt("%.3f", 2.0 * ig[k0])};
}

// 9. worker count does not change a byte of output
Verdict determinism() {
    std::string differ;
    for (const std::string& name : preset_names()) {
        RunOptions one, eight;
        one.workers = 1;
        eight.workers = 8;
        if (csv_of(run(preset(name), one)) != csv_of(run(preset(name), eight))) differ += " " + name;
    }
    return {differ.empty(), differ.empty() ? "all presets identical with 1 and 8 workers" : "differs:" + differ};
}

// 10. mu-moments about a shared center interpolate the two scales
Verdict interpolation() {
    std::mt19937 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Grid g({0, 0}, 0.1, 30, 20);
        CrowdMeasure cm;
        cm.theta = u(rng);
        cm.lambda = 1.0 + 50.0 * u(rng);
        cm.macro = MacroDensity(g);
        const int n = 1 + static_cast<int>(40 * u(rng));
        for (int k = 0; k < n; ++k) cm.micro.agents.push_back({k, {3.0 * u(rng), 2.0 * u(rng)}, Role::follower});
        for (double& r : cm.macro.rho)
            if (u(rng) < 0.4) r = 3.0 * u(rng);
        const Rect all = g.bounds();
        const Vec2 xg = center_of_mass(cm, all);
        const Moments mu = moments_about(cm, all, Scale::multi, xg);
        const Moments m = moments_about(cm, all, Scale::micro, xg);
        const Moments M = moments_about(cm, all, Scale::macro, xg);
        const double w = (1.0 - cm.theta) * cm.lambda;
        for (auto [a, b, c] : {std::tuple{mu.i1, m.i1, M.i1}, std::tuple{mu.i2, m.i2, M.i2}, std::tuple{mu.ig, m.ig, M.ig}})
            worst = std::max(worst, std::abs(a - (cm.theta * b + w * c)) / std::abs(a));
    }
    return {worst <= interpolation_tol, "max relative deviation " + fmt("%.3g", worst)};
}

std::set<int> parse_list(const std::string& s) {
    std::set<int> out;
    std::istringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) out.insert(std::stoi(item));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> known;
    for (int k = 1; k < argc; ++k) {
        const std::string a = argv[k];
        if (a == "--known-failures" && k + 1 < argc) known = parse_list(argv[++k]);
        else {
            std::fprintf(stderr, "usage: acceptance [--known-failures N,M,...]\n");
            return 2;
        }
    }

    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
        {"conservation", conservation}, {"positivity", positivity},   {"push-forward", pushforward},
        {"convergence", convergence},   {"test1 trend", test1_trend}, {"test2 trend", test2_trend},
        {"test3 trend", test3_trend},   {"test4 trend", test4_trend}, {"determinism", determinism},
        {"interpolation", interpolation}};

    std::set<int> failed;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        const int id = static_cast<int>(k) + 1;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = criteria[k].second();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (!v.pass) failed.insert(id);
        std::printf("%s %2d %-14s %s (%.1fs)\n", v.pass ? "PASS" : "FAIL", id, criteria[k].first, v.detail.c_str(), sec);
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - failed.size(), criteria.size());
    if (known.empty()) return failed.empty() ? 0 : 1;
    if (failed != known) {
        std::printf("failing set differs from the known failures\n");
        return 1;
    }
    return 0;
}
