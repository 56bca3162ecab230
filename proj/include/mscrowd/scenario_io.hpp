#pragma once

// Scenario text format: sectioned "key = value" lines, '#' starts a comment.
//
//   [scenario]       name
//   [domain]         origin, size, h, seal_doors
//   [controls]       t_final, dt_max, cfl, stop_fraction, snapshot_every
//   [obstacles.N]    rect = x0 y0 x1 y1
//   [doors.N]        a = x y, b = x y, outward = nx ny
//   [populations.N]  name, theta, macro_mass, lambda, layout, leader.position,
//                    leader.velocity, leader.stop_distance,
//                    endogenous.{f_r,f_a,r_r,r_a,alpha_bar},
//                    exogenous.{f_r,f_a,r_r,r_a,alpha_bar}, exogenous_weight,
//                    desired, heading, probe
//
// layout  = lattice x0 y0 x1 y1 nx ny | points x y [x y ...]
// desired = zero | constant vx vy | toward x y speed
//         | gate x lo hi direction speed | grid path
//
// Parsing is strict: unknown sections or keys are errors.

#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mscrowd/scenario.hpp"

namespace mscrowd {

class ScenarioParseError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Ordered sections of ordered key/value pairs.
struct KeyValueDoc {
    struct Section {
        std::string name;
        std::vector<std::pair<std::string, std::string>> entries;

        const std::string* find(const std::string& key) const {
            for (const auto& [k, v] : entries)
                if (k == key) return &v;
            return nullptr;
        }
    };
    std::vector<Section> sections;

    Section* find(const std::string& name) {
        for (auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }
    const Section* find(const std::string& name) const {
        for (const auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
inline std::string vec(const Vec2& v) { return num(v.x) + " " + num(v.y); }
inline std::string rect(const Rect& r) { return vec(r.lo) + " " + vec(r.hi); }

inline std::vector<std::string> words(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

inline double to_double(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ScenarioParseError(where + ": expected a number, got '" + s + "'");
    }
}

inline long to_long(const std::string& s, const std::string& where) {
    try {
        std::size_t used = 0;
        const long v = std::stol(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ScenarioParseError(where + ": expected an integer, got '" + s + "'");
    }
}

inline std::vector<double> numbers(const std::string& s, std::size_t count, const std::string& where) {
    const auto w = words(s);
    if (count && w.size() != count)
        throw ScenarioParseError(where + ": expected " + std::to_string(count) + " numbers, got '" + s + "'");
    std::vector<double> out;
    for (const auto& x : w) out.push_back(to_double(x, where));
    return out;
}

inline Vec2 to_vec(const std::string& s, const std::string& where) {
    const auto n = numbers(s, 2, where);
    return {n[0], n[1]};
}
inline Rect to_rect(const std::string& s, const std::string& where) {
    const auto n = numbers(s, 4, where);
    return {{n[0], n[1]}, {n[2], n[3]}};
}
inline bool to_bool(const std::string& s, const std::string& where) {
    if (s == "true") return true;
    if (s == "false") return false;
    throw ScenarioParseError(where + ": expected true or false, got '" + s + "'");
}

inline std::string layout_text(const Layout& l) {
    if (l.kind == Layout::Kind::lattice)
        return "lattice " + rect(l.box) + " " + std::to_string(l.nx) + " " + std::to_string(l.ny);
    std::string out = "points";
    for (const Vec2& p : l.points) out += " " + vec(p);
    return out;
}

inline Layout parse_layout(const std::string& s, const std::string& where) {
    const auto w = words(s);
    if (w.empty()) throw ScenarioParseError(where + ": empty layout");
    Layout l;
    if (w[0] == "lattice") {
        if (w.size() != 7) throw ScenarioParseError(where + ": lattice needs x0 y0 x1 y1 nx ny");
        l.kind = Layout::Kind::lattice;
        l.box = {{to_double(w[1], where), to_double(w[2], where)}, {to_double(w[3], where), to_double(w[4], where)}};
        l.nx = static_cast<int>(to_long(w[5], where));
        l.ny = static_cast<int>(to_long(w[6], where));
    } else if (w[0] == "points") {
        if (w.size() % 2 != 1) throw ScenarioParseError(where + ": points need x y pairs");
        l.kind = Layout::Kind::points;
        for (std::size_t k = 1; k + 1 < w.size(); k += 2) l.points.push_back({to_double(w[k], where), to_double(w[k + 1], where)});
    } else {
        throw ScenarioParseError(where + ": unknown layout kind '" + w[0] + "'");
    }
    return l;
}

inline std::string desired_text(const DesiredSpec& d) {
    switch (d.kind) {
        case DesiredSpec::Kind::zero: return "zero";
        case DesiredSpec::Kind::constant: return "constant " + vec(d.vector);
        case DesiredSpec::Kind::toward: return "toward " + vec(d.vector) + " " + num(d.speed);
        case DesiredSpec::Kind::gate:
            return "gate " + num(d.gate_x) + " " + num(d.gate_lo) + " " + num(d.gate_hi) + " " + std::to_string(d.direction) +
                   " " + num(d.speed);
        case DesiredSpec::Kind::grid: return "grid " + d.path;
    }
    return "zero";
}

inline DesiredSpec parse_desired(const std::string& s, const std::string& where) {
    const auto w = words(s);
    if (w.empty()) throw ScenarioParseError(where + ": empty desired field");
    DesiredSpec d;
    auto need = [&](std::size_t n) {
        if (w.size() != n) throw ScenarioParseError(where + ": wrong number of values for '" + w[0] + "'");
    };
    if (w[0] == "zero") { need(1); d.kind = DesiredSpec::Kind::zero; }
    else if (w[0] == "constant") { need(3); d.kind = DesiredSpec::Kind::constant; d.vector = {to_double(w[1], where), to_double(w[2], where)}; }
    else if (w[0] == "toward") {
        need(4);
        d.kind = DesiredSpec::Kind::toward;
        d.vector = {to_double(w[1], where), to_double(w[2], where)};
        d.speed = to_double(w[3], where);
    } else if (w[0] == "gate") {
        need(6);
        d.kind = DesiredSpec::Kind::gate;
        d.gate_x = to_double(w[1], where);
        d.gate_lo = to_double(w[2], where);
        d.gate_hi = to_double(w[3], where);
        d.direction = static_cast<int>(to_long(w[4], where));
        d.speed = to_double(w[5], where);
    } else if (w[0] == "grid") {
        need(2);
        d.kind = DesiredSpec::Kind::grid;
        d.path = w[1];
    } else {
        throw ScenarioParseError(where + ": unknown desired field kind '" + w[0] + "'");
    }
    return d;
}

inline void kernel_entries(KeyValueDoc::Section& sec, const std::string& prefix, const KernelParams& k) {
    sec.entries.emplace_back(prefix + ".f_r", num(k.f_r));
    sec.entries.emplace_back(prefix + ".f_a", num(k.f_a));
    sec.entries.emplace_back(prefix + ".r_r", num(k.r_r));
    sec.entries.emplace_back(prefix + ".r_a", num(k.r_a));
    sec.entries.emplace_back(prefix + ".alpha_bar", num(k.alpha_bar));
}

// Consumes keys from one section, rejecting anything left over.
class SectionReader {
public:
    explicit SectionReader(const KeyValueDoc::Section& s) : sec_(s) {}

    std::optional<std::string> take(const std::string& key) {
        used_.push_back(key);
        if (const auto* v = sec_.find(key)) return *v;
        return std::nullopt;
    }
    std::string need(const std::string& key) {
        auto v = take(key);
        if (!v) throw ScenarioParseError("[" + sec_.name + "]: missing key '" + key + "'");
        return *v;
    }
    std::string where(const std::string& key) const { return "[" + sec_.name + "] " + key; }
    void finish() const {
        for (const auto& [k, v] : sec_.entries)
            if (std::find(used_.begin(), used_.end(), k) == used_.end())
                throw ScenarioParseError("[" + sec_.name + "]: unknown key '" + k + "'");
    }

private:
    const KeyValueDoc::Section& sec_;
    std::vector<std::string> used_;
};

// Missing kernel keys keep the KernelParams defaults (no interaction).
inline KernelParams read_kernel(SectionReader& r, const std::string& prefix) {
    KernelParams k;
    auto get = [&](const char* name, double& out) {
        if (auto v = r.take(prefix + "." + name)) out = to_double(*v, r.where(prefix + "." + name));
    };
    get("f_r", k.f_r);
    get("f_a", k.f_a);
    get("r_r", k.r_r);
    get("r_a", k.r_a);
    get("alpha_bar", k.alpha_bar);
    return k;
}

// "populations.3" -> 3 when the section belongs to `group`.
inline std::optional<long> group_index(const std::string& name, const std::string& group) {
    if (name.rfind(group + ".", 0) != 0) return std::nullopt;
    const std::string tail = name.substr(group.size() + 1);
    if (tail.empty() || tail.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
    return std::stol(tail);
}

}  // namespace detail

inline KeyValueDoc parse_doc(const std::string& text) {
    KeyValueDoc doc;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const std::string where = "line " + std::to_string(lineno);
        if (line.front() == '[') {
            if (line.back() != ']') throw ScenarioParseError(where + ": malformed section header");
            const std::string name = detail::trim(line.substr(1, line.size() - 2));
            if (name.empty() || doc.find(name)) throw ScenarioParseError(where + ": empty or duplicate section '" + name + "'");
            doc.sections.push_back({name, {}});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ScenarioParseError(where + ": expected key = value");
        if (doc.sections.empty()) throw ScenarioParseError(where + ": key outside any section");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        auto& sec = doc.sections.back();
        if (key.empty() || sec.find(key)) throw ScenarioParseError(where + ": empty or duplicate key '" + key + "'");
        sec.entries.emplace_back(key, value);
    }
    return doc;
}

inline std::string render_doc(const KeyValueDoc& doc) {
    std::string out;
    for (const auto& s : doc.sections) {
        if (!out.empty()) out += '\n';
        out += "[" + s.name + "]\n";
        for (const auto& [k, v] : s.entries) out += k + " = " + v + "\n";
    }
    return out;
}

inline KeyValueDoc to_doc(const Scenario& s) {
    using namespace detail;
    KeyValueDoc doc;
    doc.sections.push_back({"scenario", {{"name", s.name}}});
    doc.sections.push_back({"domain",
                            {{"origin", vec(s.origin)}, {"size", vec(s.size)}, {"h", num(s.h)},
                             {"seal_doors", s.seal_doors ? "true" : "false"}}});
    doc.sections.push_back({"controls",
                            {{"t_final", num(s.controls.t_final)}, {"dt_max", num(s.controls.dt_max)},
                             {"cfl", num(s.controls.cfl)}, {"stop_fraction", num(s.stop_fraction)},
                             {"snapshot_every", std::to_string(s.snapshot_every)}}});
    for (std::size_t k = 0; k < s.obstacles.size(); ++k)
        doc.sections.push_back({"obstacles." + std::to_string(k), {{"rect", rect(s.obstacles[k].rect)}}});
    for (std::size_t k = 0; k < s.doors.size(); ++k) {
        const DoorSegment& d = s.doors[k];
        doc.sections.push_back({"doors." + std::to_string(k), {{"a", vec(d.a)}, {"b", vec(d.b)}, {"outward", vec(d.outward)}}});
    }
    for (std::size_t p = 0; p < s.populations.size(); ++p) {
        const PopulationConfig& c = s.populations[p];
        KeyValueDoc::Section sec{"populations." + std::to_string(p), {}};
        sec.entries.emplace_back("name", c.name);
        sec.entries.emplace_back("theta", num(c.theta));
        sec.entries.emplace_back("macro_mass", num(c.macro_mass));
        if (c.lambda) sec.entries.emplace_back("lambda", num(*c.lambda));
        sec.entries.emplace_back("layout", layout_text(c.layout));
        if (c.leader) {
            sec.entries.emplace_back("leader.position", vec(c.leader->position));
            sec.entries.emplace_back("leader.velocity", vec(c.leader->velocity));
            sec.entries.emplace_back("leader.stop_distance", num(c.leader->stop_distance));
        }
        kernel_entries(sec, "endogenous", c.endogenous);
        kernel_entries(sec, "exogenous", c.exogenous);
        sec.entries.emplace_back("exogenous_weight", num(c.exogenous_weight));
        sec.entries.emplace_back("desired", desired_text(c.desired));
        sec.entries.emplace_back("heading", vec(c.heading));
        if (c.probe) sec.entries.emplace_back("probe", rect(*c.probe));
        doc.sections.push_back(std::move(sec));
    }
    return doc;
}

inline Scenario from_doc(const KeyValueDoc& doc) {
    using namespace detail;
    Scenario s;
    std::map<long, const KeyValueDoc::Section*> obstacles, doors, pops;
    bool have_domain = false, have_controls = false;
    for (const auto& sec : doc.sections) {
        SectionReader r(sec);
        if (sec.name == "scenario") {
            if (auto v = r.take("name")) s.name = *v;
        } else if (sec.name == "domain") {
            have_domain = true;
            s.origin = to_vec(r.need("origin"), r.where("origin"));
            s.size = to_vec(r.need("size"), r.where("size"));
            s.h = to_double(r.need("h"), r.where("h"));
            if (auto v = r.take("seal_doors")) s.seal_doors = to_bool(*v, r.where("seal_doors"));
        } else if (sec.name == "controls") {
            have_controls = true;
            s.controls.t_final = to_double(r.need("t_final"), r.where("t_final"));
            s.controls.dt_max = to_double(r.need("dt_max"), r.where("dt_max"));
            if (auto v = r.take("cfl")) s.controls.cfl = to_double(*v, r.where("cfl"));
            if (auto v = r.take("stop_fraction")) s.stop_fraction = to_double(*v, r.where("stop_fraction"));
            if (auto v = r.take("snapshot_every")) s.snapshot_every = to_long(*v, r.where("snapshot_every"));
        } else if (auto i = group_index(sec.name, "obstacles")) {
            obstacles[*i] = &sec;
            continue;
        } else if (auto i2 = group_index(sec.name, "doors")) {
            doors[*i2] = &sec;
            continue;
        } else if (auto i3 = group_index(sec.name, "populations")) {
            pops[*i3] = &sec;
            continue;
        } else {
            throw ScenarioParseError("unknown section [" + sec.name + "]");
        }
        r.finish();
    }
    if (!have_domain) throw ScenarioParseError("missing [domain] section");
    if (!have_controls) throw ScenarioParseError("missing [controls] section");
    auto check_dense = [](const auto& m, const std::string& group) {
        long expect = 0;
        for (const auto& [k, v] : m)
            if (k != expect++) throw ScenarioParseError("[" + group + ".N] sections must be numbered 0, 1, 2, ...");
    };
    check_dense(obstacles, "obstacles");
    check_dense(doors, "doors");
    check_dense(pops, "populations");
    for (const auto& [k, sec] : obstacles) {
        SectionReader r(*sec);
        s.obstacles.push_back({to_rect(r.need("rect"), r.where("rect"))});
        r.finish();
    }
    for (const auto& [k, sec] : doors) {
        SectionReader r(*sec);
        DoorSegment d;
        d.a = to_vec(r.need("a"), r.where("a"));
        d.b = to_vec(r.need("b"), r.where("b"));
        d.outward = to_vec(r.need("outward"), r.where("outward"));
        s.doors.push_back(d);
        r.finish();
    }
    for (const auto& [k, sec] : pops) {
        SectionReader r(*sec);
        PopulationConfig c;
        if (auto v = r.take("name")) c.name = *v;
        c.theta = to_double(r.need("theta"), r.where("theta"));
        c.macro_mass = to_double(r.need("macro_mass"), r.where("macro_mass"));
        if (auto v = r.take("lambda")) c.lambda = to_double(*v, r.where("lambda"));
        c.layout = parse_layout(r.need("layout"), r.where("layout"));
        auto lp = r.take("leader.position");
        auto lv = r.take("leader.velocity");
        auto ls = r.take("leader.stop_distance");
        if (lp || lv || ls) {
            if (!(lp && lv && ls)) throw ScenarioParseError(r.where("leader") + ": position, velocity and stop_distance go together");
            c.leader = LeaderConfig{to_vec(*lp, r.where("leader.position")), to_vec(*lv, r.where("leader.velocity")),
                                    to_double(*ls, r.where("leader.stop_distance"))};
        }
        c.endogenous = read_kernel(r, "endogenous");
        c.exogenous = read_kernel(r, "exogenous");
        if (auto v = r.take("exogenous_weight")) c.exogenous_weight = to_double(*v, r.where("exogenous_weight"));
        c.desired = parse_desired(r.need("desired"), r.where("desired"));
        if (auto v = r.take("heading")) c.heading = to_vec(*v, r.where("heading"));
        if (auto v = r.take("probe")) c.probe = to_rect(*v, r.where("probe"));
        r.finish();
        s.populations.push_back(std::move(c));
    }
    return s;
}

inline Scenario parse_scenario(const std::string& text) { return from_doc(parse_doc(text)); }
inline std::string serialize(const Scenario& s) { return render_doc(to_doc(s)); }

/// Applies "section.key=value" overrides, e.g. "populations.0.theta=0.3" or
/// "controls.t_final=5". The key must already exist in the document.
inline void apply_override(KeyValueDoc& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ScenarioParseError("override '" + assignment + "': expected key=value");
    const std::string path = detail::trim(assignment.substr(0, eq));
    const std::string value = detail::trim(assignment.substr(eq + 1));
    const auto dot1 = path.find('.');
    if (dot1 == std::string::npos) throw ScenarioParseError("override '" + path + "': expected section.key");
    std::string section = path.substr(0, dot1);
    std::string key = path.substr(dot1 + 1);
    if (section == "populations" || section == "obstacles" || section == "doors") {
        const auto dot2 = key.find('.');
        if (dot2 == std::string::npos) throw ScenarioParseError("override '" + path + "': expected " + section + ".N.key");
        section += "." + key.substr(0, dot2);
        key = key.substr(dot2 + 1);
    }
    auto* sec = doc.find(section);
    if (!sec) throw ScenarioParseError("override '" + path + "': no section [" + section + "]");
    for (auto& [k, v] : sec->entries)
        if (k == key) { v = value; return; }
    throw ScenarioParseError("override '" + path + "': no key '" + key + "' in [" + section + "]");
}

inline Scenario with_overrides(const Scenario& base, const std::vector<std::string>& overrides) {
    if (overrides.empty()) return base;
    KeyValueDoc doc = to_doc(base);
    for (const auto& o : overrides) apply_override(doc, o);
    return from_doc(doc);
}

}  // namespace mscrowd
