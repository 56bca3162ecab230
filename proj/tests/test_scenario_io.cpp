#include <gtest/gtest.h>

#include "mscrowd/scenario_io.hpp"

using namespace mscrowd;

TEST(ScenarioIo, PresetsRoundTrip) {
    for (const std::string& name : preset_names()) {
        const Scenario s = preset(name);
        const std::string text = serialize(s);
        const Scenario back = parse_scenario(text);
        EXPECT_EQ(back, s) << name;
        EXPECT_EQ(serialize(back), text) << name;
    }
}

TEST(ScenarioIo, RoundTripKeepsAwkwardValues) {
    Scenario s = preset("test1");
    s.populations[0].theta = 0.1 + 0.2;
    s.controls.dt_max = 1.0 / 3.0;
    s.populations[0].layout = {Layout::Kind::points, {}, 0, 0, {{1.25, 2.0 / 3.0}, {2.5, 1.0}}};
    s.populations[0].lambda.reset();
    s.populations[0].desired = {DesiredSpec::Kind::constant, {0.4, -0.1}, 1.0, 0, 0, 0, 1, ""};
    s.populations[0].probe = Rect{{0.5, 0.5}, {4.5, 3.5}};
    EXPECT_EQ(parse_scenario(serialize(s)), s);
}

TEST(ScenarioIo, CommentsAndWhitespace) {
    const std::string text = R"(# two-line scenario
[domain]
origin = 0 0   # lower-left corner
size   = 2 1
h = 0.1

[controls]
t_final = 0.5
dt_max = 0.01

[populations.0]
theta = 1
macro_mass = 2
layout = points 0.5 0.5 1.5 0.5
desired = toward 2 0.5 1.2
)";
    const Scenario s = parse_scenario(text);
    EXPECT_EQ(s.size, (Vec2{2, 1}));
    EXPECT_EQ(s.controls.t_final, 0.5);
    EXPECT_EQ(s.controls.cfl, 1.0);
    ASSERT_EQ(s.populations.size(), 1u);
    EXPECT_EQ(s.populations[0].layout.count(), 2u);
    EXPECT_EQ(s.populations[0].desired.kind, DesiredSpec::Kind::toward);
    EXPECT_EQ(s.populations[0].desired.speed, 1.2);
    EXPECT_TRUE(validate(s).empty());
}

TEST(ScenarioIo, StrictParsing) {
    const std::string base = serialize(preset("test2_small"));
    EXPECT_THROW(parse_scenario(base + "\n[bogus]\nx = 1\n"), ScenarioParseError);
    EXPECT_THROW(parse_scenario(base + "\n[doors.3]\na = 0 0\nb = 0 1\noutward = -1 0\n"), ScenarioParseError);
    std::string extra = base;
    extra.insert(extra.find("h = "), "colour = red\n");
    EXPECT_THROW(parse_scenario(extra), ScenarioParseError);
    EXPECT_THROW(parse_scenario("key = 1\n"), ScenarioParseError);
    EXPECT_THROW(parse_scenario("[domain\n"), ScenarioParseError);
    EXPECT_THROW(parse_scenario("[domain]\norigin = 0 0\norigin = 1 1\n"), ScenarioParseError);
    std::string bad = base;
    bad.replace(bad.find("h = 0.05"), 8, "h = 0.05x");
    EXPECT_THROW(parse_scenario(bad), ScenarioParseError);
    std::string missing = base;
    missing.erase(missing.find("t_final"), missing.find('\n', missing.find("t_final")) - missing.find("t_final") + 1);
    EXPECT_THROW(parse_scenario(missing), ScenarioParseError);
}

TEST(ScenarioIo, LeaderKeysGoTogether) {
    std::string text = serialize(preset("test4"));
    const auto at = text.find("leader.stop_distance");
    text.erase(at, text.find('\n', at) - at + 1);
    EXPECT_THROW(parse_scenario(text), ScenarioParseError);
}

TEST(Overrides, ApplyToExistingKeys) {
    const Scenario s = with_overrides(preset("test1"), {"populations.0.theta=0.75", "controls.t_final = 2", "domain.seal_doors=true"});
    EXPECT_EQ(s.populations[0].theta, 0.75);
    EXPECT_EQ(s.controls.t_final, 2.0);
    EXPECT_TRUE(s.seal_doors);
    const Scenario d = with_overrides(preset("test2_large"), {"doors.0.a=3 1.5"});
    EXPECT_EQ(d.doors[0].a, (Vec2{3, 1.5}));
    const Scenario k = with_overrides(preset("test3"), {"populations.1.exogenous.r_r=0.4"});
    EXPECT_EQ(k.populations[1].exogenous.r_r, 0.4);
    EXPECT_EQ(k.populations[0].exogenous.r_r, 0.35);
}

TEST(Overrides, RejectUnknownOrMalformed) {
    const Scenario s = preset("test1");
    EXPECT_THROW(with_overrides(s, {"populations.0.colour=1"}), ScenarioParseError);
    EXPECT_THROW(with_overrides(s, {"populations.3.theta=1"}), ScenarioParseError);
    EXPECT_THROW(with_overrides(s, {"theta=1"}), ScenarioParseError);
    EXPECT_THROW(with_overrides(s, {"controls.t_final"}), ScenarioParseError);
    EXPECT_THROW(with_overrides(s, {"controls.t_final=soon"}), ScenarioParseError);
    EXPECT_THROW(with_overrides(s, {"populations.theta=1"}), ScenarioParseError);
}
