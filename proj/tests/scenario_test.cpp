// SPDX-License-Identifier: MIT
#include <implicit_pde/scenario.hpp>

#include <gtest/gtest.h>

#include <string>

using namespace implicit_pde;

namespace {

ConfigError config_error(std::string_view text) {
  try {
    parse_scenario_text(text);
  } catch (const ConfigError& e) {
    return e;
  }
  ADD_FAILURE() << "no ConfigError for:\n" << text;
  return ConfigError(std::nullopt, "", "");
}

}  // namespace

TEST(Scenario, MinimalBateman) {
  const auto cfg = parse_scenario_text(
      "[family] kind=bateman F=phi G=phi^2\n"
      "[sample] box=1,2;1,2 points=50\n");
  EXPECT_EQ(cfg.seed, 0u);
  EXPECT_FALSE(cfg.seed_given);
  ASSERT_EQ(cfg.families.size(), 1u);
  const auto& f = cfg.families[0];
  EXPECT_TRUE(std::holds_alternative<BatemanSpec>(f.spec));
  EXPECT_EQ(f.line, 1u);
  EXPECT_EQ(f.sample.points, 50);
  EXPECT_EQ(f.sample.mode, SampleMode::random);
  ASSERT_EQ(f.sample.box.size(), 2u);
  EXPECT_EQ(f.sample.box[1], std::make_pair(1.0, 2.0));
  EXPECT_TRUE(cfg.checks.run.empty());
}

TEST(Scenario, SpacedAndCompactAgree) {
  const auto a = parse_scenario_text(
      "[scenario]\nname = demo run\nseed = 7\n"
      "[family]\nkind = bateman\nF = phi + 1\nG = phi^2\n"
      "[sample]\nbox = 1,2;1,2\ncounts = 3,4\n");
  const auto b = parse_scenario_text(
      "[scenario] name=\"demo run\" seed=7\n"
      "[family] kind=bateman F=\"phi + 1\" G=phi^2\n"
      "[sample] box=1,2;1,2 counts=3,4\n");
  EXPECT_EQ(a.name, "demo run");
  EXPECT_EQ(b.name, "demo run");
  EXPECT_EQ(a.seed, 7u);
  EXPECT_EQ(b.seed, 7u);
  EXPECT_EQ(a.families[0].sample.mode, SampleMode::grid);
  EXPECT_EQ(a.families[0].sample.counts, b.families[0].sample.counts);
  EXPECT_EQ(a.families[0].sample.seed, b.families[0].sample.seed);
}

TEST(Scenario, CommentsAndBlankLines) {
  const auto cfg = parse_scenario_text(
      "# leading comment\n\n"
      "[family] kind=bateman F=phi G=phi^2  # trailing\n"
      "[sample] box=1,2;1,2 points=5\n");
  EXPECT_EQ(cfg.families.size(), 1u);
}

TEST(Scenario, UnknownVariableNamesFieldAndLine) {
  const auto e = config_error(
      "[sample] box=1,2;1,2 points=5\n"
      "[family] kind=bateman F=phi+q G=phi^2\n");
  EXPECT_EQ(e.line(), std::optional<std::size_t>(2));
  EXPECT_EQ(e.field(), "F");
  EXPECT_NE(std::string(e.what()).find("'q'"), std::string::npos);
}

TEST(Scenario, ExpressionSyntaxErrorIsConfigError) {
  const auto e = config_error("[family] kind=bateman F=phi+ G=phi\n[sample] box=1,2;1,2 points=5\n");
  EXPECT_EQ(e.line(), std::optional<std::size_t>(1));
  EXPECT_EQ(e.field(), "F");
}

TEST(Scenario, DuplicateKey) {
  const auto e = config_error("[family]\nkind = bateman\nF = phi\nF = phi^2\nG = phi\n");
  EXPECT_EQ(e.line(), std::optional<std::size_t>(4));
  EXPECT_EQ(e.field(), "F");
}

TEST(Scenario, MalformedLines) {
  EXPECT_EQ(config_error("kind=bateman\n").line(), std::optional<std::size_t>(1));
  EXPECT_EQ(config_error("[family\n").line(), std::optional<std::size_t>(1));
  EXPECT_EQ(config_error("[family] kind\n").line(), std::optional<std::size_t>(1));
  EXPECT_EQ(config_error("[family] F=\"phi\n").line(), std::optional<std::size_t>(1));
  EXPECT_EQ(config_error("[bogus]\n").line(), std::optional<std::size_t>(1));
}

TEST(Scenario, BadValues) {
  const std::string fam = "[family] kind=bateman F=phi G=phi^2\n";
  EXPECT_EQ(config_error(fam + "[sample] box=1,2;1,x points=5\n").field(), "box");
  EXPECT_EQ(config_error(fam + "[sample] box=1,2;1,2 points=-3\n").field(), "points");
  EXPECT_EQ(config_error(fam + "[sample] box=1,2;1,2 points=5 mode=spiral\n").field(), "mode");
  EXPECT_EQ(config_error(fam + "[sample] box=1,2;1,2 points=5\n[checks] run=bogus\n").field(), "run");
  EXPECT_EQ(config_error("[family] kind=wave F=phi\n").field(), "kind");
  EXPECT_EQ(config_error("[family] kind=bateman F=phi G=phi^2 colour=red\n[sample] box=1,2;1,2 points=5\n").field(),
            "colour");
}

TEST(Scenario, DimensionMismatchIsRejected) {
  const auto e = config_error("[family] kind=bateman F=phi G=phi^2\n[sample] box=1,2;1,2;1,2 points=5\n");
  EXPECT_EQ(e.field(), "box");
}

TEST(Scenario, FamiliesGetDistinctDerivedSeeds) {
  const auto cfg = parse_scenario_text(
      "[scenario] seed=11\n"
      "[sample] box=1,2;1,2 points=5\n"
      "[family] kind=bateman F=phi G=phi^2\n"
      "[family] kind=bateman F=phi G=phi^3\n");
  ASSERT_EQ(cfg.families.size(), 2u);
  EXPECT_NE(cfg.families[0].sample.seed, cfg.families[1].sample.seed);
  const auto again = parse_scenario_text(
      "[scenario] seed=11\n"
      "[sample] box=1,2;1,2 points=5\n"
      "[family] kind=bateman F=phi G=phi^2\n"
      "[family] kind=bateman F=phi G=phi^3\n");
  EXPECT_EQ(cfg.families[1].sample.seed, again.families[1].sample.seed);
}

TEST(Scenario, PerFamilyOverrides) {
  const auto cfg = parse_scenario_text(
      "[sample] box=1,2;1,2 points=5\n"
      "[family] kind=linear F1=phi F2=phi^2 F3=1 c=1 box=0,1;0,1;0,1 points=9 guess=0.5\n");
  const auto& f = cfg.families[0];
  EXPECT_EQ(f.sample.box.size(), 3u);
  EXPECT_EQ(f.sample.points, 9);
  EXPECT_TRUE(std::holds_alternative<Guess>(f.branch));
}

TEST(Scenario, QuadraticForms) {
  const auto gram = parse_scenario_text("[family] kind=quadratic gram=1,phi;phi,1 box=0,1;0,1 points=4\n");
  const auto& q = std::get<QuadraticSpec>(gram.families[0].spec);
  EXPECT_EQ(q.m.size(), 2u);
  const auto entries = parse_scenario_text("[family] kind=quadratic n=3 M11=1 M22=2 M33=phi M23=phi box=0,1;0,1;0,1 points=4\n");
  EXPECT_EQ(std::get<QuadraticSpec>(entries.families[0].spec).m.size(), 3u);
}

TEST(Scenario, ChecksSection) {
  const auto cfg = parse_scenario_text(
      "[family] kind=bateman F=phi G=phi^2\n[sample] box=1,2;1,2 points=5\n"
      "[checks] run=bateman,ufe residual_tol=1e-8 tol.ufe=1e-6\n");
  ASSERT_EQ(cfg.checks.run.size(), 2u);
  EXPECT_EQ(cfg.checks.run[1], CheckKind::ufe);
  EXPECT_EQ(cfg.checks.residual_tol, std::optional<double>(1e-8));
  EXPECT_EQ(cfg.checks.tolerance.at(CheckKind::ufe), 1e-6);
}

TEST(Scenario, ExplicitFieldsRejectManifoldModes) {
  const auto e = config_error("[family] kind=explicit_expr e=x1/x2 n=2 degree=0 box=1,2;1,2 points=5 mode=ray\n");
  EXPECT_EQ(e.field(), "mode");
}

TEST(Scenario, ConfocalDefaults) {
  const auto cfg = parse_scenario_text("[family] kind=confocal a2=4 b2=2 c2=1 level=1 points=8\n");
  const auto& f = cfg.families[0];
  EXPECT_DOUBLE_EQ(f.level, 1.0);
  EXPECT_EQ(f.sample.box.size(), 3u);
}

TEST(Scenario, MissingFileIsConfigError) {
  EXPECT_THROW(load_scenario("/nonexistent/path.scen"), ConfigError);
}
