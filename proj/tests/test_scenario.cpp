#include <gtest/gtest.h>

#include <json.hpp>

#include "fnlpde/errors.hpp"
#include "fnlpde/scenario.hpp"

using namespace fnlpde;

TEST(Config, SectionsCommentsAndTypes) {
  const auto c = Config::parse(
      "scenario = x   # trailing\n"
      "[grid]\n"
      "dx = 0.5\n"
      "n = 12\n"
      "[check]\n"
      "flag = yes\n"
      "tau = 0, 0.5 ,1\n");
  EXPECT_EQ(c.str("scenario"), "x");
  EXPECT_DOUBLE_EQ(c.num("grid.dx"), 0.5);
  EXPECT_EQ(c.integer("grid.n"), 12);
  EXPECT_TRUE(c.flag("check.flag", false));
  EXPECT_EQ(c.list("check.tau", {}), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_DOUBLE_EQ(c.num("grid.other", 3.0), 3.0);
}

TEST(Config, ErrorsNameTheKey) {
  const auto c = Config::parse("[impact]\na = oops\n");
  try {
    c.num("impact.lambda");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    EXPECT_NE(std::string(e.what()).find("impact.lambda"), std::string::npos);
  }
  try {
    c.num("impact.a");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("impact.a"), std::string::npos);
  }
  EXPECT_THROW(Config::parse("[broken\n"), Error);
  EXPECT_THROW(Config::parse("no equals sign\n"), Error);
}

TEST(Config, OverridesAndMerge) {
  auto c = Config::parse("a = 1\nb = 2\n");
  c.apply_override("b = 5");
  c.merge(Config::parse("c = 3\n"));
  EXPECT_THROW(c.apply_override("novalue"), Error);
  (void)c.str("a");
  EXPECT_EQ(c.unused_keys(), (std::vector<std::string>{"b", "c"}));
  EXPECT_EQ(c.str("b"), "5");
  EXPECT_EQ(c.str("c"), "3");
  EXPECT_TRUE(c.unused_keys().empty());
}

TEST(Presets, AllParse) {
  const auto names = preset_names();
  EXPECT_EQ(names.size(), 5u);
  for (const auto& n : names) EXPECT_TRUE(preset_config(n).has("scenario")) << n;
  EXPECT_THROW(preset_text("nope"), Error);
}

TEST(Scenario, MissingParameterIsAConfigError) {
  auto c = preset_config("quadratic-hjb");
  Config trimmed;
  for (const auto& [k, v] : c.entries()) {
    if (k != "impact.lambda") trimmed.set(k, v);
  }
  const auto r = execute_scenario(trimmed);
  EXPECT_EQ(r.exit_code, kExitConfig);
  EXPECT_NE(r.diagnostic.find("impact.lambda"), std::string::npos);
  EXPECT_EQ(r.diagnostic.find('\n'), std::string::npos);
}

TEST(Scenario, InvalidValuesAreConfigErrors) {
  auto c = preset_config("quadratic-hjb");
  c.set("grid.dx", "-1");
  EXPECT_EQ(execute_scenario(c).exit_code, kExitConfig);
  c = preset_config("quadratic-hjb");
  c.set("impact.a", "-1");  // constants no longer solutions
  EXPECT_EQ(execute_scenario(c).exit_code, kExitConfig);
  c = preset_config("quadratic-hjb");
  c.set("scenario", "unknown");
  EXPECT_EQ(execute_scenario(c).exit_code, kExitConfig);
}

TEST(Scenario, QuadraticPresetPassesAndWritesCsv) {
  auto c = preset_config("quadratic-hjb");
  c.set("mc.paths", "2000");
  const auto r = execute_scenario(c);
  EXPECT_EQ(r.exit_code, kExitPass) << r.diagnostic;
  EXPECT_FALSE(r.report_json.empty());
  const auto csv = history_csv(r);
  EXPECT_EQ(csv.rfind("t,x,value\n", 0), 0u);
  EXPECT_EQ(r.slices.size(), r.times.size());
}

TEST(Scenario, FailedCertificationExitsOne) {
  auto c = preset_config("quadratic-hjb");
  c.set("scenario", "hjb-backward");
  c.set("exact.tol", "1e-30");
  const auto r = execute_scenario(c);
  EXPECT_EQ(r.exit_code, kExitCertification);
  EXPECT_FALSE(r.diagnostic.empty());
}

TEST(Scenario, LowRhoOnBarenblattListsViolations) {
  auto c = preset_config("barenblatt-m2");
  c.set("check.rho", "0.1");
  const auto r = execute_scenario(c);
  EXPECT_EQ(r.exit_code, kExitCertification);
  const auto j = nlohmann::json::parse(r.report_json);
  EXPECT_GT(j["monotonicity"]["violation_count"].get<int>(), 0);
  EXPECT_FALSE(j["monotonicity"]["violations"].empty());
  EXPECT_FALSE(j["passed"].get<bool>());
}

TEST(Scenario, QuadraticReportCarriesUpperMargin) {
  auto c = preset_config("quadratic-hjb");
  c.set("mc.paths", "2000");
  const auto r = execute_scenario(c);
  ASSERT_EQ(r.exit_code, kExitPass) << r.diagnostic;
  const auto j = nlohmann::json::parse(r.report_json);
  for (const auto& e : j["epsilon"]["upper_margin"]) EXPECT_NEAR(e.get<double>(), 0.5, 1e-8);
}
