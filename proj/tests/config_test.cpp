#include "rons/config.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <string>

namespace rons {
namespace {

const char* kSampleConfig = R"(# density benchmark, two modes
problem = "fokker_planck"
method = "srons"
task = "evolve"
modes = 2
enforce_conservation = true
alpha = 0.0
horizon = 10.0
sample_interval = 0.1
seed = 7

[integrator]
method = "adams"
rtol = 1e-10
atol = 1e-12
)";

TEST(ConfigParse, ReadsEveryFieldFromText) {
  const RunConfig c = parse_config_text(kSampleConfig);
  EXPECT_EQ(c.experiment.problem, Problem::fokker_planck);
  EXPECT_EQ(c.experiment.method, Method::srons);
  EXPECT_EQ(c.task, RunTask::evolve);
  EXPECT_EQ(c.experiment.modes, 2);
  EXPECT_TRUE(c.experiment.enforce_conservation);
  EXPECT_EQ(c.experiment.alpha, 0.0);
  EXPECT_EQ(c.experiment.horizon, 10.0);
  EXPECT_EQ(c.experiment.sample_interval, 0.1);
  EXPECT_EQ(c.experiment.seed, 7u);
  EXPECT_EQ(c.experiment.integrator.method, IntegratorConfig::Method::adams);
  EXPECT_EQ(c.experiment.integrator.rtol, 1e-10);
  EXPECT_EQ(c.experiment.integrator.atol, 1e-12);
}

TEST(ConfigParse, UnmentionedKeysKeepDefaults) {
  const RunConfig c = parse_config_text("modes = 5\n");
  const RunConfig defaults;
  EXPECT_EQ(c.experiment.modes, 5);
  EXPECT_EQ(c.experiment.point_count, defaults.experiment.point_count);
  EXPECT_EQ(c.experiment.divergence_stop, defaults.experiment.divergence_stop);
  EXPECT_EQ(c.experiment.integrator.max_steps, defaults.experiment.integrator.max_steps);
}

TEST(ConfigParse, CommentsAndBlankLinesAreIgnored) {
  const RunConfig c = parse_config_text(
      "\n"
      "# full-line comment\n"
      "modes = 4   # trailing comment\n"
      "   \t\n"
      "method = \"crons\"  # quoted value with comment\n");
  EXPECT_EQ(c.experiment.modes, 4);
  EXPECT_EQ(c.experiment.method, Method::crons);
}

TEST(ConfigParse, HashInsideQuotedStringIsNotAComment) {
  // A '#' inside quotes must survive; the value then fails enum lookup,
  // proving the whole quoted text (hash included) reached the parser.
  try {
    parse_config_text("method = \"cr#ons\"\n");
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("cr#ons"), std::string::npos);
  }
}

TEST(ConfigParse, RejectsUnknownKey) {
  try {
    parse_config_text("modez = 2\n");
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("modez"), std::string::npos);
  }
}

TEST(ConfigParse, RejectsUnknownSection) {
  EXPECT_THROW(parse_config_text("[solver]\nrtol = 1e-6\n"), std::invalid_argument);
}

TEST(ConfigParse, RejectsMalformedSectionHeader) {
  EXPECT_THROW(parse_config_text("[integrator\nrtol = 1e-6\n"), std::invalid_argument);
}

TEST(ConfigParse, RejectsDuplicateKey) {
  try {
    parse_config_text("modes = 2\nmodes = 3\n");
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
  }
}

TEST(ConfigParse, SectionedAndTopLevelKeysAreDistinct) {
  // `method` appears both at top level and under [integrator]; each lands in
  // its own field and neither trips the duplicate detector.
  const RunConfig c = parse_config_text(
      "method = \"crons\"\n"
      "[integrator]\n"
      "method = \"adams\"\n");
  EXPECT_EQ(c.experiment.method, Method::crons);
  EXPECT_EQ(c.experiment.integrator.method, IntegratorConfig::Method::adams);
}

TEST(ConfigParse, RejectsLineWithoutEquals) {
  try {
    parse_config_text("modes\n");
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("key = value"), std::string::npos);
  }
}

TEST(ConfigParse, RejectsWrongTypes) {
  EXPECT_THROW(parse_config_text("modes = two\n"), std::invalid_argument);
  EXPECT_THROW(parse_config_text("modes = 2.5\n"), std::invalid_argument);
  EXPECT_THROW(parse_config_text("alpha = big\n"), std::invalid_argument);
  EXPECT_THROW(parse_config_text("enforce_conservation = yes\n"), std::invalid_argument);
  EXPECT_THROW(parse_config_text("seed = -1\n"), std::invalid_argument);
  EXPECT_THROW(parse_config_text("[integrator]\nmax_steps = 0\n"), std::invalid_argument);
}

TEST(ConfigParse, RejectsUnknownEnumValueListingTheChoices) {
  try {
    parse_config_text("method = \"simplex\"\n");
    FAIL() << "expected invalid_argument";
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("srons"), std::string::npos);
    EXPECT_NE(what.find("crons"), std::string::npos);
    EXPECT_NE(what.find("monte_carlo"), std::string::npos);
  }
}

TEST(ConfigParse, RejectsUnterminatedString) {
  EXPECT_THROW(parse_config_text("method = \"crons\n"), std::invalid_argument);
}

TEST(ConfigFile, MissingFileThrows) {
  EXPECT_THROW(parse_config_file("/nonexistent/path/run.toml"), std::invalid_argument);
}

TEST(ConfigFile, RoundTripsThroughDisk) {
  const std::string path = ::testing::TempDir() + "/config_roundtrip.toml";
  {
    std::ofstream out(path);
    out << kSampleConfig;
  }
  const RunConfig from_disk = parse_config_file(path);
  const RunConfig from_text = parse_config_text(kSampleConfig);
  EXPECT_TRUE(config_equal(from_disk, from_text));
  std::remove(path.c_str());
}

TEST(ConfigOverride, SetsDottedAndTopLevelKeys) {
  RunConfig c = parse_config_text(kSampleConfig);
  apply_override(c, "modes=30");
  apply_override(c, "alpha=1e-3");
  apply_override(c, "integrator.rtol=1e-8");
  apply_override(c, "method=crons");  // bare string, no quotes needed
  EXPECT_EQ(c.experiment.modes, 30);
  EXPECT_EQ(c.experiment.alpha, 1e-3);
  EXPECT_EQ(c.experiment.integrator.rtol, 1e-8);
  EXPECT_EQ(c.experiment.method, Method::crons);
}

TEST(ConfigOverride, AcceptsQuotedStringsToo) {
  RunConfig c;
  apply_override(c, "method=\"monte_carlo\"");
  EXPECT_EQ(c.experiment.method, Method::monte_carlo);
}

TEST(ConfigOverride, RejectsMalformedAssignments) {
  RunConfig c;
  EXPECT_THROW(apply_override(c, "modes"), std::invalid_argument);
  EXPECT_THROW(apply_override(c, "=2"), std::invalid_argument);
  EXPECT_THROW(apply_override(c, "modes="), std::invalid_argument);
  EXPECT_THROW(apply_override(c, "bogus=2"), std::invalid_argument);
}

TEST(ConfigRender, RoundTripIsExact) {
  RunConfig c = parse_config_text(kSampleConfig);
  // Perturb with values whose decimal forms stress the echo precision.
  apply_override(c, "alpha=0.30000000000000004");
  apply_override(c, "horizon=30");
  apply_override(c, "integrator.rtol=9.9999999999999995e-07");
  const std::string rendered = render_config(c);
  const RunConfig reparsed = parse_config_text(rendered);
  EXPECT_TRUE(config_equal(reparsed, c));
  EXPECT_EQ(render_config(reparsed), rendered);
  EXPECT_EQ(reparsed.experiment.alpha, c.experiment.alpha);
  EXPECT_EQ(reparsed.experiment.integrator.rtol, c.experiment.integrator.rtol);
}

TEST(ConfigRender, ListsEveryKeyExactlyOnce) {
  const std::string rendered = render_config(RunConfig{});
  for (const char* key :
       {"problem", "method", "task", "modes", "enforce_conservation", "alpha", "point_count",
        "horizon", "sample_interval", "resample_each_step", "divergence_stop", "seed",
        "[integrator]", "rtol", "atol", "max_steps"}) {
    const auto first = rendered.find(key);
    ASSERT_NE(first, std::string::npos) << key;
  }
  // A canonical echo must itself parse cleanly (no duplicates, no unknowns).
  EXPECT_NO_THROW(parse_config_text(rendered));
}

TEST(ConfigRender, DistinctConfigsCompareUnequal) {
  RunConfig a, b;
  EXPECT_TRUE(config_equal(a, b));
  apply_override(b, "seed=99");
  EXPECT_FALSE(config_equal(a, b));
}

TEST(FullPrecision, SurvivesParseBackExactly) {
  for (double v : {0.1, 1.0 / 3.0, 9.9999999999999995e-07, 2.2250738585072014e-308, 12345.6789,
                   -0.30000000000000004}) {
    const std::string s = full_precision(v);
    EXPECT_EQ(std::stod(s), v) << s;
  }
}

}  // namespace
}  // namespace rons
