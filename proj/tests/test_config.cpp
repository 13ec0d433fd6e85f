#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "bp/config.hpp"
#include "bp/io.hpp"

using namespace bp;
namespace fs = std::filesystem;

TEST_CASE("defaults match the documented values") {
  Config c = default_config();
  CHECK(c.backbone.side == 16);
  CHECK(c.backbone.input_dim == 256);
  CHECK(c.train.learning_rate == 5e-4);
  CHECK(c.train.batch_size == 2);
  CHECK(c.train.t0 == 0.4);
  CHECK(c.train.weight_decay == 0.0);
  CHECK(c.sampler.steps == 20);
  CHECK(c.sampler.ddbm_start == 0.98);
  CHECK(c.experiment.seeds == std::vector<std::uint64_t>{1, 2, 3});
}

TEST_CASE("default config text parses back to the defaults") {
  Config parsed = parse_config(default_config_text());
  Config defaults = default_config();
  CHECK(parsed.backbone.hidden_dim == defaults.backbone.hidden_dim);
  CHECK(parsed.train.iterations == defaults.train.iterations);
  CHECK(parsed.sampler.t0 == defaults.sampler.t0);
  CHECK(parsed.experiment.t0_candidates == defaults.experiment.t0_candidates);
}

TEST_CASE("sections and values are applied") {
  Config c = parse_config("[backbone]\nside = 8\nhidden_dim = 64\n"
                          "[train]\ntrajectory = ddbm\nvariant = residual\n"
                          "degradation = stripe\nlearning_rate = 1e-3\n"
                          "[experiment]\nseeds = 4, 5\n");
  CHECK(c.backbone.side == 8);
  CHECK(c.backbone.input_dim == 64);
  CHECK(c.backbone.hidden_dim == 64);
  CHECK(c.train.trajectory == Trajectory::Ddbm);
  CHECK(c.train.variant == PromptVariant::Residual);
  CHECK(c.train.kind == DegradationKind::Stripe);
  CHECK(c.train.learning_rate == 1e-3);
  CHECK(c.experiment.seeds == std::vector<std::uint64_t>{4, 5});
}

TEST_CASE("unknown keys are rejected by name") {
  CHECK_THROWS_WITH_AS(parse_config("[train]\nlerning_rate = 1\n"),
                       doctest::Contains("train.lerning_rate"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(parse_config("[nosuch]\nx = 1\n"), doctest::Contains("nosuch.x"),
                       std::invalid_argument);
  CHECK_THROWS(parse_config("[train\niterations = 5\n"));
  CHECK_THROWS(parse_config("[train]\niterations 5\n"));
  CHECK_THROWS(parse_config("[train]\niterations = five\n"));
}

TEST_CASE("comments and blank lines are ignored") {
  Config c = parse_config("# a comment\n\n[train]\niterations = 9  # trailing\n");
  CHECK(c.train.iterations == 9);
}

TEST_CASE("raw text is preserved for the run-directory echo") {
  const std::string text = "[train]\niterations = 3\n";
  CHECK(parse_config(text).raw_text == text);
}

TEST_CASE("environment seed override replaces every section seed") {
  const fs::path path = fs::temp_directory_path() / "bp_cfg_env.ini";
  write_text_file(path, "[backbone]\nseed = 1\n[train]\nseed = 2\n[sampler]\nseed = 3\n");
  setenv("BRIDGEPROMPT_SEED", "99", 1);
  Config c = load_config(path);
  unsetenv("BRIDGEPROMPT_SEED");
  CHECK(c.backbone.seed == 99);
  CHECK(c.train.seed == 99);
  CHECK(c.sampler.seed == 99);
  Config plain = load_config(path);
  CHECK(plain.backbone.seed == 1);
  CHECK(plain.train.seed == 2);
}

TEST_CASE("missing config file is an error") { CHECK_THROWS(load_config("/nonexistent/x.ini")); }
