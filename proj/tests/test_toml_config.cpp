// Copyright (c) 2026 SLD toolkit contributors
// SPDX-License-Identifier: Apache-2.0
#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>

#include "sld/config.hpp"
#include "sld/toml.hpp"

namespace {

const char* kMinimalConfig = R"(
# a small synthetic run
[dataset]
kind = "synthetic"
num_classes = 4
dim = 16
samples_per_class = 25
superclass_pairs = [[0, 1]]
cluster_overlap = 1.5
seed = 7

[teacher]
hidden = [32, 16]

[student]
hidden = [8]

[schedule]
epochs = 6
batch_size = 8
lr0 = 0.05
decay_epochs = [3, 5]
momentum = 0.9
weight_decay = 5e-4

[run]
output_dir = "runs/test"
seeds = [1, 2]
)";

}  // namespace

TEST_CASE("toml parser") {
  SECTION("scalars, arrays and comments") {
    const auto t = sld::toml::parse(R"(
top = 3            # trailing comment
name = "hello \"quoted\""
flag = true
rate = 5e-4
[sec]
vals = [1, 2,
        3]         # multi-line array
pairs = [[0, 1], [2, 3]]
)");
    CHECK(t.at("").at("top").as_int("top") == 3);
    CHECK(t.at("").at("name").as_string("name") == "hello \"quoted\"");
    CHECK(t.at("").at("flag").as_bool("flag") == true);
    CHECK(t.at("").at("rate").as_double("rate") == 5e-4);
    const auto& vals = t.at("sec").at("vals").as_array("vals");
    REQUIRE(vals.size() == 3);
    CHECK(vals[2].as_int("vals") == 3);
    const auto& pairs = t.at("sec").at("pairs").as_array("pairs");
    REQUIRE(pairs.size() == 2);
    CHECK(pairs[1].as_array("pairs")[0].as_int("pairs") == 2);
  }
  SECTION("syntax errors carry line numbers") {
    CHECK_THROWS_WITH(sld::toml::parse("a = \n"), Catch::Matchers::ContainsSubstring("line"));
    CHECK_THROWS_AS(sld::toml::parse("a == 3\n"), sld::config_error);
    CHECK_THROWS_AS(sld::toml::parse("[sec\nx = 1\n"), sld::config_error);
    CHECK_THROWS_AS(sld::toml::parse("x = [1, 2\n"), sld::config_error);
    CHECK_THROWS_AS(sld::toml::parse("x = 1\nx = 2\n"), sld::config_error);
    CHECK_THROWS_AS(sld::toml::parse("[s]\n[s]\n"), sld::config_error);
  }
  SECTION("float formatting is round-trip and marked as float") {
    CHECK(sld::toml::format_float(0.05) == "0.05");
    CHECK(sld::toml::format_float(1.0) == "1.0");
    CHECK(sld::toml::format_float(5e-4) == "5e-04");
    CHECK(sld::toml::parse("x = 5e-04\n").at("").at("x").as_double("x") == 5e-4);
  }
}

TEST_CASE("run config schema") {
  SECTION("minimal config parses with documented defaults") {
    const auto cfg = sld::parse_run_config(sld::toml::parse(kMinimalConfig));
    CHECK(cfg.dataset.kind == sld::dataset_kind::synthetic);
    CHECK(cfg.dataset.synth.num_classes == 4);
    CHECK(cfg.dataset.synth.val_samples_per_class == 5);  // samples_per_class / 5
    CHECK(cfg.schedule.epochs == 6);
    // distillation defaults
    CHECK(cfg.distill.temps.temps == std::vector<double>{1, 2, 3, 4, 5, 6});
    CHECK(cfg.distill.gamma == 3);  // first decay epoch
    CHECK(cfg.distill.use_ts);
    CHECK(cfg.distill.use_ss);
    CHECK(cfg.distill.use_pa);
    CHECK(cfg.distill.ce_weight == 1.0);
    CHECK(cfg.distill.t_squared_scaling);
    CHECK(cfg.distill.detach_pseudo_teacher);
    CHECK(cfg.distill.teacher_correction == sld::correction_kind::swap);
    CHECK(cfg.distill.student_correction == sld::correction_kind::swap);
    CHECK(cfg.seeds == std::vector<std::uint64_t>{1, 2});
  }
  SECTION("unknown keys are hard errors naming the key") {
    std::string bad = kMinimalConfig;
    bad += "\n[distill]\nuse_tss = true\n";
    CHECK_THROWS_WITH(sld::parse_run_config(sld::toml::parse(bad)),
                      Catch::Matchers::ContainsSubstring("distill.use_tss"));
  }
  SECTION("missing required fields name the field") {
    CHECK_THROWS_WITH(sld::parse_run_config(sld::toml::parse("[dataset]\nkind = \"synthetic\"\n")),
                      Catch::Matchers::ContainsSubstring("num_classes"));
    std::string no_seeds = R"(
[dataset]
kind = "synthetic"
num_classes = 3
dim = 4
samples_per_class = 5
[teacher]
hidden = [4]
[student]
hidden = [4]
[run]
output_dir = "x"
)";
    CHECK_THROWS_WITH(sld::parse_run_config(sld::toml::parse(no_seeds)),
                      Catch::Matchers::ContainsSubstring("run.seeds"));
  }
  SECTION("keys from a different dataset kind are rejected") {
    std::string bad = R"(
[dataset]
kind = "synthetic"
num_classes = 3
dim = 4
samples_per_class = 5
train_images = "x.idx"
[teacher]
hidden = [4]
[student]
hidden = [4]
[run]
output_dir = "x"
seeds = [1]
)";
    CHECK_THROWS_WITH(sld::parse_run_config(sld::toml::parse(bad)),
                      Catch::Matchers::ContainsSubstring("train_images"));
  }
  SECTION("conditional swap keys must come together") {
    std::string bad = kMinimalConfig;
    bad += "\n[distill]\nswap_alpha_threshold = 0.5\n";
    CHECK_THROWS_AS(sld::parse_run_config(sld::toml::parse(bad)), sld::config_error);
    std::string good = kMinimalConfig;
    good += "\n[distill]\nswap_alpha_threshold = 0.5\nswap_alpha_mode = \"less_than\"\n";
    const auto cfg = sld::parse_run_config(sld::toml::parse(good));
    REQUIRE(cfg.distill.rule.condition.has_value());
    CHECK(cfg.distill.rule.condition->alpha_threshold == 0.5);
  }
  SECTION("seed offset environment variable shifts all seeds") {
    ::setenv("SLD_SEED_OFFSET", "100", 1);
    const auto cfg = sld::parse_run_config(sld::toml::parse(kMinimalConfig));
    ::unsetenv("SLD_SEED_OFFSET");
    CHECK(cfg.seeds == std::vector<std::uint64_t>{101, 102});
    CHECK(cfg.dataset.synth.seed == 107);
    ::setenv("SLD_SEED_OFFSET", "abc", 1);
    CHECK_THROWS_AS(sld::parse_run_config(sld::toml::parse(kMinimalConfig)), sld::config_error);
    ::unsetenv("SLD_SEED_OFFSET");
  }
  SECTION("resolved echo is byte-stable across a round trip") {
    const auto cfg = sld::parse_run_config(sld::toml::parse(kMinimalConfig));
    const std::string echo1 = sld::write_resolved_toml(cfg);
    const auto cfg2 = sld::parse_run_config(sld::toml::parse(echo1));
    const std::string echo2 = sld::write_resolved_toml(cfg2);
    CHECK(echo1 == echo2);
  }
  SECTION("model entry validation") {
    std::string bad = kMinimalConfig;
    bad.replace(bad.find("hidden = [8]"), 12, "hidden = [ ]");
    CHECK_THROWS_AS(sld::parse_run_config(sld::toml::parse(bad)), sld::config_error);
    const auto cfg = sld::parse_run_config(sld::toml::parse(kMinimalConfig));
    const auto spec = sld::resolve_model_spec(cfg.teacher, "teacher", 16, 4);
    CHECK(spec.layer_sizes == std::vector<int>{32, 16, 4});

    std::string cnn = kMinimalConfig;
    cnn.replace(cnn.find("hidden = [32, 16]"), 17, "kind = \"small_cnn\"\nchannels = [2, 3]");
    const auto cfg2 = sld::parse_run_config(sld::toml::parse(cnn));
    const auto cnn_spec = sld::resolve_model_spec(cfg2.teacher, "teacher", 64, 4);
    CHECK(cnn_spec.kind == sld::model_spec::kind_t::small_cnn);
    CHECK(cnn_spec.layer_sizes == std::vector<int>{2, 3, 4});
    // square-of-multiple-of-4 input requirement
    CHECK_THROWS_AS(sld::resolve_model_spec(cfg2.teacher, "teacher", 16 * 16 - 1, 4),
                    sld::config_error);
  }
}
