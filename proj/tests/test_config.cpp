#include "doctest.h"

#include <fstream>

#include "rlscale/config.hpp"
#include "rlscale/error.hpp"

#include "test_helpers.hpp"

using namespace rlscale;

TEST_CASE("the example config parses and carries the reference block") {
    const ExperimentConfig c = parse_config_text(example_config_text());
    CHECK(c.hidden_dim == 16);
    CHECK(c.train.batch_size == 16);
    CHECK(c.train.clip_ratio == 0.2);
    CHECK(c.train.kl_coeff == 0.01);
    CHECK(c.train.train_temperature == 1.0);
    CHECK(c.train.eval_temperature == 0.7);
    CHECK(c.width_ladder == std::vector<int>{8, 16, 32, 96, 256});

    // The full-scale reference block mirrors the large-scale study's table
    // and never drives the toy runs.
    CHECK(c.full_scale_reference.at("learning_rate") == "1e-6");
    CHECK(c.full_scale_reference.at("batch_size") == "512");
    CHECK(c.full_scale_reference.at("kl_loss_coefficient") == "0.001");
    CHECK(c.full_scale_reference.at("rollout_temperature_train") == "1.0");
    CHECK(c.full_scale_reference.at("rollout_temperature_eval") == "0.7");
    CHECK(c.full_scale_reference.at("clip_ratio") == "0.2");
    CHECK(c.full_scale_reference.at("input_sequence_length") == "2048");
    CHECK(c.full_scale_reference.at("output_sequence_length") == "4096");
    CHECK(c.train.learning_rate != 1e-6); // toy value stays active
}

TEST_CASE("config errors name the offending field") {
    auto expect_error_mentioning = [](const std::string& text, const std::string& needle) {
        try {
            parse_config_text(text);
            FAIL(("expected a config error mentioning " + needle));
        } catch (const UsageError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    expect_error_mentioning("[train]\nclip_ratio = 1.5\n", "train.clip_ratio");
    expect_error_mentioning("[train]\nlearning_rate = -1\n", "train.learning_rate");
    expect_error_mentioning("[train]\ngroup_size = 1\n", "train.group_size");
    expect_error_mentioning("[train]\nlearning_rate = banana\n", "train.learning_rate");
    expect_error_mentioning("[data]\ndataset_size = 0\n", "data.dataset_size");
    expect_error_mentioning("[schedule]\nreuse_tau = 7\n", "schedule.reuse_tau");
    expect_error_mentioning("[model]\ncontext_window = 4\n", "model.context_window");
    expect_error_mentioning("[train]\nbananas = 4\n", "unknown config key train.bananas");
}

TEST_CASE("config file loading and overrides") {
    testutil::TempDir dir("config");
    const auto path = dir.path() / "exp.ini";
    {
        std::ofstream out(path);
        out << example_config_text();
    }
    ExperimentConfig c = load_config(path);
    CHECK(c.train.seed == 1);

    apply_override(c, "train.seed", "42");
    CHECK(c.train.seed == 42);
    apply_override(c, "data.family", "copy-reverse");
    CHECK(c.family == Family::copy_reverse);

    CHECK_THROWS_AS(apply_override(c, "noseparator", "1"), UsageError);
    CHECK_THROWS_AS(apply_override(c, "train.bogus", "1"), UsageError);
    CHECK_THROWS_AS(apply_override(c, "train.clip_ratio", "7"), UsageError);

    SUBCASE("missing file is an I/O error") {
        CHECK_THROWS_AS(load_config(dir.path() / "nope.ini"), IoError);
    }
}

TEST_CASE("derived sample budget") {
    ExperimentConfig c = parse_config_text(example_config_text());
    CHECK(c.total_samples() == c.steps * c.train.batch_size);
}
