#include "doctest.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>

#include "rlscale.h"

#include "test_helpers.hpp"

namespace {

// Writes a fast end-to-end config next to the default example.
void write_tiny_config(const std::filesystem::path& path) {
    std::ofstream out(path);
    out << "[model]\n"
           "embed_dim = 4\n"
           "hidden_dim = 6\n"
           "context_window = 48\n"
           "[data]\n"
           "family = modular-chain\n"
           "dataset_size = 24\n"
           "difficulty_min = 1\n"
           "difficulty_max = 2\n"
           "eval_size = 8\n"
           "[train]\n"
           "learning_rate = 0.05\n"
           "batch_size = 4\n"
           "group_size = 4\n"
           "max_prompt_len = 20\n"
           "max_response_len = 4\n"
           "steps = 6\n"
           "eval_every = 3\n"
           "seed = 1\n"
           "[schedule]\n"
           "reuse_tau = 1\n";
}

} // namespace

TEST_CASE("version and error strings are always available") {
    CHECK(rls_version() != nullptr);
    CHECK(std::string(rls_version()).find("rlscale") == 0);
    CHECK(rls_last_error() != nullptr);
}

TEST_CASE("config handles load, override and reject unknown keys") {
    testutil::TempDir dir("capi");
    const auto config_path = (dir.path() / "tiny.ini").string();
    write_tiny_config(config_path);

    rls_config* config = nullptr;
    REQUIRE(rls_config_load(config_path.c_str(), &config) == RLS_OK);
    REQUIRE(config != nullptr);

    CHECK(rls_config_set(config, "train.seed", "9") == RLS_OK);
    CHECK(rls_config_set(config, "train.nope", "9") == RLS_USAGE_ERROR);
    CHECK(std::string(rls_last_error()).find("train.nope") != std::string::npos);
    CHECK(rls_config_set(config, "train.clip_ratio", "2.0") == RLS_USAGE_ERROR);

    rls_config_free(config);

    SUBCASE("missing files report an I/O error") {
        rls_config* nothing = nullptr;
        CHECK(rls_config_load((dir.path() / "absent.ini").string().c_str(), &nothing) ==
              RLS_IO_ERROR);
        CHECK(nothing == nullptr);
    }
    SUBCASE("null arguments are usage errors") {
        CHECK(rls_config_load(nullptr, nullptr) == RLS_USAGE_ERROR);
    }
}

TEST_CASE("example config writer emits a loadable file") {
    testutil::TempDir dir("capi");
    const auto path = (dir.path() / "example.ini").string();
    REQUIRE(rls_config_write_example(path.c_str()) == RLS_OK);

    rls_config* config = nullptr;
    CHECK(rls_config_load(path.c_str(), &config) == RLS_OK);
    rls_config_free(config);
}

TEST_CASE("run, fit, check and eval through the C surface") {
    testutil::TempDir dir("capi");
    const auto config_path = (dir.path() / "tiny.ini").string();
    write_tiny_config(config_path);
    const auto runs_dir = (dir.path() / "runs").string();

    rls_config* config = nullptr;
    REQUIRE(rls_config_load(config_path.c_str(), &config) == RLS_OK);

    char run_id[64] = {0};
    REQUIRE(rls_run(config, runs_dir.c_str(), run_id, sizeof(run_id)) == RLS_OK);
    CHECK(std::strlen(run_id) > 0);
    const auto run_dir = std::filesystem::path(runs_dir) / run_id;
    CHECK(std::filesystem::exists(run_dir / "steps.log"));

    SUBCASE("sweep counts successes and failures") {
        int ok = -1, failed = -1;
        const double widths[2] = {4, 6};
        REQUIRE(rls_sweep(config, "model_size", widths, 2, 1, runs_dir.c_str(), &ok, &failed) ==
                RLS_OK);
        CHECK(ok == 2);
        CHECK(failed == 0);
        CHECK(rls_sweep(config, "bogus_axis", widths, 2, 1, runs_dir.c_str(), &ok, &failed) ==
              RLS_USAGE_ERROR);
    }

    SUBCASE("fit and check write their reports") {
        int n_groups = -1;
        REQUIRE(rls_fit(runs_dir.c_str(), "flops", "loss", 0.0, nullptr, &n_groups) == RLS_OK);
        CHECK(n_groups == 1);
        CHECK(std::filesystem::exists(std::filesystem::path(runs_dir) / "fit_flops_loss.csv"));
        CHECK(rls_fit(runs_dir.c_str(), "sideways", "loss", 0.0, nullptr, nullptr) ==
              RLS_USAGE_ERROR);

        REQUIRE(rls_check(runs_dir.c_str(), 0.0, nullptr, &n_groups) == RLS_OK);
        CHECK(n_groups == 1);
        CHECK(std::filesystem::exists(std::filesystem::path(runs_dir) / "consistency.csv"));

        const auto empty_dir = (dir.path() / "no_runs").string();
        std::filesystem::create_directories(empty_dir);
        REQUIRE(rls_fit(empty_dir.c_str(), "flops", "loss", 0.0, nullptr, &n_groups) == RLS_OK);
        CHECK(n_groups == 0);
    }

    SUBCASE("eval returns loss and counts") {
        double loss = -1.0;
        int64_t correct = -1, total = -1;
        REQUIRE(rls_eval((run_dir / "policy_final.ckpt").string().c_str(),
                         (run_dir / "eval_tasks.jsonl").string().c_str(), 0.7, 0, &loss, &correct,
                         &total) == RLS_OK);
        CHECK(total == 8);
        CHECK(correct >= 0);
        CHECK(correct <= total);
        CHECK(loss == 1.0 - static_cast<double>(correct) / static_cast<double>(total));

        CHECK(rls_eval("missing.ckpt", (run_dir / "eval_tasks.jsonl").string().c_str(), 0.7, 0,
                       &loss, &correct, &total) == RLS_IO_ERROR);
    }

    rls_config_free(config);
}
