#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "rlscale/error.hpp"
#include "rlscale/policy.hpp"
#include "rlscale/rng.hpp"
#include "rlscale/taskgen.hpp"

#include "test_helpers.hpp"

using namespace rlscale;

namespace {

double sum_logprob(const PolicyParams& p, const std::vector<int>& prompt,
                   const std::vector<int>& response) {
    const auto lp = logprob_response(p, prompt, response);
    return std::accumulate(lp.begin(), lp.end(), 0.0);
}

} // namespace

TEST_CASE("count_params equals the sum of weight tensor shapes") {
    const ArchSpec arch{16, 4, 8, 32};
    // Shape-by-shape oracle for the documented architecture.
    auto by_shapes = [](const ArchSpec& a) {
        const std::int64_t wx = static_cast<std::int64_t>(a.hidden_dim) * a.embed_dim;
        const std::int64_t wh = static_cast<std::int64_t>(a.hidden_dim) * a.hidden_dim;
        const std::int64_t bh = a.hidden_dim;
        const std::int64_t wo = static_cast<std::int64_t>(a.vocab_size) * a.hidden_dim;
        const std::int64_t bo = a.vocab_size;
        return wx + wh + bh + wo + bo;
    };
    CHECK(count_params(arch) == by_shapes(arch));
    CHECK(count_params(arch) == 248);
    CHECK(total_params(arch) == 248 + 16 * 4);

    SUBCASE("doubling the hidden width grows the count by the quadratic term") {
        ArchSpec wide = arch;
        wide.hidden_dim *= 2;
        CHECK(count_params(wide) == by_shapes(wide));
        // Growth: 3h^2 + h(e + v + 1) for h -> 2h.
        const std::int64_t h = arch.hidden_dim;
        CHECK(count_params(wide) - count_params(arch) ==
              3 * h * h + h * (arch.embed_dim + arch.vocab_size + 1));
    }

    SUBCASE("invalid dimensions are rejected") {
        CHECK_THROWS_AS(count_params(ArchSpec{16, 4, 0, 32}), UsageError);
        CHECK_THROWS_AS(init_policy(ArchSpec{0, 4, 8, 32}, 0), UsageError);
    }
}

TEST_CASE("init_policy is deterministic in seed") {
    const ArchSpec arch{vocab::kSize, 8, 16, 64};
    const PolicyParams a = init_policy(arch, 5);
    const PolicyParams b = init_policy(arch, 5);
    const PolicyParams c = init_policy(arch, 6);
    CHECK(a.theta == b.theta);
    CHECK(a.theta != c.theta);
    CHECK(a.n_nonembed == count_params(arch));
    CHECK(static_cast<std::int64_t>(a.theta.size()) == total_params(arch));
}

TEST_CASE("initial next-token distribution is near uniform") {
    const ArchSpec arch{vocab::kSize, 8, 16, 64};
    const PolicyParams p = init_policy(arch, 12);
    const std::vector<int> prompt = {1, 2, vocab::kPlus, 3, vocab::kSep};
    const auto z = next_token_logits(p, prompt);

    const double zmax = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double v : z) total += std::exp(v - zmax);
    double entropy = 0.0;
    for (double v : z) {
        const double prob = std::exp(v - zmax) / total;
        entropy -= prob * std::log(prob);
    }
    const double uniform_entropy = std::log(static_cast<double>(arch.vocab_size));
    CHECK(entropy <= uniform_entropy + 1e-12);
    CHECK(entropy >= 0.95 * uniform_entropy);
}

TEST_CASE("softmax normalization: enumerated probabilities sum to 1") {
    const ArchSpec arch{vocab::kSize, 4, 6, 32};
    const PolicyParams p = init_policy(arch, 3);
    const std::vector<int> prompt = {4, 9, vocab::kSep};

    // Position 0 and a deeper position, both enumerated over the vocabulary.
    for (const std::vector<int> prefix :
         {std::vector<int>{}, std::vector<int>{vocab::kAns, 7}}) {
        double total = 0.0;
        for (int tok = 0; tok < arch.vocab_size; ++tok) {
            std::vector<int> response = prefix;
            response.push_back(tok);
            const auto lp = logprob_response(p, prompt, response);
            total += std::exp(lp.back());
        }
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("single-token vocabulary gives zero logprobs and zero gradient") {
    const ArchSpec arch{1, 2, 3, 16};
    const PolicyParams p = init_policy(arch, 1);
    const std::vector<int> prompt = {0, 0};
    const std::vector<int> response = {0, 0, 0};
    for (double lp : logprob_response(p, prompt, response)) CHECK(lp == 0.0);
    for (double g : grad_logprob(p, prompt, response)) CHECK(g == 0.0);
}

TEST_CASE("two-class softmax matches a hand computation") {
    // vocab 2, embed 1, hidden 1: every tensor is a scalar or a pair.
    const ArchSpec arch{2, 1, 1, 8};
    PolicyParams p = init_policy(arch, 0);
    // theta layout: E[2], wx, wh, bh, wo[2], bo[2]
    p.theta = {0.3, -0.4, 0.7, 0.25, -0.1, 0.8, -0.5, 0.2, -0.6};

    const std::vector<int> prompt = {0};
    const std::vector<int> response = {1, 0};
    const auto lp = logprob_response(p, prompt, response);

    const double h1 = std::tanh(0.7 * 0.3 + 0.25 * 0.0 + (-0.1));
    const double z0_1 = 0.8 * h1 + 0.2;
    const double z1_1 = -0.5 * h1 + (-0.6);
    const double expected_first = z1_1 - std::log(std::exp(z0_1) + std::exp(z1_1));

    const double h2 = std::tanh(0.7 * (-0.4) + 0.25 * h1 + (-0.1));
    const double z0_2 = 0.8 * h2 + 0.2;
    const double z1_2 = -0.5 * h2 + (-0.6);
    const double expected_second = z0_2 - std::log(std::exp(z0_2) + std::exp(z1_2));

    CHECK(lp[0] == doctest::Approx(expected_first).epsilon(1e-14));
    CHECK(lp[1] == doctest::Approx(expected_second).epsilon(1e-14));
}

TEST_CASE("sampling is deterministic and respects the argmax limit") {
    const ArchSpec arch{vocab::kSize, 6, 10, 32};
    const PolicyParams p = init_policy(arch, 8);
    const std::vector<int> prompt = {2, 3, vocab::kSep};

    const Response a = sample(p, prompt, 1.0, 6, 42);
    const Response b = sample(p, prompt, 1.0, 6, 42);
    CHECK(a.tokens == b.tokens);
    CHECK(a.logprobs == b.logprobs);

    SUBCASE("argmax decoding is seed independent") {
        const Response x = sample(p, prompt, 1e-9, 6, 1);
        const Response y = sample(p, prompt, 1e-9, 6, 999);
        CHECK(x.tokens == y.tokens);
        // Greedy decode agrees with enumerating the next-token distribution.
        std::vector<int> prefix = prompt;
        for (int tok : x.tokens) {
            const auto z = next_token_logits(p, prefix);
            CHECK(tok == static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin()));
            prefix.push_back(tok);
        }
    }

    SUBCASE("EOS terminates the response") {
        PolicyParams eos_lover = testutil::make_unigram_policy({{vocab::kEos, 0.95}});
        const Response r = sample(eos_lover, prompt, 1.0, 8, 5, vocab::kEos);
        CHECK(r.tokens.back() == vocab::kEos);
        CHECK(r.tokens.size() <= 8);
    }
}

TEST_CASE("sampled token frequencies match the tempered distribution") {
    const ArchSpec arch{8, 3, 5, 16};
    PolicyParams p = init_policy(arch, 77);
    // Spread the logits so temperature has something to reshape.
    for (auto& w : p.theta) w *= 40.0;
    const std::vector<int> prompt = {1, 4};
    const double temperature = 0.7;

    const auto z = next_token_logits(p, prompt);
    std::vector<double> expected(z.size());
    const double zmax = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) {
        expected[c] = std::exp((z[c] - zmax) / temperature);
        total += expected[c];
    }
    for (auto& e : expected) e /= total;

    const int n = 10000;
    std::vector<int> counts(z.size(), 0);
    for (int i = 0; i < n; ++i) {
        const Response r =
            sample(p, prompt, temperature, 1, seed_mix(1234, static_cast<std::uint64_t>(i)));
        counts[static_cast<std::size_t>(r.tokens[0])]++;
    }
    for (std::size_t c = 0; c < z.size(); ++c) {
        const double observed = static_cast<double>(counts[c]) / n;
        const double sigma = std::sqrt(expected[c] * (1.0 - expected[c]) / n);
        CHECK(std::abs(observed - expected[c]) <= 3.0 * sigma + 1e-9);
    }
}

TEST_CASE("sampled logprobs equal logprob_response") {
    const ArchSpec arch{vocab::kSize, 6, 12, 48};
    const PolicyParams p = init_policy(arch, 21);
    const std::vector<int> prompt = {5, 6, 7, vocab::kSep};

    for (double temperature : {1.0, 0.7, 2.5}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Response r = sample(p, prompt, temperature, 10, seed, vocab::kEos);
            const auto lp = logprob_response(p, prompt, r.tokens);
            REQUIRE(lp.size() == r.logprobs.size());
            for (std::size_t i = 0; i < lp.size(); ++i) {
                CHECK(lp[i] == doctest::Approx(r.logprobs[i]).epsilon(1e-12));
                CHECK(r.logprobs[i] <= 0.0);
            }
        }
    }
}

TEST_CASE("grad_logprob matches central finite differences") {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        const ArchSpec arch{6 + static_cast<int>(rng.below(4)), 2 + static_cast<int>(rng.below(3)),
                            3 + static_cast<int>(rng.below(5)), 32};
        const PolicyParams p = init_policy(arch, rng.next_u64());
        std::vector<int> prompt, response;
        for (int i = 0; i < 3; ++i) {
            prompt.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(arch.vocab_size))));
        }
        for (int i = 0; i < 4; ++i) {
            response.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(arch.vocab_size))));
        }

        const auto analytic = grad_logprob(p, prompt, response);
        const auto numeric = testutil::finite_difference_gradient(
            p, [&](const PolicyParams& q) { return sum_logprob(q, prompt, response); });
        CHECK(testutil::max_rel_error(analytic, numeric) < 1e-4);
    }
}

TEST_CASE("weighted gradient weights each position") {
    const ArchSpec arch{10, 3, 4, 16};
    const PolicyParams p = init_policy(arch, 9);
    const std::vector<int> prompt = {1, 2};
    const std::vector<int> response = {3, 4, 5};
    const std::vector<double> weights = {0.5, -1.25, 2.0};

    const auto analytic = grad_weighted_logprob(p, prompt, response, weights);
    const auto numeric = testutil::finite_difference_gradient(p, [&](const PolicyParams& q) {
        const auto lp = logprob_response(q, prompt, response);
        double total = 0.0;
        for (std::size_t i = 0; i < lp.size(); ++i) total += weights[i] * lp[i];
        return total;
    });
    CHECK(testutil::max_rel_error(analytic, numeric) < 1e-4);
}

TEST_CASE("embedding rows of unused tokens get zero gradient") {
    const ArchSpec arch{vocab::kSize, 4, 6, 32};
    const PolicyParams p = init_policy(arch, 2);
    const std::vector<int> prompt = {1, 2, vocab::kSep};
    const std::vector<int> response = {vocab::kAns, 2, vocab::kEos};
    const auto grad = grad_logprob(p, prompt, response);

    std::set<int> used(prompt.begin(), prompt.end());
    used.insert(response.begin(), response.end());
    for (int tok = 0; tok < arch.vocab_size; ++tok) {
        if (used.count(tok)) continue;
        for (int j = 0; j < arch.embed_dim; ++j) {
            CHECK(grad[static_cast<std::size_t>(tok * arch.embed_dim + j)] == 0.0);
        }
    }
}

TEST_CASE("context overflow is a length error") {
    const ArchSpec arch{8, 2, 2, 6};
    const PolicyParams p = init_policy(arch, 0);
    const std::vector<int> prompt = {0, 1, 2, 3};
    const std::vector<int> response = {0, 1, 2};
    CHECK_THROWS_AS(logprob_response(p, prompt, response), DataError);
    CHECK_THROWS_AS(grad_logprob(p, prompt, response), DataError);
    CHECK_THROWS_AS(sample(p, prompt, 1.0, 3, 0), DataError);
    CHECK_NOTHROW(logprob_response(p, prompt, std::vector<int>{0, 1}));
}

TEST_CASE("checkpoints round-trip exactly") {
    testutil::TempDir dir("policy");
    const ArchSpec arch{vocab::kSize, 8, 16, 64};
    const PolicyParams p = init_policy(arch, 33);
    save_policy(p, dir.path() / "p.ckpt");
    const PolicyParams q = load_policy(dir.path() / "p.ckpt");
    CHECK(q.arch.vocab_size == arch.vocab_size);
    CHECK(q.arch.embed_dim == arch.embed_dim);
    CHECK(q.arch.hidden_dim == arch.hidden_dim);
    CHECK(q.arch.context_window == arch.context_window);
    CHECK(q.n_nonembed == p.n_nonembed);
    CHECK(q.theta == p.theta); // bitwise

    SUBCASE("corrupt files are rejected") {
        std::ofstream junk(dir.path() / "junk.ckpt", std::ios::binary);
        junk << "definitely not a checkpoint";
        junk.close();
        CHECK_THROWS_AS(load_policy(dir.path() / "junk.ckpt"), DataError);
    }
}
