#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "rlscale/policy.hpp"
#include "rlscale/rng.hpp"
#include "rlscale/taskgen.hpp"

namespace testutil {

// Central-difference gradient oracle, independent of any backward-pass code.
inline std::vector<double> finite_difference_gradient(
    rlscale::PolicyParams params, const std::function<double(const rlscale::PolicyParams&)>& f,
    double step = 1e-5) {
    std::vector<double> grad(params.theta.size(), 0.0);
    for (std::size_t i = 0; i < params.theta.size(); ++i) {
        const double saved = params.theta[i];
        params.theta[i] = saved + step;
        const double up = f(params);
        params.theta[i] = saved - step;
        const double down = f(params);
        params.theta[i] = saved;
        grad[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

// Coordinates where both gradients are below the floor are dominated by
// central-difference roundoff (~1e-10 absolute at step 1e-5), so the
// denominator is floored to keep the metric meaningful there.
inline double max_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1e-5});
        worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
    }
    return worst;
}

// Zeroed policy with output biases set to log target unigram probabilities.
// With all other weights zero the hidden state is exactly zero, so the
// next-token distribution equals the requested unigram at every position.
inline rlscale::PolicyParams make_unigram_policy(const std::map<int, double>& probs,
                                                 int context_window = 64) {
    rlscale::ArchSpec arch{rlscale::vocab::kSize, 4, 4, context_window};
    rlscale::PolicyParams p = rlscale::init_policy(arch, 0);
    std::fill(p.theta.begin(), p.theta.end(), 0.0);
    double listed = 0.0;
    for (const auto& [token, prob] : probs) listed += prob;
    if (listed >= 1.0) throw std::logic_error("unigram probabilities must sum below 1");
    const double floor_prob =
        (1.0 - listed) / static_cast<double>(rlscale::vocab::kSize - probs.size());
    const std::size_t bo_offset = p.theta.size() - static_cast<std::size_t>(arch.vocab_size);
    for (int t = 0; t < arch.vocab_size; ++t) {
        const auto it = probs.find(t);
        const double prob = it != probs.end() ? it->second : floor_prob;
        p.theta[bo_offset + static_cast<std::size_t>(t)] = std::log(prob);
    }
    return p;
}

// Gradient-ascent fine-tuning on one (prompt -> target) pair; the cheap way
// to manufacture a policy that reliably emits a chosen sequence.
inline rlscale::PolicyParams teach_sequence(rlscale::PolicyParams policy,
                                            const std::vector<int>& prompt,
                                            const std::vector<int>& target, int iterations = 300,
                                            double lr = 0.5) {
    for (int it = 0; it < iterations; ++it) {
        const auto grad = rlscale::grad_logprob(policy, prompt, target);
        for (std::size_t i = 0; i < policy.theta.size(); ++i) {
            policy.theta[i] += lr * grad[i];
        }
    }
    return policy;
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<std::uint64_t> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("rlscale_" + tag + "_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Independent interpreter for modular-chain prompts: parses the token
// sequence back into (operands, operators, modulus) and evaluates
// left-to-right. Deliberately separate from the generator's incremental
// evaluation.
inline std::vector<int> eval_chain_prompt(const std::vector<int>& prompt) {
    using namespace rlscale;
    std::vector<long long> operands;
    std::vector<int> ops;
    long long modulus = -1;
    std::size_t i = 0;
    bool in_modulus = false;
    while (i < prompt.size() && prompt[i] != vocab::kSep) {
        if (vocab::is_digit(prompt[i])) {
            long long value = 0;
            while (i < prompt.size() && vocab::is_digit(prompt[i])) {
                value = value * 10 + (prompt[i] - vocab::kDigit0);
                ++i;
            }
            if (in_modulus) {
                modulus = value;
            } else {
                operands.push_back(value);
            }
        } else if (prompt[i] == vocab::kPlus || prompt[i] == vocab::kMinus ||
                   prompt[i] == vocab::kTimes) {
            ops.push_back(prompt[i]);
            ++i;
        } else if (prompt[i] == vocab::kMod) {
            in_modulus = true;
            ++i;
        } else {
            throw std::runtime_error("unexpected token in chain prompt");
        }
    }
    if (modulus <= 0 || operands.size() != ops.size() + 1) {
        throw std::runtime_error("malformed chain prompt");
    }
    long long value = operands[0];
    for (std::size_t k = 0; k < ops.size(); ++k) {
        if (ops[k] == vocab::kPlus) value = (value + operands[k + 1]) % modulus;
        else if (ops[k] == vocab::kMinus) value = ((value - operands[k + 1]) % modulus + modulus) % modulus;
        else value = (value * operands[k + 1]) % modulus;
    }
    std::vector<int> digits;
    for (char c : std::to_string(value)) digits.push_back(vocab::kDigit0 + (c - '0'));
    return digits;
}

// The canonical correct response: delimiter + answer + EOS.
inline std::vector<int> ideal_response(const rlscale::TaskInstance& task) {
    std::vector<int> r;
    r.push_back(rlscale::vocab::kAns);
    r.insert(r.end(), task.answer.begin(), task.answer.end());
    r.push_back(rlscale::vocab::kEos);
    return r;
}

} // namespace testutil
