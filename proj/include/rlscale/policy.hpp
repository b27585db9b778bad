#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace rlscale {

// Tiny autoregressive policy: embedding table -> single tanh recurrence ->
// linear softmax head. All math in double precision so analytic gradients
// survive central-difference verification.
//
//   x_t = E[s_t]                                  (embedding row, not counted in N)
//   h_t = tanh(W_x x_t + W_h h_{t-1} + b_h)       (h_0 = 0)
//   z_t = W_o h_t + b_o                           (next-token logits)
//
// Non-embedding parameter count N = h*e + h*h + h + v*h + v.
struct ArchSpec {
    int vocab_size = 0;
    int embed_dim = 0;
    int hidden_dim = 0;
    int context_window = 0;
};

std::int64_t count_params(const ArchSpec& arch);  // non-embedding (N)
std::int64_t total_params(const ArchSpec& arch);  // embedding + non-embedding

struct PolicyParams {
    ArchSpec arch;
    std::vector<double> theta; // [E | W_x | W_h | b_h | W_o | b_o], row-major
    std::int64_t n_nonembed = 0;
};

struct Response {
    std::vector<int> tokens;      // includes the EOS token when one was sampled
    std::vector<double> logprobs; // natural log, evaluated at temperature 1
    int length() const { return static_cast<int>(tokens.size()); }
};

// Gaussian init, scale 0.02: small enough that the initial next-token
// distribution is near uniform. Deterministic in seed.
PolicyParams init_policy(const ArchSpec& arch, std::uint64_t seed);

// Exact autoregressive conditional log-probabilities of `response` given
// `prompt`, natural log. Throws DataError if prompt+response exceeds the
// context window.
std::vector<double> logprob_response(const PolicyParams& params,
                                     std::span<const int> prompt,
                                     std::span<const int> response);

// Temperature sampling, stopping at eos_token (included in the returned
// tokens) or max_len; a negative eos_token disables early stopping. The
// returned logprobs are always the temperature-1 values (the training
// distribution); the temperature reshapes only the sampling distribution.
// Temperatures below 1e-6 decode by argmax (lowest token id wins ties).
// Deterministic in seed.
Response sample(const PolicyParams& params, std::span<const int> prompt,
                double temperature, int max_len, std::uint64_t seed,
                int eos_token = -1);

// Gradient of sum_t w_t * log pi(response_t | prompt, response_<t) with
// respect to theta, via backprop through time. Length equals theta length.
std::vector<double> grad_weighted_logprob(const PolicyParams& params,
                                          std::span<const int> prompt,
                                          std::span<const int> response,
                                          std::span<const double> weights);

// Gradient of the summed per-token log-probabilities (all weights 1).
std::vector<double> grad_logprob(const PolicyParams& params,
                                 std::span<const int> prompt,
                                 std::span<const int> response);

// Logits of the next-token distribution after consuming `prefix`.
std::vector<double> next_token_logits(const PolicyParams& params,
                                      std::span<const int> prefix);

// Checkpoints: binary little-endian dump of arch fields + theta,
// round-trip exact.
void save_policy(const PolicyParams& params, const std::filesystem::path& path);
PolicyParams load_policy(const std::filesystem::path& path);

} // namespace rlscale
