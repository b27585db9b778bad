#include "rlscale/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "rlscale/error.hpp"
#include "rlscale/rng.hpp"

namespace rlscale {

namespace {

void check_arch(const ArchSpec& a) {
    if (a.vocab_size < 1 || a.embed_dim < 1 || a.hidden_dim < 1 || a.context_window < 1) {
        throw UsageError("all architecture dimensions must be >= 1");
    }
}

// Offsets of each weight tensor inside the flat theta vector.
struct Layout {
    std::size_t embed, wx, wh, bh, wo, bo, total;
    int v, e, h;

    explicit Layout(const ArchSpec& a) : v(a.vocab_size), e(a.embed_dim), h(a.hidden_dim) {
        const auto sv = static_cast<std::size_t>(v);
        const auto se = static_cast<std::size_t>(e);
        const auto sh = static_cast<std::size_t>(h);
        embed = 0;
        wx = embed + sv * se;
        wh = wx + sh * se;
        bh = wh + sh * sh;
        wo = bh + sh;
        bo = wo + sv * sh;
        total = bo + sv;
    }
};

struct View {
    const double* embed;
    const double* wx;
    const double* wh;
    const double* bh;
    const double* wo;
    const double* bo;
    int v, e, h;

    View(const PolicyParams& p, const Layout& l)
        : embed(p.theta.data() + l.embed),
          wx(p.theta.data() + l.wx),
          wh(p.theta.data() + l.wh),
          bh(p.theta.data() + l.bh),
          wo(p.theta.data() + l.wo),
          bo(p.theta.data() + l.bo),
          v(l.v), e(l.e), h(l.h) {}
};

void check_tokens(std::span<const int> tokens, int vocab) {
    for (int t : tokens) {
        if (t < 0 || t >= vocab) {
            throw DataError("token " + std::to_string(t) + " outside vocabulary of size " +
                            std::to_string(vocab));
        }
    }
}

void check_context(const ArchSpec& arch, std::size_t prompt_len, std::size_t response_len) {
    if (prompt_len + response_len > static_cast<std::size_t>(arch.context_window)) {
        throw DataError("sequence of length " + std::to_string(prompt_len + response_len) +
                        " exceeds context window " + std::to_string(arch.context_window));
    }
}

// h_next = tanh(W_x E[token] + W_h h + b_h)
void step_state(const View& m, std::vector<double>& h, int token, std::vector<double>& scratch) {
    const double* x = m.embed + static_cast<std::size_t>(token) * static_cast<std::size_t>(m.e);
    scratch.assign(static_cast<std::size_t>(m.h), 0.0);
    for (int i = 0; i < m.h; ++i) {
        double acc = m.bh[i];
        const double* wx_row = m.wx + static_cast<std::size_t>(i) * static_cast<std::size_t>(m.e);
        for (int j = 0; j < m.e; ++j) acc += wx_row[j] * x[j];
        const double* wh_row = m.wh + static_cast<std::size_t>(i) * static_cast<std::size_t>(m.h);
        for (int j = 0; j < m.h; ++j) acc += wh_row[j] * h[static_cast<std::size_t>(j)];
        scratch[static_cast<std::size_t>(i)] = std::tanh(acc);
    }
    h.swap(scratch);
}

void logits_from_state(const View& m, const std::vector<double>& h, std::vector<double>& z) {
    z.assign(static_cast<std::size_t>(m.v), 0.0);
    for (int c = 0; c < m.v; ++c) {
        double acc = m.bo[c];
        const double* row = m.wo + static_cast<std::size_t>(c) * static_cast<std::size_t>(m.h);
        for (int j = 0; j < m.h; ++j) acc += row[j] * h[static_cast<std::size_t>(j)];
        z[static_cast<std::size_t>(c)] = acc;
    }
}

double log_sum_exp(const std::vector<double>& z) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return m + std::log(s);
}

} // namespace

std::int64_t count_params(const ArchSpec& arch) {
    check_arch(arch);
    const auto v = static_cast<std::int64_t>(arch.vocab_size);
    const auto e = static_cast<std::int64_t>(arch.embed_dim);
    const auto h = static_cast<std::int64_t>(arch.hidden_dim);
    // W_x (h*e) + W_h (h*h) + b_h (h) + W_o (v*h) + b_o (v); the embedding
    // table (v*e) is excluded by definition of N.
    return h * e + h * h + h + v * h + v;
}

std::int64_t total_params(const ArchSpec& arch) {
    return count_params(arch) +
           static_cast<std::int64_t>(arch.vocab_size) * static_cast<std::int64_t>(arch.embed_dim);
}

PolicyParams init_policy(const ArchSpec& arch, std::uint64_t seed) {
    check_arch(arch);
    PolicyParams p;
    p.arch = arch;
    p.n_nonembed = count_params(arch);
    const Layout layout(arch);
    p.theta.resize(layout.total);
    SplitMix64 rng(seed_mix(0x706F6C69ULL, seed));

    // Init scheme: embeddings at unit scale and a near-norm-preserving
    // recurrence, so a token's trace survives several steps of state
    // evolution; the output head near zero so the initial next-token
    // distribution is close to uniform. Gaussian throughout, deterministic
    // in seed.
    const double embed_scale = 1.0;
    const double wx_scale = 1.0 / std::sqrt(static_cast<double>(arch.embed_dim));
    const double wh_scale = 1.0 / std::sqrt(static_cast<double>(arch.hidden_dim));
    const double head_scale = 0.02;

    for (std::size_t i = layout.embed; i < layout.wx; ++i) p.theta[i] = embed_scale * rng.gaussian();
    for (std::size_t i = layout.wx; i < layout.wh; ++i) p.theta[i] = wx_scale * rng.gaussian();
    for (std::size_t i = layout.wh; i < layout.bh; ++i) p.theta[i] = wh_scale * rng.gaussian();
    for (std::size_t i = layout.bh; i < layout.wo; ++i) p.theta[i] = 0.0;
    for (std::size_t i = layout.wo; i < layout.total; ++i) p.theta[i] = head_scale * rng.gaussian();
    return p;
}

std::vector<double> logprob_response(const PolicyParams& params, std::span<const int> prompt,
                                     std::span<const int> response) {
    check_arch(params.arch);
    check_tokens(prompt, params.arch.vocab_size);
    check_tokens(response, params.arch.vocab_size);
    check_context(params.arch, prompt.size(), response.size());

    const Layout layout(params.arch);
    const View m(params, layout);
    std::vector<double> h(static_cast<std::size_t>(m.h), 0.0);
    std::vector<double> scratch, z;

    for (int t : prompt) step_state(m, h, t, scratch);

    std::vector<double> logprobs;
    logprobs.reserve(response.size());
    for (std::size_t i = 0; i < response.size(); ++i) {
        logits_from_state(m, h, z);
        logprobs.push_back(z[static_cast<std::size_t>(response[i])] - log_sum_exp(z));
        if (i + 1 < response.size()) step_state(m, h, response[i], scratch);
    }
    return logprobs;
}

std::vector<double> next_token_logits(const PolicyParams& params, std::span<const int> prefix) {
    check_arch(params.arch);
    check_tokens(prefix, params.arch.vocab_size);
    check_context(params.arch, prefix.size(), 0);
    const Layout layout(params.arch);
    const View m(params, layout);
    std::vector<double> h(static_cast<std::size_t>(m.h), 0.0);
    std::vector<double> scratch, z;
    for (int t : prefix) step_state(m, h, t, scratch);
    logits_from_state(m, h, z);
    return z;
}

Response sample(const PolicyParams& params, std::span<const int> prompt, double temperature,
                int max_len, std::uint64_t seed, int eos_token) {
    if (temperature <= 0.0) throw UsageError("temperature must be positive");
    if (max_len < 1) throw UsageError("max_len must be >= 1");
    check_arch(params.arch);
    check_tokens(prompt, params.arch.vocab_size);
    check_context(params.arch, prompt.size(), static_cast<std::size_t>(max_len));

    const Layout layout(params.arch);
    const View m(params, layout);
    std::vector<double> h(static_cast<std::size_t>(m.h), 0.0);
    std::vector<double> scratch, z, probs;
    for (int t : prompt) step_state(m, h, t, scratch);

    // Below this temperature the softmax is numerically a point mass;
    // decode by argmax so the zero-temperature limit is well defined.
    constexpr double kArgmaxTemperature = 1e-6;

    SplitMix64 rng(seed);
    Response r;
    for (int pos = 0; pos < max_len; ++pos) {
        logits_from_state(m, h, z);
        const double lse1 = log_sum_exp(z);

        int chosen;
        if (temperature < kArgmaxTemperature) {
            chosen = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
        } else {
            probs.assign(z.size(), 0.0);
            double zmax = *std::max_element(z.begin(), z.end());
            double total = 0.0;
            for (std::size_t c = 0; c < z.size(); ++c) {
                probs[c] = std::exp((z[c] - zmax) / temperature);
                total += probs[c];
            }
            const double u = rng.uniform01() * total;
            double cum = 0.0;
            chosen = static_cast<int>(z.size()) - 1;
            for (std::size_t c = 0; c < probs.size(); ++c) {
                cum += probs[c];
                if (u < cum) {
                    chosen = static_cast<int>(c);
                    break;
                }
            }
        }

        // Log-probability under the temperature-1 policy, not the sampling
        // distribution: this is the training-side quantity.
        r.tokens.push_back(chosen);
        r.logprobs.push_back(z[static_cast<std::size_t>(chosen)] - lse1);
        if (chosen == eos_token) break;
        if (pos + 1 < max_len) step_state(m, h, chosen, scratch);
    }
    return r;
}

std::vector<double> grad_weighted_logprob(const PolicyParams& params, std::span<const int> prompt,
                                          std::span<const int> response,
                                          std::span<const double> weights) {
    check_arch(params.arch);
    check_tokens(prompt, params.arch.vocab_size);
    check_tokens(response, params.arch.vocab_size);
    check_context(params.arch, prompt.size(), response.size());
    if (weights.size() != response.size()) {
        throw DataError("weights length does not match response length");
    }

    const Layout layout(params.arch);
    const View m(params, layout);
    const auto sh = static_cast<std::size_t>(m.h);

    // Forward pass, keeping every hidden state. States are indexed by the
    // number of consumed tokens; predictions for response token i come from
    // state prompt_len + i. The final response token is never consumed.
    const std::size_t n_pred = response.size();
    const std::size_t n_states = prompt.size() + (n_pred > 0 ? n_pred - 1 : 0);
    std::vector<int> consumed;
    consumed.reserve(n_states);
    for (int t : prompt) consumed.push_back(t);
    for (std::size_t i = 0; i + 1 < n_pred; ++i) consumed.push_back(response[i]);

    std::vector<std::vector<double>> states;
    states.reserve(n_states + 1);
    states.emplace_back(sh, 0.0);
    {
        std::vector<double> h(sh, 0.0), scratch;
        for (int t : consumed) {
            step_state(m, h, t, scratch);
            states.push_back(h);
        }
    }

    std::vector<double> grad(params.theta.size(), 0.0);
    double* g_embed = grad.data() + layout.embed;
    double* g_wx = grad.data() + layout.wx;
    double* g_wh = grad.data() + layout.wh;
    double* g_bh = grad.data() + layout.bh;
    double* g_wo = grad.data() + layout.wo;
    double* g_bo = grad.data() + layout.bo;

    std::vector<double> dh(sh, 0.0), da(sh, 0.0), z, p;

    // Backward through time. At state index j we (1) inject the softmax
    // gradient if a prediction was made from this state, then (2) push dh
    // through the tanh recurrence to state j-1.
    const std::size_t first_pred_state = prompt.size();
    for (std::size_t j = n_states + 1; j-- > 0;) {
        const std::vector<double>& hj = states[j];

        if (j >= first_pred_state) {
            const std::size_t i = j - first_pred_state; // response position predicted here
            if (i < n_pred) {
                logits_from_state(m, hj, z);
                const double lse = log_sum_exp(z);
                p.assign(z.size(), 0.0);
                for (std::size_t c = 0; c < z.size(); ++c) p[c] = std::exp(z[c] - lse);

                const double w = weights[i];
                const int target = response[i];
                // d/dz_c of w * log softmax(z)[target] = w * (1{c==target} - p_c)
                for (int c = 0; c < m.v; ++c) {
                    double dz = -w * p[static_cast<std::size_t>(c)];
                    if (c == target) dz += w;
                    g_bo[c] += dz;
                    double* wo_grad_row =
                        g_wo + static_cast<std::size_t>(c) * sh;
                    const double* wo_row =
                        m.wo + static_cast<std::size_t>(c) * sh;
                    for (std::size_t k = 0; k < sh; ++k) {
                        wo_grad_row[k] += dz * hj[k];
                        dh[k] += dz * wo_row[k];
                    }
                }
            }
        }

        if (j == 0) break;

        // h_j = tanh(a_j) with a_j = W_x x + W_h h_{j-1} + b_h
        const int token = consumed[j - 1];
        const std::vector<double>& hprev = states[j - 1];
        const double* x = m.embed + static_cast<std::size_t>(token) * static_cast<std::size_t>(m.e);
        double* x_grad =
            g_embed + static_cast<std::size_t>(token) * static_cast<std::size_t>(m.e);

        for (std::size_t i = 0; i < sh; ++i) da[i] = dh[i] * (1.0 - hj[i] * hj[i]);
        std::fill(dh.begin(), dh.end(), 0.0);
        for (std::size_t i = 0; i < sh; ++i) {
            const double d = da[i];
            if (d == 0.0) continue;
            g_bh[i] += d;
            double* wx_grad_row = g_wx + i * static_cast<std::size_t>(m.e);
            const double* wx_row = m.wx + i * static_cast<std::size_t>(m.e);
            for (int k = 0; k < m.e; ++k) {
                wx_grad_row[k] += d * x[k];
                x_grad[k] += d * wx_row[k];
            }
            double* wh_grad_row = g_wh + i * sh;
            const double* wh_row = m.wh + i * sh;
            for (std::size_t k = 0; k < sh; ++k) {
                wh_grad_row[k] += d * hprev[k];
                dh[k] += d * wh_row[k];
            }
        }
    }
    return grad;
}

std::vector<double> grad_logprob(const PolicyParams& params, std::span<const int> prompt,
                                 std::span<const int> response) {
    std::vector<double> ones(response.size(), 1.0);
    return grad_weighted_logprob(params, prompt, response, ones);
}

void save_policy(const PolicyParams& params, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    const char magic[8] = {'R', 'L', 'S', 'P', 'O', 'L', '0', '1'};
    out.write(magic, sizeof(magic));
    const std::int32_t dims[4] = {params.arch.vocab_size, params.arch.embed_dim,
                                  params.arch.hidden_dim, params.arch.context_window};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    const std::uint64_t n = params.theta.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(params.theta.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
    if (!out) throw IoError("failed writing " + path.string());
}

PolicyParams load_policy(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, "RLSPOL01", 8) != 0) {
        throw DataError(path.string() + ": not a policy checkpoint");
    }
    std::int32_t dims[4];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (!in) throw DataError(path.string() + ": truncated checkpoint header");

    PolicyParams p;
    p.arch = {dims[0], dims[1], dims[2], dims[3]};
    check_arch(p.arch);
    if (n != static_cast<std::uint64_t>(total_params(p.arch))) {
        throw DataError(path.string() + ": parameter count does not match architecture");
    }
    p.n_nonembed = count_params(p.arch);
    p.theta.resize(n);
    in.read(reinterpret_cast<char*>(p.theta.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw DataError(path.string() + ": truncated parameter data");
    return p;
}

} // namespace rlscale
