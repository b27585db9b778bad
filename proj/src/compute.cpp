#include "rlscale/compute.hpp"

#include "rlscale/error.hpp"

namespace rlscale {

double step_flops(std::int64_t n_nonembed, std::int64_t tokens) {
    if (n_nonembed < 1) throw UsageError("step_flops: n_nonembed must be >= 1");
    if (tokens < 0) throw UsageError("step_flops: tokens must be >= 0");
    // Double multiplication: exact for any desk-scale run (6*n*t far below
    // 2^53) and overflow-free for synthetic LLM-scale ledgers.
    return 6.0 * static_cast<double>(n_nonembed) * static_cast<double>(tokens);
}

void FlopsLedger::accumulate(std::int64_t t_step) {
    const double flops = step_flops(n_nonembed, t_step);
    per_step_tokens.push_back(t_step);
    per_step_flops.push_back(flops);
    cumulative.push_back(total() + flops);
}

} // namespace rlscale
