#pragma once

#include <cstdint>
#include <vector>

namespace rlscale {

// Training FLOPs for one step: forward ~2NT plus backward ~4NT, so 6NT
// total for N non-embedding parameters and T processed tokens. Token counts
// stay exact integers; FLOPs are doubles (desk-scale magnitudes are far
// below the 2^53 integer-exact range).
double step_flops(std::int64_t n_nonembed, std::int64_t tokens);

struct FlopsLedger {
    std::int64_t n_nonembed = 0;
    std::vector<std::int64_t> per_step_tokens;
    std::vector<double> per_step_flops;
    std::vector<double> cumulative; // prefix sums, non-decreasing

    // Appends one step; cumulative tail grows by 6 * n_nonembed * t_step.
    void accumulate(std::int64_t t_step);

    double total() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

} // namespace rlscale
