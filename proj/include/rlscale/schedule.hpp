#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rlscale/taskgen.hpp"

namespace rlscale {

enum class Ordering { difficulty_ascending, pass_rate_descending };

std::string ordering_name(Ordering o);
Ordering ordering_from_name(const std::string& name);

struct ScheduleSpec {
    std::int64_t total_samples = 0; // S, number of scheduled samples
    std::int64_t reuse_tau = 1;     // each selected sample appears tau times
    std::int64_t batch_size = 1;
    Ordering ordering = Ordering::difficulty_ascending;
    std::uint64_t seed = 0;
};

// Curriculum stream: tau identical epochs over a subset of size
// total_samples / tau, each epoch in the same (sorted) order.
struct SampleStream {
    std::vector<std::string> ids; // length total_samples
    std::int64_t epoch_length = 0;
    ScheduleSpec spec;
};

// Stable curriculum sort: ascending difficulty, or descending pass rate,
// ties broken by task_id. pass_rates is required (and consulted) only for
// pass-rate ordering; a task without a rate is a data error.
Dataset curriculum_sort(const Dataset& dataset, Ordering key,
                        const std::map<std::string, double>* pass_rates = nullptr);

// Samples a subset of size total_samples/tau uniformly without replacement
// (independently per seed, not nested), sorts it by the ordering key, then
// concatenates tau identical copies. Batches are consecutive slices; no
// reshuffling between epochs.
SampleStream make_reuse_schedule(const Dataset& dataset, const ScheduleSpec& spec,
                                 const std::map<std::string, double>* pass_rates = nullptr);

// Audit format: header line "seed=<n> tau=<n> s_const=<n>", then one id per line.
void write_stream(const SampleStream& stream, const std::filesystem::path& path);
SampleStream read_stream(const std::filesystem::path& path);

} // namespace rlscale
