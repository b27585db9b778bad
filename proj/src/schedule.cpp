#include "rlscale/schedule.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "rlscale/error.hpp"
#include "rlscale/rng.hpp"

namespace rlscale {

std::string ordering_name(Ordering o) {
    return o == Ordering::difficulty_ascending ? "difficulty-ascending" : "pass-rate-descending";
}

Ordering ordering_from_name(const std::string& name) {
    if (name == "difficulty-ascending") return Ordering::difficulty_ascending;
    if (name == "pass-rate-descending") return Ordering::pass_rate_descending;
    throw UsageError("unknown ordering: " + name);
}

namespace {

void sort_instances(std::vector<TaskInstance>& instances, Ordering key,
                    const std::map<std::string, double>* pass_rates) {
    if (key == Ordering::difficulty_ascending) {
        std::stable_sort(instances.begin(), instances.end(),
                         [](const TaskInstance& a, const TaskInstance& b) {
                             if (a.difficulty != b.difficulty) return a.difficulty < b.difficulty;
                             return a.task_id < b.task_id;
                         });
        return;
    }
    if (!pass_rates) throw DataError("pass-rate ordering requires pass rates");
    for (const auto& t : instances) {
        if (!pass_rates->count(t.task_id)) {
            throw DataError("missing pass rate for task " + t.task_id);
        }
    }
    // Decreasing pass rate == increasing empirical difficulty.
    std::stable_sort(instances.begin(), instances.end(),
                     [&](const TaskInstance& a, const TaskInstance& b) {
                         const double ra = pass_rates->at(a.task_id);
                         const double rb = pass_rates->at(b.task_id);
                         if (ra != rb) return ra > rb;
                         return a.task_id < b.task_id;
                     });
}

} // namespace

Dataset curriculum_sort(const Dataset& dataset, Ordering key,
                        const std::map<std::string, double>* pass_rates) {
    Dataset sorted = dataset;
    sort_instances(sorted.instances, key, pass_rates);
    return sorted;
}

SampleStream make_reuse_schedule(const Dataset& dataset, const ScheduleSpec& spec,
                                 const std::map<std::string, double>* pass_rates) {
    if (spec.total_samples < 1) throw UsageError("schedule: total_samples must be >= 1");
    if (spec.reuse_tau < 1) throw UsageError("schedule: reuse_tau must be >= 1");
    if (spec.batch_size < 1) throw UsageError("schedule: batch_size must be >= 1");
    if (spec.total_samples % spec.reuse_tau != 0) {
        throw UsageError("schedule: total_samples (" + std::to_string(spec.total_samples) +
                         ") not divisible by reuse_tau (" + std::to_string(spec.reuse_tau) + ")");
    }
    if (spec.total_samples % spec.batch_size != 0) {
        throw UsageError("schedule: total_samples not divisible by batch_size");
    }

    const std::int64_t subset_size = spec.total_samples / spec.reuse_tau;
    const auto n = static_cast<std::int64_t>(dataset.instances.size());
    if (subset_size > n) {
        throw CapacityError("schedule needs a subset of " + std::to_string(subset_size) +
                            " but the dataset has only " + std::to_string(n) + " instances");
    }

    // Uniform subset without replacement: partial Fisher-Yates over the
    // index range, driven solely by spec.seed so runs sample independently.
    std::vector<std::int64_t> indices(static_cast<std::size_t>(n));
    std::iota(indices.begin(), indices.end(), 0);
    SplitMix64 rng(seed_mix(0x73636865ULL, spec.seed));
    for (std::int64_t i = 0; i < subset_size; ++i) {
        const auto j = i + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(n - i)));
        std::swap(indices[static_cast<std::size_t>(i)], indices[static_cast<std::size_t>(j)]);
    }

    std::vector<TaskInstance> subset;
    subset.reserve(static_cast<std::size_t>(subset_size));
    for (std::int64_t i = 0; i < subset_size; ++i) {
        subset.push_back(dataset.instances[static_cast<std::size_t>(indices[static_cast<std::size_t>(i)])]);
    }
    sort_instances(subset, spec.ordering, pass_rates);

    SampleStream stream;
    stream.spec = spec;
    stream.epoch_length = subset_size;
    stream.ids.reserve(static_cast<std::size_t>(spec.total_samples));
    for (std::int64_t epoch = 0; epoch < spec.reuse_tau; ++epoch) {
        for (const auto& t : subset) stream.ids.push_back(t.task_id);
    }
    return stream;
}

void write_stream(const SampleStream& stream, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "seed=" << stream.spec.seed << " tau=" << stream.spec.reuse_tau
        << " s_const=" << stream.spec.total_samples << "\n";
    for (const auto& id : stream.ids) out << id << "\n";
    if (!out) throw IoError("failed writing " + path.string());
}

SampleStream read_stream(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw DataError(path.string() + ": missing header");

    SampleStream stream;
    {
        std::istringstream hs(header);
        std::string field;
        while (hs >> field) {
            const auto eq = field.find('=');
            if (eq == std::string::npos) throw DataError(path.string() + ": malformed header");
            const std::string key = field.substr(0, eq);
            const std::string value = field.substr(eq + 1);
            try {
                if (key == "seed") stream.spec.seed = std::stoull(value);
                else if (key == "tau") stream.spec.reuse_tau = std::stoll(value);
                else if (key == "s_const") stream.spec.total_samples = std::stoll(value);
                else throw DataError(path.string() + ": unknown header field " + key);
            } catch (const std::invalid_argument&) {
                throw DataError(path.string() + ": malformed header value for " + key);
            }
        }
    }
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty()) stream.ids.push_back(line);
    }
    if (stream.spec.reuse_tau >= 1 &&
        static_cast<std::int64_t>(stream.ids.size()) % stream.spec.reuse_tau == 0) {
        stream.epoch_length = static_cast<std::int64_t>(stream.ids.size()) / stream.spec.reuse_tau;
    }
    return stream;
}

} // namespace rlscale
