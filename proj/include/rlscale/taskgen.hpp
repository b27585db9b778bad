#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace rlscale {

struct PolicyParams; // policy.hpp

// Fixed project-wide token vocabulary. Small enough for enumeration-based
// test oracles, rich enough to encode both task families plus the
// answer-delimiter / end-of-sequence protocol.
namespace vocab {
inline constexpr int kDigit0 = 0; // '0'..'9' occupy ids 0..9
inline constexpr int kPlus = 10;
inline constexpr int kMinus = 11;
inline constexpr int kTimes = 12;
inline constexpr int kMod = 13;
inline constexpr int kSep = 14; // end-of-prompt marker
inline constexpr int kAns = 15; // answer delimiter in responses
inline constexpr int kEos = 16;
inline constexpr int kLetter0 = 17; // 8 symbol tokens, ids 17..24
inline constexpr int kNumLetters = 8;
inline constexpr int kSize = 25;

bool is_digit(int token);
bool is_letter(int token);
std::string name(int token);
std::string render(const std::vector<int>& tokens);
} // namespace vocab

enum class Family { modular_chain, copy_reverse };

std::string family_name(Family f);
Family family_from_name(const std::string& name);

// One synthetic verifiable problem. Regenerating with the same
// (family, difficulty, seed, index) yields a bit-identical instance.
struct TaskInstance {
    std::string task_id;
    Family family = Family::modular_chain;
    int difficulty = 1;
    std::vector<int> prompt;
    std::vector<int> answer; // ground truth, non-empty, no delimiter/EOS
};

struct DatasetSpec {
    Family family = Family::modular_chain;
    int size = 1;
    int difficulty_min = 1;
    int difficulty_max = 1;
};

struct Dataset {
    std::vector<TaskInstance> instances;
    std::uint64_t seed = 0;
    DatasetSpec spec;
};

// Supported difficulty range per family (chain length / string length).
int max_difficulty(Family f);

// Number of distinct instances a family can produce at one difficulty,
// saturating at 2^62 to avoid overflow.
std::int64_t family_capacity(Family f, int difficulty);

// Deterministic, index-addressable generation: the instance is a pure
// function of (family, difficulty, seed, index).
TaskInstance generate_task(Family family, int difficulty, std::uint64_t seed, std::int64_t index);

// Binary rule-based reward. The response is truncated at the first EOS
// token; the span after the first answer delimiter must equal task.answer
// exactly. Missing delimiter, empty span or any mismatch scores 0.
int verify(const TaskInstance& task, const std::vector<int>& response);

// spec.size unique instances (deduplicated by prompt), difficulties
// stratified as evenly as possible across [difficulty_min, difficulty_max]
// with remainders assigned to the lower difficulties. Instances are ordered
// by difficulty, then generation index.
Dataset build_dataset(const DatasetSpec& spec, std::uint64_t seed);

// Fraction of n_samples sampled responses that verify to reward 1.
// Responses are sampled with max_len = answer length + 2 (delimiter +
// answer + EOS). Deterministic in seed.
double estimate_pass_rate(const PolicyParams& policy, const TaskInstance& task,
                          int n_samples, double temperature, std::uint64_t seed);

// Line-delimited dataset serialization: one task per line with fields
// (task_id, family, difficulty, prompt, answer).
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

} // namespace rlscale
