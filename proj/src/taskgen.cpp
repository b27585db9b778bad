#include "rlscale/taskgen.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "rlscale/error.hpp"
#include "rlscale/policy.hpp"
#include "rlscale/rng.hpp"

namespace rlscale {

namespace vocab {

bool is_digit(int token) { return token >= kDigit0 && token < kDigit0 + 10; }
bool is_letter(int token) { return token >= kLetter0 && token < kLetter0 + kNumLetters; }

std::string name(int token) {
    if (is_digit(token)) return std::string(1, static_cast<char>('0' + token - kDigit0));
    if (is_letter(token)) return std::string(1, static_cast<char>('a' + token - kLetter0));
    switch (token) {
        case kPlus: return "+";
        case kMinus: return "-";
        case kTimes: return "*";
        case kMod: return "mod";
        case kSep: return "|";
        case kAns: return "=>";
        case kEos: return "<eos>";
        default: return "?" + std::to_string(token);
    }
}

std::string render(const std::vector<int>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out += ' ';
        out += name(tokens[i]);
    }
    return out;
}

} // namespace vocab

std::string family_name(Family f) {
    return f == Family::modular_chain ? "modular-chain" : "copy-reverse";
}

Family family_from_name(const std::string& name) {
    if (name == "modular-chain") return Family::modular_chain;
    if (name == "copy-reverse") return Family::copy_reverse;
    throw UsageError("unknown task family: " + name);
}

int max_difficulty(Family f) {
    return f == Family::modular_chain ? 12 : 16;
}

namespace {

// Modulus ladder for modular-chain. Harder chains use a wider prime, so the
// answer digit count (and hence the structural hardness of emitting it)
// grows with difficulty.
constexpr int kPrimes[] = {7, 13, 29, 53, 97};

int chain_prime(int difficulty) {
    const int idx = std::min(difficulty, 5) - 1;
    return kPrimes[idx];
}

void check_family_difficulty(Family family, int difficulty) {
    if (difficulty < 1 || difficulty > max_difficulty(family)) {
        throw UsageError("difficulty " + std::to_string(difficulty) + " out of range 1.." +
                         std::to_string(max_difficulty(family)) + " for family " +
                         family_name(family));
    }
}

void append_digits(std::vector<int>& out, int value) {
    std::string s = std::to_string(value);
    for (char c : s) out.push_back(vocab::kDigit0 + (c - '0'));
}

std::uint64_t instance_seed(Family family, int difficulty, std::uint64_t seed, std::int64_t index) {
    const std::uint64_t tag = family == Family::modular_chain ? 0x6D6F6443ULL : 0x63707276ULL;
    return seed_mix(seed_mix(tag, static_cast<std::uint64_t>(difficulty)),
                    seed, static_cast<std::uint64_t>(index));
}

} // namespace

std::int64_t family_capacity(Family f, int difficulty) {
    check_family_difficulty(f, difficulty);
    constexpr std::int64_t kCap = std::int64_t{1} << 62;
    long double count = 1.0L;
    if (f == Family::copy_reverse) {
        for (int i = 0; i < difficulty; ++i) count *= vocab::kNumLetters;
    } else {
        const int p = chain_prime(difficulty);
        count = p; // first operand
        for (int i = 0; i < difficulty; ++i) count *= 3.0L * p; // operator + operand per link
    }
    if (count >= static_cast<long double>(kCap)) return kCap;
    return static_cast<std::int64_t>(count);
}

TaskInstance generate_task(Family family, int difficulty, std::uint64_t seed, std::int64_t index) {
    check_family_difficulty(family, difficulty);

    TaskInstance task;
    task.family = family;
    task.difficulty = difficulty;
    {
        std::ostringstream id;
        id << family_name(family) << "-d" << difficulty << "-s" << seed << "-i" << index;
        task.task_id = id.str();
    }

    SplitMix64 rng(instance_seed(family, difficulty, seed, index));

    if (family == Family::copy_reverse) {
        // Prompt: `difficulty` letters then the end-of-prompt marker.
        // Answer: the letters reversed.
        std::vector<int> letters(static_cast<std::size_t>(difficulty));
        for (auto& l : letters) {
            l = vocab::kLetter0 + static_cast<int>(rng.below(vocab::kNumLetters));
        }
        task.prompt = letters;
        task.prompt.push_back(vocab::kSep);
        task.answer.assign(letters.rbegin(), letters.rend());
        return task;
    }

    // modular-chain: a left-to-right chain of `difficulty` operations over
    // operands in [0, p), evaluated mod p. Prompt spells out the expression
    // and the modulus; the answer is the decimal digit sequence of the result.
    const int p = chain_prime(difficulty);
    int value = static_cast<int>(rng.below(static_cast<std::uint64_t>(p)));
    append_digits(task.prompt, value);
    for (int i = 0; i < difficulty; ++i) {
        const int op = static_cast<int>(rng.below(3));
        const int operand = static_cast<int>(rng.below(static_cast<std::uint64_t>(p)));
        switch (op) {
            case 0:
                task.prompt.push_back(vocab::kPlus);
                value = (value + operand) % p;
                break;
            case 1:
                task.prompt.push_back(vocab::kMinus);
                value = ((value - operand) % p + p) % p;
                break;
            default:
                task.prompt.push_back(vocab::kTimes);
                value = static_cast<int>((static_cast<std::int64_t>(value) * operand) % p);
                break;
        }
        append_digits(task.prompt, operand);
    }
    task.prompt.push_back(vocab::kMod);
    append_digits(task.prompt, p);
    task.prompt.push_back(vocab::kSep);
    append_digits(task.answer, value);
    return task;
}

int verify(const TaskInstance& task, const std::vector<int>& response) {
    // Tokens after the first EOS never count.
    auto end = std::find(response.begin(), response.end(), vocab::kEos);
    auto ans = std::find(response.begin(), end, vocab::kAns);
    if (ans == end) return 0;
    ++ans;
    const auto span_len = static_cast<std::size_t>(end - ans);
    if (span_len != task.answer.size()) return 0;
    return std::equal(ans, end, task.answer.begin()) ? 1 : 0;
}

Dataset build_dataset(const DatasetSpec& spec, std::uint64_t seed) {
    if (spec.size < 1) throw UsageError("dataset size must be >= 1");
    if (spec.difficulty_min < 1 || spec.difficulty_min > spec.difficulty_max) {
        throw UsageError("invalid difficulty range");
    }
    check_family_difficulty(spec.family, spec.difficulty_min);
    check_family_difficulty(spec.family, spec.difficulty_max);

    // Even stratification across the difficulty range; the remainder goes
    // to the lower difficulties.
    const int n_strata = spec.difficulty_max - spec.difficulty_min + 1;
    std::vector<int> quota(static_cast<std::size_t>(n_strata), spec.size / n_strata);
    for (int i = 0; i < spec.size % n_strata; ++i) quota[static_cast<std::size_t>(i)]++;

    for (int s = 0; s < n_strata; ++s) {
        const int d = spec.difficulty_min + s;
        if (quota[static_cast<std::size_t>(s)] > family_capacity(spec.family, d)) {
            throw CapacityError("requested " + std::to_string(quota[static_cast<std::size_t>(s)]) +
                                " instances at difficulty " + std::to_string(d) + " but family " +
                                family_name(spec.family) + " has only " +
                                std::to_string(family_capacity(spec.family, d)));
        }
    }

    Dataset dataset;
    dataset.seed = seed;
    dataset.spec = spec;
    dataset.instances.reserve(static_cast<std::size_t>(spec.size));

    for (int s = 0; s < n_strata; ++s) {
        const int d = spec.difficulty_min + s;
        const int want = quota[static_cast<std::size_t>(s)];
        std::set<std::vector<int>> seen_prompts;
        std::int64_t index = 0;
        // Capacity was prechecked, so fresh instances keep arriving; the
        // attempt cap only guards against a broken generator.
        const std::int64_t max_attempts = 1000000 + static_cast<std::int64_t>(want) * 1000;
        while (static_cast<int>(seen_prompts.size()) < want) {
            if (index >= max_attempts) {
                throw DataError("exhausted attempts deduplicating difficulty " + std::to_string(d));
            }
            TaskInstance t = generate_task(spec.family, d, seed, index++);
            if (seen_prompts.insert(t.prompt).second) {
                dataset.instances.push_back(std::move(t));
            }
        }
    }
    return dataset;
}

double estimate_pass_rate(const PolicyParams& policy, const TaskInstance& task,
                          int n_samples, double temperature, std::uint64_t seed) {
    if (n_samples < 1) throw UsageError("estimate_pass_rate: n_samples must be >= 1");
    const int max_len = static_cast<int>(task.answer.size()) + 2;
    int hits = 0;
    for (int j = 0; j < n_samples; ++j) {
        Response r = sample(policy, task.prompt, temperature, max_len,
                            seed_mix(seed, static_cast<std::uint64_t>(j)), vocab::kEos);
        hits += verify(task, r.tokens);
    }
    return static_cast<double>(hits) / static_cast<double>(n_samples);
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    for (const auto& t : dataset.instances) {
        nlohmann::ordered_json j;
        j["task_id"] = t.task_id;
        j["family"] = family_name(t.family);
        j["difficulty"] = t.difficulty;
        j["prompt"] = t.prompt;
        j["answer"] = t.answer;
        out << j.dump() << "\n";
    }
    if (!out) throw IoError("failed writing " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    Dataset dataset;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        TaskInstance t;
        try {
            t.task_id = j.at("task_id").get<std::string>();
            t.family = family_from_name(j.at("family").get<std::string>());
            t.difficulty = j.at("difficulty").get<int>();
            t.prompt = j.at("prompt").get<std::vector<int>>();
            t.answer = j.at("answer").get<std::vector<int>>();
        } catch (const nlohmann::json::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": missing or mistyped field: " + e.what());
        }
        if (t.answer.empty()) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": empty answer");
        }
        dataset.instances.push_back(std::move(t));
    }
    if (!dataset.instances.empty()) {
        dataset.spec.family = dataset.instances.front().family;
        dataset.spec.size = static_cast<int>(dataset.instances.size());
        auto [lo, hi] = std::minmax_element(
            dataset.instances.begin(), dataset.instances.end(),
            [](const TaskInstance& a, const TaskInstance& b) { return a.difficulty < b.difficulty; });
        dataset.spec.difficulty_min = lo->difficulty;
        dataset.spec.difficulty_max = hi->difficulty;
    }
    return dataset;
}

} // namespace rlscale
