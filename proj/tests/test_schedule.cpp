#include "doctest.h"

#include <algorithm>
#include <map>
#include <set>

#include "rlscale/error.hpp"
#include "rlscale/schedule.hpp"

#include "test_helpers.hpp"

using namespace rlscale;

namespace {

Dataset toy_dataset(int size, int d_min, int d_max, std::uint64_t seed) {
    return build_dataset({Family::modular_chain, size, d_min, d_max}, seed);
}

std::map<std::string, int> id_counts(const SampleStream& stream) {
    std::map<std::string, int> counts;
    for (const auto& id : stream.ids) counts[id]++;
    return counts;
}

} // namespace

TEST_CASE("curriculum sort orders by difficulty with stable id tiebreak") {
    Dataset d = toy_dataset(9, 1, 3, 0);
    // Scramble before sorting.
    std::rotate(d.instances.begin(), d.instances.begin() + 4, d.instances.end());

    const Dataset sorted = curriculum_sort(d, Ordering::difficulty_ascending);
    for (std::size_t i = 1; i < sorted.instances.size(); ++i) {
        const auto& prev = sorted.instances[i - 1];
        const auto& cur = sorted.instances[i];
        CHECK(prev.difficulty <= cur.difficulty);
        if (prev.difficulty == cur.difficulty) CHECK(prev.task_id < cur.task_id);
    }
}

TEST_CASE("curriculum sort by descending pass rate") {
    Dataset d = toy_dataset(3, 1, 1, 0);
    std::map<std::string, double> rates = {
        {d.instances[0].task_id, 0.9},
        {d.instances[1].task_id, 0.1},
        {d.instances[2].task_id, 0.5},
    };
    const Dataset sorted = curriculum_sort(d, Ordering::pass_rate_descending, &rates);
    CHECK(rates.at(sorted.instances[0].task_id) == 0.9);
    CHECK(rates.at(sorted.instances[1].task_id) == 0.5);
    CHECK(rates.at(sorted.instances[2].task_id) == 0.1);

    SUBCASE("missing pass rate is a data error") {
        rates.erase(d.instances[1].task_id);
        CHECK_THROWS_AS(curriculum_sort(d, Ordering::pass_rate_descending, &rates), DataError);
    }
    SUBCASE("pass-rate ordering without rates is a data error") {
        CHECK_THROWS_AS(curriculum_sort(d, Ordering::pass_rate_descending, nullptr), DataError);
    }
}

TEST_CASE("reuse schedule: tau copies of one sorted subset") {
    const Dataset d = toy_dataset(40, 1, 4, 7);

    ScheduleSpec spec;
    spec.total_samples = 100;
    spec.reuse_tau = 5;
    spec.batch_size = 10;
    spec.seed = 3;

    const SampleStream stream = make_reuse_schedule(d, spec);
    REQUIRE(stream.ids.size() == 100);
    CHECK(stream.epoch_length == 20);

    SUBCASE("multiset property via an independent recount") {
        const auto counts = id_counts(stream);
        CHECK(counts.size() == 20);
        for (const auto& [id, n] : counts) CHECK(n == 5);
    }

    SUBCASE("epochs are identical, not reshuffled") {
        for (int epoch = 1; epoch < 5; ++epoch) {
            for (int i = 0; i < 20; ++i) {
                CHECK(stream.ids[static_cast<std::size_t>(epoch * 20 + i)] ==
                      stream.ids[static_cast<std::size_t>(i)]);
            }
        }
    }

    SUBCASE("difficulty is non-decreasing within each epoch") {
        std::map<std::string, int> difficulty_of;
        for (const auto& t : d.instances) difficulty_of[t.task_id] = t.difficulty;
        for (int epoch = 0; epoch < 5; ++epoch) {
            for (int i = 1; i < 20; ++i) {
                CHECK(difficulty_of.at(stream.ids[static_cast<std::size_t>(epoch * 20 + i - 1)]) <=
                      difficulty_of.at(stream.ids[static_cast<std::size_t>(epoch * 20 + i)]));
            }
        }
    }
}

TEST_CASE("reuse schedule degenerate cases") {
    const Dataset d = toy_dataset(12, 1, 2, 1);

    SUBCASE("tau = 1 streams each selected id once") {
        ScheduleSpec spec{12, 1, 4, Ordering::difficulty_ascending, 9};
        const SampleStream stream = make_reuse_schedule(d, spec);
        const auto counts = id_counts(stream);
        CHECK(counts.size() == 12);
        for (const auto& [id, n] : counts) CHECK(n == 1);
    }

    SUBCASE("tau = S repeats a single id") {
        ScheduleSpec spec{10, 10, 5, Ordering::difficulty_ascending, 2};
        const SampleStream stream = make_reuse_schedule(d, spec);
        REQUIRE(stream.ids.size() == 10);
        const std::set<std::string> distinct(stream.ids.begin(), stream.ids.end());
        CHECK(distinct.size() == 1);
    }

    SUBCASE("indivisible tau is rejected") {
        ScheduleSpec spec{10, 3, 5, Ordering::difficulty_ascending, 2};
        CHECK_THROWS_AS(make_reuse_schedule(d, spec), UsageError);
    }

    SUBCASE("dataset smaller than the subset is a capacity error") {
        ScheduleSpec spec{40, 2, 5, Ordering::difficulty_ascending, 2};
        CHECK_THROWS_AS(make_reuse_schedule(d, spec), CapacityError);
    }
}

TEST_CASE("subsets differ across seeds and reuse the schedule deterministically") {
    const Dataset d = toy_dataset(30, 1, 3, 4);
    ScheduleSpec spec{30, 3, 5, Ordering::difficulty_ascending, 11};

    const SampleStream a = make_reuse_schedule(d, spec);
    const SampleStream b = make_reuse_schedule(d, spec);
    CHECK(a.ids == b.ids);

    spec.seed = 12;
    const SampleStream c = make_reuse_schedule(d, spec);
    CHECK(a.ids != c.ids);
}

TEST_CASE("subset overlap across seeds matches the hypergeometric expectation") {
    // Two independent subsets of size m from n items overlap in
    // Hypergeometric(n, m, m): mean m^2/n.
    const int n = 40, m = 20;
    const Dataset d = toy_dataset(n, 1, 4, 7);
    ScheduleSpec spec{m, 1, 5, Ordering::difficulty_ascending, 0};

    const int pairs = 60;
    double total_overlap = 0.0;
    for (int p = 0; p < pairs; ++p) {
        spec.seed = 1000 + 2 * static_cast<std::uint64_t>(p);
        const SampleStream a = make_reuse_schedule(d, spec);
        spec.seed = 1001 + 2 * static_cast<std::uint64_t>(p);
        const SampleStream b = make_reuse_schedule(d, spec);
        const std::set<std::string> sa(a.ids.begin(), a.ids.end());
        int overlap = 0;
        for (const auto& id : b.ids) overlap += sa.count(id) ? 1 : 0;
        total_overlap += overlap;
    }
    const double mean_overlap = total_overlap / pairs;
    const double expected = static_cast<double>(m) * m / n;
    const double variance = m * (static_cast<double>(m) / n) * (1.0 - static_cast<double>(m) / n) *
                            (static_cast<double>(n - m) / (n - 1));
    const double sigma_of_mean = std::sqrt(variance / pairs);
    CHECK(std::abs(mean_overlap - expected) <= 3.0 * sigma_of_mean);
}

TEST_CASE("streams serialize with an audit header") {
    const Dataset d = toy_dataset(10, 1, 2, 3);
    ScheduleSpec spec{20, 2, 5, Ordering::difficulty_ascending, 123};
    const SampleStream stream = make_reuse_schedule(d, spec);

    testutil::TempDir dir("schedule");
    write_stream(stream, dir.path() / "stream.txt");
    const SampleStream loaded = read_stream(dir.path() / "stream.txt");
    CHECK(loaded.ids == stream.ids);
    CHECK(loaded.spec.seed == 123);
    CHECK(loaded.spec.reuse_tau == 2);
    CHECK(loaded.spec.total_samples == 20);
    CHECK(loaded.epoch_length == stream.epoch_length);
}
