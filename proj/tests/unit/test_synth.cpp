#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "doctest.h"

#include "deft/features.hpp"
#include "deft/ingest.hpp"
#include "deft/synth.hpp"

using namespace deft;

namespace {

std::map<std::string, std::vector<SampleWindow>> windows_by_user(
    const std::vector<RawEvent>& events) {
    std::map<std::string, std::vector<RawEvent>> streams;
    for (const auto& ev : events) streams[ev.user].push_back(ev);
    std::map<std::string, std::vector<SampleWindow>> out;
    for (auto& [user, stream] : streams) {
        auto paired = pair_events(stream);
        REQUIRE(paired.dropped_downs == 0);
        REQUIRE(paired.orphan_ups == 0);
        out[user] = segment_samples(paired.keystrokes, user, Device::Desktop, 100);
    }
    return out;
}

}  // namespace

TEST_SUITE_BEGIN("synth");

TEST_CASE("null cohorts share one profile; distinct cohorts do not") {
    CohortSpec null_spec{4, 12, 3, SignalMode::Null};
    auto null_profiles = cohort_profiles(null_spec);
    for (const auto& profile : null_profiles)
        CHECK(profile.f1_mean == null_profiles[0].f1_mean);

    CohortSpec spec{10, 12, 3, SignalMode::Distinct};
    auto profiles = cohort_profiles(spec);
    std::set<double> d1_ll_means;
    for (const auto& profile : profiles) {
        d1_ll_means.insert(profile.f1_mean[1][0]);
        for (int d = 0; d < 4; ++d)
            for (int s = 0; s < 2; ++s) CHECK(profile.f1_mean[d][s] > 0.0);
    }
    CHECK(d1_ll_means.size() == 10);  // pairwise distinct
}

TEST_CASE("cohort spec validation") {
    CHECK_THROWS_AS(generate_cohort({1, 20, 1, SignalMode::Null}), ConfigError);
    CHECK_THROWS_AS(generate_cohort({5, 3, 1, SignalMode::Null}), ConfigError);
    CHECK_THROWS_AS(parse_signal_mode("loud"), FormatError);
    CHECK(parse_signal_mode("DISTINCT") == SignalMode::Distinct);
}

TEST_CASE("streams parse back with zero drops and full windows") {
    CohortSpec spec{3, 10, 17, SignalMode::Distinct};
    auto events = generate_cohort(spec);
    auto windows = windows_by_user(events);
    REQUIRE(windows.size() == 3);
    for (const auto& [user, user_windows] : windows) {
        CHECK(user_windows.size() == 10);
        for (const auto& window : user_windows) {
            auto scan = scan_digraphs(window, 5000);
            CHECK(scan.records.size() == 99);  // nothing trips the filter
            CHECK(scan.dropped == 0);
        }
    }
}

TEST_CASE("same seed emits a byte-identical stream") {
    CohortSpec spec{2, 10, 29, SignalMode::Null};
    CHECK(generate_cohort_jsonl(spec) == generate_cohort_jsonl(spec));
    CohortSpec other = spec;
    other.seed = 30;
    CHECK(generate_cohort_jsonl(spec) != generate_cohort_jsonl(other));
}

TEST_CASE("empirical deft means converge to profile means") {
    CohortSpec spec{2, 100, 41, SignalMode::Distinct};
    auto profiles = cohort_profiles(spec);
    auto events = generate_cohort(spec);
    auto windows = windows_by_user(events);
    auto layout = KeyboardLayout::default_qwerty();
    const auto& schema = FeatureSchema::full();

    const auto& user_windows = windows.at("u00");
    REQUIRE(user_windows.size() == 100);
    for (int d = 0; d < 4; ++d) {
        auto slot = schema.index_of("F1_distance_" + std::to_string(d) + "_LL");
        REQUIRE(slot.has_value());
        std::vector<double> values;
        for (const auto& window : user_windows) {
            auto row = extract_features(window, layout);
            if (row.values[*slot]) values.push_back(*row.values[*slot]);
        }
        REQUIRE(values.size() >= 50);
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double var = 0.0;
        for (double v : values) var += (v - mean) * (v - mean);
        var /= static_cast<double>(values.size() - 1);
        double se = std::sqrt(var / static_cast<double>(values.size()));
        CAPTURE(d);
        CHECK(std::fabs(mean - profiles[0].f1_mean[d][0]) <= 3.0 * se);
    }
}

TEST_SUITE_END();
