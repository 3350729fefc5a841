#include "deft/synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "deft/errors.hpp"
#include "deft/ingest.hpp"
#include "deft/keyboard.hpp"
#include "deft/rng.hpp"

namespace deft {

namespace {

// Mean distance bucket of handed, distance <= 3 letter pairs under uniform
// random letters. Centering the per-distance means here keeps each user's
// pooled flight mean at the shared base value.
constexpr double kDistanceCenter = 1.7325;
constexpr double kHandedFlightBase = 230.0;

constexpr std::size_t kWindowLen = 100;

TypistProfile profile_with_slope(double slope) {
    TypistProfile profile;
    for (int d = 0; d < 4; ++d) {
        for (int side = 0; side < 2; ++side) {
            profile.f1_mean[d][side] =
                kHandedFlightBase + slope * (static_cast<double>(d) - kDistanceCenter);
            profile.f1_std[d][side] = 10.0;
        }
    }
    return profile;
}

void validate(const CohortSpec& spec) {
    if (spec.n_users < 2) throw ConfigError("a cohort needs at least 2 users");
    if (spec.windows_per_user < 10)
        throw ConfigError("a cohort needs at least 10 windows per user");
}

std::string user_name(int index, int n_users) {
    int width = 2;
    for (int v = n_users - 1; v >= 100; v /= 10) ++width;
    width = std::min(width, 9);
    char buf[16];
    std::snprintf(buf, sizeof buf, "u%0*d", width, index);
    return buf;
}

}  // namespace

SignalMode parse_signal_mode(std::string_view token) {
    std::string t;
    for (char c : token) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "distinct") return SignalMode::Distinct;
    if (t == "null") return SignalMode::Null;
    throw FormatError("unknown signal mode '" + std::string(token) + "'");
}

std::string signal_mode_name(SignalMode mode) {
    return mode == SignalMode::Distinct ? "distinct" : "null";
}

std::vector<TypistProfile> cohort_profiles(const CohortSpec& spec) {
    validate(spec);
    std::vector<TypistProfile> profiles;
    profiles.reserve(static_cast<std::size_t>(spec.n_users));
    for (int i = 0; i < spec.n_users; ++i) {
        double slope =
            spec.signal == SignalMode::Null
                ? 21.0
                : -63.0 + 126.0 * static_cast<double>(i) /
                              static_cast<double>(spec.n_users - 1);
        profiles.push_back(profile_with_slope(slope));
    }
    return profiles;
}

std::vector<RawEvent> generate_cohort(const CohortSpec& spec) {
    validate(spec);
    const KeyboardLayout layout = KeyboardLayout::default_qwerty();
    const auto profiles = cohort_profiles(spec);

    std::vector<RawEvent> events;
    const std::size_t keys_per_user =
        kWindowLen * static_cast<std::size_t>(spec.windows_per_user);
    events.reserve(2 * keys_per_user * static_cast<std::size_t>(spec.n_users));

    for (int u = 0; u < spec.n_users; ++u) {
        const TypistProfile& profile = profiles[static_cast<std::size_t>(u)];
        Rng rng(derive_seed(spec.seed, {fnv1a("synth-user"), static_cast<std::uint64_t>(u)}));
        const std::string user = user_name(u, spec.n_users);

        std::vector<RawEvent> user_events;
        user_events.reserve(2 * keys_per_user);

        std::string prev_key;
        std::int64_t prev_up = 0;
        std::int64_t prev_hold = 0;
        std::int64_t down = 1000;

        for (std::size_t k = 0; k < keys_per_user; ++k) {
            std::string key;
            double r = rng.uniform();
            if (r < profile.backspace_rate) {
                key = "BACKSPACE";
            } else if (r < profile.backspace_rate + profile.shift_rate) {
                key = "SHIFT";
            } else {
                key = std::string(1, static_cast<char>('A' + rng.uniform_int(26)));
            }

            if (k > 0) {
                double flight;
                auto hc = hand_class_opt(layout, prev_key, key);
                auto dist = key_distance_opt(layout, prev_key, key);
                if (hc && *hc != HandClass::LR && dist && *dist <= 3) {
                    int side = (*hc == HandClass::LL) ? 0 : 1;
                    flight = rng.normal(profile.f1_mean[*dist][side],
                                        profile.f1_std[*dist][side]);
                } else {
                    flight = rng.normal(profile.base_flight_mean, profile.base_flight_std);
                    if (rng.uniform() < profile.rollover_prob)
                        flight = -std::fabs(rng.normal(40.0, 20.0));
                }
                flight = std::clamp(flight, -500.0, 4500.0);
                std::int64_t f1 = std::llround(flight);
                // Keep presses strictly ordered so consecutive keystrokes
                // are exactly the generated pairs.
                f1 = std::max(f1, -(prev_hold - 1));
                down = prev_up + f1;
            }

            std::int64_t hold = std::llround(
                std::clamp(rng.normal(profile.hold_mean, profile.hold_std), 5.0, 250.0));
            std::int64_t up = down + hold;

            user_events.push_back({user, Device::Desktop, key, EventKind::Down, down});
            user_events.push_back({user, Device::Desktop, key, EventKind::Up, up});

            prev_key = key;
            prev_up = up;
            prev_hold = hold;
        }

        std::stable_sort(user_events.begin(), user_events.end(),
                         [](const RawEvent& a, const RawEvent& b) { return a.ts < b.ts; });
        events.insert(events.end(), std::make_move_iterator(user_events.begin()),
                      std::make_move_iterator(user_events.end()));
    }
    return events;
}

std::string generate_cohort_jsonl(const CohortSpec& spec) {
    return to_jsonl(generate_cohort(spec));
}

}  // namespace deft
