#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "deft/events.hpp"

namespace deft {

enum class SignalMode { Distinct, Null };

SignalMode parse_signal_mode(std::string_view token);  // FormatError on bad token
std::string signal_mode_name(SignalMode mode);

/// Generative typing parameters for one user. Flight-1 means are stored per
/// (distance bucket 0..3, side 0=LL/1=RR); all other key pairs (cross-hand,
/// distance > 3, non-letters) draw from the base flight distribution.
struct TypistProfile {
    std::array<std::array<double, 2>, 4> f1_mean{};  // [distance][side], ms
    std::array<std::array<double, 2>, 4> f1_std{};
    double hold_mean = 85.0;
    double hold_std = 12.0;
    double backspace_rate = 0.03;
    double shift_rate = 0.015;
    double rollover_prob = 0.04;  // negative flight on base-class pairs
    double base_flight_mean = 240.0;
    double base_flight_std = 45.0;
};

struct CohortSpec {
    int n_users = 10;
    int windows_per_user = 40;  // keystrokes per user = 100 * windows
    std::uint64_t seed = 1;
    SignalMode signal = SignalMode::Distinct;
};

/// Profiles for the cohort. Distinct mode gives each user a distinct slope
/// of flight time versus key distance while keeping the pooled handed
/// flight mean identical across users, so the class signal lives only in
/// the distance-conditioned means. Null mode shares one profile.
std::vector<TypistProfile> cohort_profiles(const CohortSpec& spec);

/// Synthesizes the cohort's keystroke event stream (desktop device, users
/// u00, u01, ...). Every press gets a matching release, flights stay inside
/// the 5-second filter and each user yields exactly windows_per_user full
/// windows. Byte-identical for a fixed seed.
std::vector<RawEvent> generate_cohort(const CohortSpec& spec);

/// generate_cohort rendered in the canonical JSON-lines interchange format.
std::string generate_cohort_jsonl(const CohortSpec& spec);

}  // namespace deft
