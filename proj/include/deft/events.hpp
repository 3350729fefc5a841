#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace deft {

enum class Device { Desktop, Mobile, Tablet, Unknown };

std::string device_name(Device d);

/// Parses a device token case-insensitively; unrecognized tokens map to
/// Device::Unknown.
Device parse_device(std::string_view token);

enum class EventKind { Down, Up };

/// One raw key event as read from a log file.
struct RawEvent {
    std::string user;
    Device device = Device::Unknown;
    std::string key;
    EventKind kind = EventKind::Down;
    std::int64_t ts = 0;  // milliseconds

    bool operator==(const RawEvent&) const = default;
};

/// A paired press/release of one key.
struct Keystroke {
    std::string key;
    std::int64_t down_ts = 0;
    std::int64_t up_ts = 0;

    std::int64_t hold() const { return up_ts - down_ts; }

    bool operator==(const Keystroke&) const = default;
};

/// An ordered run of keystrokes belonging to one user and device; the unit
/// a feature vector is computed from.
struct SampleWindow {
    std::string user;
    Device device = Device::Unknown;
    int index = 0;
    std::vector<Keystroke> keystrokes;
};

/// Timing attributes of two consecutive keystrokes. f1 = up1->down2,
/// f2 = up1->up2, f3 = down1->down2, f4 = down1->up2. f1, f2 and f4 can be
/// negative under rollover typing; f3 is nonnegative by press ordering.
struct DigraphRecord {
    std::string k1;
    std::string k2;
    std::int64_t f1 = 0;
    std::int64_t f2 = 0;
    std::int64_t f3 = 0;
    std::int64_t f4 = 0;
};

/// Label predicates used by the non-conventional session features.
bool is_backspace_key(std::string_view label);
bool is_shift_key(std::string_view label);
bool is_capslock_key(std::string_view label);

}  // namespace deft
