#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deft/errors.hpp"
#include "deft/events.hpp"

namespace deft {

enum class LogFormat { BbmasCsv, BuffaloLog, JsonLines };

/// Maps a format token ("bbmas", "buffalo", "jsonl", ...) to the enum.
/// Throws FormatError for anything else.
LogFormat parse_log_format(std::string_view token);
std::string log_format_name(LogFormat format);

/// Fallback identity applied to formats that do not carry user/device in
/// the stream itself (both CSV formats take them from the file path).
struct ParseHints {
    std::string user = "unknown";
    Device device = Device::Unknown;
};

/// Parses an event log into raw events in file order. Key labels are
/// upper-cased and direction tokens normalized. Malformed rows raise
/// ParseError with the 1-based line number.
std::vector<RawEvent> parse_events(std::istream& in, LogFormat format,
                                   const ParseHints& hints = {});
std::vector<RawEvent> parse_events(const std::string& text, LogFormat format,
                                   const ParseHints& hints = {});

/// Canonical JSON-lines emission; parse_events(to_jsonl(e), JsonLines)
/// round-trips bit-exactly.
std::string to_jsonl(std::span<const RawEvent> events);
void write_jsonl(std::ostream& out, std::span<const RawEvent> events);

struct PairingResult {
    std::vector<Keystroke> keystrokes;  // ordered by (down_ts, up_ts)
    std::size_t dropped_downs = 0;      // presses with no matching release
    std::size_t orphan_ups = 0;         // releases with no pending press
};

/// Matches each press to the earliest subsequent release of the same key
/// (per-key FIFO queue, so rollover typing pairs correctly). Events are
/// stably sorted by timestamp first. Expects a single user+device stream.
PairingResult pair_events(std::vector<RawEvent> events);

/// Cuts the stream into consecutive non-overlapping windows of exactly
/// window_len keystrokes; a trailing remainder is discarded. window_len = 0
/// raises ConfigError.
std::vector<SampleWindow> segment_samples(std::span<const Keystroke> keystrokes,
                                          const std::string& user, Device device,
                                          std::size_t window_len = 100);

struct DigraphScan {
    std::vector<DigraphRecord> records;
    std::size_t dropped = 0;  // records over the flight-time bound
};

/// One record per consecutive keystroke pair; any record where some
/// |f1..f4| exceeds max_abs_flight_ms is dropped (pauses and recording
/// gaps). Negative flights are legitimate rollover and are retained.
DigraphScan scan_digraphs(const SampleWindow& window,
                          std::int64_t max_abs_flight_ms = 5000);
std::vector<DigraphRecord> digraphs(const SampleWindow& window,
                                    std::int64_t max_abs_flight_ms = 5000);

}  // namespace deft
