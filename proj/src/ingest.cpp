#include "deft/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <istream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

#include "deft/keyboard.hpp"

namespace deft {

namespace {

std::string lower(std::string_view s) {
    std::string out;
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

EventKind parse_kind_token(const std::string& token, std::size_t line) {
    std::string t = lower(token);
    if (t == "0" || t == "down" || t == "keydown" || t == "press" || t == "p")
        return EventKind::Down;
    if (t == "1" || t == "up" || t == "keyup" || t == "release" || t == "r")
        return EventKind::Up;
    throw ParseError(line, "unknown direction token '" + token + "'");
}

std::int64_t seconds_to_ms(double seconds, std::size_t line) {
    if (!std::isfinite(seconds)) throw ParseError(line, "non-finite timestamp");
    return static_cast<std::int64_t>(std::floor(seconds * 1000.0 + 0.5));
}

// Minimal CSV field splitter with double-quote support (the key column can
// legitimately hold a comma character).
std::vector<std::string> split_csv(const std::string& row, std::size_t line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < row.size(); ++i) {
        char c = row[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < row.size() && row[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    if (quoted) throw ParseError(line, "unterminated quote");
    fields.push_back(cur);
    return fields;
}

double parse_double_field(const std::string& field, std::size_t line) {
    try {
        std::size_t used = 0;
        double v = std::stod(field, &used);
        while (used < field.size() &&
               std::isspace(static_cast<unsigned char>(field[used])))
            ++used;
        if (used != field.size()) throw std::invalid_argument(field);
        return v;
    } catch (const std::exception&) {
        throw ParseError(line, "bad numeric field '" + field + "'");
    }
}

std::vector<RawEvent> parse_bbmas(std::istream& in, const ParseHints& hints) {
    std::vector<RawEvent> events;
    std::string row;
    std::size_t line = 0;
    while (std::getline(in, row)) {
        ++line;
        if (row.empty() || row == "\r") continue;
        auto fields = split_csv(row, line);
        if (line == 1) {
            std::string joined = lower(row);
            if (joined.find("key") != std::string::npos &&
                joined.find("direction") != std::string::npos)
                continue;  // header
        }
        // Tolerate a leading row-index column from dataframe exports.
        if (fields.size() == 4) fields.erase(fields.begin());
        if (fields.size() != 3)
            throw ParseError(line, "expected key,direction,time, got " +
                                       std::to_string(fields.size()) + " fields");
        RawEvent ev;
        ev.user = hints.user;
        ev.device = hints.device;
        ev.key = normalize_key_label(fields[0]);
        ev.kind = parse_kind_token(fields[1], line);
        ev.ts = seconds_to_ms(parse_double_field(fields[2], line), line);
        if (ev.key.empty()) throw ParseError(line, "empty key label");
        events.push_back(std::move(ev));
    }
    return events;
}

std::vector<RawEvent> parse_buffalo(std::istream& in, const ParseHints& hints) {
    std::vector<RawEvent> events;
    std::string row;
    std::size_t line = 0;
    while (std::getline(in, row)) {
        ++line;
        if (!row.empty() && row.back() == '\r') row.pop_back();
        if (row.empty()) continue;
        std::istringstream ss(row);
        std::string key, kind, ts;
        if (!(ss >> key >> kind >> ts))
            throw ParseError(line, "expected KEY KeyDown|KeyUp timestamp");
        std::string extra;
        if (ss >> extra) throw ParseError(line, "trailing field '" + extra + "'");
        RawEvent ev;
        ev.user = hints.user;
        ev.device = hints.device;
        ev.key = normalize_key_label(key);
        ev.kind = parse_kind_token(kind, line);
        double ms = parse_double_field(ts, line);
        if (!std::isfinite(ms)) throw ParseError(line, "non-finite timestamp");
        ev.ts = static_cast<std::int64_t>(std::floor(ms + 0.5));
        events.push_back(std::move(ev));
    }
    return events;
}

std::vector<RawEvent> parse_jsonl(std::istream& in, const ParseHints& hints) {
    std::vector<RawEvent> events;
    std::string row;
    std::size_t line = 0;
    while (std::getline(in, row)) {
        ++line;
        if (!row.empty() && row.back() == '\r') row.pop_back();
        if (row.empty()) continue;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(row);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line, std::string("bad JSON: ") + e.what());
        }
        if (!obj.is_object()) throw ParseError(line, "expected a JSON object");
        RawEvent ev;
        try {
            ev.user = obj.value("user", hints.user);
            ev.device = obj.contains("device")
                            ? parse_device(obj.at("device").get<std::string>())
                            : hints.device;
            ev.key = normalize_key_label(obj.at("key").get<std::string>());
            ev.kind = parse_kind_token(obj.at("kind").get<std::string>(), line);
            ev.ts = obj.at("ts").get<std::int64_t>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(line, std::string("missing or bad field: ") + e.what());
        }
        if (ev.key.empty()) throw ParseError(line, "empty key label");
        events.push_back(std::move(ev));
    }
    return events;
}

}  // namespace

LogFormat parse_log_format(std::string_view token) {
    std::string t = lower(token);
    if (t == "bbmas" || t == "bbmas-csv" || t == "bbmascsv") return LogFormat::BbmasCsv;
    if (t == "buffalo" || t == "buffalo-log" || t == "buffalolog") return LogFormat::BuffaloLog;
    if (t == "jsonl" || t == "jsonlines" || t == "json-lines") return LogFormat::JsonLines;
    throw FormatError("unknown log format '" + std::string(token) + "'");
}

std::string log_format_name(LogFormat format) {
    switch (format) {
        case LogFormat::BbmasCsv: return "bbmas";
        case LogFormat::BuffaloLog: return "buffalo";
        case LogFormat::JsonLines: return "jsonl";
    }
    return "jsonl";
}

std::vector<RawEvent> parse_events(std::istream& in, LogFormat format,
                                   const ParseHints& hints) {
    switch (format) {
        case LogFormat::BbmasCsv: return parse_bbmas(in, hints);
        case LogFormat::BuffaloLog: return parse_buffalo(in, hints);
        case LogFormat::JsonLines: return parse_jsonl(in, hints);
    }
    throw FormatError("unhandled log format");
}

std::vector<RawEvent> parse_events(const std::string& text, LogFormat format,
                                   const ParseHints& hints) {
    std::istringstream in(text);
    return parse_events(in, format, hints);
}

void write_jsonl(std::ostream& out, std::span<const RawEvent> events) {
    for (const auto& ev : events) {
        out << "{\"user\":" << nlohmann::json(ev.user).dump()
            << ",\"device\":\"" << device_name(ev.device) << "\""
            << ",\"key\":" << nlohmann::json(ev.key).dump()
            << ",\"kind\":\"" << (ev.kind == EventKind::Down ? "down" : "up") << "\""
            << ",\"ts\":" << ev.ts << "}\n";
    }
}

std::string to_jsonl(std::span<const RawEvent> events) {
    std::ostringstream out;
    write_jsonl(out, events);
    return out.str();
}

PairingResult pair_events(std::vector<RawEvent> events) {
    std::stable_sort(events.begin(), events.end(),
                     [](const RawEvent& a, const RawEvent& b) { return a.ts < b.ts; });
    PairingResult result;
    std::unordered_map<std::string, std::deque<std::int64_t>> pending;
    for (const auto& ev : events) {
        if (ev.kind == EventKind::Down) {
            pending[ev.key].push_back(ev.ts);
        } else {
            auto it = pending.find(ev.key);
            if (it == pending.end() || it->second.empty()) {
                ++result.orphan_ups;
                continue;
            }
            result.keystrokes.push_back({ev.key, it->second.front(), ev.ts});
            it->second.pop_front();
        }
    }
    for (const auto& [key, queue] : pending) result.dropped_downs += queue.size();
    std::stable_sort(result.keystrokes.begin(), result.keystrokes.end(),
                     [](const Keystroke& a, const Keystroke& b) {
                         if (a.down_ts != b.down_ts) return a.down_ts < b.down_ts;
                         return a.up_ts < b.up_ts;
                     });
    return result;
}

std::vector<SampleWindow> segment_samples(std::span<const Keystroke> keystrokes,
                                          const std::string& user, Device device,
                                          std::size_t window_len) {
    if (window_len == 0) throw ConfigError("window length must be positive");
    std::vector<SampleWindow> windows;
    std::size_t count = keystrokes.size() / window_len;
    windows.reserve(count);
    for (std::size_t w = 0; w < count; ++w) {
        SampleWindow window;
        window.user = user;
        window.device = device;
        window.index = static_cast<int>(w);
        window.keystrokes.assign(keystrokes.begin() + w * window_len,
                                 keystrokes.begin() + (w + 1) * window_len);
        windows.push_back(std::move(window));
    }
    return windows;
}

DigraphScan scan_digraphs(const SampleWindow& window,
                          std::int64_t max_abs_flight_ms) {
    DigraphScan scan;
    const auto& keys = window.keystrokes;
    if (keys.size() < 2) return scan;
    scan.records.reserve(keys.size() - 1);
    for (std::size_t i = 1; i < keys.size(); ++i) {
        const Keystroke& a = keys[i - 1];
        const Keystroke& b = keys[i];
        DigraphRecord rec;
        rec.k1 = a.key;
        rec.k2 = b.key;
        rec.f1 = b.down_ts - a.up_ts;
        rec.f2 = b.up_ts - a.up_ts;
        rec.f3 = b.down_ts - a.down_ts;
        rec.f4 = b.up_ts - a.down_ts;
        bool over = std::llabs(rec.f1) > max_abs_flight_ms ||
                    std::llabs(rec.f2) > max_abs_flight_ms ||
                    std::llabs(rec.f3) > max_abs_flight_ms ||
                    std::llabs(rec.f4) > max_abs_flight_ms;
        if (over) {
            ++scan.dropped;
        } else {
            scan.records.push_back(std::move(rec));
        }
    }
    return scan;
}

std::vector<DigraphRecord> digraphs(const SampleWindow& window,
                                    std::int64_t max_abs_flight_ms) {
    return scan_digraphs(window, max_abs_flight_ms).records;
}

}  // namespace deft
