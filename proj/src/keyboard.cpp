#include "deft/keyboard.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

namespace deft {

namespace {

bool is_letter_label(std::string_view label) {
    return label.size() == 1 && label[0] >= 'A' && label[0] <= 'Z';
}

Hand parse_hand(const std::string& token) {
    std::string t;
    for (char c : token) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (t == "left" || t == "l") return Hand::Left;
    if (t == "right" || t == "r") return Hand::Right;
    if (t == "neutral" || t == "none" || t.empty()) return Hand::Neutral;
    throw ConfigError("unknown hand token '" + token + "'");
}

}  // namespace

std::string hand_class_name(HandClass hc) {
    switch (hc) {
        case HandClass::LL: return "LL";
        case HandClass::RR: return "RR";
        case HandClass::LR: return "LR";
    }
    return "LR";
}

std::string normalize_key_label(std::string_view raw) {
    std::size_t begin = 0, end = raw.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(raw[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(raw[end - 1]))) --end;
    std::string out;
    out.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i)
        out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(raw[i]))));
    return out;
}

KeyboardLayout::KeyboardLayout(std::vector<KeyPosition> keys, double key_pitch,
                               double key_pitch_mm)
    : keys_(std::move(keys)), key_pitch_mm_(key_pitch_mm) {
    if (!(key_pitch > 0.0) || !std::isfinite(key_pitch))
        throw ConfigError("key_pitch must be positive and finite");
    std::set<char> letters;
    for (auto& key : keys_) {
        key.label = normalize_key_label(key.label);
        key.x /= key_pitch;
        key.y /= key_pitch;
        if (!std::isfinite(key.x) || !std::isfinite(key.y))
            throw ConfigError("non-finite coordinates for key '" + key.label + "'");
        if (is_letter_label(key.label)) {
            if (key.hand == Hand::Neutral)
                throw ConfigError("letter key '" + key.label + "' must be left- or right-handed");
            letters.insert(key.label[0]);
        }
    }
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        if (!index_.emplace(keys_[i].label, i).second)
            throw ConfigError("duplicate key label '" + keys_[i].label + "'");
    }
    if (letters.size() != 26)
        throw ConfigError("layout must contain all 26 letters, found " +
                          std::to_string(letters.size()));
}

KeyboardLayout KeyboardLayout::default_qwerty() {
    static const std::string kTop = "QWERTYUIOP";
    static const std::string kHome = "ASDFGHJKL";
    static const std::string kBottom = "ZXCVBNM";
    static const std::string kLeft = "QWERTASDFGZXCVB";

    auto hand_of = [&](char c) {
        return kLeft.find(c) != std::string::npos ? Hand::Left : Hand::Right;
    };

    std::vector<KeyPosition> keys;
    for (std::size_t i = 0; i < kTop.size(); ++i)
        keys.push_back({std::string(1, kTop[i]), double(i), 0.0, hand_of(kTop[i])});
    for (std::size_t i = 0; i < kHome.size(); ++i)
        keys.push_back({std::string(1, kHome[i]), double(i) + 0.25, 1.0, hand_of(kHome[i])});
    for (std::size_t i = 0; i < kBottom.size(); ++i)
        keys.push_back({std::string(1, kBottom[i]), double(i) + 0.75, 2.0, hand_of(kBottom[i])});

    // Number row sits above the letters with zero stagger. Non-letter keys
    // carry positions for completeness; they never join DEFT digraphs.
    static const std::string kDigits = "1234567890";
    for (std::size_t i = 0; i < kDigits.size(); ++i)
        keys.push_back({std::string(1, kDigits[i]), double(i), -1.0, Hand::Neutral});
    keys.push_back({"BACKSPACE", 10.5, -1.0, Hand::Neutral});
    keys.push_back({"ENTER", 10.25, 1.0, Hand::Neutral});
    keys.push_back({"SHIFT", 10.5, 2.0, Hand::Neutral});
    keys.push_back({"COMMA", 7.75, 2.0, Hand::Neutral});
    keys.push_back({"PERIOD", 8.75, 2.0, Hand::Neutral});
    keys.push_back({"SPACE", 4.75, 3.0, Hand::Neutral});

    return KeyboardLayout(std::move(keys));
}

KeyboardLayout KeyboardLayout::from_json_text(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text);
    double pitch = 1.0;
    const nlohmann::json* arr = &doc;
    if (doc.is_object()) {
        if (doc.contains("key_pitch")) pitch = doc.at("key_pitch").get<double>();
        arr = &doc.at("keys");
    }
    if (!arr->is_array()) throw ConfigError("layout JSON must be an array of keys");
    std::vector<KeyPosition> keys;
    for (const auto& item : *arr) {
        KeyPosition key;
        key.label = item.at("label").get<std::string>();
        key.x = item.at("x").get<double>();
        key.y = item.at("y").get<double>();
        key.hand = parse_hand(item.value("hand", std::string("neutral")));
        keys.push_back(std::move(key));
    }
    return KeyboardLayout(std::move(keys), pitch);
}

KeyboardLayout KeyboardLayout::from_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open layout file " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return from_json_text(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad layout JSON in " + path.string() + ": " + e.what());
    }
}

const KeyPosition* KeyboardLayout::find(std::string_view label) const {
    auto it = index_.find(normalize_key_label(label));
    return it == index_.end() ? nullptr : &keys_[it->second];
}

const KeyPosition& KeyboardLayout::at(std::string_view label) const {
    const KeyPosition* key = find(label);
    if (!key) throw UnknownKeyError(std::string(label));
    return *key;
}

int key_distance(const KeyboardLayout& layout, std::string_view k1,
                 std::string_view k2) {
    const KeyPosition& a = layout.at(k1);
    const KeyPosition& b = layout.at(k2);
    double d = std::hypot(a.x - b.x, a.y - b.y);
    return static_cast<int>(std::floor(d + 0.5));  // round-half-up
}

std::optional<int> key_distance_opt(const KeyboardLayout& layout,
                                    std::string_view k1, std::string_view k2) {
    const KeyPosition* a = layout.find(k1);
    const KeyPosition* b = layout.find(k2);
    if (!a || !b) return std::nullopt;
    double d = std::hypot(a->x - b->x, a->y - b->y);
    return static_cast<int>(std::floor(d + 0.5));
}

std::optional<HandClass> hand_class_opt(const KeyboardLayout& layout,
                                        std::string_view k1,
                                        std::string_view k2) {
    const KeyPosition* a = layout.find(k1);
    const KeyPosition* b = layout.find(k2);
    if (!a || !b) return std::nullopt;
    if (a->hand == Hand::Neutral || b->hand == Hand::Neutral) return std::nullopt;
    if (a->hand == Hand::Left && b->hand == Hand::Left) return HandClass::LL;
    if (a->hand == Hand::Right && b->hand == Hand::Right) return HandClass::RR;
    return HandClass::LR;
}

HandClass hand_class(const KeyboardLayout& layout, std::string_view k1,
                     std::string_view k2) {
    auto hc = hand_class_opt(layout, k1, k2);
    if (!hc)
        throw NotHandedError("pair <" + std::string(k1) + "," + std::string(k2) +
                             "> is not a handed letter pair");
    return *hc;
}

}  // namespace deft
