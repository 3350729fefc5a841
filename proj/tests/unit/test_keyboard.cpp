#include <cmath>
#include <map>
#include <sstream>
#include <string>

#include "doctest.h"

#include "deft/keyboard.hpp"

using namespace deft;

namespace {

// Independent coordinate table for the oracle checks: built from scratch
// here, not from the layout under test.
struct OracleBoard {
    std::map<char, std::pair<double, double>> pos;
    std::string left = "QWERTASDFGZXCVB";

    OracleBoard() {
        const std::string top = "QWERTYUIOP", home = "ASDFGHJKL", bottom = "ZXCVBNM";
        for (std::size_t i = 0; i < top.size(); ++i) pos[top[i]] = {double(i), 0.0};
        for (std::size_t i = 0; i < home.size(); ++i) pos[home[i]] = {double(i) + 0.25, 1.0};
        for (std::size_t i = 0; i < bottom.size(); ++i) pos[bottom[i]] = {double(i) + 0.75, 2.0};
    }

    int bucket(char a, char b) const {
        double dx = pos.at(a).first - pos.at(b).first;
        double dy = pos.at(a).second - pos.at(b).second;
        return static_cast<int>(std::floor(std::sqrt(dx * dx + dy * dy) + 0.5));
    }

    bool is_left(char c) const { return left.find(c) != std::string::npos; }
};

}  // namespace

TEST_SUITE_BEGIN("keyboard");

TEST_CASE("default layout anchors") {
    auto layout = KeyboardLayout::default_qwerty();

    const auto& q = layout.at("Q");
    CHECK(q.x == 0.0);
    CHECK(q.y == 0.0);
    CHECK(q.hand == Hand::Left);

    const auto& h = layout.at("H");
    CHECK(h.x == doctest::Approx(5.25));
    CHECK(h.y == 1.0);
    CHECK(h.hand == Hand::Right);

    CHECK(layout.at("B").hand == Hand::Left);
    CHECK(layout.at("N").hand == Hand::Right);
}

TEST_CASE("distance bucket anchors") {
    auto layout = KeyboardLayout::default_qwerty();
    CHECK(key_distance(layout, "A", "S") == 1);
    CHECK(key_distance(layout, "T", "H") == 2);
    CHECK(key_distance(layout, "N", "L") == 3);
    CHECK(key_distance(layout, "Q", "P") == 9);
    CHECK(key_distance(layout, "K", "K") == 0);
}

TEST_CASE("distance matches brute-force oracle over all 676 letter pairs") {
    auto layout = KeyboardLayout::default_qwerty();
    OracleBoard oracle;
    for (char a = 'A'; a <= 'Z'; ++a) {
        for (char b = 'A'; b <= 'Z'; ++b) {
            int expected = oracle.bucket(a, b);
            int actual = key_distance(layout, std::string(1, a), std::string(1, b));
            CAPTURE(a);
            CAPTURE(b);
            CHECK(actual == expected);
            CHECK(actual >= 0);
            CHECK(actual <= 9);
        }
    }
}

TEST_CASE("distance is symmetric and zero on the diagonal") {
    auto layout = KeyboardLayout::default_qwerty();
    for (char a = 'A'; a <= 'Z'; ++a) {
        std::string ka(1, a);
        CHECK(key_distance(layout, ka, ka) == 0);
        for (char b = 'A'; b <= 'Z'; ++b) {
            std::string kb(1, b);
            CHECK(key_distance(layout, ka, kb) == key_distance(layout, kb, ka));
        }
    }
}

TEST_CASE("hand classes") {
    auto layout = KeyboardLayout::default_qwerty();
    CHECK(hand_class(layout, "A", "S") == HandClass::LL);
    CHECK(hand_class(layout, "N", "L") == HandClass::RR);
    CHECK(hand_class(layout, "T", "H") == HandClass::LR);
    CHECK(hand_class(layout, "H", "T") == HandClass::LR);  // order-insensitive
}

TEST_CASE("hand partition sizes are 15 left / 11 right") {
    auto layout = KeyboardLayout::default_qwerty();
    OracleBoard oracle;
    int left = 0, right = 0;
    for (char c = 'A'; c <= 'Z'; ++c) {
        const auto& key = layout.at(std::string(1, c));
        CHECK(key.hand != Hand::Neutral);
        if (key.hand == Hand::Left) ++left;
        else ++right;
        CHECK((key.hand == Hand::Left) == oracle.is_left(c));
    }
    CHECK(left == 15);
    CHECK(right == 11);
}

TEST_CASE("errors: unknown and non-handed keys") {
    auto layout = KeyboardLayout::default_qwerty();
    CHECK_THROWS_AS(key_distance(layout, "A", "NOKEY"), UnknownKeyError);
    CHECK_THROWS_WITH_AS(key_distance(layout, "QQ", "A"), "unknown key 'QQ'",
                         UnknownKeyError);
    CHECK_THROWS_AS(hand_class(layout, "A", "SPACE"), NotHandedError);
    CHECK_THROWS_AS(hand_class(layout, "A", "5"), NotHandedError);
    CHECK_THROWS_AS(hand_class(layout, "A", "NOSUCH"), NotHandedError);
}

TEST_CASE("buckets are invariant under uniform physical scaling") {
    auto reference = KeyboardLayout::default_qwerty();
    for (double scale : {2.5, 19.05, 0.003}) {
        std::vector<KeyPosition> keys;
        for (const auto& key : reference.keys())
            keys.push_back({key.label, key.x * scale, key.y * scale, key.hand});
        KeyboardLayout scaled(keys, scale);
        for (char a = 'A'; a <= 'Z'; ++a)
            for (char b = 'A'; b <= 'Z'; ++b) {
                std::string ka(1, a), kb(1, b);
                CHECK(key_distance(scaled, ka, kb) == key_distance(reference, ka, kb));
            }
    }
}

TEST_CASE("layout loads from JSON with an explicit pitch") {
    std::string text = R"({"key_pitch": 19.05, "keys": [)";
    auto layout = KeyboardLayout::default_qwerty();
    bool first = true;
    for (const auto& key : layout.keys()) {
        if (!first) text += ",";
        first = false;
        std::string hand = key.hand == Hand::Left    ? "left"
                           : key.hand == Hand::Right ? "right"
                                                     : "neutral";
        text += "{\"label\":\"" + key.label + "\",\"x\":" +
                std::to_string(key.x * 19.05) + ",\"y\":" + std::to_string(key.y * 19.05) +
                ",\"hand\":\"" + hand + "\"}";
    }
    text += "]}";
    auto loaded = KeyboardLayout::from_json_text(text);
    CHECK(key_distance(loaded, "Q", "P") == 9);
    CHECK(key_distance(loaded, "T", "H") == 2);
    CHECK(hand_class(loaded, "A", "S") == HandClass::LL);
}

TEST_CASE("layout validation rejects bad inputs") {
    CHECK_THROWS_AS(KeyboardLayout::from_json_text(
                        R"([{"label":"A","x":0,"y":0,"hand":"left"}])"),
                    ConfigError);  // missing letters
    std::vector<KeyPosition> dup = KeyboardLayout::default_qwerty().keys();
    dup.push_back({"Q", 1.0, 1.0, Hand::Left});
    CHECK_THROWS_AS((KeyboardLayout{dup}), ConfigError);
}

TEST_SUITE_END();
