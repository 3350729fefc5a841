#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "deft/errors.hpp"

namespace deft {

enum class Hand { Left, Right, Neutral };

/// Hand class of a digraph. LR covers any pair spanning both sides,
/// regardless of order.
enum class HandClass { LL, RR, LR };

std::string hand_class_name(HandClass hc);

/// A key on the physical layout. Coordinates are stored in key-pitch units
/// (one unit = the center-to-center spacing of adjacent keys), so distances
/// derived from them are device-agnostic.
struct KeyPosition {
    std::string label;
    double x = 0.0;
    double y = 0.0;
    Hand hand = Hand::Neutral;
};

/// Immutable keyboard model: key coordinates, hand sides and the distance
/// bucket computation. Safe for shared concurrent reads.
class KeyboardLayout {
public:
    /// Builds a layout from raw physical coordinates. Coordinates are
    /// divided by key_pitch (same unit as the coordinates), so uniformly
    /// scaled inputs produce identical layouts.
    KeyboardLayout(std::vector<KeyPosition> keys, double key_pitch = 1.0,
                   double key_pitch_mm = 19.05);

    /// The canonical staggered QWERTY grid: top row Q..P at y=0, home row
    /// A..L at y=1 with a 0.25 stagger, bottom row Z..M at y=2 with a 0.75
    /// stagger. 15 left-hand letters, 11 right-hand.
    static KeyboardLayout default_qwerty();

    /// Loads an override layout from JSON: either a bare array of
    /// {label, x, y, hand} objects or {"key_pitch": p, "keys": [...]}.
    static KeyboardLayout from_json_file(const std::filesystem::path& path);
    static KeyboardLayout from_json_text(const std::string& text);

    const KeyPosition* find(std::string_view label) const;
    const KeyPosition& at(std::string_view label) const;  // UnknownKeyError

    const std::vector<KeyPosition>& keys() const { return keys_; }
    double key_pitch_mm() const { return key_pitch_mm_; }

private:
    std::vector<KeyPosition> keys_;
    std::unordered_map<std::string, std::size_t> index_;
    double key_pitch_mm_;
};

/// Integer distance bucket between two keys: round-half-up of the Euclidean
/// distance in key-pitch units. 0..9 for letter pairs on the default layout.
/// Throws UnknownKeyError if either key is absent.
int key_distance(const KeyboardLayout& layout, std::string_view k1,
                 std::string_view k2);

/// Same as key_distance but returns nullopt instead of throwing.
std::optional<int> key_distance_opt(const KeyboardLayout& layout,
                                    std::string_view k1, std::string_view k2);

/// LL if both keys are left-hand, RR if both right-hand, LR otherwise.
/// Throws NotHandedError for unknown or non-alphabetic keys.
HandClass hand_class(const KeyboardLayout& layout, std::string_view k1,
                     std::string_view k2);

/// Same as hand_class but returns nullopt instead of throwing.
std::optional<HandClass> hand_class_opt(const KeyboardLayout& layout,
                                        std::string_view k1,
                                        std::string_view k2);

/// Uppercases a key label and trims surrounding whitespace.
std::string normalize_key_label(std::string_view raw);

}  // namespace deft
