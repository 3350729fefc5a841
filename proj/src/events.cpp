#include "deft/events.hpp"

#include <cctype>

namespace deft {

namespace {

std::string fold_label(std::string_view label) {
    // Uppercase and strip separators so SHIFT, Shift_L and "CAPS LOCK" all
    // compare against one canonical spelling.
    std::string out;
    for (char c : label) {
        if (c == '_' || c == '-' || c == ' ') continue;
        out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    }
    return out;
}

}  // namespace

std::string device_name(Device d) {
    switch (d) {
        case Device::Desktop: return "desktop";
        case Device::Mobile: return "mobile";
        case Device::Tablet: return "tablet";
        case Device::Unknown: return "unknown";
    }
    return "unknown";
}

Device parse_device(std::string_view token) {
    std::string t = fold_label(token);
    if (t == "DESKTOP") return Device::Desktop;
    if (t == "MOBILE" || t == "PHONE") return Device::Mobile;
    if (t == "TABLET") return Device::Tablet;
    return Device::Unknown;
}

bool is_backspace_key(std::string_view label) {
    std::string t = fold_label(label);
    return t == "BACKSPACE" || t == "BKSP" || t == "BACKSP";
}

bool is_shift_key(std::string_view label) {
    std::string t = fold_label(label);
    return t == "SHIFT" || t == "LSHIFT" || t == "RSHIFT" || t == "SHIFTL" ||
           t == "SHIFTR" || t == "LEFTSHIFT" || t == "RIGHTSHIFT";
}

bool is_capslock_key(std::string_view label) {
    std::string t = fold_label(label);
    return t == "CAPSLOCK" || t == "CAPS";
}

}  // namespace deft
