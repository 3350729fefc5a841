#pragma once

namespace deft {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace deft
