#pragma once

#include <string_view>

namespace spatialecon {

inline constexpr std::string_view kToolName = "spatialecon";
inline constexpr std::string_view kVersion = "0.1.0";

}  // namespace spatialecon
