#pragma once

namespace twics {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace twics
