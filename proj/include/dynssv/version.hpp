#pragma once

namespace dynssv {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dynssv
