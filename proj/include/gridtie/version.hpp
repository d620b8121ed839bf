#pragma once

namespace gridtie {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gridtie
