#pragma once

namespace wrm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace wrm
