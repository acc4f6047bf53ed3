#pragma once

namespace fuzzdepth {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace fuzzdepth
