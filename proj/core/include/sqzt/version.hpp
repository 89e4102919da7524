#pragma once

namespace sqzt {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace sqzt
