#pragma once

namespace wspec {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace wspec
