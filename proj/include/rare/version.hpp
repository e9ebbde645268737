#pragma once

namespace rare {

inline constexpr const char* kVersion = "0.1.0";

} // namespace rare
