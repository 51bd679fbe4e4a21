#pragma once

namespace mobman {

inline constexpr const char* kVersion = "0.1.0";

} // namespace mobman
