#pragma once

namespace rpr {

inline constexpr const char* kVersion = "1.0.0";

}  // namespace rpr
