#pragma once

namespace kkge {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace kkge
