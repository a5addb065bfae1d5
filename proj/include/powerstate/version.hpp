#pragma once

namespace powerstate {

inline constexpr const char* kToolName = "powerstate";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace powerstate
