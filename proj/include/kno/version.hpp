#pragma once

namespace kno {

// Single version string for the library and the artifacts it emits;
// recorded in every run manifest so outputs stay attributable.
inline constexpr const char* kVersion = "0.1.0";

}  // namespace kno
