#pragma once

namespace eev {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kFeatureFormatVersion = 1;   // EEVF
inline constexpr int kCheckpointFormatVersion = 1;  // EEVM
inline constexpr int kLabelCsvSchemaVersion = 1;  // timestamp_ms,e01..e15

}  // namespace eev
