#pragma once

namespace isacbeam {

inline constexpr const char* kToolName = "isac-beamopt";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace isacbeam
