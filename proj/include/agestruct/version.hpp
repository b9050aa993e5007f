#pragma once

namespace agestruct {

inline constexpr const char* kToolName = "agepop";
inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace agestruct
