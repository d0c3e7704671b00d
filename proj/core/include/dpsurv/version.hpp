#pragma once

namespace dpsurv {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace dpsurv
