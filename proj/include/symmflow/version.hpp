#pragma once

namespace symmflow {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace symmflow
