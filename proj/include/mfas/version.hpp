#pragma once

namespace mfas {

inline constexpr const char* kToolVersion = "mfas 1.0.0";

}  // namespace mfas
