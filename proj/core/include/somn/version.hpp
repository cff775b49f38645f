#pragma once

namespace somn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace somn
