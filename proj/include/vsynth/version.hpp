#pragma once

namespace vsynth {
inline constexpr const char* kVersion = "0.1.0";
}
