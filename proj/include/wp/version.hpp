#pragma once

namespace wp {
inline constexpr const char* kVersion = "0.1.0";
}
