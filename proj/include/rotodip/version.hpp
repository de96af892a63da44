#pragma once

namespace rotodip {
inline constexpr const char* kVersion = "0.1.0";
}
