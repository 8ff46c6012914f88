#pragma once

namespace crpa {

inline constexpr const char* kVersion = "0.1.0";

}
