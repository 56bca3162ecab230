#pragma once

namespace mscrowd {

inline constexpr const char* version = "0.1.0";

}  // namespace mscrowd
