#pragma once

namespace pachoice {

inline constexpr const char* version = "0.1.0";

} // namespace pachoice
