#pragma once

namespace macmi {

inline constexpr const char* kVersion = "1.0.0";

} // namespace macmi
