#pragma once

namespace cbartgp {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cbartgp
