#pragma once

#include <cstdio>
#include <string>

namespace sde {

// Round-trip decimal rendering used by every CSV artifact.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace sde
