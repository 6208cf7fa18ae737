#pragma once

#include <string>

namespace histodyn {

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace histodyn
