#pragma once

#include <span>
#include <vector>

namespace duriano {

// Integer apportionment of `total` proportional to non-negative `weights`
// (Hamilton's method). Remainders are awarded largest first, earlier index
// first on ties. The result always sums to `total`.
std::vector<int> largest_remainder(std::span<const double> weights, int total);

}  // namespace duriano
