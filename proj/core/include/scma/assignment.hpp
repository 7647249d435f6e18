#pragma once

#include <vector>

#include "scma/types.hpp"

namespace scma {

// Minimum-cost perfect assignment on a square cost matrix.
// Returns row -> column. O(n^3), exact.
std::vector<int> hungarian(const RMat& cost);

double assignment_cost(const RMat& cost, const std::vector<int>& row_to_col);

}  // namespace scma
