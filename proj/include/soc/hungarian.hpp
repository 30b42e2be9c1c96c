#pragma once

#include <utility>
#include <vector>

#include "soc/tensor.hpp"

namespace soc {

// Minimum-cost one-to-one assignment of min(n,m) pairs for an n x m cost
// matrix, by shortest augmenting paths. Pairs returned in ascending row
// order. NaN or infinite costs raise ContractError.
std::vector<std::pair<int, int>> hungarian(const Tensor& cost);

double assignment_cost(const Tensor& cost, const std::vector<std::pair<int, int>>& pairs);

}  // namespace soc
