#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "soc/tape.hpp"
#include "soc/tensor.hpp"

namespace soc {

struct GradCheckResult {
  bool pass = true;
  double max_rel_err = 0.0;
  int64_t compared = 0;
  std::string worst;  // "tensor[index]: analytic vs numeric" for the largest error
};

// Central-difference gradient verification. `fn` must be a pure function of
// the input tensors' data; it is re-evaluated with the tape not recording for
// the numeric probes. Inputs must have requires_grad set. When
// max_entries_per_tensor > 0, only that many evenly spaced coordinates of
// each input are probed.
GradCheckResult grad_check(const std::vector<std::pair<std::string, Tensor>>& inputs,
                           const std::function<Tensor(Tape&)>& fn, double h = 1e-5,
                           double tol = 1e-4, int64_t max_entries_per_tensor = 0);

}  // namespace soc
