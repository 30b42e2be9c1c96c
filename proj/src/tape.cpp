#include "soc/tape.hpp"

namespace soc {

void Tape::backward(Tensor loss) {
  if (loss.size() != 1) {
    throw ContractError("backward() requires a scalar loss, got " + shape_str(loss.shape()));
  }
  loss.grad()[0] += 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
  nodes_.clear();
}

}  // namespace soc
