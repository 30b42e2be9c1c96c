#pragma once

#include <functional>
#include <vector>

#include "soc/tensor.hpp"

namespace soc {

// Reverse-mode tape. Ops append one node each, in execution order, so the node
// list is topologically sorted by construction; backward() walks it once in
// reverse. Single-threaded by design — run independent Tapes on separate
// threads instead of sharing one.
class Tape {
 public:
  Tape() = default;
  explicit Tape(bool recording) : recording_(recording) {}

  bool recording() const { return recording_; }
  void set_recording(bool r) { recording_ = r; }

  // `backward` reads the node output's grad and accumulates into the inputs'
  // grads. Ops only call this when recording and some input requires grad.
  void record(std::function<void()> backward) { nodes_.push_back(std::move(backward)); }

  size_t node_count() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse, once per node.
  // The node list is consumed; the tape is reusable afterwards.
  void backward(Tensor loss);

  void clear() { nodes_.clear(); }

 private:
  std::vector<std::function<void()>> nodes_;
  bool recording_ = true;
};

}  // namespace soc
