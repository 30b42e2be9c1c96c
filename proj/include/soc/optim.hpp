#pragma once

#include <map>
#include <string>
#include <vector>

#include "soc/params.hpp"

namespace soc {

// Adaptive per-parameter step. beta1 = 0 gives a momentum-free variant;
// the default beta1 recovers standard Adam.
class AdamOptimizer {
 public:
  struct Config {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
  };

  AdamOptimizer(ParamStore& store, Config cfg);

  void step();

  // schedule hook; moment estimates are kept
  void set_lr(double lr) { cfg_.lr = lr; }
  double lr() const { return cfg_.lr; }

 private:
  struct State {
    Tensor param;
    std::vector<double> m, v;
  };
  Config cfg_;
  std::vector<State> states_;  // name-sorted at construction
  int64_t t_ = 0;
};

}  // namespace soc
