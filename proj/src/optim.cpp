#include "soc/optim.hpp"

#include <cmath>

namespace soc {

AdamOptimizer::AdamOptimizer(ParamStore& store, Config cfg) : cfg_(cfg) {
  for (const auto& [name, t] : store.map()) {
    State s;
    s.param = t;
    s.m.assign(static_cast<size_t>(t.size()), 0.0);
    s.v.assign(static_cast<size_t>(t.size()), 0.0);
    states_.push_back(std::move(s));
  }
}

void AdamOptimizer::step() {
  ++t_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (State& s : states_) {
    double* p = s.param.data();
    const double* g = s.param.has_grad() ? s.param.grad().data() : nullptr;
    int64_t n = s.param.size();
    for (int64_t i = 0; i < n; ++i) {
      double gi = g ? g[i] : 0.0;
      s.m[i] = cfg_.beta1 * s.m[i] + (1.0 - cfg_.beta1) * gi;
      s.v[i] = cfg_.beta2 * s.v[i] + (1.0 - cfg_.beta2) * gi * gi;
      double mhat = s.m[i] / bc1;
      double vhat = s.v[i] / bc2;
      p[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace soc
