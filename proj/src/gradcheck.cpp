#include "soc/gradcheck.hpp"

#include <cmath>

namespace soc {

GradCheckResult grad_check(const std::vector<std::pair<std::string, Tensor>>& inputs,
                           const std::function<Tensor(Tape&)>& fn, double h, double tol,
                           int64_t max_entries_per_tensor) {
  for (const auto& [name, t] : inputs) {
    if (!t.requires_grad()) throw ContractError("grad_check: input '" + name + "' not trainable");
    Tensor handle = t;
    handle.zero_grad();
  }

  Tape tape(true);
  Tensor loss = fn(tape);
  if (loss.size() != 1) throw ContractError("grad_check: loss must be scalar");
  tape.backward(loss);

  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (const auto& [name, t] : inputs) {
    analytic.push_back(t.has_grad() ? t.grad() : std::vector<double>(t.size(), 0.0));
  }

  GradCheckResult res;
  Tape off(false);
  for (size_t k = 0; k < inputs.size(); ++k) {
    Tensor t = inputs[k].second;
    double* p = t.data();
    int64_t n = t.size();
    int64_t probes = (max_entries_per_tensor > 0 && n > max_entries_per_tensor)
                         ? max_entries_per_tensor
                         : n;
    for (int64_t j = 0; j < probes; ++j) {
      int64_t i = probes == n ? j : (j * n) / probes;
      double saved = p[i];
      p[i] = saved + h;
      double f_plus = fn(off).value();
      p[i] = saved - h;
      double f_minus = fn(off).value();
      p[i] = saved;
      double numeric = (f_plus - f_minus) / (2.0 * h);
      double a = analytic[k][static_cast<size_t>(i)];
      double rel = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      ++res.compared;
      if (rel > res.max_rel_err) {
        res.max_rel_err = rel;
        res.worst = inputs[k].first + "[" + std::to_string(i) + "]: analytic " + std::to_string(a) +
                    " vs numeric " + std::to_string(numeric);
      }
      if (rel >= tol) res.pass = false;
    }
  }
  return res;
}

}  // namespace soc
