#include "soc/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <ostream>
#include <vector>

#include "soc/gradcheck.hpp"
#include "soc/hungarian.hpp"
#include "soc/losses.hpp"
#include "soc/metrics.hpp"
#include "soc/model.hpp"
#include "soc/nn.hpp"
#include "soc/ops.hpp"
#include "soc/random.hpp"
#include "soc/tape.hpp"

namespace soc {

namespace {

double brute_assignment(const Tensor& cost) {
  int n = cost.shape()[0], m = cost.shape()[1];
  const double* c = cost.data();
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> cols(static_cast<size_t>(std::max(n, m)));
  std::iota(cols.begin(), cols.end(), 0);
  do {
    double s = 0;
    for (int i = 0; i < std::min(n, m); ++i) {
      int r = n <= m ? i : cols[static_cast<size_t>(i)];
      int cc = n <= m ? cols[static_cast<size_t>(i)] : i;
      if (r >= n || cc >= m) continue;
      s += c[r * m + cc];
    }
    best = std::min(best, s);
  } while (std::next_permutation(cols.begin(), cols.end()));
  return best;
}

double slow_iou(const Mask& a, const Mask& b) {
  double inter = 0, uni = 0;
  for (size_t i = 0; i < a.v.size(); ++i) {
    if (a.v[i] && b.v[i]) inter += 1;
    if (a.v[i] || b.v[i]) uni += 1;
  }
  return uni == 0 ? 1.0 : inter / uni;
}

bool check_gradients() {
  Rng rng(1001);
  for (int trial = 0; trial < 3; ++trial) {
    Tensor a = Tensor::zeros(Shape{3, 4}, true);
    Tensor b = Tensor::zeros(Shape{4, 2}, true);
    for (int i = 0; i < 12; ++i) a.data()[i] = rng.normal();
    for (int i = 0; i < 8; ++i) b.data()[i] = rng.normal();
    auto r = grad_check({{"a", a}, {"b", b}}, [&](Tape& t) {
      return ops::sum(t, ops::softmax(t, ops::matmul(t, a, b), 1));
    });
    if (!r.pass) return false;

    Tensor logits = Tensor::zeros(Shape{1, 9}, true);
    Tensor gt = Tensor::zeros(Shape{1, 9});
    for (int i = 0; i < 9; ++i) {
      logits.data()[i] = rng.normal();
      gt.data()[i] = rng.uniform() < 0.5 ? 1 : 0;
    }
    Tape tape;
    auto rl = grad_check({{"logits", logits}}, [&](Tape& t) {
      return ops::add(t, dice_loss(t, logits, gt), focal_loss(t, logits, gt));
    });
    if (!rl.pass) return false;
  }
  return true;
}

bool check_assignment() {
  Rng rng(1002);
  for (int trial = 0; trial < 40; ++trial) {
    int n = 1 + static_cast<int>(rng.randint(5));
    int m = 1 + static_cast<int>(rng.randint(5));
    Tensor c = Tensor::zeros(Shape{n, m});
    for (int i = 0; i < n * m; ++i) c.data()[i] = rng.uniform() * 10 - 5;
    double got = assignment_cost(c, hungarian(c));
    if (std::abs(got - brute_assignment(c)) > 1e-9) return false;
  }
  return true;
}

bool check_metrics() {
  Rng rng(1003);
  for (int trial = 0; trial < 10; ++trial) {
    Mask a(16, 16), b(16, 16);
    for (int i = 0; i < 256; ++i) {
      a.v[static_cast<size_t>(i)] = rng.uniform() < 0.4 ? 1 : 0;
      b.v[static_cast<size_t>(i)] = rng.uniform() < 0.4 ? 1 : 0;
    }
    if (mask_iou(a, b) != slow_iou(a, b)) return false;
  }
  if (std::abs(map_50_95({0.72}) - 0.5) > 1e-15) return false;
  if (precision_at_k({0.5, 0.9}, 0.5) != 0.5) return false;
  if (std::abs(stability_variance({0.0, 1.0}) - 0.25) > 1e-15) return false;
  Mask e(8, 8);
  if (mask_iou(e, e) != 1.0 || boundary_f(e, e, 1) != 1.0) return false;
  return true;
}

bool check_contrastive() {
  Tape tape(false);
  Tensor q = Tensor::zeros(Shape{20, 8});
  Tensor txt = Tensor::full(Shape{3, 8}, 0.5);
  double got = contrastive_loss(tape, q, txt, 0).value();
  return std::abs(got - std::log(20.0)) < 1e-9;
}

bool check_determinism() {
  Config cfg;
  cfg.dim = 16;
  cfg.text_dim = 16;
  cfg.num_queries = 4;
  cfg.frames = 2;
  cfg.num_encoder_layers = 1;
  cfg.num_decoder_layers = 1;
  cfg.num_voc_layers = 1;
  cfg.height = 32;
  cfg.width = 32;
  Model m1(cfg), m2(cfg);
  for (const auto& [name, t1] : m1.params().map()) {
    Tensor t2 = m2.params().at(name);
    if (std::memcmp(t1.data(), t2.data(), sizeof(double) * static_cast<size_t>(t1.size())) !=
        0) {
      return false;
    }
  }
  Rng rng(1004);
  Tensor frames = Tensor::zeros(Shape{2, 3, 32, 32});
  for (int64_t i = 0; i < frames.size(); ++i) frames.data()[i] = rng.uniform();
  Tape off(false);
  ModelOutput o1 = m1.forward(off, frames, {2, 3});
  ModelOutput o2 = m2.forward(off, frames, {2, 3});
  return std::memcmp(o1.masks.data(), o2.masks.data(),
                     sizeof(double) * static_cast<size_t>(o1.masks.size())) == 0;
}

}  // namespace

bool run_verify(std::ostream& os) {
  struct Check {
    const char* name;
    bool (*fn)();
  };
  const Check checks[] = {
      {"gradients match finite differences", check_gradients},
      {"assignment matches exhaustive search", check_assignment},
      {"metrics match per-pixel oracles", check_metrics},
      {"uniform contrastive loss equals ln N", check_contrastive},
      {"model construction and forward are deterministic", check_determinism},
  };
  bool all = true;
  for (const Check& c : checks) {
    bool ok = false;
    try {
      ok = c.fn();
    } catch (const std::exception& e) {
      os << "FAIL " << c.name << " (" << e.what() << ")\n";
      all = false;
      continue;
    }
    os << (ok ? "ok   " : "FAIL ") << c.name << "\n";
    all = all && ok;
  }
  os << (all ? "verify: all checks passed" : "verify: FAILURES") << "\n";
  return all;
}

}  // namespace soc
