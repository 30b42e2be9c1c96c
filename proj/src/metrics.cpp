#include "soc/metrics.hpp"

#include <cmath>

namespace soc {

int64_t Mask::area() const {
  int64_t n = 0;
  for (uint8_t p : v) n += p;
  return n;
}

int boundary_tolerance(int h, int w) {
  double diag = std::sqrt(static_cast<double>(h) * h + static_cast<double>(w) * w);
  return static_cast<int>(std::ceil(0.008 * diag));
}

double mask_iou(const Mask& pred, const Mask& gt) {
  if (pred.h != gt.h || pred.w != gt.w) throw ShapeError("mask_iou: shape mismatch");
  int64_t inter = 0, uni = 0;
  for (size_t i = 0; i < pred.v.size(); ++i) {
    inter += pred.v[i] & gt.v[i];
    uni += pred.v[i] | gt.v[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

Mask mask_boundary(const Mask& m) {
  Mask b(m.h, m.w);
  for (int y = 0; y < m.h; ++y) {
    for (int x = 0; x < m.w; ++x) {
      if (!m.at(y, x)) continue;
      bool edge = y == 0 || y == m.h - 1 || x == 0 || x == m.w - 1 || !m.at(y - 1, x) ||
                  !m.at(y + 1, x) || !m.at(y, x - 1) || !m.at(y, x + 1);
      if (edge) b.set(y, x, 1);
    }
  }
  return b;
}

namespace {

// Dilation by a Euclidean disk of radius tol.
Mask dilate(const Mask& m, int tol) {
  if (tol <= 0) return m;
  std::vector<std::pair<int, int>> offs;
  for (int dy = -tol; dy <= tol; ++dy) {
    for (int dx = -tol; dx <= tol; ++dx) {
      if (dy * dy + dx * dx <= tol * tol) offs.emplace_back(dy, dx);
    }
  }
  Mask out(m.h, m.w);
  for (int y = 0; y < m.h; ++y) {
    for (int x = 0; x < m.w; ++x) {
      if (!m.at(y, x)) continue;
      for (auto [dy, dx] : offs) {
        int yy = y + dy, xx = x + dx;
        if (yy >= 0 && yy < m.h && xx >= 0 && xx < m.w) out.set(yy, xx, 1);
      }
    }
  }
  return out;
}

}  // namespace

double boundary_f(const Mask& pred, const Mask& gt, int tol) {
  if (pred.h != gt.h || pred.w != gt.w) throw ShapeError("boundary_f: shape mismatch");
  bool pe = pred.area() == 0, ge = gt.area() == 0;
  if (pe && ge) return 1.0;
  if (pe != ge) return 0.0;
  Mask pb = mask_boundary(pred);
  Mask gb = mask_boundary(gt);
  Mask pb_d = dilate(pb, tol);
  Mask gb_d = dilate(gb, tol);
  int64_t p_match = 0, p_total = 0, g_match = 0, g_total = 0;
  for (size_t i = 0; i < pb.v.size(); ++i) {
    if (pb.v[i]) {
      ++p_total;
      p_match += gb_d.v[i];
    }
    if (gb.v[i]) {
      ++g_total;
      g_match += pb_d.v[i];
    }
  }
  double precision = p_total ? static_cast<double>(p_match) / p_total : 0.0;
  double recall = g_total ? static_cast<double>(g_match) / g_total : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

double precision_at_k(const std::vector<double>& ious, double k) {
  if (ious.empty()) throw ContractError("precision_at_k: no samples");
  int64_t hits = 0;
  for (double iou : ious) hits += iou > k ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ious.size());
}

double map_50_95(const std::vector<double>& ious) {
  if (ious.empty()) throw ContractError("map_50_95: no samples");
  double acc = 0.0;
  for (int i = 0; i < 10; ++i) {
    acc += precision_at_k(ious, 0.50 + 0.05 * i);
  }
  return acc / 10.0;
}

double stability_variance(const std::vector<double>& per_frame) {
  if (per_frame.empty()) throw ContractError("stability_variance: no frames");
  double mu = 0.0;
  for (double x : per_frame) mu += x;
  mu /= static_cast<double>(per_frame.size());
  double var = 0.0;
  for (double x : per_frame) var += (x - mu) * (x - mu);
  return var / static_cast<double>(per_frame.size());
}

}  // namespace soc
