#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "soc/error.hpp"

namespace soc {

// Binary mask, row-major, values 0/1.
struct Mask {
  int h = 0, w = 0;
  std::vector<uint8_t> v;

  Mask() = default;
  Mask(int h_, int w_) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, 0) {}
  uint8_t at(int y, int x) const { return v[static_cast<size_t>(y) * w + x]; }
  void set(int y, int x, uint8_t val) { v[static_cast<size_t>(y) * w + x] = val; }
  int64_t area() const;
};

// Default boundary tolerance: 0.8% of the image diagonal, rounded up.
int boundary_tolerance(int h, int w);

// |intersection| / |union|; both masks empty scores 1.
double mask_iou(const Mask& pred, const Mask& gt);

// Boundary pixels of the foreground (4-connectivity, image border counts as
// background outside).
Mask mask_boundary(const Mask& m);

// DAVIS-style contour score: precision/recall of boundary pixels within
// Euclidean distance tol, F = 2PR/(P+R). Both masks empty scores 1, exactly
// one empty scores 0.
double boundary_f(const Mask& pred, const Mask& gt, int tol);

// Fraction of samples with IoU strictly greater than k.
double precision_at_k(const std::vector<double>& ious, double k);

// Mean hit rate over thresholds 0.50, 0.55, ..., 0.95 (one prediction and
// one ground truth per sample).
double map_50_95(const std::vector<double>& ious);

// Population variance of per-frame scores within one video.
double stability_variance(const std::vector<double>& per_frame);

}  // namespace soc
