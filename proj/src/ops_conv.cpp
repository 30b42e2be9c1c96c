#include <algorithm>
#include <cmath>
#include <cstring>
#include <vector>

#include "soc/ops.hpp"

namespace soc::ops {

namespace detail {

void gemm_nn_acc(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<int64_t>(i) * k;
    double* crow = c + static_cast<int64_t>(i) * n;
    for (int p = 0; p < k; ++p) {
      double av = arow[p];
      const double* brow = b + static_cast<int64_t>(p) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

void gemm_nt_acc(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int i = 0; i < m; ++i) {
    const double* arow = a + static_cast<int64_t>(i) * k;
    double* crow = c + static_cast<int64_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const double* brow = b + static_cast<int64_t>(j) * k;
      double dot = 0.0;
      for (int p = 0; p < k; ++p) dot += arow[p] * brow[p];
      crow[j] += dot;
    }
  }
}

void gemm_tn_acc(const double* a, const double* b, double* c, int m, int k, int n) {
  for (int p = 0; p < m; ++p) {
    const double* arow = a + static_cast<int64_t>(p) * k;
    const double* brow = b + static_cast<int64_t>(p) * n;
    for (int i = 0; i < k; ++i) {
      double av = arow[i];
      double* crow = c + static_cast<int64_t>(i) * n;
      for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

}  // namespace detail

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  int m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor out(Shape{m, n}, 0.0);
  detail::gemm_nn_acc(a.data(), b.data(), out.data(), m, k, n);
  bool need = tape.recording() && (a.requires_grad() || b.requires_grad());
  if (need) {
    out.set_requires_grad(true);
    Tensor ac = a, bc = b, oc = out;
    tape.record([ac, bc, oc, m, k, n]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad().data();
      if (ac.requires_grad()) detail::gemm_nt_acc(g, bc.data(), ac.grad().data(), m, n, k);
      if (bc.requires_grad()) detail::gemm_tn_acc(ac.data(), g, bc.grad().data(), m, k, n);
    });
  }
  return out;
}

Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() < 1 || w.rank() != 2) {
    throw ShapeError("linear: bad ranks " + shape_str(x.shape()) + ", " + shape_str(w.shape()));
  }
  int in = x.dim(x.rank() - 1);
  int outc = w.dim(0);
  if (w.dim(1) != in) {
    throw ShapeError("linear: weight " + shape_str(w.shape()) + " vs input " + shape_str(x.shape()));
  }
  bool has_bias = b.defined();
  if (has_bias && (b.rank() != 1 || b.dim(0) != outc)) {
    throw ShapeError("linear: bias " + shape_str(b.shape()) + " vs out " + std::to_string(outc));
  }
  int64_t rows = x.size() / in;
  Shape out_shape = x.shape();
  out_shape.back() = outc;
  Tensor out(out_shape, 0.0);
  double* po = out.data();
  if (has_bias) {
    const double* pb = b.data();
    for (int64_t r = 0; r < rows; ++r) std::memcpy(po + r * outc, pb, sizeof(double) * outc);
  }
  detail::gemm_nt_acc(x.data(), w.data(), po, static_cast<int>(rows), in, outc);
  bool need = tape.recording() &&
              (x.requires_grad() || w.requires_grad() || (has_bias && b.requires_grad()));
  if (need) {
    out.set_requires_grad(true);
    Tensor xc = x, wc = w, bc = b, oc = out;
    tape.record([xc, wc, bc, oc, rows, in, outc, has_bias]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad().data();
      int r = static_cast<int>(rows);
      if (xc.requires_grad()) detail::gemm_nn_acc(g, wc.data(), xc.grad().data(), r, outc, in);
      if (wc.requires_grad()) detail::gemm_tn_acc(g, xc.data(), wc.grad().data(), r, outc, in);
      if (has_bias && bc.requires_grad()) {
        double* gb = bc.grad().data();
        for (int64_t i = 0; i < rows; ++i) {
          const double* grow = g + i * outc;
          for (int j = 0; j < outc; ++j) gb[j] += grow[j];
        }
      }
    });
  }
  return out;
}

namespace {

void im2col(const double* x, int c, int h, int w, int kh, int kw, int stride, int pad, int ho,
            int wo, double* col) {
  int64_t p = static_cast<int64_t>(ho) * wo;
  int row = 0;
  for (int ch = 0; ch < c; ++ch) {
    for (int dy = 0; dy < kh; ++dy) {
      for (int dx = 0; dx < kw; ++dx, ++row) {
        double* dst = col + row * p;
        for (int oy = 0; oy < ho; ++oy) {
          int iy = oy * stride - pad + dy;
          double* drow = dst + static_cast<int64_t>(oy) * wo;
          if (iy < 0 || iy >= h) {
            std::memset(drow, 0, sizeof(double) * wo);
            continue;
          }
          const double* src = x + (static_cast<int64_t>(ch) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            int ix = ox * stride - pad + dx;
            drow[ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_acc(const double* col, int c, int h, int w, int kh, int kw, int stride, int pad,
                int ho, int wo, double* dx) {
  int64_t p = static_cast<int64_t>(ho) * wo;
  int row = 0;
  for (int ch = 0; ch < c; ++ch) {
    for (int dy = 0; dy < kh; ++dy) {
      for (int dx_ = 0; dx_ < kw; ++dx_, ++row) {
        const double* src = col + row * p;
        for (int oy = 0; oy < ho; ++oy) {
          int iy = oy * stride - pad + dy;
          if (iy < 0 || iy >= h) continue;
          const double* srow = src + static_cast<int64_t>(oy) * wo;
          double* drow = dx + (static_cast<int64_t>(ch) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            int ix = ox * stride - pad + dx_;
            if (ix >= 0 && ix < w) drow[ix] += srow[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& bias, int stride,
              int pad) {
  if (x.rank() != 4 || w.rank() != 4) {
    throw ShapeError("conv2d: expected 4-D input and weight, got " + shape_str(x.shape()) + ", " +
                     shape_str(w.shape()));
  }
  int n = x.dim(0), cin = x.dim(1), h = x.dim(2), ww = x.dim(3);
  int cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  if (w.dim(1) != cin) {
    throw ShapeError("conv2d: weight channels " + shape_str(w.shape()) + " vs input " +
                     shape_str(x.shape()));
  }
  if (stride < 1 || pad < 0) throw ShapeError("conv2d: bad stride/pad");
  int ho = (h + 2 * pad - kh) / stride + 1;
  int wo = (ww + 2 * pad - kw) / stride + 1;
  if (ho <= 0 || wo <= 0) {
    throw ShapeError("conv2d: empty output for input " + shape_str(x.shape()));
  }
  bool has_bias = bias.defined();
  if (has_bias && (bias.rank() != 1 || bias.dim(0) != cout)) {
    throw ShapeError("conv2d: bias " + shape_str(bias.shape()));
  }
  int ckk = cin * kh * kw;
  int64_t p = static_cast<int64_t>(ho) * wo;
  Tensor out(Shape{n, cout, ho, wo}, 0.0);
  auto cols = std::make_shared<std::vector<double>>(static_cast<size_t>(n) * ckk * p);
  const double* px = x.data();
  double* po = out.data();
  for (int i = 0; i < n; ++i) {
    double* col = cols->data() + static_cast<int64_t>(i) * ckk * p;
    im2col(px + static_cast<int64_t>(i) * cin * h * ww, cin, h, ww, kh, kw, stride, pad, ho, wo,
           col);
    double* oslice = po + static_cast<int64_t>(i) * cout * p;
    if (has_bias) {
      const double* pb = bias.data();
      for (int co = 0; co < cout; ++co) {
        double bv = pb[co];
        double* orow = oslice + static_cast<int64_t>(co) * p;
        for (int64_t j = 0; j < p; ++j) orow[j] = bv;
      }
    }
    detail::gemm_nn_acc(w.data(), col, oslice, cout, ckk, static_cast<int>(p));
  }
  bool need = tape.recording() &&
              (x.requires_grad() || w.requires_grad() || (has_bias && bias.requires_grad()));
  if (need) {
    out.set_requires_grad(true);
    Tensor xc = x, wc = w, bc = bias, oc = out;
    tape.record([xc, wc, bc, oc, cols, n, cin, h, ww, cout, kh, kw, stride, pad, ho, wo, ckk, p,
                 has_bias]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad().data();
      std::vector<double> dcol;
      if (xc.requires_grad()) dcol.resize(static_cast<size_t>(ckk) * p);
      for (int i = 0; i < n; ++i) {
        const double* gslice = g + static_cast<int64_t>(i) * cout * p;
        const double* col = cols->data() + static_cast<int64_t>(i) * ckk * p;
        if (wc.requires_grad()) {
          detail::gemm_nt_acc(gslice, col, wc.grad().data(), cout, static_cast<int>(p), ckk);
        }
        if (has_bias && bc.requires_grad()) {
          double* gb = bc.grad().data();
          for (int co = 0; co < cout; ++co) {
            const double* grow = gslice + static_cast<int64_t>(co) * p;
            double s = 0.0;
            for (int64_t j = 0; j < p; ++j) s += grow[j];
            gb[co] += s;
          }
        }
        if (xc.requires_grad()) {
          std::fill(dcol.begin(), dcol.end(), 0.0);
          detail::gemm_tn_acc(wc.data(), gslice, dcol.data(), cout, ckk, static_cast<int>(p));
          col2im_acc(dcol.data(), cin, h, ww, kh, kw, stride, pad, ho, wo,
                     xc.grad().data() + static_cast<int64_t>(i) * cin * h * ww);
        }
      }
    });
  }
  return out;
}

namespace {

struct Taps {
  std::vector<int> lo, hi;
  std::vector<double> wlo, whi;
};

Taps bilinear_taps(int in, int out) {
  Taps t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.wlo.resize(out);
  t.whi.resize(out);
  for (int o = 0; o < out; ++o) {
    double s = (o + 0.5) * in / static_cast<double>(out) - 0.5;
    double f = std::floor(s);
    int i0 = static_cast<int>(f);
    double w1 = s - f;
    int i1 = i0 + 1;
    i0 = std::clamp(i0, 0, in - 1);
    i1 = std::clamp(i1, 0, in - 1);
    t.lo[o] = i0;
    t.hi[o] = i1;
    t.wlo[o] = 1.0 - w1;
    t.whi[o] = w1;
  }
  return t;
}

}  // namespace

Tensor upsample2x(Tape& tape, const Tensor& x) {
  if (x.rank() != 4) throw ShapeError("upsample2x: expected 4-D, got " + shape_str(x.shape()));
  int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  int ho = 2 * h, wo = 2 * w;
  Taps ty = bilinear_taps(h, ho);
  Taps tx = bilinear_taps(w, wo);
  Tensor out(Shape{n, c, ho, wo}, 0.0);
  const double* px = x.data();
  double* po = out.data();
  int64_t planes = static_cast<int64_t>(n) * c;
  for (int64_t pl = 0; pl < planes; ++pl) {
    const double* src = px + pl * h * w;
    double* dst = po + pl * static_cast<int64_t>(ho) * wo;
    for (int oy = 0; oy < ho; ++oy) {
      const double* r0 = src + static_cast<int64_t>(ty.lo[oy]) * w;
      const double* r1 = src + static_cast<int64_t>(ty.hi[oy]) * w;
      double wy0 = ty.wlo[oy], wy1 = ty.whi[oy];
      double* drow = dst + static_cast<int64_t>(oy) * wo;
      for (int ox = 0; ox < wo; ++ox) {
        drow[ox] = wy0 * (tx.wlo[ox] * r0[tx.lo[ox]] + tx.whi[ox] * r0[tx.hi[ox]]) +
                   wy1 * (tx.wlo[ox] * r1[tx.lo[ox]] + tx.whi[ox] * r1[tx.hi[ox]]);
      }
    }
  }
  if (tape.recording() && x.requires_grad()) {
    out.set_requires_grad(true);
    Tensor xc = x, oc = out;
    tape.record([xc, oc, ty, tx, planes, h, w, ho, wo]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad().data();
      double* gx = xc.grad().data();
      for (int64_t pl = 0; pl < planes; ++pl) {
        const double* gsrc = g + pl * static_cast<int64_t>(ho) * wo;
        double* gdst = gx + pl * h * w;
        for (int oy = 0; oy < ho; ++oy) {
          double* r0 = gdst + static_cast<int64_t>(ty.lo[oy]) * w;
          double* r1 = gdst + static_cast<int64_t>(ty.hi[oy]) * w;
          double wy0 = ty.wlo[oy], wy1 = ty.whi[oy];
          const double* grow = gsrc + static_cast<int64_t>(oy) * wo;
          for (int ox = 0; ox < wo; ++ox) {
            double gv = grow[ox];
            r0[tx.lo[ox]] += wy0 * tx.wlo[ox] * gv;
            r0[tx.hi[ox]] += wy0 * tx.whi[ox] * gv;
            r1[tx.lo[ox]] += wy1 * tx.wlo[ox] * gv;
            r1[tx.hi[ox]] += wy1 * tx.whi[ox] * gv;
          }
        }
      }
    });
  }
  return out;
}

Tensor avg_pool2d(Tape& tape, const Tensor& x, int k, int stride) {
  if (x.rank() != 4) throw ShapeError("avg_pool2d: expected 4-D, got " + shape_str(x.shape()));
  if (k < 1 || stride < 1) throw ShapeError("avg_pool2d: bad kernel/stride");
  int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  int ho = (h - k) / stride + 1;
  int wo = (w - k) / stride + 1;
  if (ho <= 0 || wo <= 0) throw ShapeError("avg_pool2d: window larger than input");
  Tensor out(Shape{n, c, ho, wo}, 0.0);
  const double* px = x.data();
  double* po = out.data();
  double inv = 1.0 / (static_cast<double>(k) * k);
  int64_t planes = static_cast<int64_t>(n) * c;
  for (int64_t pl = 0; pl < planes; ++pl) {
    const double* src = px + pl * h * w;
    double* dst = po + pl * static_cast<int64_t>(ho) * wo;
    for (int oy = 0; oy < ho; ++oy) {
      for (int ox = 0; ox < wo; ++ox) {
        double s = 0.0;
        for (int dy = 0; dy < k; ++dy) {
          const double* row = src + static_cast<int64_t>(oy * stride + dy) * w + ox * stride;
          for (int dx = 0; dx < k; ++dx) s += row[dx];
        }
        dst[static_cast<int64_t>(oy) * wo + ox] = s * inv;
      }
    }
  }
  if (tape.recording() && x.requires_grad()) {
    out.set_requires_grad(true);
    Tensor xc = x, oc = out;
    tape.record([xc, oc, planes, h, w, ho, wo, k, stride, inv]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad().data();
      double* gx = xc.grad().data();
      for (int64_t pl = 0; pl < planes; ++pl) {
        const double* gsrc = g + pl * static_cast<int64_t>(ho) * wo;
        double* gdst = gx + pl * h * w;
        for (int oy = 0; oy < ho; ++oy) {
          for (int ox = 0; ox < wo; ++ox) {
            double gv = gsrc[static_cast<int64_t>(oy) * wo + ox] * inv;
            for (int dy = 0; dy < k; ++dy) {
              double* row = gdst + static_cast<int64_t>(oy * stride + dy) * w + ox * stride;
              for (int dx = 0; dx < k; ++dx) row[dx] += gv;
            }
          }
        }
      }
    });
  }
  return out;
}

}  // namespace soc::ops
