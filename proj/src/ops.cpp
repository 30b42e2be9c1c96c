#include "soc/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace soc::ops {

namespace {

// Right-aligned broadcast plan: per-output-axis element strides into each
// operand, 0 on broadcast axes.
struct BcPlan {
  Shape out;
  std::vector<int64_t> sa, sb;
  int64_t n = 0;
  bool same = false;
};

BcPlan make_plan(const Shape& a, const Shape& b) {
  BcPlan p;
  if (a == b) {
    p.out = a;
    p.n = shape_numel(a);
    p.same = true;
    return p;
  }
  size_t ra = a.size(), rb = b.size(), r = std::max(ra, rb);
  p.out.resize(r);
  for (size_t i = 0; i < r; ++i) {
    int da = i < r - ra ? 1 : a[i - (r - ra)];
    int db = i < r - rb ? 1 : b[i - (r - rb)];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError("broadcast mismatch " + shape_str(a) + " vs " + shape_str(b));
    }
    p.out[i] = std::max(da, db);
  }
  p.sa.assign(r, 0);
  p.sb.assign(r, 0);
  int64_t stra = 1;
  for (size_t i = ra; i-- > 0;) {
    size_t oi = i + (r - ra);
    p.sa[oi] = a[i] == 1 ? 0 : stra;
    stra *= a[i];
  }
  int64_t strb = 1;
  for (size_t i = rb; i-- > 0;) {
    size_t oi = i + (r - rb);
    p.sb[oi] = b[i] == 1 ? 0 : strb;
    strb *= b[i];
  }
  p.n = shape_numel(p.out);
  return p;
}

template <class F>
void bc_iterate(const BcPlan& p, F f) {
  if (p.same) {
    for (int64_t i = 0; i < p.n; ++i) f(i, i, i);
    return;
  }
  size_t r = p.out.size();
  std::vector<int> idx(r, 0);
  int64_t offa = 0, offb = 0;
  for (int64_t i = 0; i < p.n; ++i) {
    f(i, offa, offb);
    for (size_t ax = r; ax-- > 0;) {
      ++idx[ax];
      offa += p.sa[ax];
      offb += p.sb[ax];
      if (idx[ax] < p.out[ax]) break;
      offa -= static_cast<int64_t>(idx[ax]) * p.sa[ax];
      offb -= static_cast<int64_t>(idx[ax]) * p.sb[ax];
      idx[ax] = 0;
    }
  }
}

// fw(a,b) -> value; da/db(a,b,y) -> local derivative.
template <class Fw, class Da, class Db>
Tensor binary_op(Tape& tape, const Tensor& a, const Tensor& b, Fw fw, Da da, Db db) {
  BcPlan plan = make_plan(a.shape(), b.shape());
  Tensor out(plan.out, 0.0);
  {
    const double* pa = a.data();
    const double* pb = b.data();
    double* po = out.data();
    bc_iterate(plan, [&](int64_t i, int64_t ia, int64_t ib) { po[i] = fw(pa[ia], pb[ib]); });
  }
  bool need = tape.recording() && (a.requires_grad() || b.requires_grad());
  if (need) {
    out.set_requires_grad(true);
    Tensor ac = a, bc = b, oc = out;
    tape.record([ac, bc, oc, plan, da, db]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad().data();
      const double* pa = ac.data();
      const double* pb = bc.data();
      const double* po = oc.data();
      double* ga = ac.requires_grad() ? ac.grad().data() : nullptr;
      double* gb = bc.requires_grad() ? bc.grad().data() : nullptr;
      bc_iterate(plan, [&](int64_t i, int64_t ia, int64_t ib) {
        if (ga) ga[ia] += da(pa[ia], pb[ib], po[i]) * g[i];
        if (gb) gb[ib] += db(pa[ia], pb[ib], po[i]) * g[i];
      });
    });
  }
  return out;
}

template <class Fw, class Df>
Tensor unary_op(Tape& tape, const Tensor& x, Fw fw, Df df) {
  Tensor out(x.shape(), 0.0);
  const double* px = x.data();
  double* po = out.data();
  int64_t n = x.size();
  for (int64_t i = 0; i < n; ++i) po[i] = fw(px[i]);
  if (tape.recording() && x.requires_grad()) {
    out.set_requires_grad(true);
    Tensor xc = x, oc = out;
    tape.record([xc, oc, df]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad().data();
      const double* px = xc.data();
      const double* po = oc.data();
      double* gx = xc.grad().data();
      int64_t n = xc.size();
      for (int64_t i = 0; i < n; ++i) gx[i] += df(px[i], po[i]) * g[i];
    });
  }
  return out;
}

struct AxisView {
  int64_t outer, count, inner;
};

AxisView axis_view(const Shape& s, int axis, const char* op) {
  if (axis < 0 || axis >= static_cast<int>(s.size())) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " +
                     shape_str(s));
  }
  AxisView v{1, s[axis], 1};
  for (int i = 0; i < axis; ++i) v.outer *= s[i];
  for (size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Shape broadcast_shape(const Shape& a, const Shape& b) { return make_plan(a, b).out; }

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_op(
      tape, a, b, [](double x, double y) { return x + y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return 1.0; });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_op(
      tape, a, b, [](double x, double y) { return x - y; },
      [](double, double, double) { return 1.0; }, [](double, double, double) { return -1.0; });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_op(
      tape, a, b, [](double x, double y) { return x * y; },
      [](double, double y, double) { return y; }, [](double x, double, double) { return x; });
}

Tensor div(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_op(
      tape, a, b, [](double x, double y) { return x / y; },
      [](double, double y, double) { return 1.0 / y; },
      [](double x, double y, double) { return -x / (y * y); });
}

Tensor minimum(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_op(
      tape, a, b, [](double x, double y) { return x <= y ? x : y; },
      [](double x, double y, double) { return x <= y ? 1.0 : 0.0; },
      [](double x, double y, double) { return x <= y ? 0.0 : 1.0; });
}

Tensor maximum(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary_op(
      tape, a, b, [](double x, double y) { return x >= y ? x : y; },
      [](double x, double y, double) { return x >= y ? 1.0 : 0.0; },
      [](double x, double y, double) { return x >= y ? 0.0 : 1.0; });
}

Tensor add_scalar(Tape& tape, const Tensor& a, double c) {
  return unary_op(
      tape, a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor mul_scalar(Tape& tape, const Tensor& a, double c) {
  return unary_op(
      tape, a, [c](double x) { return x * c; }, [c](double, double) { return c; });
}

Tensor neg(Tape& tape, const Tensor& a) { return mul_scalar(tape, a, -1.0); }

Tensor relu(Tape& tape, const Tensor& a) {
  return unary_op(
      tape, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(Tape& tape, const Tensor& a) {
  return unary_op(
      tape, a, [](double x) { return stable_sigmoid(x); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor softplus(Tape& tape, const Tensor& a) {
  return unary_op(
      tape, a,
      [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) { return stable_sigmoid(x); });
}

Tensor softmax(Tape& tape, const Tensor& a, int axis) {
  AxisView v = axis_view(a.shape(), axis, "softmax");
  Tensor out(a.shape(), 0.0);
  const double* px = a.data();
  double* po = out.data();
  for (int64_t o = 0; o < v.outer; ++o) {
    for (int64_t in = 0; in < v.inner; ++in) {
      const int64_t base = o * v.count * v.inner + in;
      double m = -1e300;
      for (int64_t c = 0; c < v.count; ++c) m = std::max(m, px[base + c * v.inner]);
      double z = 0.0;
      for (int64_t c = 0; c < v.count; ++c) {
        double e = std::exp(px[base + c * v.inner] - m);
        po[base + c * v.inner] = e;
        z += e;
      }
      double inv = 1.0 / z;
      for (int64_t c = 0; c < v.count; ++c) po[base + c * v.inner] *= inv;
    }
  }
  if (tape.recording() && a.requires_grad()) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    tape.record([ac, oc, v]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad().data();
      const double* y = oc.data();
      double* gx = ac.grad().data();
      for (int64_t o = 0; o < v.outer; ++o) {
        for (int64_t in = 0; in < v.inner; ++in) {
          const int64_t base = o * v.count * v.inner + in;
          double dot = 0.0;
          for (int64_t c = 0; c < v.count; ++c) {
            int64_t k = base + c * v.inner;
            dot += g[k] * y[k];
          }
          for (int64_t c = 0; c < v.count; ++c) {
            int64_t k = base + c * v.inner;
            gx[k] += y[k] * (g[k] - dot);
          }
        }
      }
    });
  }
  return out;
}

Tensor logsumexp(Tape& tape, const Tensor& a, int axis) {
  AxisView v = axis_view(a.shape(), axis, "logsumexp");
  Shape out_shape;
  for (int i = 0; i < a.rank(); ++i) {
    if (i != axis) out_shape.push_back(a.dim(i));
  }
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor out(out_shape, 0.0);
  const double* px = a.data();
  double* po = out.data();
  for (int64_t o = 0; o < v.outer; ++o) {
    for (int64_t in = 0; in < v.inner; ++in) {
      const int64_t base = o * v.count * v.inner + in;
      double m = -1e300;
      for (int64_t c = 0; c < v.count; ++c) m = std::max(m, px[base + c * v.inner]);
      double z = 0.0;
      for (int64_t c = 0; c < v.count; ++c) z += std::exp(px[base + c * v.inner] - m);
      po[o * v.inner + in] = m + std::log(z);
    }
  }
  if (tape.recording() && a.requires_grad()) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    tape.record([ac, oc, v]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad().data();
      const double* lse = oc.data();
      const double* px = ac.data();
      double* gx = ac.grad().data();
      for (int64_t o = 0; o < v.outer; ++o) {
        for (int64_t in = 0; in < v.inner; ++in) {
          const int64_t base = o * v.count * v.inner + in;
          const int64_t ko = o * v.inner + in;
          for (int64_t c = 0; c < v.count; ++c) {
            int64_t k = base + c * v.inner;
            gx[k] += std::exp(px[k] - lse[ko]) * g[ko];
          }
        }
      }
    });
  }
  return out;
}

Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  constexpr double kEps = 1e-5;
  if (x.rank() < 1) throw ShapeError("layer_norm: rank-0 input");
  int c = x.dim(x.rank() - 1);
  if (gamma.rank() != 1 || gamma.dim(0) != c || beta.rank() != 1 || beta.dim(0) != c) {
    throw ShapeError("layer_norm: gamma/beta " + shape_str(gamma.shape()) + "/" +
                     shape_str(beta.shape()) + " must be [" + std::to_string(c) + "] for input " +
                     shape_str(x.shape()));
  }
  int64_t rows = x.size() / c;
  Tensor out(x.shape(), 0.0);
  std::vector<double> inv_std(rows), mean(rows);
  const double* px = x.data();
  const double* pg = gamma.data();
  const double* pb = beta.data();
  double* po = out.data();
  for (int64_t r = 0; r < rows; ++r) {
    const double* row = px + r * c;
    double mu = 0.0;
    for (int i = 0; i < c; ++i) mu += row[i];
    mu /= c;
    double var = 0.0;
    for (int i = 0; i < c; ++i) var += (row[i] - mu) * (row[i] - mu);
    var /= c;
    double inv = 1.0 / std::sqrt(var + kEps);
    mean[r] = mu;
    inv_std[r] = inv;
    double* orow = po + r * c;
    for (int i = 0; i < c; ++i) orow[i] = pg[i] * (row[i] - mu) * inv + pb[i];
  }
  bool need = tape.recording() && (x.requires_grad() || gamma.requires_grad() || beta.requires_grad());
  if (need) {
    out.set_requires_grad(true);
    Tensor xc = x, gc = gamma, bc = beta, oc = out;
    tape.record([xc, gc, bc, oc, mean = std::move(mean), inv_std = std::move(inv_std), rows,
                 c]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad().data();
      const double* px = xc.data();
      const double* pg = gc.data();
      double* gx = xc.requires_grad() ? xc.grad().data() : nullptr;
      double* gg = gc.requires_grad() ? gc.grad().data() : nullptr;
      double* gb = bc.requires_grad() ? bc.grad().data() : nullptr;
      for (int64_t r = 0; r < rows; ++r) {
        const double* row = px + r * c;
        const double* grow = g + r * c;
        double inv = inv_std[r], mu = mean[r];
        double sum_gy = 0.0, sum_gyx = 0.0;
        for (int i = 0; i < c; ++i) {
          double xhat = (row[i] - mu) * inv;
          double gy = grow[i] * pg[i];
          sum_gy += gy;
          sum_gyx += gy * xhat;
          if (gg) gg[i] += grow[i] * xhat;
          if (gb) gb[i] += grow[i];
        }
        if (gx) {
          double m1 = sum_gy / c, m2 = sum_gyx / c;
          double* gxr = gx + r * c;
          for (int i = 0; i < c; ++i) {
            double xhat = (row[i] - mu) * inv;
            gxr[i] += inv * (grow[i] * pg[i] - m1 - xhat * m2);
          }
        }
      }
    });
  }
  return out;
}

Tensor reshape(Tape& tape, const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.size()) {
    throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
  }
  Tensor out(std::move(shape), a.vec());
  if (tape.recording() && a.requires_grad()) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    tape.record([ac, oc]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad().data();
      double* gx = ac.grad().data();
      int64_t n = ac.size();
      for (int64_t i = 0; i < n; ++i) gx[i] += g[i];
    });
  }
  return out;
}

namespace {
std::vector<int64_t> row_major_strides(const Shape& s) {
  std::vector<int64_t> str(s.size(), 1);
  for (size_t i = s.size() - 1; i-- > 0;) str[i] = str[i + 1] * s[i + 1];
  return str;
}
}  // namespace

Tensor permute(Tape& tape, const Tensor& a, const std::vector<int>& axes) {
  int r = a.rank();
  if (static_cast<int>(axes.size()) != r) {
    throw ShapeError("permute: axes size " + std::to_string(axes.size()) + " vs rank " +
                     std::to_string(r));
  }
  Shape out_shape(r);
  for (int i = 0; i < r; ++i) out_shape[i] = a.dim(axes[i]);
  Tensor out(out_shape, 0.0);
  auto in_strides = row_major_strides(a.shape());
  std::vector<int64_t> src_stride(r);
  for (int i = 0; i < r; ++i) src_stride[i] = in_strides[axes[i]];

  const double* px = a.data();
  double* po = out.data();
  std::vector<int> idx(r, 0);
  int64_t src = 0;
  int64_t n = a.size();
  std::vector<int64_t> src_offsets(n);
  for (int64_t i = 0; i < n; ++i) {
    po[i] = px[src];
    src_offsets[i] = src;
    for (int ax = r; ax-- > 0;) {
      ++idx[ax];
      src += src_stride[ax];
      if (idx[ax] < out_shape[ax]) break;
      src -= static_cast<int64_t>(idx[ax]) * src_stride[ax];
      idx[ax] = 0;
    }
  }
  if (tape.recording() && a.requires_grad()) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    tape.record([ac, oc, src_offsets = std::move(src_offsets)]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad().data();
      double* gx = ac.grad().data();
      int64_t n = ac.size();
      for (int64_t i = 0; i < n; ++i) gx[src_offsets[i]] += g[i];
    });
  }
  return out;
}

Tensor transpose(Tape& tape, const Tensor& a) {
  if (a.rank() != 2) throw ShapeError("transpose: expected 2-D, got " + shape_str(a.shape()));
  return permute(tape, a, {1, 0});
}

Tensor concat(Tape& tape, const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& s0 = parts[0].shape();
  int r = static_cast<int>(s0.size());
  if (axis < 0 || axis >= r) throw ShapeError("concat: bad axis");
  int total = 0;
  for (const Tensor& t : parts) {
    if (t.rank() != r) throw ShapeError("concat: rank mismatch");
    for (int i = 0; i < r; ++i) {
      if (i != axis && t.dim(i) != s0[i]) {
        throw ShapeError("concat: shape mismatch " + shape_str(t.shape()) + " vs " + shape_str(s0));
      }
    }
    total += t.dim(axis);
  }
  Shape out_shape = s0;
  out_shape[axis] = total;
  Tensor out(out_shape, 0.0);

  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s0[i];
  for (int i = axis + 1; i < r; ++i) inner *= s0[i];
  int64_t out_row = static_cast<int64_t>(total) * inner;

  double* po = out.data();
  int64_t col_off = 0;
  for (const Tensor& t : parts) {
    int64_t block = static_cast<int64_t>(t.dim(axis)) * inner;
    const double* px = t.data();
    for (int64_t o = 0; o < outer; ++o) {
      std::memcpy(po + o * out_row + col_off, px + o * block, sizeof(double) * block);
    }
    col_off += block;
  }
  bool need = tape.recording() &&
              std::any_of(parts.begin(), parts.end(), [](const Tensor& t) { return t.requires_grad(); });
  if (need) {
    out.set_requires_grad(true);
    std::vector<Tensor> pc = parts;
    Tensor oc = out;
    tape.record([pc, oc, outer, inner, out_row]() mutable {
      if (!oc.has_grad()) return;
      (void)inner;
      const double* g = oc.grad().data();
      int64_t col_off = 0;
      for (Tensor& t : pc) {
        int64_t block = t.size() / outer;
        if (t.requires_grad()) {
          double* gx = t.grad().data();
          for (int64_t o = 0; o < outer; ++o) {
            const double* gsrc = g + o * out_row + col_off;
            double* gdst = gx + o * block;
            for (int64_t i = 0; i < block; ++i) gdst[i] += gsrc[i];
          }
        }
        col_off += block;
      }
    });
  }
  return out;
}

Tensor slice(Tape& tape, const Tensor& a, int axis, int start, int len) {
  const Shape& s = a.shape();
  int r = a.rank();
  if (axis < 0 || axis >= r) throw ShapeError("slice: bad axis");
  if (start < 0 || len <= 0 || start + len > s[axis]) {
    throw ShapeError("slice: range [" + std::to_string(start) + "," + std::to_string(start + len) +
                     ") out of bounds for axis size " + std::to_string(s[axis]));
  }
  Shape out_shape = s;
  out_shape[axis] = len;
  Tensor out(out_shape, 0.0);
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[i];
  for (int i = axis + 1; i < r; ++i) inner *= s[i];
  int64_t in_row = static_cast<int64_t>(s[axis]) * inner;
  int64_t out_row = static_cast<int64_t>(len) * inner;
  const double* px = a.data();
  double* po = out.data();
  for (int64_t o = 0; o < outer; ++o) {
    std::memcpy(po + o * out_row, px + o * in_row + start * inner, sizeof(double) * out_row);
  }
  if (tape.recording() && a.requires_grad()) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    tape.record([ac, oc, outer, inner, in_row, out_row, start]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad().data();
      double* gx = ac.grad().data();
      for (int64_t o = 0; o < outer; ++o) {
        const double* gsrc = g + o * out_row;
        double* gdst = gx + o * in_row + start * inner;
        for (int64_t i = 0; i < out_row; ++i) gdst[i] += gsrc[i];
      }
    });
  }
  return out;
}

Tensor index_select(Tape& tape, const Tensor& a, int axis, const std::vector<int>& indices) {
  const Shape& s = a.shape();
  int r = a.rank();
  if (axis < 0 || axis >= r) throw ShapeError("index_select: bad axis");
  for (int i : indices) {
    if (i < 0 || i >= s[axis]) {
      throw ShapeError("index_select: index " + std::to_string(i) + " out of range for axis size " +
                       std::to_string(s[axis]));
    }
  }
  Shape out_shape = s;
  out_shape[axis] = static_cast<int>(indices.size());
  Tensor out(out_shape, 0.0);
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= s[i];
  for (int i = axis + 1; i < r; ++i) inner *= s[i];
  int64_t in_row = static_cast<int64_t>(s[axis]) * inner;
  int64_t out_row = static_cast<int64_t>(indices.size()) * inner;
  const double* px = a.data();
  double* po = out.data();
  for (int64_t o = 0; o < outer; ++o) {
    for (size_t k = 0; k < indices.size(); ++k) {
      std::memcpy(po + o * out_row + k * inner, px + o * in_row + indices[k] * inner,
                  sizeof(double) * inner);
    }
  }
  if (tape.recording() && a.requires_grad()) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    tape.record([ac, oc, indices, outer, inner, in_row, out_row]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad().data();
      double* gx = ac.grad().data();
      for (int64_t o = 0; o < outer; ++o) {
        for (size_t k = 0; k < indices.size(); ++k) {
          const double* gsrc = g + o * out_row + k * inner;
          double* gdst = gx + o * in_row + indices[k] * inner;
          for (int64_t i = 0; i < inner; ++i) gdst[i] += gsrc[i];
        }
      }
    });
  }
  return out;
}

Tensor sum(Tape& tape, const Tensor& a) {
  double s = 0.0;
  const double* px = a.data();
  for (int64_t i = 0; i < a.size(); ++i) s += px[i];
  Tensor out = Tensor::scalar(s);
  if (tape.recording() && a.requires_grad()) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    tape.record([ac, oc]() mutable {
      if (!oc.has_grad()) return;
      double g = oc.grad()[0];
      double* gx = ac.grad().data();
      for (int64_t i = 0; i < ac.size(); ++i) gx[i] += g;
    });
  }
  return out;
}

Tensor mean(Tape& tape, const Tensor& a) {
  Tensor s = sum(tape, a);
  return mul_scalar(tape, s, 1.0 / static_cast<double>(a.size()));
}

Tensor sum_axis(Tape& tape, const Tensor& a, int axis) {
  AxisView v = axis_view(a.shape(), axis, "sum_axis");
  Shape out_shape;
  for (int i = 0; i < a.rank(); ++i) {
    if (i != axis) out_shape.push_back(a.dim(i));
  }
  if (out_shape.empty()) out_shape.push_back(1);
  Tensor out(out_shape, 0.0);
  const double* px = a.data();
  double* po = out.data();
  for (int64_t o = 0; o < v.outer; ++o) {
    for (int64_t c = 0; c < v.count; ++c) {
      const double* src = px + (o * v.count + c) * v.inner;
      double* dst = po + o * v.inner;
      for (int64_t i = 0; i < v.inner; ++i) dst[i] += src[i];
    }
  }
  if (tape.recording() && a.requires_grad()) {
    out.set_requires_grad(true);
    Tensor ac = a, oc = out;
    tape.record([ac, oc, v]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad().data();
      double* gx = ac.grad().data();
      for (int64_t o = 0; o < v.outer; ++o) {
        for (int64_t c = 0; c < v.count; ++c) {
          double* dst = gx + (o * v.count + c) * v.inner;
          const double* src = g + o * v.inner;
          for (int64_t i = 0; i < v.inner; ++i) dst[i] += src[i];
        }
      }
    });
  }
  return out;
}

Tensor mean_axis(Tape& tape, const Tensor& a, int axis) {
  Tensor s = sum_axis(tape, a, axis);
  return mul_scalar(tape, s, 1.0 / static_cast<double>(a.dim(axis)));
}

Tensor embedding(Tape& tape, const Tensor& table, const std::vector<int>& ids) {
  if (table.rank() != 2) throw ShapeError("embedding: table must be 2-D, got " + shape_str(table.shape()));
  int v = table.dim(0), c = table.dim(1);
  for (int id : ids) {
    if (id < 0 || id >= v) {
      throw ShapeError("embedding: id " + std::to_string(id) + " out of range for vocab " +
                       std::to_string(v));
    }
  }
  Tensor out(Shape{static_cast<int>(ids.size()), c}, 0.0);
  const double* pt = table.data();
  double* po = out.data();
  for (size_t i = 0; i < ids.size(); ++i) {
    std::memcpy(po + i * c, pt + static_cast<int64_t>(ids[i]) * c, sizeof(double) * c);
  }
  if (tape.recording() && table.requires_grad()) {
    out.set_requires_grad(true);
    Tensor tc = table, oc = out;
    tape.record([tc, oc, ids, c]() mutable {
      if (!oc.has_grad()) return;
      const double* g = oc.grad().data();
      double* gt = tc.grad().data();
      for (size_t i = 0; i < ids.size(); ++i) {
        const double* gsrc = g + i * c;
        double* gdst = gt + static_cast<int64_t>(ids[i]) * c;
        for (int j = 0; j < c; ++j) gdst[j] += gsrc[j];
      }
    });
  }
  return out;
}

}  // namespace soc::ops
