#include "soc/nn.hpp"

#include <cmath>

namespace soc::nn {

namespace {

void fill_sine(double* row, int dim, double pos) {
  for (int k = 0; k < dim / 2; ++k) {
    double freq = std::pow(10000.0, -2.0 * k / static_cast<double>(dim));
    row[2 * k] = std::sin(pos * freq);
    row[2 * k + 1] = std::cos(pos * freq);
  }
  if (dim % 2) row[dim - 1] = 0.0;
}

}  // namespace

Tensor sine_pe_1d(int len, int dim) {
  Tensor pe(Shape{len, dim}, 0.0);
  for (int i = 0; i < len; ++i) fill_sine(pe.data() + static_cast<int64_t>(i) * dim, dim, i);
  return pe;
}

Tensor sine_pe_2d(int h, int w, int dim) {
  int half = dim / 2;
  Tensor pe(Shape{h * w, dim}, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double* row = pe.data() + static_cast<int64_t>(y * w + x) * dim;
      fill_sine(row, half, y);
      fill_sine(row + half, dim - half, x);
    }
  }
  return pe;
}

Tensor linear_p(Tape& tape, ParamStore& ps, const std::string& prefix, const Tensor& x, int in,
                int out, bool bias) {
  double bound = 1.0 / std::sqrt(static_cast<double>(in));
  Tensor w = ps.get(prefix + ".weight", {out, in}, Init::uniform(bound));
  Tensor b = bias ? ps.get(prefix + ".bias", {out}, Init::uniform(bound)) : Tensor();
  return ops::linear(tape, x, w, b);
}

Tensor layer_norm_p(Tape& tape, ParamStore& ps, const std::string& prefix, const Tensor& x,
                    int dim) {
  Tensor gamma = ps.get(prefix + ".gamma", {dim}, Init::ones());
  Tensor beta = ps.get(prefix + ".beta", {dim}, Init::zeros());
  return ops::layer_norm(tape, x, gamma, beta);
}

Tensor mha(Tape& tape, ParamStore& ps, const std::string& prefix, const Tensor& x, const Tensor& y,
           int heads) {
  if (x.rank() != 2 || y.rank() != 2 || x.dim(1) != y.dim(1)) {
    throw ShapeError("mha: expected [n x d], [m x d], got " + shape_str(x.shape()) + ", " +
                     shape_str(y.shape()));
  }
  int d = x.dim(1);
  if (heads < 1 || d % heads != 0) {
    throw ConfigError("mha: dim " + std::to_string(d) + " not divisible by heads " +
                      std::to_string(heads));
  }
  int n = x.dim(0), m = y.dim(0), dh = d / heads;
  Tensor q = linear_p(tape, ps, prefix + ".q", x, d, d);
  Tensor k = linear_p(tape, ps, prefix + ".k", y, d, d);
  Tensor v = linear_p(tape, ps, prefix + ".v", y, d, d);

  // [n x d] -> [heads x n x dh]
  auto split_heads = [&](const Tensor& t, int rows) {
    return ops::permute(tape, ops::reshape(tape, t, {rows, heads, dh}), {1, 0, 2});
  };
  Tensor qh = split_heads(q, n);
  Tensor kh = split_heads(k, m);
  Tensor vh = split_heads(v, m);

  double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Tensor> head_outs;
  head_outs.reserve(static_cast<size_t>(heads));
  for (int hd = 0; hd < heads; ++hd) {
    Tensor qi = ops::reshape(tape, ops::slice(tape, qh, 0, hd, 1), {n, dh});
    Tensor ki = ops::reshape(tape, ops::slice(tape, kh, 0, hd, 1), {m, dh});
    Tensor vi = ops::reshape(tape, ops::slice(tape, vh, 0, hd, 1), {m, dh});
    Tensor scores = ops::mul_scalar(tape, ops::matmul(tape, qi, ops::transpose(tape, ki)), scale);
    Tensor attn = ops::softmax(tape, scores, 1);
    head_outs.push_back(ops::matmul(tape, attn, vi));
  }
  Tensor merged = ops::concat(tape, head_outs, 1);
  return linear_p(tape, ps, prefix + ".o", merged, d, d);
}

namespace {

Tensor ffn(Tape& tape, ParamStore& ps, const std::string& prefix, const Tensor& x, int d) {
  Tensor h = ops::relu(tape, linear_p(tape, ps, prefix + ".fc1", x, d, 2 * d));
  return linear_p(tape, ps, prefix + ".fc2", h, 2 * d, d);
}

}  // namespace

Tensor encoder_layer(Tape& tape, ParamStore& ps, const std::string& prefix, const Tensor& x,
                     int heads) {
  int d = x.dim(x.rank() - 1);
  Tensor n1 = layer_norm_p(tape, ps, prefix + ".ln1", x, d);
  Tensor h = ops::add(tape, x, mha(tape, ps, prefix + ".attn", n1, n1, heads));
  Tensor n2 = layer_norm_p(tape, ps, prefix + ".ln2", h, d);
  return ops::add(tape, h, ffn(tape, ps, prefix + ".ffn", n2, d));
}

Tensor decoder_layer(Tape& tape, ParamStore& ps, const std::string& prefix, const Tensor& q,
                     const Tensor& mem, int heads) {
  int d = q.dim(q.rank() - 1);
  Tensor n1 = layer_norm_p(tape, ps, prefix + ".ln1", q, d);
  Tensor h = ops::add(tape, q, mha(tape, ps, prefix + ".self", n1, n1, heads));
  Tensor n2 = layer_norm_p(tape, ps, prefix + ".ln2", h, d);
  h = ops::add(tape, h, mha(tape, ps, prefix + ".cross", n2, mem, heads));
  Tensor n3 = layer_norm_p(tape, ps, prefix + ".ln3", h, d);
  return ops::add(tape, h, ffn(tape, ps, prefix + ".ffn", n3, d));
}

Tensor mlp3(Tape& tape, ParamStore& ps, const std::string& prefix, const Tensor& x, int in,
            int hidden, int out) {
  Tensor h1 = ops::relu(tape, linear_p(tape, ps, prefix + ".fc1", x, in, hidden));
  Tensor h2 = ops::relu(tape, linear_p(tape, ps, prefix + ".fc2", h1, hidden, hidden));
  return linear_p(tape, ps, prefix + ".fc3", h2, hidden, out);
}

}  // namespace soc::nn
