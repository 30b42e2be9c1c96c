#pragma once

#include <vector>

#include "soc/tape.hpp"
#include "soc/tensor.hpp"

// Differentiable operations. Every op computes eagerly and, when the tape is
// recording and an input requires grad, appends exactly one backward node.
// Binary elementwise ops broadcast with right-aligned numpy semantics; their
// backward reduces over the broadcast axes.
namespace soc::ops {

Shape broadcast_shape(const Shape& a, const Shape& b);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
// Precondition: b bounded away from zero; not part of the extreme-input safety set.
Tensor div(Tape& tape, const Tensor& a, const Tensor& b);
Tensor minimum(Tape& tape, const Tensor& a, const Tensor& b);
Tensor maximum(Tape& tape, const Tensor& a, const Tensor& b);

Tensor add_scalar(Tape& tape, const Tensor& a, double c);
Tensor mul_scalar(Tape& tape, const Tensor& a, double c);
Tensor neg(Tape& tape, const Tensor& a);

Tensor relu(Tape& tape, const Tensor& a);
Tensor sigmoid(Tape& tape, const Tensor& a);
// log(1 + e^x), overflow-safe in both tails.
Tensor softplus(Tape& tape, const Tensor& a);

// Probability slices along `axis`; max-subtracted for overflow safety.
Tensor softmax(Tape& tape, const Tensor& a, int axis);
// log sum exp reduction over `axis` (axis removed; scalars become shape [1]).
Tensor logsumexp(Tape& tape, const Tensor& a, int axis);

// Zero-mean unit-variance over the last axis, then gamma*xhat + beta.
// gamma/beta are 1-D and match the last axis. Variance epsilon 1e-5.
Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gamma, const Tensor& beta);

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
// matmul(x, w) + b with b broadcast over rows.
Tensor linear(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& b);

Tensor reshape(Tape& tape, const Tensor& a, Shape shape);
Tensor permute(Tape& tape, const Tensor& a, const std::vector<int>& axes);
Tensor transpose(Tape& tape, const Tensor& a);  // 2-D
Tensor concat(Tape& tape, const std::vector<Tensor>& parts, int axis);
Tensor slice(Tape& tape, const Tensor& a, int axis, int start, int len);
Tensor index_select(Tape& tape, const Tensor& a, int axis, const std::vector<int>& indices);

Tensor sum(Tape& tape, const Tensor& a);
Tensor mean(Tape& tape, const Tensor& a);
Tensor sum_axis(Tape& tape, const Tensor& a, int axis);
Tensor mean_axis(Tape& tape, const Tensor& a, int axis);

// table: [V x C]; out: [ids.size() x C]. Backward scatter-adds into table rows.
Tensor embedding(Tape& tape, const Tensor& table, const std::vector<int>& ids);

// x: [N x Cin x H x W], w: [Cout x Cin x kh x kw], bias: [Cout] (optional,
// pass undefined Tensor to skip). Floor output sizing, zero padding.
Tensor conv2d(Tape& tape, const Tensor& x, const Tensor& w, const Tensor& bias, int stride,
              int pad);

// Bilinear 2x upsampling (half-pixel centers), x: [N x C x H x W].
Tensor upsample2x(Tape& tape, const Tensor& x);

// x: [N x C x H x W], non-overlapping-or-strided window mean, no padding.
Tensor avg_pool2d(Tape& tape, const Tensor& x, int k, int stride);

namespace detail {
// C[m x n] += A[m x k] * B[k x n]
void gemm_nn_acc(const double* a, const double* b, double* c, int m, int k, int n);
// C[m x n] += A[m x k] * B[n x k]^T
void gemm_nt_acc(const double* a, const double* b, double* c, int m, int k, int n);
// C[k x n] += A[m x k]^T * B[m x n]
void gemm_tn_acc(const double* a, const double* b, double* c, int m, int k, int n);
}  // namespace detail

}  // namespace soc::ops
