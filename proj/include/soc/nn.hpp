#pragma once

#include <string>

#include "soc/ops.hpp"
#include "soc/params.hpp"
#include "soc/tape.hpp"

// Reusable differentiable layers. Every layer takes a ParamStore and a key
// prefix; parameters are created on first use and shared thereafter, so two
// calls with the same prefix share weights.
namespace soc::nn {

// Fixed sinusoidal encodings (not trainable).
Tensor sine_pe_1d(int len, int dim);
// Row-major positions; first half of channels encode y, second half x.
Tensor sine_pe_2d(int h, int w, int dim);

// x: [... x in] -> [... x out]
Tensor linear_p(Tape& tape, ParamStore& ps, const std::string& prefix, const Tensor& x, int in,
                int out, bool bias = true);

Tensor layer_norm_p(Tape& tape, ParamStore& ps, const std::string& prefix, const Tensor& x,
                    int dim);

// Scaled dot-product multi-head attention; queries from x [n x d], keys and
// values from y [m x d].
Tensor mha(Tape& tape, ParamStore& ps, const std::string& prefix, const Tensor& x, const Tensor& y,
           int heads);

// Pre-norm transformer encoder layer: x + MHA(LN(x)) then x + FFN(LN(x)).
Tensor encoder_layer(Tape& tape, ParamStore& ps, const std::string& prefix, const Tensor& x,
                     int heads);

// Pre-norm decoder layer: self-attention, cross-attention to mem, FFN.
Tensor decoder_layer(Tape& tape, ParamStore& ps, const std::string& prefix, const Tensor& q,
                     const Tensor& mem, int heads);

// Three stacked fully connected layers, relu between, none after the last.
Tensor mlp3(Tape& tape, ParamStore& ps, const std::string& prefix, const Tensor& x, int in,
            int hidden, int out);

}  // namespace soc::nn
