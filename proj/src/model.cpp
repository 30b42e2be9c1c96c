#include "soc/model.hpp"

#include <cmath>

#include "soc/error.hpp"
#include "soc/nn.hpp"
#include "soc/ops.hpp"
#include "soc/synthdata.hpp"

namespace soc {

using namespace ops;

namespace {

Tensor conv_p(Tape& tape, ParamStore& ps, const std::string& prefix, const Tensor& x, int cin,
              int cout, int k, int stride, int pad) {
  double bound = 1.0 / std::sqrt(static_cast<double>(cin) * k * k);
  Tensor w = ps.get(prefix + ".weight", Shape{cout, cin, k, k}, Init::uniform(bound));
  Tensor b = ps.get(prefix + ".bias", Shape{cout}, Init::zeros());
  return conv2d(tape, x, w, b, stride, pad);
}

}  // namespace

Model::Model(const Config& cfg) : cfg_(cfg), ps_(cfg.seed) {
  cfg_.validate();
  // register every parameter up front so checkpoints can be loaded before any
  // real input is seen
  Tape off(false);
  forward(off, Tensor::zeros(Shape{1, 3, 32, 32}), std::vector<int>{2});
}

int Model::kernel_dim() const {
  int c = cfg_.dim + 2;
  return (8 * c + 8) + (8 * 8 + 8) + (8 + 1);
}

ModelOutput Model::forward(Tape& tape, const Tensor& frames, const std::vector<int>& tokens) {
  const Shape& fs = frames.shape();
  if (fs.size() != 4 || fs[1] != 3) throw ContractError("frames must be [T x 3 x H x W]");
  if (fs[0] < 1) throw ContractError("need at least one frame");
  if (fs[2] % 32 != 0 || fs[3] % 32 != 0) {
    throw ContractError("frame height and width must be divisible by 32");
  }
  if (tokens.empty() || tokens.size() > 64) throw ContractError("token count must be in [1, 64]");

  std::vector<Tensor> levels = encode_video(tape, frames);
  auto [words, sentence] = encode_text(tape, tokens);
  FusionOut fused = fuse(tape, levels, words);
  auto [encoded, frame_q] = aggregate_frames(tape, fused);

  ModelOutput out;
  Tensor sentence_d = nn::linear_p(tape, ps_, "text.proj_s", sentence, cfg_.text_dim, cfg_.dim);
  if (cfg_.voc_structure == "none") {
    out.video_q = Tensor::zeros(Shape{cfg_.num_queries, cfg_.dim});
    out.frame_q = frame_q;  // enhancement skipped entirely: bitwise identity
  } else {
    out.video_q = cluster_video(tape, frame_q, sentence_d);
    out.frame_q = broadcast_enhance(tape, frame_q, out.video_q);
  }
  Tensor seg = fpn_decode(tape, encoded, levels[0]);
  out.class_logits = class_head(tape, out.frame_q);
  out.boxes = box_head(tape, out.frame_q);
  out.masks = mask_head(tape, out.frame_q, seg, out.boxes);
  out.text_fused = fused.words[2];
  return out;
}

std::vector<Tensor> Model::encode_video(Tape& tape, const Tensor& frames) {
  Tensor x = relu(tape, conv_p(tape, ps_, "backbone.stem", frames, 3, 16, 3, 2, 1));
  std::vector<Tensor> levels;
  int cin = 16;
  const int chans[4] = {16, 32, 64, 128};
  for (int i = 0; i < 4; ++i) {
    x = relu(tape,
             conv_p(tape, ps_, "backbone.stage" + std::to_string(i + 1), x, cin, chans[i], 3, 2, 1));
    levels.push_back(x);
    cin = chans[i];
  }
  return levels;
}

std::pair<Tensor, Tensor> Model::encode_text(Tape& tape, const std::vector<int>& tokens) {
  int len = static_cast<int>(tokens.size());
  double bound = 1.0 / std::sqrt(static_cast<double>(cfg_.text_dim));
  Tensor table = ps_.get("text.embed", Shape{vocab_size(), cfg_.text_dim}, Init::uniform(bound));
  Tensor x = embedding(tape, table, tokens);
  x = add(tape, x, nn::sine_pe_1d(len, cfg_.text_dim));
  for (int l = 0; l < 2; ++l) {
    x = nn::encoder_layer(tape, ps_, "text.enc" + std::to_string(l), x, cfg_.heads);
  }
  Tensor sentence = reshape(tape, mean_axis(tape, x, 0), Shape{1, cfg_.text_dim});
  return {x, sentence};
}

FusionOut Model::fuse(Tape& tape, const std::vector<Tensor>& levels, const Tensor& words) {
  const int d = cfg_.dim;
  FusionOut out;
  out.words_proj = nn::linear_p(tape, ps_, "fusion.proj_w", words, cfg_.text_dim, d);
  bool gate_visual = cfg_.fusion_strategy == "l2v" || cfg_.fusion_strategy == "both";
  bool gate_words = cfg_.fusion_strategy == "v2l" || cfg_.fusion_strategy == "both";
  for (int s = 0; s < 3; ++s) {
    const Tensor& lvl = levels[static_cast<size_t>(s) + 1];  // scales 2..4
    int t = lvl.shape()[0], ci = lvl.shape()[1], hi = lvl.shape()[2], wi = lvl.shape()[3];
    Tensor proj =
        conv_p(tape, ps_, "fusion.proj_v" + std::to_string(s + 2), lvl, ci, d, 1, 1, 0);
    proj = permute(tape, reshape(tape, proj, Shape{t, d, hi * wi}), {0, 2, 1});
    out.visual_proj.push_back(proj);
    out.dims.emplace_back(hi, wi);
    if (gate_visual) {
      Tensor flat = reshape(tape, proj, Shape{t * hi * wi, d});
      Tensor gate = nn::mha(tape, ps_, "fusion.attn", flat, out.words_proj, cfg_.heads);
      out.visual.push_back(reshape(tape, mul(tape, gate, flat), Shape{t, hi * wi, d}));
    } else {
      out.visual.push_back(proj);
    }
    if (gate_words) {
      Tensor flat = reshape(tape, proj, Shape{t * hi * wi, d});
      Tensor gate = nn::mha(tape, ps_, "fusion.attn", out.words_proj, flat, cfg_.heads);
      out.words.push_back(mul(tape, gate, out.words_proj));
    } else {
      out.words.push_back(out.words_proj);
    }
  }
  return out;
}

std::pair<std::vector<Tensor>, Tensor> Model::aggregate_frames(Tape& tape, const FusionOut& f) {
  const int d = cfg_.dim;
  int t_frames = f.visual[0].shape()[0];
  double bound = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor scale_emb = ps_.get("sim.scale_emb", Shape{3, d}, Init::uniform(bound));

  std::vector<Tensor> toks;
  std::vector<int> counts;
  for (int s = 0; s < 3; ++s) {
    Tensor x = f.visual[static_cast<size_t>(s)];
    auto [hi, wi] = f.dims[static_cast<size_t>(s)];
    x = add(tape, x, nn::sine_pe_2d(hi, wi, d));
    x = add(tape, x, slice(tape, scale_emb, 0, s, 1));
    toks.push_back(x);
    counts.push_back(hi * wi);
  }
  Tensor all = concat(tape, toks, 1);  // [T x P x D]
  int p = all.shape()[1];

  Tensor qe = ps_.get("sim.query_emb", Shape{cfg_.num_queries, d}, Init::uniform(bound));
  std::vector<Tensor> enc_frames, q_frames;
  for (int t = 0; t < t_frames; ++t) {
    Tensor ft = reshape(tape, slice(tape, all, 0, t, 1), Shape{p, d});
    for (int k = 0; k < cfg_.num_encoder_layers; ++k) {
      ft = nn::encoder_layer(tape, ps_, "sim.enc" + std::to_string(k), ft, cfg_.heads);
    }
    enc_frames.push_back(reshape(tape, ft, Shape{1, p, d}));
    Tensor q = qe;
    for (int k = 0; k < cfg_.num_decoder_layers; ++k) {
      q = nn::decoder_layer(tape, ps_, "sim.dec" + std::to_string(k), q, ft, cfg_.heads);
    }
    q_frames.push_back(reshape(tape, q, Shape{1, cfg_.num_queries, d}));
  }
  Tensor enc_all = concat(tape, enc_frames, 0);
  Tensor frame_q = concat(tape, q_frames, 0);

  std::vector<Tensor> encoded;
  int off = 0;
  for (int s = 0; s < 3; ++s) {
    encoded.push_back(slice(tape, enc_all, 1, off, counts[static_cast<size_t>(s)]));
    off += counts[static_cast<size_t>(s)];
  }
  return {encoded, frame_q};
}

Tensor Model::cluster_video(Tape& tape, const Tensor& frame_q, const Tensor& sentence_d) {
  const int d = cfg_.dim, nq = cfg_.num_queries;
  int t_frames = frame_q.shape()[0];
  if (frame_q.shape()[1] != nq) throw ContractError("frame query count mismatch");

  Tensor x = add(tape, frame_q, reshape(tape, nn::sine_pe_1d(t_frames, d), Shape{t_frames, 1, d}));
  Tensor toks = reshape(tape, x, Shape{t_frames * nq, d});
  bool enc = cfg_.voc_structure == "encoder_only" || cfg_.voc_structure == "both";
  bool dec = cfg_.voc_structure == "decoder_only" || cfg_.voc_structure == "both";
  if (enc) {
    for (int k = 0; k < cfg_.num_voc_layers; ++k) {
      toks = nn::encoder_layer(tape, ps_, "voc.enc" + std::to_string(k), toks, cfg_.heads);
    }
  }
  if (dec) {
    double bound = 1.0 / std::sqrt(static_cast<double>(d));
    Tensor qpos = ps_.get("voc.query_pos", Shape{nq, d}, Init::uniform(bound));
    Tensor vq = add(tape, sentence_d, qpos);  // sentence tiled + per-query offsets
    for (int k = 0; k < cfg_.num_voc_layers; ++k) {
      vq = nn::decoder_layer(tape, ps_, "voc.dec" + std::to_string(k), vq, toks, cfg_.heads);
    }
    return vq;
  }
  // encoder stage only: per-slot temporal mean keeps query index alignment
  return mean_axis(tape, reshape(tape, toks, Shape{t_frames, nq, d}), 0);
}

Tensor Model::broadcast_enhance(Tape& tape, const Tensor& frame_q, const Tensor& video_q) {
  if (frame_q.shape()[1] != video_q.shape()[0]) {
    throw ContractError("video query count must match frame query count");
  }
  return add(tape, frame_q, video_q);
}

Tensor Model::fpn_decode(Tape& tape, const std::vector<Tensor>& encoded, const Tensor& level1) {
  const int d = cfg_.dim;
  int t = level1.shape()[0], c1 = level1.shape()[1];
  int h4 = level1.shape()[2], w4 = level1.shape()[3];
  auto to_map = [&](const Tensor& x, int h, int w) {
    return reshape(tape, permute(tape, x, {0, 2, 1}), Shape{t, d, h, w});
  };
  Tensor x = to_map(encoded[2], h4 / 8, w4 / 8);
  x = upsample2x(tape, x);
  x = add(tape, x, conv_p(tape, ps_, "fpn.lat3", to_map(encoded[1], h4 / 4, w4 / 4), d, d, 1, 1, 0));
  x = upsample2x(tape, x);
  x = add(tape, x, conv_p(tape, ps_, "fpn.lat2", to_map(encoded[0], h4 / 2, w4 / 2), d, d, 1, 1, 0));
  x = upsample2x(tape, x);
  x = add(tape, x, conv_p(tape, ps_, "fpn.lat1", level1, c1, d, 1, 1, 0));
  return conv_p(tape, ps_, "fpn.out", x, d, d, 3, 1, 1);
}

Tensor Model::class_head(Tape& tape, const Tensor& frame_q) {
  const int d = cfg_.dim, nq = cfg_.num_queries;
  int t = frame_q.shape()[0];
  Tensor x = reshape(tape, frame_q, Shape{t * nq, d});
  x = nn::mlp3(tape, ps_, "head.class", x, d, d, 1);
  return reshape(tape, x, Shape{t, nq, 1});
}

Tensor Model::box_head(Tape& tape, const Tensor& frame_q) {
  const int d = cfg_.dim, nq = cfg_.num_queries;
  int t = frame_q.shape()[0];
  Tensor x = reshape(tape, frame_q, Shape{t * nq, d});
  x = sigmoid(tape, nn::mlp3(tape, ps_, "head.box", x, d, d, 4));
  return reshape(tape, x, Shape{t, nq, 4});
}

Tensor Model::mask_head(Tape& tape, const Tensor& frame_q, const Tensor& seg, const Tensor& boxes) {
  const int d = cfg_.dim;
  const int nq = frame_q.shape()[1];
  int t_frames = seg.shape()[0], h4 = seg.shape()[2], w4 = seg.shape()[3];
  int p = h4 * w4;
  int kd = kernel_dim();
  const int c = d + 2;

  Tensor x = reshape(tape, frame_q, Shape{t_frames * nq, d});
  Tensor kernels = nn::mlp3(tape, ps_, "head.kernel", x, d, d, kd);
  Tensor boxes_flat = reshape(tape, boxes, Shape{t_frames * nq, 4});
  Tensor seg_flat = reshape(tape, seg, Shape{t_frames, d, p});

  // normalized pixel-center coordinate grids (constants)
  Tensor xs(Shape{1, p}, 0.0), ys(Shape{1, p}, 0.0);
  for (int y = 0; y < h4; ++y) {
    for (int xp = 0; xp < w4; ++xp) {
      xs.data()[y * w4 + xp] = (xp + 0.5) / w4;
      ys.data()[y * w4 + xp] = (y + 0.5) / h4;
    }
  }

  std::vector<Tensor> rows;
  rows.reserve(static_cast<size_t>(t_frames) * nq);
  for (int t = 0; t < t_frames; ++t) {
    Tensor st = reshape(tape, slice(tape, seg_flat, 0, t, 1), Shape{d, p});
    for (int n = 0; n < nq; ++n) {
      int idx = t * nq + n;
      Tensor k = reshape(tape, slice(tape, kernels, 0, idx, 1), Shape{kd});
      int off = 0;
      Tensor w1 = reshape(tape, slice(tape, k, 0, off, 8 * c), Shape{8, c});
      off += 8 * c;
      Tensor b1 = reshape(tape, slice(tape, k, 0, off, 8), Shape{8, 1});
      off += 8;
      Tensor w2 = reshape(tape, slice(tape, k, 0, off, 64), Shape{8, 8});
      off += 64;
      Tensor b2 = reshape(tape, slice(tape, k, 0, off, 8), Shape{8, 1});
      off += 8;
      Tensor w3 = reshape(tape, slice(tape, k, 0, off, 8), Shape{1, 8});
      off += 8;
      Tensor b3 = reshape(tape, slice(tape, k, 0, off, 1), Shape{1, 1});

      Tensor box = slice(tape, boxes_flat, 0, idx, 1);  // [1 x 4]
      Tensor cx = slice(tape, box, 1, 0, 1);
      Tensor cy = slice(tape, box, 1, 1, 1);
      Tensor feat = concat(tape, {st, sub(tape, xs, cx), sub(tape, ys, cy)}, 0);  // [c x p]

      Tensor h = relu(tape, add(tape, matmul(tape, w1, feat), b1));
      h = relu(tape, add(tape, matmul(tape, w2, h), b2));
      rows.push_back(add(tape, matmul(tape, w3, h), b3));  // [1 x p]
    }
  }
  Tensor m = concat(tape, rows, 0);
  return reshape(tape, m, Shape{t_frames, nq, h4, w4});
}

}  // namespace soc
