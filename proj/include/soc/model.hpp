#pragma once

#include <string>
#include <utility>
#include <vector>

#include "soc/config.hpp"
#include "soc/params.hpp"
#include "soc/tape.hpp"
#include "soc/tensor.hpp"

namespace soc {

struct FusionOut {
  // per scale i in {2,3,4}, in that order
  std::vector<Tensor> visual;       // [T x HiWi x D], gated (or pass-through)
  std::vector<Tensor> words;        // [L x D], gated (or pass-through)
  std::vector<Tensor> visual_proj;  // [T x HiWi x D], projected inputs
  Tensor words_proj;                // [L x D]
  std::vector<std::pair<int, int>> dims;  // (Hi, Wi) per scale
};

struct ModelOutput {
  Tensor class_logits;  // [T x N_q x 1]
  Tensor boxes;         // [T x N_q x 4], sigmoid cxcywh
  Tensor masks;         // [T x N_q x H0/4 x W0/4], logits
  Tensor frame_q;       // [T x N_q x D], after broadcast enhancement
  Tensor video_q;       // [N_q x D]
  Tensor text_fused;    // [L x D], coarsest-scale enhanced words
};

// Referring video segmentation network: multi-scale conv pyramid and text
// encoder, bidirectional fusion, per-frame query decoding with a video-level
// cluster stage, FPN mask features, and per-query dynamic conv mask heads.
class Model {
 public:
  explicit Model(const Config& cfg);

  ModelOutput forward(Tape& tape, const Tensor& frames, const std::vector<int>& tokens);

  // pipeline stages, public so behavior tests can probe them individually
  std::vector<Tensor> encode_video(Tape& tape, const Tensor& frames);  // levels 1..4
  // returns (word states [L x C_t], sentence [1 x C_t])
  std::pair<Tensor, Tensor> encode_text(Tape& tape, const std::vector<int>& tokens);
  FusionOut fuse(Tape& tape, const std::vector<Tensor>& levels, const Tensor& words);
  // returns (encoded per-scale tokens, frame queries O^f [T x N_q x D])
  std::pair<std::vector<Tensor>, Tensor> aggregate_frames(Tape& tape, const FusionOut& f);
  Tensor cluster_video(Tape& tape, const Tensor& frame_q, const Tensor& sentence_d);
  static Tensor broadcast_enhance(Tape& tape, const Tensor& frame_q, const Tensor& video_q);
  Tensor fpn_decode(Tape& tape, const std::vector<Tensor>& encoded, const Tensor& level1);
  Tensor class_head(Tape& tape, const Tensor& frame_q);
  Tensor box_head(Tape& tape, const Tensor& frame_q);
  Tensor mask_head(Tape& tape, const Tensor& frame_q, const Tensor& seg, const Tensor& boxes);

  ParamStore& params() { return ps_; }
  const Config& config() const { return cfg_; }
  // length of one dynamic kernel vector
  int kernel_dim() const;

 private:
  Config cfg_;
  ParamStore ps_;
};

}  // namespace soc
