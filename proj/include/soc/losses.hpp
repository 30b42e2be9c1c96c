#pragma once

#include <utility>
#include <vector>

#include "soc/config.hpp"
#include "soc/dataset.hpp"
#include "soc/model.hpp"
#include "soc/tape.hpp"
#include "soc/tensor.hpp"

namespace soc {

struct LossWeights {
  double cls = 2.0;
  double l1 = 2.0;
  double giou = 2.0;
  double dice = 2.0;
  double focal = 5.0;
  double con = 1.0;
  static LossWeights from_config(const Config& c);
};

struct GroundTruth {
  std::vector<uint8_t> visible;  // per frame
  Tensor boxes;                  // [T x 4] normalized cxcywh
  Tensor masks4;                 // [T x H4 x W4], values 0/1
};

GroundTruth make_ground_truth(const LoadedSample& s);

struct MatchResult {
  int sigma = -1;  // matched query index
  double cost = 0.0;
};

struct LossBreakdown {
  Tensor total;  // scalar, on the tape
  double dice = 0, focal = 0, l1 = 0, giou = 0, cls = 0, con = 0;
  int sigma = -1;
};

// dice = 1 - (2*sum(p*g)+1)/(sum(p)+sum(g)+1) on sigmoid probabilities.
Tensor dice_loss(Tape& tape, const Tensor& logits, const Tensor& gt);

// Alpha-balanced focal loss on logits, gamma fixed at 2; mean over entries.
Tensor focal_loss(Tape& tape, const Tensor& logits, const Tensor& gt, double alpha = 0.25);

// (l1, giou loss) for one box pair, both cxcywh normalized [4].
std::pair<Tensor, Tensor> box_losses(Tape& tape, const Tensor& pred, const Tensor& gt);

// Focal classification loss over every (frame, query) logit; positives are the
// matched query on visible frames.
Tensor class_loss(Tape& tape, const Tensor& class_logits, const std::vector<uint8_t>& visible,
                  int sigma);

// -log softmax(video_q . mean(text_fused) / sqrt(D))[sigma]
Tensor contrastive_loss(Tape& tape, const Tensor& video_q, const Tensor& text_fused, int sigma);

// Per-query trajectory cost (loss terms weighted by w, summed over visible
// frames); the minimum-cost query wins. Throws if no frame is visible.
MatchResult match_trajectory(const ModelOutput& pred, const GroundTruth& gt,
                             const LossWeights& w);

// Weighted total at the matched query; component means over visible frames.
LossBreakdown total_loss(Tape& tape, const ModelOutput& pred, const GroundTruth& gt,
                         const LossWeights& w);

}  // namespace soc
