#include "soc/losses.hpp"

#include <cmath>

#include "soc/error.hpp"
#include "soc/hungarian.hpp"
#include "soc/ops.hpp"

namespace soc {

using namespace ops;

LossWeights LossWeights::from_config(const Config& c) {
  LossWeights w;
  w.cls = c.lambda_cls;
  w.l1 = c.lambda_l1;
  w.giou = c.lambda_giou;
  w.dice = c.lambda_dice;
  w.focal = c.lambda_focal;
  w.con = c.lambda_con;
  return w;
}

GroundTruth make_ground_truth(const LoadedSample& s) {
  GroundTruth g;
  g.visible = s.visible;
  g.boxes = s.boxes;
  int t_frames = static_cast<int>(s.masks4.size());
  int h4 = s.masks4[0].h, w4 = s.masks4[0].w;
  g.masks4 = Tensor::zeros(Shape{t_frames, h4, w4});
  double* dst = g.masks4.data();
  for (int t = 0; t < t_frames; ++t) {
    const Mask& m = s.masks4[static_cast<size_t>(t)];
    for (size_t i = 0; i < m.v.size(); ++i) {
      dst[static_cast<size_t>(t) * m.v.size() + i] = m.v[i];
    }
  }
  return g;
}

Tensor dice_loss(Tape& tape, const Tensor& logits, const Tensor& gt) {
  check_same_shape(logits, gt, "loss");
  Tensor p = sigmoid(tape, logits);
  Tensor num = add_scalar(tape, mul_scalar(tape, sum(tape, mul(tape, p, gt)), 2.0), 1.0);
  Tensor den = add_scalar(tape, add(tape, sum(tape, p), sum(tape, gt)), 1.0);
  return add_scalar(tape, neg(tape, div(tape, num, den)), 1.0);
}

Tensor focal_loss(Tape& tape, const Tensor& logits, const Tensor& gt, double alpha) {
  check_same_shape(logits, gt, "loss");
  Tensor p = sigmoid(tape, logits);
  Tensor q = add_scalar(tape, neg(tape, p), 1.0);  // 1 - p
  Tensor gneg = add_scalar(tape, neg(tape, gt), 1.0);
  Tensor pos = mul(tape, gt, mul(tape, mul(tape, q, q), softplus(tape, neg(tape, logits))));
  Tensor negt = mul(tape, gneg, mul(tape, mul(tape, p, p), softplus(tape, logits)));
  Tensor both = add(tape, mul_scalar(tape, pos, alpha), mul_scalar(tape, negt, 1.0 - alpha));
  return mean(tape, both);
}

std::pair<Tensor, Tensor> box_losses(Tape& tape, const Tensor& pred, const Tensor& gt) {
  check_same_shape(pred, gt, "box_losses");
  Tensor d = sub(tape, pred, gt);
  Tensor l1 = sum(tape, maximum(tape, d, neg(tape, d)));

  Tensor pc = slice(tape, pred, 0, 0, 2), pw = slice(tape, pred, 0, 2, 2);
  Tensor gc = slice(tape, gt, 0, 0, 2), gw = slice(tape, gt, 0, 2, 2);
  Tensor plo = sub(tape, pc, mul_scalar(tape, pw, 0.5));
  Tensor phi = add(tape, pc, mul_scalar(tape, pw, 0.5));
  Tensor glo = sub(tape, gc, mul_scalar(tape, gw, 0.5));
  Tensor ghi = add(tape, gc, mul_scalar(tape, gw, 0.5));

  auto area2 = [&](const Tensor& wh) {
    return mul(tape, slice(tape, wh, 0, 0, 1), slice(tape, wh, 0, 1, 1));
  };
  Tensor iwh = relu(tape, sub(tape, minimum(tape, phi, ghi), maximum(tape, plo, glo)));
  Tensor inter = area2(iwh);
  Tensor uni =
      add_scalar(tape, sub(tape, add(tape, area2(pw), area2(gw)), inter), 1e-9);
  Tensor hwh = sub(tape, maximum(tape, phi, ghi), minimum(tape, plo, glo));
  Tensor hull = add_scalar(tape, area2(hwh), 1e-9);
  Tensor giou = sub(tape, div(tape, inter, uni), div(tape, sub(tape, hull, uni), hull));
  Tensor gl = add_scalar(tape, neg(tape, giou), 1.0);
  return {l1, reshape(tape, gl, Shape{1})};
}

Tensor class_loss(Tape& tape, const Tensor& class_logits, const std::vector<uint8_t>& visible,
                  int sigma) {
  const Shape& s = class_logits.shape();
  int t_frames = s[0], nq = s[1];
  Tensor target = Tensor::zeros(s);
  for (int t = 0; t < t_frames; ++t) {
    if (visible[static_cast<size_t>(t)]) target.data()[t * nq + sigma] = 1.0;
  }
  return focal_loss(tape, class_logits, target);
}

Tensor contrastive_loss(Tape& tape, const Tensor& video_q, const Tensor& text_fused, int sigma) {
  int nv = video_q.shape()[0], d = video_q.shape()[1];
  if (sigma < 0 || sigma >= nv) throw ContractError("contrastive: sigma out of range");
  Tensor fgud = reshape(tape, mean_axis(tape, text_fused, 0), Shape{d, 1});
  Tensor sim = reshape(tape, matmul(tape, video_q, fgud), Shape{nv});
  sim = mul_scalar(tape, sim, 1.0 / std::sqrt(static_cast<double>(d)));
  return sub(tape, logsumexp(tape, sim, 0), slice(tape, sim, 0, sigma, 1));
}

namespace {

int visible_count(const GroundTruth& gt) {
  int f = 0;
  for (uint8_t v : gt.visible) f += v ? 1 : 0;
  return f;
}

}  // namespace

MatchResult match_trajectory(const ModelOutput& pred, const GroundTruth& gt,
                             const LossWeights& w) {
  const Shape& ms = pred.masks.shape();
  int t_frames = ms[0], nq = ms[1], p = ms[2] * ms[3];
  if (static_cast<int>(gt.visible.size()) != t_frames) {
    throw ContractError("match: visibility length mismatch");
  }
  if (visible_count(gt) == 0) throw ContractError("match: no visible frames");

  Tape off(false);
  Tensor masks_flat = reshape(off, pred.masks, Shape{t_frames * nq, p});
  Tensor boxes_flat = reshape(off, pred.boxes, Shape{t_frames * nq, 4});
  Tensor gt_masks = reshape(off, gt.masks4, Shape{t_frames, p});

  Tensor cost(Shape{1, nq}, 0.0);
  for (int n = 0; n < nq; ++n) {
    double c = 0.0;
    for (int t = 0; t < t_frames; ++t) {
      if (!gt.visible[static_cast<size_t>(t)]) continue;
      int idx = t * nq + n;
      Tensor pm = slice(off, masks_flat, 0, idx, 1);
      Tensor gm = slice(off, gt_masks, 0, t, 1);
      c += w.dice * dice_loss(off, pm, gm).value();
      c += w.focal * focal_loss(off, pm, gm).value();
      Tensor pb = reshape(off, slice(off, boxes_flat, 0, idx, 1), Shape{4});
      Tensor gb = reshape(off, slice(off, gt.boxes, 0, t, 1), Shape{4});
      auto [l1, gl] = box_losses(off, pb, gb);
      c += w.l1 * l1.value() + w.giou * gl.value();
      // cost of calling this query the referred one on this frame
      double x = pred.class_logits.data()[idx];
      double prob = 1.0 / (1.0 + std::exp(-std::abs(x)));
      if (x < 0) prob = 1.0 - prob;
      double sp_neg = std::log1p(std::exp(-std::abs(x))) + (x < 0 ? -x : 0.0);
      c += w.cls * 0.25 * (1.0 - prob) * (1.0 - prob) * sp_neg;
    }
    cost.data()[n] = c;
  }
  auto pairs = hungarian(cost);
  MatchResult r;
  r.sigma = pairs[0].second;
  r.cost = cost.data()[r.sigma];
  return r;
}

LossBreakdown total_loss(Tape& tape, const ModelOutput& pred, const GroundTruth& gt,
                         const LossWeights& w) {
  MatchResult m = match_trajectory(pred, gt, w);
  const Shape& ms = pred.masks.shape();
  int t_frames = ms[0], nq = ms[1], p = ms[2] * ms[3];
  int f = visible_count(gt);

  Tensor masks_flat = reshape(tape, pred.masks, Shape{t_frames * nq, p});
  Tensor boxes_flat = reshape(tape, pred.boxes, Shape{t_frames * nq, 4});
  Tensor gt_masks = reshape(tape, gt.masks4, Shape{t_frames, p});

  Tensor dice_sum, focal_sum, l1_sum, giou_sum;
  for (int t = 0; t < t_frames; ++t) {
    if (!gt.visible[static_cast<size_t>(t)]) continue;
    int idx = t * nq + m.sigma;
    Tensor pm = slice(tape, masks_flat, 0, idx, 1);
    Tensor gm = slice(tape, gt_masks, 0, t, 1);
    Tensor dl = dice_loss(tape, pm, gm);
    Tensor fl = focal_loss(tape, pm, gm);
    Tensor pb = reshape(tape, slice(tape, boxes_flat, 0, idx, 1), Shape{4});
    Tensor gb = reshape(tape, slice(tape, gt.boxes, 0, t, 1), Shape{4});
    auto [l1, gl] = box_losses(tape, pb, gb);
    dice_sum = dice_sum.defined() ? add(tape, dice_sum, dl) : dl;
    focal_sum = focal_sum.defined() ? add(tape, focal_sum, fl) : fl;
    l1_sum = l1_sum.defined() ? add(tape, l1_sum, l1) : l1;
    giou_sum = giou_sum.defined() ? add(tape, giou_sum, gl) : gl;
  }
  double inv = 1.0 / f;
  Tensor dice_m = mul_scalar(tape, dice_sum, inv);
  Tensor focal_m = mul_scalar(tape, focal_sum, inv);
  Tensor l1_m = mul_scalar(tape, l1_sum, inv);
  Tensor giou_m = mul_scalar(tape, giou_sum, inv);
  Tensor cls = class_loss(tape, pred.class_logits, gt.visible, m.sigma);

  LossBreakdown out;
  out.sigma = m.sigma;
  out.dice = dice_m.value();
  out.focal = focal_m.value();
  out.l1 = l1_m.value();
  out.giou = giou_m.value();
  out.cls = cls.value();

  Tensor total = add(tape, add(tape, mul_scalar(tape, dice_m, w.dice),
                               mul_scalar(tape, focal_m, w.focal)),
                     add(tape, mul_scalar(tape, l1_m, w.l1), mul_scalar(tape, giou_m, w.giou)));
  total = add(tape, total, mul_scalar(tape, cls, w.cls));
  if (w.con != 0.0) {
    Tensor con = contrastive_loss(tape, pred.video_q, pred.text_fused, m.sigma);
    out.con = con.value();
    total = add(tape, total, mul_scalar(tape, con, w.con));
  }
  out.total = total;
  return out;
}

}  // namespace soc
