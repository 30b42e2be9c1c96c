#pragma once

#include <string>
#include <vector>

#include "soc/config.hpp"
#include "soc/dataset.hpp"
#include "soc/metrics.hpp"
#include "soc/model.hpp"

namespace soc {

struct EpochStats {
  int epoch = 0;
  double total = 0, dice = 0, focal = 0, l1 = 0, giou = 0, cls = 0, con = 0;
};

// Batch-size-1 training over the given samples. Shuffles per epoch from the
// config seed, writes train_log.csv and model.ckpt into cfg.out_dir, and
// throws ContractError on a non-finite loss. Returns per-epoch loss means.
std::vector<EpochStats> train(Model& model, const std::vector<LoadedSample>& data,
                              const Config& cfg);

struct VideoEval {
  std::string id;
  int query = -1;               // highest-scoring query
  double j = 0;                 // mean region IoU over frames
  double f = 0;                 // mean contour score over frames
  double variance = 0;          // population variance of per-frame IoU
  std::vector<double> per_frame_iou;
  std::vector<Mask> pred;       // full-resolution masks
};

// Runs the model on one video and scores the best query's masks.
VideoEval eval_video(Model& model, const LoadedSample& sample);

struct EvalReport {
  int n_videos = 0;
  int boundary_tol = 0;
  double j_mean = 0, j_median = 0;
  double f_mean = 0;
  double jf_mean = 0;
  double p_at[5] = {0, 0, 0, 0, 0};  // K = 0.5 .. 0.9
  double map = 0;
  double stability_mean = 0, stability_median = 0;

  std::string to_tsv() const;
  std::string to_json() const;
};

// Scores every video; honors SOC_NUM_THREADS (default 1) with a fixed-order
// reduction so the report does not depend on scheduling.
EvalReport evaluate(Model& model, const std::vector<LoadedSample>& data,
                    std::vector<VideoEval>* per_video = nullptr);

}  // namespace soc
