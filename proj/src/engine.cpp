#include "soc/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "soc/error.hpp"
#include "soc/losses.hpp"
#include "soc/ops.hpp"
#include "soc/optim.hpp"
#include "soc/random.hpp"
#include "soc/tape.hpp"

namespace soc {

namespace {

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  size_t n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

double mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

int env_threads() {
  const char* s = std::getenv("SOC_NUM_THREADS");
  if (!s) return 1;
  long n = std::strtol(s, nullptr, 10);
  return n < 1 ? 1 : static_cast<int>(n);
}

}  // namespace

std::vector<EpochStats> train(Model& model, const std::vector<LoadedSample>& data,
                              const Config& cfg) {
  if (data.empty()) throw ContractError("train: no samples");
  LossWeights w = LossWeights::from_config(cfg);
  AdamOptimizer::Config oc;
  oc.lr = cfg.lr;
  oc.beta1 = cfg.beta1;
  oc.beta2 = cfg.beta2;
  AdamOptimizer opt(model.params(), oc);

  std::vector<GroundTruth> gts;
  gts.reserve(data.size());
  for (const LoadedSample& s : data) gts.push_back(make_ground_truth(s));

  std::filesystem::create_directories(cfg.out_dir);
  std::ofstream log(cfg.out_dir + "/train_log.csv");
  log << "epoch,total,dice,focal,l1,giou,cls,con\n";

  std::vector<EpochStats> history;
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), size_t{0});

  // settle matching, boxes, and the contrastive target late in training
  const int settle = 7 * cfg.epochs / 10, fine = 17 * cfg.epochs / 20;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    double mult = epoch >= fine ? 0.1 : epoch >= settle ? 0.3 : 1.0;
    opt.set_lr(cfg.epochs >= 5 ? mult * cfg.lr : cfg.lr);
    Rng shuffle_rng(Rng::fold(cfg.seed, "epoch") + static_cast<uint64_t>(epoch));
    for (size_t i = order.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(shuffle_rng.randint(static_cast<int64_t>(i)));
      std::swap(order[i - 1], order[j]);
    }

    EpochStats st;
    st.epoch = epoch;
    for (size_t k = 0; k < order.size(); ++k) {
      const LoadedSample& s = data[order[k]];
      model.params().zero_grads();
      Tape tape;
      ModelOutput out = model.forward(tape, s.frames, s.tokens);
      LossBreakdown bd = total_loss(tape, out, gts[order[k]], w);
      double lv = bd.total.value();
      if (!std::isfinite(lv)) {
        std::ostringstream msg;
        msg << "train: non-finite loss at epoch " << epoch << " step " << k << " sample "
            << s.id;
        throw ContractError(msg.str());
      }
      tape.backward(bd.total);
      if (cfg.grad_clip > 0.0) {
        double sq = 0.0;
        for (const auto& kv : model.params().map()) {
          if (!kv.second.has_grad()) continue;
          for (double g : kv.second.grad()) sq += g * g;
        }
        double norm = std::sqrt(sq);
        if (norm > cfg.grad_clip) {
          double scale = cfg.grad_clip / norm;
          for (const auto& kv : model.params().map()) {
            if (!kv.second.has_grad()) continue;
            Tensor t = kv.second;
            for (double& g : t.grad()) g *= scale;
          }
        }
      }
      opt.step();
      st.total += lv;
      st.dice += bd.dice;
      st.focal += bd.focal;
      st.l1 += bd.l1;
      st.giou += bd.giou;
      st.cls += bd.cls;
      st.con += bd.con;
    }
    double inv = 1.0 / static_cast<double>(order.size());
    st.total *= inv;
    st.dice *= inv;
    st.focal *= inv;
    st.l1 *= inv;
    st.giou *= inv;
    st.cls *= inv;
    st.con *= inv;
    history.push_back(st);
    log << st.epoch << ',' << st.total << ',' << st.dice << ',' << st.focal << ',' << st.l1
        << ',' << st.giou << ',' << st.cls << ',' << st.con << '\n';
    log.flush();
  }
  model.params().save(cfg.out_dir + "/model.ckpt");
  return history;
}

VideoEval eval_video(Model& model, const LoadedSample& sample) {
  Tape off(false);
  ModelOutput out = model.forward(off, sample.frames, sample.tokens);
  const Shape& ms = out.masks.shape();
  int t_frames = ms[0], nq = ms[1], h4 = ms[2], w4 = ms[3];
  int h = sample.frames.shape()[2], wd = sample.frames.shape()[3];
  int p = h4 * w4;

  VideoEval ve;
  ve.id = sample.id;

  // highest mean foreground score across frames picks the trajectory
  double best = -1.0;
  for (int n = 0; n < nq; ++n) {
    double acc = 0;
    for (int t = 0; t < t_frames; ++t) {
      double x = out.class_logits.data()[t * nq + n];
      double pr = 1.0 / (1.0 + std::exp(-std::abs(x)));
      acc += x < 0 ? 1.0 - pr : pr;
    }
    acc /= static_cast<double>(t_frames);
    if (acc > best) {
      best = acc;
      ve.query = n;
    }
  }

  int tol = boundary_tolerance(h, wd);
  std::vector<double> fs;
  for (int t = 0; t < t_frames; ++t) {
    const double* src = out.masks.data() + (static_cast<int64_t>(t) * nq + ve.query) * p;
    Tensor m4(Shape{1, 1, h4, w4}, std::vector<double>(src, src + p));
    Tensor up = ops::upsample2x(off, ops::upsample2x(off, m4));
    Mask pm(h, wd);
    for (int i = 0; i < h * wd; ++i) pm.v[static_cast<size_t>(i)] = up.data()[i] > 0.0 ? 1 : 0;
    const Mask& gm = sample.masks[static_cast<size_t>(t)];
    ve.per_frame_iou.push_back(mask_iou(pm, gm));
    fs.push_back(boundary_f(pm, gm, tol));
    ve.pred.push_back(std::move(pm));
  }
  ve.j = mean(ve.per_frame_iou);
  ve.f = mean(fs);
  ve.variance = stability_variance(ve.per_frame_iou);
  return ve;
}

EvalReport evaluate(Model& model, const std::vector<LoadedSample>& data,
                    std::vector<VideoEval>* per_video) {
  if (data.empty()) throw ContractError("evaluate: no samples");
  std::vector<VideoEval> results(data.size());
  int threads = std::min<int>(env_threads(), static_cast<int>(data.size()));
  if (threads <= 1) {
    for (size_t i = 0; i < data.size(); ++i) results[i] = eval_video(model, data[i]);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&] {
      for (;;) {
        size_t i = next.fetch_add(1);
        if (i >= data.size()) return;
        results[i] = eval_video(model, data[i]);
      }
    };
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<double> js, fs, vars;
  for (const VideoEval& ve : results) {
    js.push_back(ve.j);
    fs.push_back(ve.f);
    vars.push_back(ve.variance);
  }

  EvalReport r;
  r.n_videos = static_cast<int>(data.size());
  r.boundary_tol =
      boundary_tolerance(data[0].frames.shape()[2], data[0].frames.shape()[3]);
  r.j_mean = mean(js);
  r.j_median = median(js);
  r.f_mean = mean(fs);
  r.jf_mean = 0.5 * (r.j_mean + r.f_mean);
  for (int k = 0; k < 5; ++k) r.p_at[k] = precision_at_k(js, 0.5 + 0.1 * k);
  r.map = map_50_95(js);
  r.stability_mean = mean(vars);
  r.stability_median = median(vars);
  if (per_video) *per_video = std::move(results);
  return r;
}

namespace {

void put(std::ostream& os, const char* key, double v) {
  os << key << '\t';
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  os << buf << '\n';
}

}  // namespace

std::string EvalReport::to_tsv() const {
  std::ostringstream os;
  put(os, "n_videos", n_videos);
  put(os, "boundary_tolerance", boundary_tol);
  put(os, "j_mean", j_mean);
  put(os, "j_median", j_median);
  put(os, "f_mean", f_mean);
  put(os, "jf_mean", jf_mean);
  put(os, "p_at_0.5", p_at[0]);
  put(os, "p_at_0.6", p_at[1]);
  put(os, "p_at_0.7", p_at[2]);
  put(os, "p_at_0.8", p_at[3]);
  put(os, "p_at_0.9", p_at[4]);
  put(os, "map_50_95", map);
  put(os, "stability_mean", stability_mean);
  put(os, "stability_median", stability_median);
  return os.str();
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["n_videos"] = n_videos;
  j["boundary_tolerance"] = boundary_tol;
  j["j_mean"] = j_mean;
  j["j_median"] = j_median;
  j["f_mean"] = f_mean;
  j["jf_mean"] = jf_mean;
  j["p_at_0.5"] = p_at[0];
  j["p_at_0.6"] = p_at[1];
  j["p_at_0.7"] = p_at[2];
  j["p_at_0.8"] = p_at[3];
  j["p_at_0.9"] = p_at[4];
  j["map_50_95"] = map;
  j["stability_mean"] = stability_mean;
  j["stability_median"] = stability_median;
  return j.dump(2);
}

}  // namespace soc
