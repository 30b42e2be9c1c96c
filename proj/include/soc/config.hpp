#pragma once

#include <cstdint>
#include <string>

namespace soc {

// Flat key=value configuration. Unknown keys are rejected. Defaults are the
// desk-scale training setup.
struct Config {
  // model
  int dim = 64;
  int text_dim = 64;
  int heads = 4;
  int num_queries = 20;
  int frames = 8;
  int num_encoder_layers = 3;
  int num_decoder_layers = 3;
  int num_voc_layers = 3;
  std::string voc_structure = "both";    // none | encoder_only | decoder_only | both
  std::string fusion_strategy = "both";  // none | v2l | l2v | both

  // loss weights
  double lambda_cls = 2.0;
  double lambda_l1 = 2.0;
  double lambda_giou = 2.0;
  double lambda_dice = 2.0;
  double lambda_focal = 5.0;
  double lambda_con = 1.0;

  // optimization
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double grad_clip = 1.0;  // global norm cap, 0 disables
  int epochs = 10;
  uint64_t seed = 0;

  // data geometry
  int height = 64;
  int width = 64;

  // dataset generation
  int n_train = 200;
  int n_val = 50;
  int shapes_per_scene = 3;
  double temporal_fraction = 1.0;

  // paths and run selection
  std::string data_dir = "data";
  std::string out_dir = "out";
  std::string checkpoint;
  std::string split = "val";  // train | val

  // Applies one key=value pair; throws ConfigError for unknown keys or
  // unparseable values.
  void set(const std::string& key, const std::string& value);
  // Cross-field checks; throws ConfigError.
  void validate() const;
  // Canonical listing, one key=value per line, every key present.
  std::string dump() const;

  static Config from_file(const std::string& path);
};

}  // namespace soc
