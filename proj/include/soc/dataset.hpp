#pragma once

#include <string>
#include <vector>

#include "soc/config.hpp"
#include "soc/metrics.hpp"
#include "soc/tensor.hpp"

namespace soc {

struct LoadedSample {
  std::string id;
  std::string category;    // appearance | temporal
  std::string expression;
  std::vector<int> tokens;
  Tensor frames;               // [T x 3 x H x W]
  std::vector<Mask> masks;     // full resolution, per frame
  std::vector<Mask> masks4;    // stride-4 training targets, per frame
  std::vector<uint8_t> visible;  // per frame, mask nonempty
  Tensor boxes;                // [T x 4] normalized cxcywh, zeros when invisible
};

// Tight bounding box of a mask as normalized cxcywh; all-zero for an empty mask.
void tight_box(const Mask& m, double* cx, double* cy, double* bw, double* bh);

// Majority-vote stride-4 downsample (4x4 blocks, >8 of 16 pixels set).
Mask downsample4(const Mask& m);

// Loads every sample of one split from a generated dataset directory. Frame
// geometry must match cfg (frames/height/width); mismatches raise ContractError.
std::vector<LoadedSample> load_split(const std::string& data_dir, const std::string& split,
                                     const Config& cfg);

}  // namespace soc
