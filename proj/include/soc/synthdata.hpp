#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "soc/config.hpp"
#include "soc/metrics.hpp"
#include "soc/tensor.hpp"

namespace soc {

// Fixed template lexicon; ids are PAD=0, UNK=1, then lexicon order.
const std::vector<std::string>& lexicon();
int vocab_size();
std::vector<int> tokenize(const std::string& text);

enum class ShapeKind { kCircle, kSquare, kTriangle };
enum class Motion { kStill, kLeft, kRight, kUp, kDown, kShrink, kGrow, kAppear };

struct ShapeSpec {
  ShapeKind kind = ShapeKind::kCircle;
  int color = 0;  // palette index
  int size = 6;   // half-extent in pixels
  Motion motion = Motion::kStill;
  int speed = 2;  // pixels per frame; late placement retries fall back to 1
  int x0 = 0, y0 = 0;  // center at frame 0 (or at first visible frame for kAppear)
};

struct GeneratedSample {
  std::string id;
  std::string category;
  std::string expression;
  std::vector<ShapeSpec> shapes;  // index 0 is the referred shape
  Tensor frames;                  // [T x 3 x H x W]
  std::vector<Mask> gt_masks;     // full resolution, one per frame (empty when invisible)
};

// Center and half-extent of a shape at frame t of a t_frames clip; returns
// false when the shape is not visible on that frame.
bool shape_state_at(const ShapeSpec& s, int t, int t_frames, int* cx, int* cy, int* half);

Mask rasterize(ShapeKind kind, int cx, int cy, int half, int h, int w);

// Deterministic given seed. Throws ContractError when a non-overlapping
// in-bounds scene cannot be placed within 10 attempts.
GeneratedSample generate_sample(const std::string& id, uint64_t seed, const std::string& category,
                                int t_frames, int h, int w, int shapes_per_scene);

// Writes frames (tensor files), masks (RLE text), and manifest.jsonl under
// cfg.data_dir. Returns the manifest path.
std::string make_dataset(const Config& cfg);

// RLE helpers: alternating run lengths starting with the zero run.
std::string rle_encode(const Mask& m);
Mask rle_decode(const std::string& runs, int h, int w);

}  // namespace soc
