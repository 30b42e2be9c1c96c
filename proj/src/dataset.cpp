#include "soc/dataset.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "soc/serialize.hpp"
#include "soc/synthdata.hpp"

namespace soc {

void tight_box(const Mask& m, double* cx, double* cy, double* bw, double* bh) {
  int x_min = m.w, x_max = -1, y_min = m.h, y_max = -1;
  for (int y = 0; y < m.h; ++y) {
    for (int x = 0; x < m.w; ++x) {
      if (!m.at(y, x)) continue;
      x_min = std::min(x_min, x);
      x_max = std::max(x_max, x);
      y_min = std::min(y_min, y);
      y_max = std::max(y_max, y);
    }
  }
  if (x_max < 0) {
    *cx = *cy = *bw = *bh = 0.0;
    return;
  }
  *bw = static_cast<double>(x_max - x_min + 1) / m.w;
  *bh = static_cast<double>(y_max - y_min + 1) / m.h;
  *cx = (x_min + x_max + 1) * 0.5 / m.w;
  *cy = (y_min + y_max + 1) * 0.5 / m.h;
}

Mask downsample4(const Mask& m) {
  Mask out(m.h / 4, m.w / 4);
  for (int y = 0; y < out.h; ++y) {
    for (int x = 0; x < out.w; ++x) {
      int count = 0;
      for (int dy = 0; dy < 4; ++dy) {
        for (int dx = 0; dx < 4; ++dx) count += m.at(4 * y + dy, 4 * x + dx);
      }
      if (count > 8) out.set(y, x, 1);
    }
  }
  return out;
}

std::vector<LoadedSample> load_split(const std::string& data_dir, const std::string& split,
                                     const Config& cfg) {
  namespace fs = std::filesystem;
  fs::path root(data_dir);
  std::ifstream manifest(root / "manifest.jsonl");
  if (!manifest) throw ContractError("cannot open " + (root / "manifest.jsonl").string());

  std::vector<LoadedSample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(manifest, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ContractError("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    if (rec.at("split").get<std::string>() != split) continue;

    LoadedSample s;
    s.id = rec.at("id").get<std::string>();
    s.category = rec.at("category").get<std::string>();
    s.expression = rec.at("expression").get<std::string>();
    s.tokens = tokenize(s.expression);
    if (s.tokens.empty()) throw ContractError(s.id + ": empty expression");

    fs::path frames_path = root / rec.at("files").at("frames").get<std::string>();
    std::ifstream fb(frames_path, std::ios::binary);
    if (!fb) throw ContractError("cannot open " + frames_path.string());
    s.frames = read_tensor(fb);
    Shape want{cfg.frames, 3, cfg.height, cfg.width};
    if (s.frames.shape() != want) {
      throw ContractError(s.id + ": frame tensor shape does not match config geometry");
    }

    fs::path masks_path = root / rec.at("files").at("masks").get<std::string>();
    std::ifstream mb(masks_path);
    if (!mb) throw ContractError("cannot open " + masks_path.string());
    s.masks.resize(static_cast<size_t>(cfg.frames));
    std::vector<bool> seen(static_cast<size_t>(cfg.frames), false);
    std::string mline;
    while (std::getline(mb, mline)) {
      if (mline.empty()) continue;
      std::istringstream ss(mline);
      std::string id;
      int frame;
      if (!(ss >> id >> frame) || id != s.id || frame < 0 || frame >= cfg.frames) {
        throw ContractError(masks_path.string() + ": bad mask line '" + mline + "'");
      }
      std::string runs;
      std::getline(ss, runs);
      s.masks[static_cast<size_t>(frame)] = rle_decode(runs, cfg.height, cfg.width);
      seen[static_cast<size_t>(frame)] = true;
    }
    for (int t = 0; t < cfg.frames; ++t) {
      if (!seen[static_cast<size_t>(t)]) {
        throw ContractError(s.id + ": missing mask for frame " + std::to_string(t));
      }
    }

    s.boxes = Tensor::zeros(Shape{cfg.frames, 4});
    s.visible.resize(static_cast<size_t>(cfg.frames));
    s.masks4.reserve(static_cast<size_t>(cfg.frames));
    for (int t = 0; t < cfg.frames; ++t) {
      const Mask& m = s.masks[static_cast<size_t>(t)];
      s.visible[static_cast<size_t>(t)] = m.area() > 0 ? 1 : 0;
      double cx, cy, bw, bh;
      tight_box(m, &cx, &cy, &bw, &bh);
      double* b = s.boxes.data() + 4 * t;
      b[0] = cx;
      b[1] = cy;
      b[2] = bw;
      b[3] = bh;
      s.masks4.push_back(downsample4(m));
    }
    out.push_back(std::move(s));
  }
  if (out.empty()) throw ContractError("no samples for split '" + split + "' in " + data_dir);
  return out;
}

}  // namespace soc
