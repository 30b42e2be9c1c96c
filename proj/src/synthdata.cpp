#include "soc/synthdata.hpp"

#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "soc/random.hpp"
#include "soc/serialize.hpp"

namespace soc {

namespace {

const std::vector<std::string> kColors = {"red",  "green",   "blue",   "yellow",
                                          "cyan", "magenta", "orange", "white"};
const double kPalette[8][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0},
                               {0, 1, 1}, {1, 0, 1}, {1, 0.5, 0}, {1, 1, 1}};
const std::vector<std::string> kKinds = {"circle", "square", "triangle"};

const std::vector<std::vector<std::string>> kMotionPhrases = {
    {"stays still", "does not move", "keeps still"},
    {"moves left", "goes left", "drifts left"},
    {"moves right", "goes right", "drifts right"},
    {"moves up", "goes up", "drifts up"},
    {"moves down", "goes down", "drifts down"},
    {"shrinks", "gets smaller", "becomes smaller"},
    {"grows", "gets bigger", "becomes bigger"},
    {"appears late", "shows up late", "appears then moves"},
};

std::vector<std::string> build_lexicon() {
  std::vector<std::string> words = {"the", "a", "that", "which", "is"};
  words.insert(words.end(), kColors.begin(), kColors.end());
  words.insert(words.end(), kKinds.begin(), kKinds.end());
  for (const auto& phrases : kMotionPhrases) {
    for (const auto& p : phrases) {
      std::istringstream ss(p);
      std::string w;
      while (ss >> w) words.push_back(w);
    }
  }
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  return words;
}

const std::map<std::string, int>& word_ids() {
  static const std::map<std::string, int> ids = [] {
    std::map<std::string, int> m;
    int next = 2;  // 0 = PAD, 1 = UNK
    for (const std::string& w : lexicon()) m[w] = next++;
    return m;
  }();
  return ids;
}

}  // namespace

const std::vector<std::string>& lexicon() {
  static const std::vector<std::string> words = build_lexicon();
  return words;
}

int vocab_size() { return static_cast<int>(lexicon().size()) + 2; }

std::vector<int> tokenize(const std::string& text) {
  std::vector<int> ids;
  std::istringstream ss(text);
  std::string w;
  const auto& table = word_ids();
  while (ss >> w) {
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
    auto it = table.find(w);
    ids.push_back(it == table.end() ? 1 : it->second);
  }
  return ids;
}

bool shape_state_at(const ShapeSpec& s, int t, int t_frames, int* cx, int* cy, int* half) {
  *cx = s.x0;
  *cy = s.y0;
  *half = s.size;
  switch (s.motion) {
    case Motion::kStill:
      break;
    case Motion::kLeft:
      *cx = s.x0 - s.speed * t;
      break;
    case Motion::kRight:
      *cx = s.x0 + s.speed * t;
      break;
    case Motion::kUp:
      *cy = s.y0 - s.speed * t;
      break;
    case Motion::kDown:
      *cy = s.y0 + s.speed * t;
      break;
    case Motion::kShrink:
      *half = s.size - t / 2;
      break;
    case Motion::kGrow:
      *half = s.size + t / 2;
      break;
    case Motion::kAppear: {
      // hidden for the first half of the clip, then drifts right
      int t0 = t_frames / 2;
      if (t < t0) return false;
      *cx = s.x0 + s.speed * (t - t0);
      break;
    }
  }
  return true;
}

Mask rasterize(ShapeKind kind, int cx, int cy, int half, int h, int w) {
  Mask m(h, w);
  for (int y = std::max(0, cy - half); y <= std::min(h - 1, cy + half); ++y) {
    for (int x = std::max(0, cx - half); x <= std::min(w - 1, cx + half); ++x) {
      bool in = false;
      switch (kind) {
        case ShapeKind::kCircle:
          in = (x - cx) * (x - cx) + (y - cy) * (y - cy) <= half * half;
          break;
        case ShapeKind::kSquare:
          in = true;  // loop bounds already restrict to the square
          break;
        case ShapeKind::kTriangle: {
          // apex up: width grows linearly from apex (cy-half) to base (cy+half)
          int dy = y - (cy - half);
          if (dy >= 0 && dy <= 2 * half) {
            int halfwidth = dy / 2;
            in = std::abs(x - cx) <= halfwidth;
          }
          break;
        }
      }
      if (in) m.set(y, x, 1);
    }
  }
  return m;
}

namespace {

struct PlacedShape {
  ShapeSpec spec;
  std::vector<Mask> masks;  // per frame; empty mask when invisible
};

bool try_place(Rng& rng, const ShapeSpec& proto, int t_frames, int h, int w,
               const std::vector<Mask>& occupancy, PlacedShape* out) {
  ShapeSpec s = proto;
  int half_max = s.size + (s.motion == Motion::kGrow ? (t_frames - 1) / 2 : 0);
  int reach = (s.motion == Motion::kLeft || s.motion == Motion::kRight || s.motion == Motion::kUp ||
               s.motion == Motion::kDown)
                  ? s.speed * (t_frames - 1)
                  : 0;
  if (s.motion == Motion::kAppear) reach = s.speed * (t_frames - 1 - t_frames / 2);
  int margin = half_max + 1;
  int lo_x = margin + (s.motion == Motion::kLeft ? reach : 0);
  int hi_x = w - 2 - margin - ((s.motion == Motion::kRight || s.motion == Motion::kAppear) ? reach : 0);
  int lo_y = margin + (s.motion == Motion::kUp ? reach : 0);
  int hi_y = h - 2 - margin - (s.motion == Motion::kDown ? reach : 0);
  if (lo_x > hi_x || lo_y > hi_y) return false;
  s.x0 = lo_x + static_cast<int>(rng.randint(hi_x - lo_x + 1));
  s.y0 = lo_y + static_cast<int>(rng.randint(hi_y - lo_y + 1));

  PlacedShape placed;
  placed.spec = s;
  placed.masks.resize(static_cast<size_t>(t_frames));
  for (int t = 0; t < t_frames; ++t) {
    int cx, cy, half;
    if (!shape_state_at(s, t, t_frames, &cx, &cy, &half)) {
      placed.masks[static_cast<size_t>(t)] = Mask(h, w);
      continue;
    }
    if (cx - half < 1 || cx + half > w - 2 || cy - half < 1 || cy + half > h - 2) return false;
    Mask m = rasterize(s.kind, cx, cy, half, h, w);
    // keep at least one pixel of separation from previously placed shapes
    const Mask& occ = occupancy[static_cast<size_t>(t)];
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!m.at(y, x)) continue;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            int yy = y + dy, xx = x + dx;
            if (yy >= 0 && yy < h && xx >= 0 && xx < w && occ.at(yy, xx)) return false;
          }
        }
      }
    }
    placed.masks[static_cast<size_t>(t)] = std::move(m);
  }
  *out = std::move(placed);
  return true;
}

std::string render_expression(Rng& rng, const ShapeSpec& s, const std::string& category) {
  const std::string& color = kColors[static_cast<size_t>(s.color)];
  const std::string& kind = kKinds[static_cast<size_t>(s.kind)];
  if (category == "appearance") {
    switch (rng.randint(3)) {
      case 0: return "the " + color + " " + kind;
      case 1: return "the " + kind + " that is " + color;
      default: return "a " + color + " " + kind;
    }
  }
  const auto& phrases = kMotionPhrases[static_cast<size_t>(s.motion)];
  const std::string& motion = phrases[static_cast<size_t>(rng.randint(static_cast<int64_t>(phrases.size())))];
  switch (rng.randint(3)) {
    case 0: return "the " + color + " " + kind + " that " + motion;
    case 1: return "the " + color + " " + kind + " which " + motion;
    default: return "a " + color + " " + kind + " that " + motion;
  }
}

std::vector<ShapeSpec> roll_protos(Rng& rng, const std::string& category, int shapes_per_scene,
                                   int size_lo, int size_span, int speed) {
  auto roll_size = [&] { return size_lo + static_cast<int>(rng.randint(size_span)); };
  ShapeSpec ref;
  ref.kind = static_cast<ShapeKind>(rng.randint(3));
  ref.color = static_cast<int>(rng.randint(8));
  ref.size = roll_size();
  ref.speed = speed;
  if (category == "temporal") {
    ref.motion = static_cast<Motion>(1 + rng.randint(7));  // anything but still
  } else {
    ref.motion = static_cast<Motion>(rng.randint(8));
  }

  std::vector<ShapeSpec> protos{ref};
  for (int i = 1; i < shapes_per_scene; ++i) {
    ShapeSpec d;
    d.speed = speed;
    if (category == "temporal" && i == 1) {
      // same appearance, different behavior: only motion disambiguates
      d.kind = ref.kind;
      d.color = ref.color;
      d.size = roll_size();
      do {
        d.motion = static_cast<Motion>(rng.randint(8));
      } while (d.motion == ref.motion);
    } else {
      do {
        d.kind = static_cast<ShapeKind>(rng.randint(3));
        d.color = static_cast<int>(rng.randint(8));
      } while (d.kind == ref.kind && d.color == ref.color);
      d.size = roll_size();
      d.motion = static_cast<Motion>(rng.randint(8));
    }
    protos.push_back(d);
  }
  return protos;
}

GeneratedSample generate_scene(const std::string& id, Rng& rng, const std::string& category,
                               int t_frames, int h, int w, int shapes_per_scene) {
  std::vector<PlacedShape> placed;
  bool scene_ok = false;
  for (int attempt = 0; attempt < 10 && !scene_ok; ++attempt) {
    // late attempts shrink shapes and slow the motion so tight frames still place
    bool tight = attempt >= 5;
    std::vector<ShapeSpec> protos =
        roll_protos(rng, category, shapes_per_scene, tight ? 4 : 5, tight ? 3 : 4, tight ? 1 : 2);
    std::vector<Mask> occupancy(static_cast<size_t>(t_frames), Mask(h, w));
    placed.clear();
    scene_ok = true;
    for (const ShapeSpec& proto : protos) {
      PlacedShape p;
      bool ok = false;
      for (int draw = 0; draw < 20 && !ok; ++draw) {
        ok = try_place(rng, proto, t_frames, h, w, occupancy, &p);
      }
      if (!ok) {
        scene_ok = false;
        break;
      }
      for (int t = 0; t < t_frames; ++t) {
        Mask& occ = occupancy[static_cast<size_t>(t)];
        const Mask& m = p.masks[static_cast<size_t>(t)];
        for (size_t i = 0; i < occ.v.size(); ++i) occ.v[i] |= m.v[i];
      }
      placed.push_back(std::move(p));
    }
  }
  if (!scene_ok) throw ContractError("scene placement failed after 10 attempts for " + id);

  GeneratedSample out;
  out.id = id;
  out.category = category;
  out.expression = render_expression(rng, placed[0].spec, category);
  for (const PlacedShape& p : placed) out.shapes.push_back(p.spec);
  out.frames = Tensor(Shape{t_frames, 3, h, w}, 0.1);
  double* px = out.frames.data();
  int64_t plane = static_cast<int64_t>(h) * w;
  for (int t = 0; t < t_frames; ++t) {
    for (const PlacedShape& p : placed) {
      const Mask& m = p.masks[static_cast<size_t>(t)];
      const double* rgb = kPalette[p.spec.color];
      for (int c = 0; c < 3; ++c) {
        double* dst = px + ((static_cast<int64_t>(t) * 3 + c) * plane);
        for (int64_t i = 0; i < plane; ++i) {
          if (m.v[static_cast<size_t>(i)]) dst[i] = rgb[c];
        }
      }
    }
  }
  out.gt_masks = std::move(placed[0].masks);
  return out;
}

}  // namespace

GeneratedSample generate_sample(const std::string& id, uint64_t seed, const std::string& category,
                                int t_frames, int h, int w, int shapes_per_scene) {
  Rng rng(seed);
  return generate_scene(id, rng, category, t_frames, h, w, shapes_per_scene);
}

std::string rle_encode(const Mask& m) {
  std::ostringstream os;
  uint8_t cur = 0;
  int64_t run = 0;
  bool first = true;
  for (size_t i = 0; i < m.v.size(); ++i) {
    if (m.v[i] == cur) {
      ++run;
    } else {
      os << (first ? "" : " ") << run;
      first = false;
      cur = m.v[i];
      run = 1;
    }
  }
  os << (first ? "" : " ") << run;
  return os.str();
}

Mask rle_decode(const std::string& runs, int h, int w) {
  Mask m(h, w);
  std::istringstream ss(runs);
  int64_t run;
  size_t pos = 0;
  uint8_t cur = 0;
  while (ss >> run) {
    if (run < 0 || pos + static_cast<size_t>(run) > m.v.size()) {
      throw ContractError("rle_decode: runs exceed mask size");
    }
    for (int64_t i = 0; i < run; ++i) m.v[pos++] = cur;
    cur = 1 - cur;
  }
  if (pos != m.v.size()) throw ContractError("rle_decode: runs cover " + std::to_string(pos) +
                                             " of " + std::to_string(m.v.size()) + " pixels");
  return m;
}

std::string make_dataset(const Config& cfg) {
  namespace fs = std::filesystem;
  fs::path root(cfg.data_dir);
  fs::create_directories(root / "frames");
  fs::create_directories(root / "masks");

  std::ofstream manifest(root / "manifest.jsonl", std::ios::trunc);
  if (!manifest) throw ContractError("cannot write " + (root / "manifest.jsonl").string());

  auto emit_split = [&](const std::string& split, int count) {
    for (int i = 0; i < count; ++i) {
      char idbuf[32];
      std::snprintf(idbuf, sizeof(idbuf), "%s_%04d", split.c_str(), i);
      std::string id(idbuf);
      uint64_t sample_seed = Rng::fold(cfg.seed, id);
      Rng pick(Rng::fold(sample_seed, "category"));
      std::string category = pick.uniform() < cfg.temporal_fraction ? "temporal" : "appearance";

      GeneratedSample sample;
      bool ok = false;
      for (int retry = 0; retry < 10 && !ok; ++retry) {
        try {
          sample = generate_sample(id, Rng::fold(sample_seed, "scene" + std::to_string(retry)),
                                   category, cfg.frames, cfg.height, cfg.width,
                                   cfg.shapes_per_scene);
          ok = true;
        } catch (const ContractError&) {
          if (retry == 9) throw;
        }
      }

      std::string frames_rel = "frames/" + id + ".bin";
      std::string masks_rel = "masks/" + id + ".rle";
      {
        std::ofstream fb(root / frames_rel, std::ios::binary | std::ios::trunc);
        if (!fb) throw ContractError("cannot write " + (root / frames_rel).string());
        write_tensor(fb, sample.frames);
      }
      {
        std::ofstream mb(root / masks_rel, std::ios::trunc);
        if (!mb) throw ContractError("cannot write " + (root / masks_rel).string());
        for (int t = 0; t < cfg.frames; ++t) {
          mb << id << " " << t << " " << rle_encode(sample.gt_masks[static_cast<size_t>(t)])
             << "\n";
        }
      }
      nlohmann::json line = {{"id", id},
                             {"split", split},
                             {"category", sample.category},
                             {"expression", sample.expression},
                             {"files", {{"frames", frames_rel}, {"masks", masks_rel}}}};
      manifest << line.dump() << "\n";
    }
  };
  emit_split("train", cfg.n_train);
  emit_split("val", cfg.n_val);
  manifest.close();
  return (root / "manifest.jsonl").string();
}

}  // namespace soc
