#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "soc/dataset.hpp"
#include "soc/error.hpp"
#include "soc/synthdata.hpp"

using namespace soc;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir(const std::string& tag) {
    path = std::filesystem::temp_directory_path() / ("soc_ds_" + tag);
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("tight boxes around known masks") {
  Mask m(8, 8);
  for (int y = 2; y <= 5; ++y)
    for (int x = 1; x <= 4; ++x) m.set(y, x, 1);
  double cx, cy, bw, bh;
  tight_box(m, &cx, &cy, &bw, &bh);
  CHECK(bw == doctest::Approx(4.0 / 8).epsilon(1e-15));
  CHECK(bh == doctest::Approx(4.0 / 8).epsilon(1e-15));
  CHECK(cx == doctest::Approx(3.0 / 8).epsilon(1e-15));
  CHECK(cy == doctest::Approx(4.0 / 8).epsilon(1e-15));

  Mask empty(8, 8);
  tight_box(empty, &cx, &cy, &bw, &bh);
  CHECK(cx == 0.0);
  CHECK(cy == 0.0);
  CHECK(bw == 0.0);
  CHECK(bh == 0.0);

  Mask pixel(8, 8);
  pixel.set(0, 7, 1);
  tight_box(pixel, &cx, &cy, &bw, &bh);
  CHECK(bw == doctest::Approx(1.0 / 8).epsilon(1e-15));
  CHECK(cx == doctest::Approx(7.5 / 8).epsilon(1e-15));
  CHECK(cy == doctest::Approx(0.5 / 8).epsilon(1e-15));
}

TEST_CASE("stride-4 downsampling votes per block") {
  Mask m(8, 8);
  // top-left block: 9 of 16 pixels on -> majority
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 3; ++x) m.set(y, x, 1);
  // top-right block: exactly half -> off
  for (int y = 0; y < 2; ++y)
    for (int x = 4; x < 8; ++x) m.set(y, x, 1);
  Mask d = downsample4(m);
  CHECK(d.h == 2);
  CHECK(d.w == 2);
  CHECK(d.at(0, 0) == 1);
  CHECK(d.at(0, 1) == 0);
  CHECK(d.at(1, 0) == 0);
  CHECK(d.at(1, 1) == 0);
}

TEST_CASE("generated corpora load back with consistent geometry") {
  TempDir tmp("load");
  Config cfg;
  cfg.seed = 3;
  cfg.n_train = 2;
  cfg.n_val = 2;
  cfg.frames = 4;
  cfg.height = 64;
  cfg.width = 64;
  cfg.data_dir = tmp.path.string();
  make_dataset(cfg);

  std::vector<LoadedSample> val = load_split(cfg.data_dir, "val", cfg);
  REQUIRE(val.size() == 2);
  for (const LoadedSample& s : val) {
    CHECK(s.frames.shape() == Shape{4, 3, 64, 64});
    CHECK(s.masks.size() == 4);
    CHECK(s.masks4.size() == 4);
    CHECK(s.visible.size() == 4);
    CHECK(!s.expression.empty());
    CHECK(!s.tokens.empty());
    CHECK(s.boxes.shape() == Shape{4, 4});
    int vis = 0;
    for (int t = 0; t < 4; ++t) {
      CHECK(s.masks[static_cast<size_t>(t)].h == 64);
      CHECK(s.masks4[static_cast<size_t>(t)].h == 16);
      bool any = s.masks[static_cast<size_t>(t)].area() > 0;
      CHECK(static_cast<bool>(s.visible[static_cast<size_t>(t)]) == any);
      vis += s.visible[static_cast<size_t>(t)];
      if (any) {
        // the stored box is the tight box of the stored mask
        double cx, cy, bw, bh;
        tight_box(s.masks[static_cast<size_t>(t)], &cx, &cy, &bw, &bh);
        CHECK(s.boxes.data()[t * 4 + 0] == cx);
        CHECK(s.boxes.data()[t * 4 + 1] == cy);
        CHECK(s.boxes.data()[t * 4 + 2] == bw);
        CHECK(s.boxes.data()[t * 4 + 3] == bh);
        // downsampled masks agree with a fresh downsample
        Mask d4 = downsample4(s.masks[static_cast<size_t>(t)]);
        CHECK(d4.v == s.masks4[static_cast<size_t>(t)].v);
      } else {
        for (int k = 0; k < 4; ++k) CHECK(s.boxes.data()[t * 4 + k] == 0.0);
      }
    }
    CHECK(vis >= 1);
  }

  std::vector<LoadedSample> train = load_split(cfg.data_dir, "train", cfg);
  CHECK(train.size() == 2);
  CHECK(train[0].id != val[0].id);

  CHECK_THROWS_AS(load_split(cfg.data_dir, "test", cfg), ContractError);
  CHECK_THROWS_AS(load_split("/nonexistent_dir_42", "val", cfg), ContractError);
}

TEST_CASE("loader rejects corrupt manifests") {
  TempDir tmp("corrupt");
  Config cfg;
  cfg.seed = 4;
  cfg.n_train = 1;
  cfg.n_val = 1;
  cfg.frames = 4;
  cfg.height = 64;
  cfg.width = 64;
  cfg.data_dir = tmp.path.string();
  make_dataset(cfg);

  std::string manifest = (tmp.path / "manifest.jsonl").string();
  FILE* f = std::fopen(manifest.c_str(), "a");
  REQUIRE(f != nullptr);
  std::fputs("{not json\n", f);
  std::fclose(f);
  CHECK_THROWS_AS(load_split(cfg.data_dir, "val", cfg), ContractError);
}
