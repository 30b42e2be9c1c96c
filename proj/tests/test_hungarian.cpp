#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "soc/error.hpp"
#include "soc/hungarian.hpp"
#include "soc/random.hpp"
#include "soc/tensor.hpp"

using namespace soc;

namespace {

// Exhaustive minimum assignment cost over all permutations; the oracle for
// matrices up to 7x7.
double brute_force_cost(const Tensor& cost) {
  int n = cost.shape()[0], m = cost.shape()[1];
  const double* c = cost.data();
  double best = std::numeric_limits<double>::infinity();
  if (n <= m) {
    std::vector<int> cols(static_cast<size_t>(m));
    std::iota(cols.begin(), cols.end(), 0);
    std::sort(cols.begin(), cols.end());
    do {
      double s = 0;
      for (int i = 0; i < n; ++i) s += c[i * m + cols[static_cast<size_t>(i)]];
      best = std::min(best, s);
    } while (std::next_permutation(cols.begin(), cols.end()));
  } else {
    std::vector<int> rows(static_cast<size_t>(n));
    std::iota(rows.begin(), rows.end(), 0);
    do {
      double s = 0;
      for (int j = 0; j < m; ++j) s += c[rows[static_cast<size_t>(j)] * m + j];
      best = std::min(best, s);
    } while (std::next_permutation(rows.begin(), rows.end()));
  }
  return best;
}

Tensor random_cost(Rng& rng, int n, int m, double lo, double hi) {
  Tensor t = Tensor::zeros(Shape{n, m});
  for (int i = 0; i < n * m; ++i) t.data()[i] = lo + (hi - lo) * rng.uniform();
  return t;
}

}  // namespace

TEST_CASE("frozen 2x2 case") {
  Tensor c(Shape{2, 2}, std::vector<double>{1, 2, 2, 1});
  auto pairs = hungarian(c);
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0] == std::pair<int, int>{0, 0});
  CHECK(pairs[1] == std::pair<int, int>{1, 1});
  CHECK(assignment_cost(c, pairs) == 2.0);
}

TEST_CASE("recovers a permuted identity") {
  // cost 0 exactly on one permutation, 1 elsewhere
  int perm[5] = {3, 0, 4, 1, 2};
  Tensor c = Tensor::full(Shape{5, 5}, 1.0);
  for (int i = 0; i < 5; ++i) c.data()[i * 5 + perm[i]] = 0.0;
  auto pairs = hungarian(c);
  REQUIRE(pairs.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(pairs[static_cast<size_t>(i)].first == i);
    CHECK(pairs[static_cast<size_t>(i)].second == perm[i]);
  }
  CHECK(assignment_cost(c, pairs) == 0.0);
}

TEST_CASE("assignment is a valid partial bijection") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 1 + static_cast<int>(rng.randint(7));
    int m = 1 + static_cast<int>(rng.randint(7));
    Tensor c = random_cost(rng, n, m, -5.0, 5.0);
    auto pairs = hungarian(c);
    CHECK(static_cast<int>(pairs.size()) == std::min(n, m));
    std::vector<int> rows, cols;
    for (auto& [r, cc] : pairs) {
      CHECK(r >= 0);
      CHECK(r < n);
      CHECK(cc >= 0);
      CHECK(cc < m);
      rows.push_back(r);
      cols.push_back(cc);
    }
    std::sort(rows.begin(), rows.end());
    std::sort(cols.begin(), cols.end());
    CHECK(std::adjacent_find(rows.begin(), rows.end()) == rows.end());
    CHECK(std::adjacent_find(cols.begin(), cols.end()) == cols.end());
    // returned in ascending row order
    for (size_t i = 1; i < pairs.size(); ++i) CHECK(pairs[i - 1].first < pairs[i].first);
  }
}

TEST_CASE("matches brute force on random square matrices") {
  Rng rng(101);
  for (int trial = 0; trial < 300; ++trial) {
    int n = 1 + static_cast<int>(rng.randint(7));
    Tensor c = random_cost(rng, n, n, -10.0, 10.0);
    auto pairs = hungarian(c);
    CHECK(assignment_cost(c, pairs) == doctest::Approx(brute_force_cost(c)).epsilon(1e-10));
  }
}

TEST_CASE("matches brute force on random rectangular matrices") {
  Rng rng(202);
  for (int trial = 0; trial < 300; ++trial) {
    int n = 1 + static_cast<int>(rng.randint(7));
    int m = 1 + static_cast<int>(rng.randint(7));
    Tensor c = random_cost(rng, n, m, 0.0, 100.0);
    auto pairs = hungarian(c);
    CHECK(assignment_cost(c, pairs) == doctest::Approx(brute_force_cost(c)).epsilon(1e-10));
  }
}

TEST_CASE("handles ties and duplicated rows") {
  Tensor c = Tensor::full(Shape{4, 4}, 3.0);
  auto pairs = hungarian(c);
  CHECK(assignment_cost(c, pairs) == 12.0);

  Tensor d(Shape{2, 3}, std::vector<double>{1, 1, 1, 1, 1, 1});
  auto p2 = hungarian(d);
  CHECK(p2.size() == 2);
  CHECK(assignment_cost(d, p2) == 2.0);
}

TEST_CASE("single row picks the minimum column") {
  Tensor c(Shape{1, 5}, std::vector<double>{4, 2, 7, 1, 9});
  auto pairs = hungarian(c);
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0] == std::pair<int, int>{0, 3});
}

TEST_CASE("rejects non-finite costs") {
  Tensor bad(Shape{2, 2}, std::vector<double>{1, std::nan(""), 0, 1});
  CHECK_THROWS_AS(hungarian(bad), ContractError);
  Tensor inf(Shape{2, 2},
             std::vector<double>{1, std::numeric_limits<double>::infinity(), 0, 1});
  CHECK_THROWS_AS(hungarian(inf), ContractError);
  Tensor vec(Shape{4}, std::vector<double>{1, 2, 3, 4});
  CHECK_THROWS_AS(hungarian(vec), ShapeError);
}

TEST_CASE("negative costs are handled") {
  Tensor c(Shape{3, 3}, std::vector<double>{-5, 0, 0, 0, -5, 0, 0, 0, -5});
  auto pairs = hungarian(c);
  CHECK(assignment_cost(c, pairs) == -15.0);
  CHECK(assignment_cost(c, pairs) == brute_force_cost(c));
}
