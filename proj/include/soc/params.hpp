#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "soc/tensor.hpp"

namespace soc {

struct Init {
  enum Kind { kZeros, kOnes, kUniform, kNormal } kind = kZeros;
  double scale = 0.0;

  static Init zeros() { return {kZeros, 0.0}; }
  static Init ones() { return {kOnes, 0.0}; }
  // uniform in [-scale, scale)
  static Init uniform(double scale) { return {kUniform, scale}; }
  static Init normal(double stddev) { return {kNormal, stddev}; }
};

// Named trainable tensors. Each parameter is initialized from its own RNG
// stream derived from (seed, name), so values do not depend on creation
// order. get() with an existing name returns the shared tensor (this is how
// modules share weights) and asserts the shape matches.
class ParamStore {
 public:
  explicit ParamStore(uint64_t seed) : seed_(seed) {}

  Tensor get(const std::string& name, const Shape& shape, Init init);
  bool has(const std::string& name) const { return params_.count(name) != 0; }
  Tensor at(const std::string& name) const;

  const std::map<std::string, Tensor>& map() const { return params_; }
  int64_t total_size() const;
  void zero_grads();

  void save(const std::string& path) const;
  // Loads values into already-created parameters. Unknown or missing keys and
  // shape mismatches raise ConfigError naming the offending key.
  void load(const std::string& path);

 private:
  uint64_t seed_;
  std::map<std::string, Tensor> params_;
};

}  // namespace soc
