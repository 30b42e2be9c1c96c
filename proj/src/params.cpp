#include "soc/params.hpp"

#include <algorithm>

#include "soc/random.hpp"
#include "soc/serialize.hpp"

namespace soc {

Tensor ParamStore::get(const std::string& name, const Shape& shape, Init init) {
  auto it = params_.find(name);
  if (it != params_.end()) {
    if (it->second.shape() != shape) {
      throw ShapeError("parameter '" + name + "' requested as " + shape_str(shape) +
                       " but exists as " + shape_str(it->second.shape()));
    }
    return it->second;
  }
  Tensor t(shape, 0.0, true);
  double* p = t.data();
  int64_t n = t.size();
  switch (init.kind) {
    case Init::kZeros:
      break;
    case Init::kOnes:
      for (int64_t i = 0; i < n; ++i) p[i] = 1.0;
      break;
    case Init::kUniform: {
      Rng rng(Rng::fold(seed_, name));
      for (int64_t i = 0; i < n; ++i) p[i] = (2.0 * rng.uniform() - 1.0) * init.scale;
      break;
    }
    case Init::kNormal: {
      Rng rng(Rng::fold(seed_, name));
      for (int64_t i = 0; i < n; ++i) p[i] = rng.normal() * init.scale;
      break;
    }
  }
  params_.emplace(name, t);
  return t;
}

Tensor ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("no such parameter: " + name);
  return it->second;
}

int64_t ParamStore::total_size() const {
  int64_t n = 0;
  for (const auto& [_, t] : params_) n += t.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [_, t] : params_) t.zero_grad();
}

void ParamStore::save(const std::string& path) const { save_tensor_map(path, params_); }

void ParamStore::load(const std::string& path) {
  std::map<std::string, Tensor> loaded = load_tensor_map(path);
  for (const auto& [name, _] : params_) {
    if (!loaded.count(name)) throw ConfigError("checkpoint missing parameter: " + name);
  }
  for (const auto& [name, src] : loaded) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("checkpoint has unknown parameter: " + name);
    if (it->second.shape() != src.shape()) {
      throw ConfigError("checkpoint shape mismatch for '" + name + "': file " +
                        shape_str(src.shape()) + " vs model " + shape_str(it->second.shape()));
    }
    std::copy(src.data(), src.data() + src.size(), it->second.data());
  }
}

}  // namespace soc
