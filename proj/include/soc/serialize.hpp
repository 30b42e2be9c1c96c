#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "soc/tensor.hpp"

// Little-endian binary tensor format: u32 rank, u32 dims[rank], f64 data.
// A bundle file is u32 count followed by (u32 name_len, name bytes, tensor)
// entries in ascending name order.
namespace soc {

void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

void save_tensor_map(const std::string& path, const std::map<std::string, Tensor>& named);
std::map<std::string, Tensor> load_tensor_map(const std::string& path);

}  // namespace soc
