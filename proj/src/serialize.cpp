#include "soc/serialize.hpp"

#include <cstring>
#include <fstream>
#include <limits>

namespace soc {

namespace {

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) throw ContractError("tensor stream truncated");
  return static_cast<uint32_t>(b[0]) | static_cast<uint32_t>(b[1]) << 8 |
         static_cast<uint32_t>(b[2]) << 16 | static_cast<uint32_t>(b[3]) << 24;
}

void put_f64(std::ostream& os, double v) {
  uint64_t u;
  std::memcpy(&u, &v, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(u >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw ContractError("tensor stream truncated");
  uint64_t u = 0;
  for (int i = 0; i < 8; ++i) u |= static_cast<uint64_t>(b[i]) << (8 * i);
  double v;
  std::memcpy(&v, &u, 8);
  return v;
}

}  // namespace

void write_tensor(std::ostream& os, const Tensor& t) {
  put_u32(os, static_cast<uint32_t>(t.rank()));
  for (int i = 0; i < t.rank(); ++i) put_u32(os, static_cast<uint32_t>(t.dim(i)));
  const double* p = t.data();
  for (int64_t i = 0; i < t.size(); ++i) put_f64(os, p[i]);
}

Tensor read_tensor(std::istream& is) {
  uint32_t rank = get_u32(is);
  if (rank > 16) throw ContractError("tensor stream: implausible rank " + std::to_string(rank));
  Shape shape(rank);
  for (uint32_t i = 0; i < rank; ++i) {
    uint32_t d = get_u32(is);
    if (d == 0 || d > (1u << 28)) throw ContractError("tensor stream: bad dim");
    shape[i] = static_cast<int>(d);
  }
  int64_t n = shape_numel(shape);
  std::vector<double> data(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) data[static_cast<size_t>(i)] = get_f64(is);
  return Tensor(std::move(shape), std::move(data));
}

void save_tensor_map(const std::string& path, const std::map<std::string, Tensor>& named) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw ContractError("cannot open for write: " + path);
  put_u32(os, static_cast<uint32_t>(named.size()));
  for (const auto& [name, t] : named) {
    put_u32(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_tensor(os, t);
  }
  if (!os) throw ContractError("write failed: " + path);
}

std::map<std::string, Tensor> load_tensor_map(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ContractError("cannot open: " + path);
  uint32_t count = get_u32(is);
  std::map<std::string, Tensor> out;
  for (uint32_t i = 0; i < count; ++i) {
    uint32_t len = get_u32(is);
    if (len > 4096) throw ContractError("tensor stream: implausible name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw ContractError("tensor stream truncated");
    out.emplace(std::move(name), read_tensor(is));
  }
  return out;
}

}  // namespace soc
