#include "idio/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace idio {
namespace {

constexpr char kMagic[4] = {'I', 'D', 'C', 'P'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
void write_u64(std::ostream& os, std::uint64_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}
std::uint64_t read_u64(std::istream& is) {
  std::uint64_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

}  // namespace

void save_checkpoint(
    const std::string& path,
    const std::vector<std::pair<std::string, const Tensor*>>& tensors) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open checkpoint for write: " + path);
  os.write(kMagic, 4);
  write_u32(os, kVersion);
  write_u32(os, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    write_u32(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_u32(os, static_cast<std::uint32_t>(t->shape.size()));
    for (std::size_t d : t->shape) write_u64(os, d);
    os.write(reinterpret_cast<const char*>(t->data.data()),
             static_cast<std::streamsize>(t->data.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint write failed: " + path);
}

std::map<std::string, Tensor> read_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("bad checkpoint magic: " + path);
  const std::uint32_t version = read_u32(is);
  if (version != kVersion)
    throw std::runtime_error("unsupported checkpoint version");
  const std::uint32_t count = read_u32(is);
  std::map<std::string, Tensor> out;
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::uint32_t name_len = read_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    const std::uint32_t rank = read_u32(is);
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(read_u64(is));
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!is) throw std::runtime_error("truncated checkpoint: " + path);
    out.emplace(std::move(name), std::move(t));
  }
  return out;
}

void load_checkpoint(const std::string& path, const ParamRefs& params) {
  auto tensors = read_checkpoint(path);
  for (const auto& p : params) {
    auto it = tensors.find(p.name);
    if (it == tensors.end())
      throw std::runtime_error("checkpoint missing tensor: " + p.name);
    if (it->second.shape != p.value->shape)
      throw std::runtime_error("checkpoint shape mismatch for: " + p.name);
    *p.value = it->second;
  }
}

}  // namespace idio
