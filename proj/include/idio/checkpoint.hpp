#pragma once
// Versioned binary checkpoint: header (magic, version, tensor count), then
// per tensor: name length, name, rank, dims, little-endian 64-bit floats.

#include <map>
#include <string>
#include <vector>

#include "idio/tensor.hpp"

namespace idio {

void save_checkpoint(const std::string& path,
                     const std::vector<std::pair<std::string, const Tensor*>>& tensors);

// Loads checkpoint tensors into the given refs by name; throws on a missing
// name or a shape mismatch.
void load_checkpoint(const std::string& path, const ParamRefs& params);

// Whole-file read, for inspection and forward-compatible consumers.
std::map<std::string, Tensor> read_checkpoint(const std::string& path);

inline std::vector<std::pair<std::string, const Tensor*>> checkpoint_view(
    const ParamRefs& params) {
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.name, p.value);
  return out;
}

}  // namespace idio
