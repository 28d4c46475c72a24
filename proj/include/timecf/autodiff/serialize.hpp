#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "timecf/autodiff/tensor.hpp"

namespace timecf::ad {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

// Binary layout: "TCF1", then per tensor until end of stream:
//   u32 name length, name bytes, u32 rank, u64 dims[rank], f64 payload.
// All integers and doubles little-endian.
void write_tensors(std::ostream& os, const NamedTensors& tensors);
NamedTensors read_tensors(std::istream& is);

void save_tensors(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors load_tensors(const std::filesystem::path& path);

}  // namespace timecf::ad
