#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "wspkit/nn/net.hpp"
#include "wspkit/tensor.hpp"

namespace wspkit::nn {

// Checkpoint container, little-endian throughout:
//   magic "WSPK" | u32 version (=1) | u32 entry count
//   per entry: u16 name length | name bytes | u8 dtype (0=f32, 1=f64)
//              | u8 ndim | u64 extents... | IEEE-754 payload
// Round trips are byte-exact: f32 payloads widen to f64 in memory and
// truncate back to the identical bytes on save.

struct CheckpointEntry {
  Tensor tensor;
  DType dtype = DType::f64;
};

using CheckpointMap = std::map<std::string, CheckpointEntry>;

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params,
                     DType dtype = DType::f64);
void save_checkpoint(const std::filesystem::path& path, const CheckpointMap& entries);
CheckpointMap load_checkpoint(const std::filesystem::path& path);

// Loads every checkpoint tensor whose name carries `prefix` into `params`,
// requiring exact shape matches. Returns the number of tensors restored;
// throws DataError listing mismatched tensors.
std::size_t restore_prefix(ParamStore& params, const CheckpointMap& ckpt,
                           const std::string& prefix);

}  // namespace wspkit::nn
