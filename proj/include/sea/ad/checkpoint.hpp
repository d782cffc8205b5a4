#pragma once

// Portable parameter checkpoint files.
//
// Layout (all integers unsigned little-endian, all reals IEEE-754 binary64
// little-endian):
//
//   magic        8 bytes  "SEACKPT\0"
//   version      u32      currently 1
//   n_tensors    u32
//   n_tensors × { name_len u32, name bytes (UTF-8), rows u64, cols u64 }
//   n_meta       u32
//   n_meta × { key_len u32, key bytes, value_len u64, value bytes }
//   payload      for each tensor in manifest order, rows*cols f64 row-major
//
// Tensor names are unique. Metadata carries free-form text such as the run
// configuration and serialized generator state.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sea/ad/adam.hpp"
#include "sea/ad/matrix.hpp"

namespace sea::ad {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Matrix value;
};

struct Checkpoint {
  std::vector<NamedTensor> tensors;
  std::map<std::string, std::string> meta;

  void add(std::string name, Matrix value);
  bool contains(const std::string& name) const;
  const Matrix& tensor(const std::string& name) const;
  const std::string& meta_value(const std::string& key) const;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

// Helpers for storing parameter lists and optimizer state under a prefix.
void store_parameters(Checkpoint& ckpt, const std::string& prefix, const std::vector<Parameter*>& params);
void load_parameters(const Checkpoint& ckpt, const std::string& prefix, const std::vector<Parameter*>& params);
void store_adam(Checkpoint& ckpt, const std::string& prefix, const Adam& adam);
void load_adam(const Checkpoint& ckpt, const std::string& prefix, Adam& adam);

}  // namespace sea::ad
