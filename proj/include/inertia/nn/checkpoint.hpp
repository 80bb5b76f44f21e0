#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "inertia/nn/tensor.hpp"

namespace inertia::nn {

/// Text header followed by a little-endian float64 payload:
///
///   inertia-checkpoint 1
///   <key> <value...>                  (free-form header entries)
///   tensor <name> <d0xd1x...> <crc32>  (one per tensor, payload order)
///   end
///   <payload bytes>
struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<std::pair<std::string, Tensor>> tensors;

  /// First value stored under `key`; throws DataError if absent.
  [[nodiscard]] const std::string& get(const std::string& key) const;
  [[nodiscard]] bool has(const std::string& key) const;
  void set(const std::string& key, std::string value);
};

void write_checkpoint(std::ostream& os, const Checkpoint& ck);
Checkpoint read_checkpoint(std::istream& is);

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace inertia::nn
