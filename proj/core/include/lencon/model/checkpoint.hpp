#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lencon/model/params.hpp"

namespace lencon {

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kCheckpointMagic = "LENCON1\n";

struct TensorRecord {
  std::string name;
  Tensor value;
};

// Magic, one `key=value ...` header line, then binary records:
// u32 name length, name, u32 rank, u32 dims..., f64 values (all little-endian).
struct TensorFile {
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<TensorRecord> records;

  std::optional<std::string> get(const std::string& key) const;
};

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file);
TensorFile read_tensor_file(const std::filesystem::path& path);

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);
// Also rejects a checkpoint whose variant differs from `expected`.
ModelParams load_checkpoint(const std::filesystem::path& path, Variant expected);

}  // namespace lencon
