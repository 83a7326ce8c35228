#pragma once

#include "ptlab/diffusion/model_bundle.hpp"
#include "ptlab/eval/oracle.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace ptlab::cli {

inline constexpr std::string_view kCheckpointMagic = "PTLB1\n";

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// PTLB1 layout: the magic line, a one-line JSON manifest terminated by
/// '\n', then the tensors' little-endian float32 data back to back in
/// manifest order. The manifest lists name, dtype, shape, offset, length
/// and an FNV-1a checksum per tensor.
std::string encode_checkpoint(const diffusion::ModelBundle& bundle);
/// Throws CheckpointError on a bad magic, truncated or inconsistent payload
/// or checksum mismatch. A config hash mismatch only writes a warning to
/// `warnings` (when given).
diffusion::ModelBundle decode_checkpoint(const std::string& bytes, std::ostream* warnings = nullptr);

void save_checkpoint(const diffusion::ModelBundle& bundle, const std::filesystem::path& path);
diffusion::ModelBundle load_checkpoint(const std::filesystem::path& path, std::ostream* warnings = nullptr);

/// The oracle uses the same container with kind "oracle".
std::string encode_oracle(const eval::Oracle& oracle);
eval::Oracle decode_oracle(const std::string& bytes);
void save_oracle(const eval::Oracle& oracle, const std::filesystem::path& path);
eval::Oracle load_oracle(const std::filesystem::path& path);

/// Manifest of a container file, for inspection.
nlohmann::json read_manifest(const std::string& bytes);

std::string config_hash(const diffusion::ModelConfig& config);
bool is_checkpoint_file(const std::filesystem::path& path);

}  // namespace ptlab::cli
