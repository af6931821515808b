#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "svdpinn/harness/blockfile.hpp"
#include "svdpinn/transfer.hpp"

namespace svdpinn::harness {

struct CheckpointMeta {
  std::string problem;
  std::size_t dim = 0;
  std::size_t width = 0;
  double epsilon = 0.0;
  TrainMode mode = TrainMode::Full;
  std::uint64_t iteration = 0;
  std::uint64_t seed = 0;
  std::uint64_t sample_round = 0;
  /// Set iff the hidden weight is factored; the path is relative to the
  /// checkpoint's directory.
  std::string basis_id;
  std::string basis_path;
};

struct Checkpoint {
  CheckpointMeta meta;
  TrainState state;
};

/// Frozen singular bases of a pretrained hidden weight, shared by every
/// checkpoint trained from it.
struct BasisArchive {
  std::string id;
  std::uint64_t source_hash = 0;  // hidden_weight_hash of the source network
  std::uint64_t config_hash = 0;
  Matrix u;
  Matrix v;
  Vector sigma0;
};

inline constexpr const char* kBasisFileName = "basis.svd";

BlockFile encode_checkpoint(const Checkpoint& ckpt);
/// `directory` resolves the basis archive of factored checkpoints.
Checkpoint decode_checkpoint(const BlockFile& file, const std::filesystem::path& directory);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws FormatError unless the checkpoint was built for this problem and
/// dimension (and width, when given).
void require_structure(const CheckpointMeta& meta, std::string_view problem, std::size_t dim,
                       std::optional<std::size_t> width, const std::filesystem::path& path);

/// FNV-1a over the little-endian bytes of a dense hidden weight.
std::uint64_t hidden_weight_hash(const NetworkParams& params);

BasisArchive make_basis(const NetworkParams& theta0, std::uint64_t config_hash);
BlockFile encode_basis(const BasisArchive& basis);
void save_basis(const std::filesystem::path& path, const BasisArchive& basis);
BasisArchive load_basis(const std::filesystem::path& path);
/// θ₀ with W₁ replaced by the archived factors.
NetworkParams attach_basis(const NetworkParams& theta0, const BasisArchive& basis);

/// Parameter entries actually serialized: per-model param/* blocks and the
/// shared U, V entries of a referenced basis.
struct StoredCount {
  std::uint64_t per_model = 0;
  std::uint64_t shared = 0;
};
StoredCount count_stored_parameters(const std::filesystem::path& checkpoint);

}  // namespace svdpinn::harness
