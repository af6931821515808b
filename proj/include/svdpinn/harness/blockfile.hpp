#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace svdpinn::harness {

/// Layout (all integers little-endian):
///   magic[8] | u32 version | u32 block count
///   per block: u32 name length | name | u8 type | u32 ndims | u64 dims[ndims] | payload
/// Payload is product(dims) f64 or u64 values, or raw bytes for strings.
inline constexpr std::uint32_t kBlockFormatVersion = 1;

enum class BlockType : std::uint8_t { F64 = 0, U64 = 1, Str = 2 };

struct Block {
  std::string name;
  BlockType type = BlockType::F64;
  std::vector<std::uint64_t> shape;
  std::vector<double> f64;
  std::vector<std::uint64_t> u64;
  std::string str;

  std::uint64_t element_count() const;
  std::string shape_text() const;
};

using Magic = std::array<char, 8>;
inline constexpr Magic kCheckpointMagic{'S', 'V', 'D', 'P', 'C', 'K', 'P', 'T'};
inline constexpr Magic kBasisMagic{'S', 'V', 'D', 'P', 'B', 'A', 'S', 'E'};

/// Ordered collection of uniquely named blocks.
class BlockFile {
 public:
  explicit BlockFile(Magic magic) : magic_(magic) {}

  void put_f64(std::string name, std::vector<std::uint64_t> shape, std::span<const double> values);
  void put_scalar(std::string name, double value);
  void put_u64(std::string name, std::uint64_t value);
  void put_str(std::string name, std::string value);

  bool has(std::string_view name) const;
  /// Throws FormatError when the block is absent or has the wrong type or shape.
  const Block& get(std::string_view name, BlockType type) const;
  std::vector<double> f64(std::string_view name, const std::vector<std::uint64_t>& shape) const;
  double scalar(std::string_view name) const;
  std::uint64_t u64(std::string_view name) const;
  const std::string& str(std::string_view name) const;

  const std::vector<Block>& blocks() const { return blocks_; }
  const Magic& magic() const { return magic_; }

  std::string serialize() const;
  /// `origin` (usually a path) prefixes error messages.
  static BlockFile parse(Magic magic, std::string_view bytes, std::string_view origin);

  void save(const std::filesystem::path& path) const;
  static BlockFile load(Magic magic, const std::filesystem::path& path);

 private:
  void add(Block block);

  Magic magic_;
  std::vector<Block> blocks_;
  std::string origin_ = "<memory>";
};

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace svdpinn::harness
