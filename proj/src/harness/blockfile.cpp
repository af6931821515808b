#include "svdpinn/harness/blockfile.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>

#include "svdpinn/errors.hpp"

namespace svdpinn::harness {

namespace {

void put_le(std::string& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  Reader(std::string_view bytes, std::string_view origin) : bytes_(bytes), origin_(origin) {}

  std::uint64_t le(int n, const char* what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    const auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == bytes_.size(); }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(std::string(origin_) + ": " + msg + " (offset " + std::to_string(pos_) + ")");
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) fail(std::string("truncated while reading ") + what);
  }

  std::string_view bytes_;
  std::string_view origin_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t Block::element_count() const {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string Block::shape_text() const {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) s += (i ? "," : "") + std::to_string(shape[i]);
  return s + "]";
}

void BlockFile::add(Block block) {
  if (has(block.name)) throw FormatError("duplicate block '" + block.name + "'");
  if (block.name.empty()) throw FormatError("empty block name");
  blocks_.push_back(std::move(block));
}

void BlockFile::put_f64(std::string name, std::vector<std::uint64_t> shape,
                        std::span<const double> values) {
  Block b{std::move(name), BlockType::F64, std::move(shape), {values.begin(), values.end()}, {}, {}};
  if (b.element_count() != values.size()) {
    throw DimensionError("block '" + b.name + "': shape " + b.shape_text() + " does not hold " +
                         std::to_string(values.size()) + " values");
  }
  add(std::move(b));
}

void BlockFile::put_scalar(std::string name, double value) {
  add(Block{std::move(name), BlockType::F64, {}, {value}, {}, {}});
}

void BlockFile::put_u64(std::string name, std::uint64_t value) {
  add(Block{std::move(name), BlockType::U64, {}, {}, {value}, {}});
}

void BlockFile::put_str(std::string name, std::string value) {
  const std::uint64_t n = value.size();
  add(Block{std::move(name), BlockType::Str, {n}, {}, {}, std::move(value)});
}

bool BlockFile::has(std::string_view name) const {
  return std::ranges::any_of(blocks_, [&](const Block& b) { return b.name == name; });
}

const Block& BlockFile::get(std::string_view name, BlockType type) const {
  const auto it = std::ranges::find_if(blocks_, [&](const Block& b) { return b.name == name; });
  if (it == blocks_.end()) throw FormatError(origin_ + ": missing block '" + std::string(name) + "'");
  if (it->type != type) throw FormatError(origin_ + ": block '" + std::string(name) + "' has the wrong type");
  return *it;
}

std::vector<double> BlockFile::f64(std::string_view name, const std::vector<std::uint64_t>& shape) const {
  const Block& b = get(name, BlockType::F64);
  if (b.shape != shape) {
    Block want;
    want.shape = shape;
    throw FormatError(origin_ + ": block '" + std::string(name) + "' has shape " + b.shape_text() +
                      ", expected " + want.shape_text());
  }
  return b.f64;
}

double BlockFile::scalar(std::string_view name) const { return f64(name, {}).front(); }

std::uint64_t BlockFile::u64(std::string_view name) const {
  const Block& b = get(name, BlockType::U64);
  if (!b.shape.empty()) throw FormatError(origin_ + ": block '" + std::string(name) + "' is not a scalar");
  return b.u64.front();
}

const std::string& BlockFile::str(std::string_view name) const { return get(name, BlockType::Str).str; }

std::string BlockFile::serialize() const {
  std::string out(magic_.begin(), magic_.end());
  put_le(out, kBlockFormatVersion, 4);
  put_le(out, blocks_.size(), 4);
  for (const Block& b : blocks_) {
    put_le(out, b.name.size(), 4);
    out += b.name;
    out.push_back(static_cast<char>(b.type));
    put_le(out, b.shape.size(), 4);
    for (auto d : b.shape) put_le(out, d, 8);
    switch (b.type) {
      case BlockType::F64:
        for (double v : b.f64) put_le(out, std::bit_cast<std::uint64_t>(v), 8);
        break;
      case BlockType::U64:
        for (auto v : b.u64) put_le(out, v, 8);
        break;
      case BlockType::Str:
        out += b.str;
        break;
    }
  }
  return out;
}

BlockFile BlockFile::parse(Magic magic, std::string_view bytes, std::string_view origin) {
  Reader r(bytes, origin);
  const auto head = r.take(8, "magic");
  if (!std::equal(head.begin(), head.end(), magic.begin())) {
    r.fail("bad magic, expected '" + std::string(magic.begin(), magic.end()) + "'");
  }
  const auto version = r.le(4, "version");
  if (version != kBlockFormatVersion) r.fail("unsupported format version " + std::to_string(version));
  const auto count = r.le(4, "block count");
  BlockFile file(magic);
  file.origin_ = origin;
  for (std::uint64_t i = 0; i < count; ++i) {
    Block b;
    const auto name_len = r.le(4, "name length");
    b.name = r.take(name_len, "block name");
    const auto type = r.le(1, "block type");
    if (type > 2) r.fail("block '" + b.name + "' has unknown type " + std::to_string(type));
    b.type = static_cast<BlockType>(type);
    const auto ndims = r.le(4, "rank");
    if (ndims > 8) r.fail("block '" + b.name + "' has implausible rank " + std::to_string(ndims));
    for (std::uint64_t k = 0; k < ndims; ++k) b.shape.push_back(r.le(8, "dimension"));
    const std::uint64_t n = b.element_count();
    if (b.type == BlockType::Str) {
      if (ndims != 1) r.fail("string block '" + b.name + "' must have rank 1");
      b.str = r.take(n, "string payload");
    } else {
      if (n > bytes.size() / 8) r.fail("block '" + b.name + "' is larger than the file");
      for (std::uint64_t k = 0; k < n; ++k) {
        const auto raw = r.le(8, "payload");
        if (b.type == BlockType::F64) {
          b.f64.push_back(std::bit_cast<double>(raw));
        } else {
          b.u64.push_back(raw);
        }
      }
    }
    if (file.has(b.name)) r.fail("duplicate block '" + b.name + "'");
    file.blocks_.push_back(std::move(b));
  }
  if (!r.done()) r.fail("trailing bytes after the last block");
  return file;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed for " + path.string());
  return std::move(buf).str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

void BlockFile::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

BlockFile BlockFile::load(Magic magic, const std::filesystem::path& path) {
  return parse(magic, read_file(path), path.string());
}

}  // namespace svdpinn::harness
