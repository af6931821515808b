#include "svdpinn/harness/checkpoint.hpp"

#include <bit>
#include <cstdio>

#include "svdpinn/errors.hpp"
#include "svdpinn/harness/config.hpp"

namespace svdpinn::harness {

namespace {

void put_matrix(BlockFile& f, std::string name, const Matrix& m) {
  f.put_f64(std::move(name), {m.rows(), m.cols()}, m.data());
}

Matrix get_matrix(const BlockFile& f, std::string_view name, std::size_t rows, std::size_t cols) {
  return Matrix(rows, cols, f.f64(name, {rows, cols}));
}

Vector get_vector(const BlockFile& f, std::string_view name, std::size_t n) { return f.f64(name, {n}); }

void put_optimizer(BlockFile& f, const std::string& prefix, const OptimizerState& s) {
  const auto& h = s.hyper;
  f.put_str(prefix + "kind", std::string(to_string(h.kind)));
  const double hyper[] = {h.lr, h.beta1, h.beta2, h.rho, h.eps};
  f.put_f64(prefix + "hyper", {5}, hyper);
  f.put_u64(prefix + "step", s.step_count);
  f.put_f64(prefix + "first_moment", {s.first_moment.size()}, s.first_moment);
  f.put_f64(prefix + "second_moment", {s.second_moment.size()}, s.second_moment);
}

Vector moment(const BlockFile& f, const std::string& name, std::size_t n, bool present) {
  return get_vector(f, name, present ? n : 0);
}

OptimizerState get_optimizer(const BlockFile& f, const std::string& prefix, std::size_t n) {
  OptimizerState s;
  s.hyper.kind = parse_optimizer_kind(f.str(prefix + "kind"));
  const auto h = f.f64(prefix + "hyper", {5});
  s.hyper.lr = h[0];
  s.hyper.beta1 = h[1];
  s.hyper.beta2 = h[2];
  s.hyper.rho = h[3];
  s.hyper.eps = h[4];
  s.step_count = f.u64(prefix + "step");
  s.first_moment = moment(f, prefix + "first_moment", n, s.hyper.kind == OptimizerKind::Adam);
  s.second_moment = moment(f, prefix + "second_moment", n, s.hyper.kind != OptimizerKind::GD);
  return s;
}

/// Entries in the non-σ group for a mode.
std::size_t main_group_size(TrainMode mode, std::size_t d_in, std::size_t m) {
  switch (mode) {
    case TrainMode::FrozenHidden:
      return m;
    case TrainMode::Full:
      return m * d_in + m + m * m + m + m + 1;
    case TrainMode::FrozenW1:
    case TrainMode::SvdTransfer:
      return m * d_in + m + m + m + 1;
  }
  return 0;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t hash_doubles(std::uint64_t h, std::span<const double> xs) {
  for (double x : xs) {
    const auto bits = std::bit_cast<std::uint64_t>(x);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;

}  // namespace

BlockFile encode_checkpoint(const Checkpoint& c) {
  const auto& m = c.meta;
  const auto& p = c.state.params;
  BlockFile f(kCheckpointMagic);
  f.put_u64("meta/config_hash", structural_hash(m.problem, m.dim, m.width));
  f.put_str("meta/problem", m.problem);
  f.put_u64("meta/dim", m.dim);
  f.put_u64("meta/width", m.width);
  f.put_scalar("meta/epsilon", m.epsilon);
  f.put_str("meta/mode", std::string(to_string(m.mode)));
  f.put_u64("meta/iteration", m.iteration);
  f.put_u64("meta/seed", m.seed);
  f.put_u64("meta/sample_round", m.sample_round);
  f.put_str("meta/activation", "tanh");
  if (p.w1.factored()) {
    f.put_str("meta/basis_id", m.basis_id);
    f.put_str("meta/basis_path", m.basis_path);
  }
  put_matrix(f, "param/w0", p.w0);
  f.put_f64("param/b0", {p.b0.size()}, p.b0);
  if (p.w1.factored()) {
    f.put_f64("param/sigma", {p.w1.factors().sigma.size()}, p.w1.factors().sigma);
  } else {
    put_matrix(f, "param/w1", p.w1.dense().w);
  }
  f.put_f64("param/b1", {p.b1.size()}, p.b1);
  put_matrix(f, "param/w2", p.w2);
  f.put_f64("param/b2", {p.b2.size()}, p.b2);
  put_optimizer(f, "opt/main/", c.state.main_opt);
  if (c.state.sigma_opt) put_optimizer(f, "opt/sigma/", *c.state.sigma_opt);
  return f;
}

Checkpoint decode_checkpoint(const BlockFile& f, const std::filesystem::path& directory) {
  Checkpoint c;
  auto& m = c.meta;
  m.problem = f.str("meta/problem");
  m.dim = f.u64("meta/dim");
  m.width = f.u64("meta/width");
  if (f.u64("meta/config_hash") != structural_hash(m.problem, m.dim, m.width)) {
    throw FormatError("checkpoint config hash does not match its problem/dim/width fields");
  }
  if (f.str("meta/activation") != "tanh") throw FormatError("unsupported activation " + f.str("meta/activation"));
  m.epsilon = f.scalar("meta/epsilon");
  m.mode = parse_train_mode(f.str("meta/mode"));
  m.iteration = f.u64("meta/iteration");
  m.seed = f.u64("meta/seed");
  m.sample_round = f.u64("meta/sample_round");

  const std::size_t w = m.width, d_in = m.dim + 1;
  auto& p = c.state.params;
  p.w0 = get_matrix(f, "param/w0", w, d_in);
  p.b0 = get_vector(f, "param/b0", w);
  if (f.has("param/sigma")) {
    m.basis_id = f.str("meta/basis_id");
    m.basis_path = f.str("meta/basis_path");
    const auto basis_file = directory / m.basis_path;
    BasisArchive basis = load_basis(basis_file);
    if (basis.id != m.basis_id) {
      throw FormatError("basis " + basis_file.string() + " has id " + basis.id + ", checkpoint expects " +
                        m.basis_id);
    }
    if (basis.u.rows() != w) throw FormatError("basis " + basis_file.string() + " has the wrong width");
    p.w1 = HiddenWeight(FactoredHidden{std::move(basis.u), std::move(basis.v), get_vector(f, "param/sigma", w)});
  } else {
    p.w1 = HiddenWeight(DenseHidden{get_matrix(f, "param/w1", w, w)});
  }
  p.b1 = get_vector(f, "param/b1", w);
  p.w2 = get_matrix(f, "param/w2", 1, w);
  p.b2 = get_vector(f, "param/b2", 1);
  p.validate();

  c.state.main_opt = get_optimizer(f, "opt/main/", main_group_size(m.mode, d_in, w));
  if (f.has("opt/sigma/kind")) c.state.sigma_opt = get_optimizer(f, "opt/sigma/", w);
  c.state.seed = m.seed;
  c.state.sample_round = m.sample_round;
  c.state.iteration = m.iteration;
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  encode_checkpoint(ckpt).save(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const BlockFile f = BlockFile::load(kCheckpointMagic, path);
  try {
    return decode_checkpoint(f, path.parent_path());
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void require_structure(const CheckpointMeta& meta, std::string_view problem, std::size_t dim,
                       std::optional<std::size_t> width, const std::filesystem::path& path) {
  std::string why;
  if (meta.problem != problem) why += " problem " + meta.problem + " != " + std::string(problem) + ";";
  if (meta.dim != dim) why += " dim " + std::to_string(meta.dim) + " != " + std::to_string(dim) + ";";
  if (width && meta.width != *width) {
    why += " width " + std::to_string(meta.width) + " != " + std::to_string(*width) + ";";
  }
  if (!why.empty()) throw FormatError(path.string() + ": checkpoint structure differs from the configuration:" + why);
}

std::uint64_t hidden_weight_hash(const NetworkParams& params) {
  return hash_doubles(kFnvOffset, params.w1.dense().w.data());
}

BasisArchive make_basis(const NetworkParams& theta0, std::uint64_t config_hash) {
  if (theta0.w1.factored()) throw ConfigError("the source network must hold a dense hidden weight");
  SvdFactors f = svd(theta0.w1.dense().w);
  BasisArchive b;
  b.source_hash = hidden_weight_hash(theta0);
  b.config_hash = config_hash;
  b.id = hex64(hash_doubles(hash_doubles(b.source_hash, f.u.data()), f.v.data()));
  b.u = std::move(f.u);
  b.v = std::move(f.v);
  b.sigma0 = std::move(f.sigma);
  return b;
}

BlockFile encode_basis(const BasisArchive& b) {
  BlockFile f(kBasisMagic);
  f.put_str("meta/id", b.id);
  f.put_u64("meta/source_hash", b.source_hash);
  f.put_u64("meta/config_hash", b.config_hash);
  put_matrix(f, "u", b.u);
  put_matrix(f, "v", b.v);
  f.put_f64("sigma0", {b.sigma0.size()}, b.sigma0);
  return f;
}

void save_basis(const std::filesystem::path& path, const BasisArchive& basis) { encode_basis(basis).save(path); }

BasisArchive load_basis(const std::filesystem::path& path) {
  const BlockFile f = BlockFile::load(kBasisMagic, path);
  BasisArchive b;
  b.id = f.str("meta/id");
  b.source_hash = f.u64("meta/source_hash");
  b.config_hash = f.u64("meta/config_hash");
  const auto& u = f.get("u", BlockType::F64);
  if (u.shape.size() != 2 || u.shape[0] != u.shape[1]) throw FormatError(path.string() + ": U is not square");
  const std::size_t m = u.shape[0];
  b.u = get_matrix(f, "u", m, m);
  b.v = get_matrix(f, "v", m, m);
  b.sigma0 = get_vector(f, "sigma0", m);
  return b;
}

NetworkParams attach_basis(const NetworkParams& theta0, const BasisArchive& basis) {
  if (theta0.w1.factored()) throw ConfigError("the source network must hold a dense hidden weight");
  if (hidden_weight_hash(theta0) != basis.source_hash) {
    throw ConfigError("basis " + basis.id + " was built from a different pretrained network");
  }
  NetworkParams out = theta0;
  out.w1 = HiddenWeight(FactoredHidden{basis.u, basis.v, basis.sigma0});
  return out;
}

StoredCount count_stored_parameters(const std::filesystem::path& checkpoint) {
  const BlockFile f = BlockFile::load(kCheckpointMagic, checkpoint);
  StoredCount n;
  for (const Block& b : f.blocks()) {
    if (b.name.starts_with("param/")) n.per_model += b.element_count();
  }
  if (f.has("meta/basis_path")) {
    const BlockFile basis = BlockFile::load(kBasisMagic, checkpoint.parent_path() / f.str("meta/basis_path"));
    n.shared = basis.get("u", BlockType::F64).element_count() + basis.get("v", BlockType::F64).element_count();
  }
  return n;
}

}  // namespace svdpinn::harness
