#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <unistd.h>

#include "doctest.h"
#include "svdpinn/errors.hpp"
#include "svdpinn/harness/commands.hpp"

using namespace svdpinn;
using namespace svdpinn::harness;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) {
    path = fs::temp_directory_path() / ("svdpinn-" + name + "-" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RunConfig tiny(const fs::path& out, std::size_t iters = 12) {
  RunConfig c = default_config();
  c.problem = "parabolic";
  c.dim = 2;
  c.width = 6;
  c.iters = iters;
  c.log_every = 5;
  c.n_interior = 32;
  c.n_boundary = 8;
  c.n_initial = 8;
  c.n_test = 64;
  c.seed = 5;
  c.out_dir = out;
  return c;
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::string payload(const fs::path& ckpt, const std::string& block) {
  const BlockFile f = BlockFile::load(kCheckpointMagic, ckpt);
  BlockFile one(kCheckpointMagic);
  const Block& b = f.get(block, BlockType::F64);
  one.put_f64(b.name, b.shape, b.f64);
  return one.serialize();
}

}  // namespace

TEST_CASE("config text, overrides and error listing") {
  RunConfig c = default_config();
  apply_text(c, "# comment\nproblem = allen_cahn\n\nwidth=16  # trailing\nepsilon=0.5\n", "inline");
  CHECK(c.problem == "allen_cahn");
  CHECK(c.width == 16);
  CHECK(c.epsilon == 0.5);
  CHECK(c.explicit_keys.contains("width"));
  CHECK(!c.explicit_keys.contains("dim"));

  TempDir dir("config");
  const fs::path file = dir.path / "run.cfg";
  std::ofstream(file) << "iters=7\nseed=3\n";
  const RunConfig l = load_config(file, {"iters=9", "mode=frozen_w1"});
  CHECK(l.iters == 9);
  CHECK(l.seed == 3);
  CHECK(l.mode == "frozen_w1");

  try {
    load_config(std::nullopt, {"colour=red", "width=-3", "nu=0", "mode=partial"});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    for (const char* key : {"colour", "width", "nu", "mode"}) CHECK(msg.find(key) != std::string::npos);
  }
  CHECK_THROWS_AS(load_config(dir.path / "missing.cfg", {}), IoError);
}

TEST_CASE("output root comes from the environment") {
  ::setenv(kOutputRootEnv, "/tmp/elsewhere", 1);
  CHECK(default_config().out_dir == fs::path("/tmp/elsewhere"));
  ::unsetenv(kOutputRootEnv);
  CHECK(default_config().out_dir == fs::path("runs"));
}

TEST_CASE("number formatting is shortest round-trip") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(50.0) == "50");
  CHECK(format_number(0.1) == "0.1");
  CHECK(epsilon_tag(0.5) == "eps0.5");
  const double x = 0.1 + 0.2;
  CHECK(std::stod(format_number(x)) == x);
}

TEST_CASE("block file round trip and corruption") {
  BlockFile f(kCheckpointMagic);
  const double xs[] = {1.0, -0.0, 1e-300, std::nextafter(1.0, 2.0), 3.0, 4.0};
  f.put_f64("m", {2, 3}, xs);
  f.put_u64("n", 42);
  f.put_str("s", "hello");
  f.put_scalar("x", 0.25);
  const std::string bytes = f.serialize();
  CHECK(bytes.substr(0, 8) == "SVDPCKPT");
  const BlockFile g = BlockFile::parse(kCheckpointMagic, bytes, "mem");
  CHECK(g.serialize() == bytes);
  CHECK(std::signbit(g.f64("m", {2, 3})[1]));
  CHECK(g.u64("n") == 42);
  CHECK(g.str("s") == "hello");
  CHECK_THROWS_AS(g.f64("m", {3, 2}), FormatError);
  CHECK_THROWS_AS(g.u64("missing"), FormatError);
  CHECK_THROWS_AS(f.put_u64("n", 1), FormatError);
  CHECK_THROWS_AS(BlockFile::parse(kBasisMagic, bytes, "mem"), FormatError);
  CHECK_THROWS_AS(BlockFile::parse(kCheckpointMagic, bytes.substr(0, bytes.size() - 1), "mem"), FormatError);
  CHECK_THROWS_AS(BlockFile::parse(kCheckpointMagic, bytes + "x", "mem"), FormatError);
  std::string bad = bytes;
  bad[8] = 9;  // version
  CHECK_THROWS_AS(BlockFile::parse(kCheckpointMagic, bad, "mem"), FormatError);
}

TEST_CASE("pretrain writes a checkpoint and a log with the documented layout") {
  TempDir dir("pretrain");
  for (std::size_t iters : {0u, 10u, 12u}) {
    const RunConfig c = tiny(dir.path, iters);
    const PretrainOutputs out = run_pretrain(c);
    CHECK(out.checkpoint == dir.path / "theta0.ckpt");
    const auto rows = lines(out.log);
    REQUIRE(!rows.empty());
    CHECK(rows[0] == "iter,loss_total,loss_int,loss_bc,loss_ic,rel_err,wall_ms");
    CHECK(rows.size() - 1 == (iters + c.log_every - 1) / c.log_every + 1);
    CHECK(rows.back().starts_with(std::to_string(iters) + ","));
  }
}

TEST_CASE("zero iterations serializes the initialization") {
  TempDir dir("init");
  const RunConfig c = tiny(dir.path, 0);
  const PretrainOutputs out = run_pretrain(c);
  Checkpoint expected;
  expected.meta.problem = "parabolic";
  expected.meta.dim = 2;
  expected.meta.width = 6;
  expected.meta.seed = c.seed;
  const auto problem = problem_for(c, 0.0);
  expected.state.params = initial_network(*problem, c.width, c.seed);
  const std::size_t n = 6 * 3 + 6 + 36 + 6 + 6 + 1;
  expected.state.main_opt = OptimizerState::create({OptimizerKind::Adam, c.main_lr}, n);
  CHECK(read_file(out.checkpoint) == encode_checkpoint(expected).serialize());
}

TEST_CASE("checkpoints are deterministic and round-trip byte-identically") {
  TempDir a("det-a"), b("det-b");
  const auto pa = run_pretrain(tiny(a.path));
  const auto pb = run_pretrain(tiny(b.path));
  const std::string bytes = read_file(pa.checkpoint);
  CHECK(bytes == read_file(pb.checkpoint));
  const Checkpoint loaded = load_checkpoint(pa.checkpoint);
  CHECK(encode_checkpoint(loaded).serialize() == bytes);

  RunConfig c = tiny(a.path);
  c.epsilon = 0.5;
  const auto t = run_transfer(c, pa.checkpoint);
  const std::string tbytes = read_file(t.checkpoint);
  const Checkpoint tl = load_checkpoint(t.checkpoint);
  CHECK(tl.state.params.w1.factored());
  CHECK(tl.state.sigma_opt.has_value());
  CHECK(encode_checkpoint(tl).serialize() == tbytes);
  save_checkpoint(a.path / "copy" / "again.ckpt", tl);
  CHECK(read_file(a.path / "copy" / "again.ckpt") == tbytes);
}

TEST_CASE("structural mismatches fail loudly") {
  TempDir dir("mismatch");
  const auto p = run_pretrain(tiny(dir.path));
  RunConfig c = tiny(dir.path);
  c.width = 7;
  CHECK_THROWS_AS(run_transfer(c, p.checkpoint), FormatError);
  c = tiny(dir.path);
  c.dim = 3;
  CHECK_THROWS_AS(run_transfer(c, p.checkpoint), FormatError);
  c = tiny(dir.path);
  c.problem = "allen_cahn";
  CHECK_THROWS_AS(run_evaluate(c, p.checkpoint), FormatError);

  // a checkpoint whose hash disagrees with its own fields
  BlockFile f = BlockFile::load(kCheckpointMagic, p.checkpoint);
  BlockFile forged(kCheckpointMagic);
  for (const Block& b : f.blocks()) {
    if (b.name == "meta/width") {
      forged.put_u64(b.name, 7);
    } else if (b.type == BlockType::U64) {
      forged.put_u64(b.name, b.u64[0]);
    } else if (b.type == BlockType::Str) {
      forged.put_str(b.name, b.str);
    } else {
      forged.put_f64(b.name, b.shape, b.f64);
    }
  }
  forged.save(dir.path / "forged.ckpt");
  CHECK_THROWS_AS(load_checkpoint(dir.path / "forged.ckpt"), FormatError);
  CHECK_THROWS_AS(load_checkpoint(dir.path / "absent.ckpt"), IoError);
}

TEST_CASE("two svd transfers share one basis archive") {
  TempDir dir("basis");
  const auto p = run_pretrain(tiny(dir.path));
  RunConfig c = tiny(dir.path);
  c.epsilon = 0.5;
  const auto t1 = run_transfer(c, p.checkpoint);
  c.epsilon = 2.0;
  const auto t2 = run_transfer(c, p.checkpoint);
  CHECK(t1.basis_created);
  CHECK(!t2.basis_created);
  std::size_t archives = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir.path)) archives += e.path().extension() == ".svd";
  CHECK(archives == 1);
  const auto m1 = load_checkpoint(t1.checkpoint).meta;
  const auto m2 = load_checkpoint(t2.checkpoint).meta;
  CHECK(!m1.basis_id.empty());
  CHECK(m1.basis_id == m2.basis_id);
  CHECK(m1.basis_id == load_basis(dir.path / kBasisFileName).id);
  CHECK(t1.checkpoint.filename() == "theta_eps0.5.ckpt");
  CHECK(t2.log.filename() == "run_eps2.csv");
  const auto rows = lines(t2.log);
  CHECK(rows[0].ends_with(",sigma_head_15"));
  CHECK(rows.size() - 1 == (c.iters + c.log_every - 1) / c.log_every + 1);
}

TEST_CASE("a basis from another network is refused") {
  TempDir a("basis-a"), b("basis-b");
  const auto pa = run_pretrain(tiny(a.path));
  RunConfig other = tiny(b.path);
  other.seed = 6;
  const auto pb = run_pretrain(other);
  RunConfig c = tiny(a.path);
  c.epsilon = 0.5;
  run_transfer(c, pa.checkpoint);
  CHECK_THROWS_AS(run_transfer(c, pb.checkpoint), ConfigError);
}

TEST_CASE("frozen_hidden keeps the frozen blocks byte-equal") {
  TempDir dir("frozen");
  const auto p = run_pretrain(tiny(dir.path));
  RunConfig c = tiny(dir.path);
  c.mode = "frozen_hidden";
  c.epsilon = 0.5;
  const auto t = run_transfer(c, p.checkpoint);
  for (const char* block : {"param/w0", "param/b0", "param/w1", "param/b1", "param/b2"}) {
    CHECK(payload(t.checkpoint, block) == payload(p.checkpoint, block));
  }
  CHECK(payload(t.checkpoint, "param/w2") != payload(p.checkpoint, "param/w2"));
  c.explicit_keys.insert("sigma_lr");
  CHECK_THROWS_AS(run_transfer(c, p.checkpoint), ConfigError);
}

TEST_CASE("on-disk storage audit at m=64, d=10") {
  TempDir dir("storage");
  RunConfig c = tiny(dir.path / "svd", 2);
  c.dim = 10;
  c.width = 64;
  const auto p = run_pretrain(c);
  c.epsilon = 0.5;
  const auto s1 = run_transfer(c, p.checkpoint);
  c.epsilon = 2.0;
  const auto s2 = run_transfer(c, p.checkpoint);
  RunConfig f = c;
  f.mode = "full";
  f.out_dir = dir.path / "full";
  f.epsilon = 0.5;
  const auto f1 = run_transfer(f, p.checkpoint);
  f.epsilon = 2.0;
  const auto f2 = run_transfer(f, p.checkpoint);
  const auto svd_bytes = fs::file_size(s1.basis) + fs::file_size(s1.checkpoint) + fs::file_size(s2.checkpoint);
  const auto full_bytes = fs::file_size(f1.checkpoint) + fs::file_size(f2.checkpoint);
  CHECK(svd_bytes < full_bytes);
  CHECK(fs::file_size(s1.checkpoint) == fs::file_size(s2.checkpoint));

  const std::uint64_t m = 64, d_in = 11;
  const StoredCount sc = count_stored_parameters(s1.checkpoint);
  const StoredCount fc = count_stored_parameters(f1.checkpoint);
  CHECK(sc.per_model == param_count(StorageScheme::SvdShared, 1, m, 1, d_in).stored_per_model);
  CHECK(sc.shared == param_count(StorageScheme::SvdShared, 1, m, 1, d_in).shared);
  CHECK(fc.per_model == param_count(StorageScheme::Standard, 1, m, 1, d_in).stored_per_model);
  CHECK(fc.shared == 0);
}

TEST_CASE("sweep runs every cell and records failures") {
  TempDir dir("sweep");
  const auto p = run_pretrain(tiny(dir.path));
  RunConfig c = tiny(dir.path / "grid", 10);
  c.epsilon = 0.5;
  c.sweep_cells = "svd:gd:0.1,svd:rmsprop:0.01,svd:adam:0.001,svd:gd:0";
  const auto out = run_sweep(c, p.checkpoint);
  REQUIRE(out.rows.size() == 4);
  CHECK(lines(out.summary).size() == 5);
  CHECK(lines(out.summary)[0] == "cell,mode,sigma_optimizer,sigma_lr,final_rel_err,best_rel_err,status");
  double best = 1e300;
  for (const auto& r : out.rows) {
    CHECK(r.status == "ok");
    CHECK(r.best_rel_err <= r.final_rel_err);
    best = std::min(best, r.best_rel_err);
    CHECK(fs::exists(r.directory / "theta_eps0.5.ckpt"));
  }
  for (const auto& r : out.rows) CHECK(best <= r.final_rel_err);
  CHECK(!fs::exists(out.rows[0].directory / kBasisFileName));
  CHECK(load_checkpoint(out.rows[0].directory / "theta_eps0.5.ckpt").meta.basis_path == "../basis.svd");

  RunConfig f = tiny(dir.path / "alone", 10);
  f.epsilon = 0.5;
  f.mode = "frozen_w1";
  const auto lone = run_transfer(f, p.checkpoint);
  CHECK(std::abs(lone.result.records.back().rel_err - out.rows[3].final_rel_err) <= 1e-6);

  // a foreign basis archive breaks the svd cells but not the others
  RunConfig broken = tiny(dir.path / "broken", 4);
  broken.sweep_cells = "svd:gd:0.1,frozen_w1";
  RunConfig other = tiny(dir.path / "other", 0);
  other.seed = 99;
  const auto q = run_pretrain(other);
  RunConfig seed = broken;
  seed.mode = "svd";
  run_transfer(seed, q.checkpoint);
  // same shapes, different source: fails even though the config matches
  const auto bad = run_sweep(broken, p.checkpoint);
  REQUIRE(bad.rows.size() == 2);
  CHECK(bad.rows[0].status.starts_with("error:"));
  CHECK(std::isnan(bad.rows[0].final_rel_err));
  CHECK(bad.rows[1].status == "ok");
}

TEST_CASE("sweep grid construction") {
  RunConfig c = default_config();
  c.sweep_modes = "svd,frozen_w1,full";
  c.sweep_sigma_optimizers = "gd,adam";
  c.sweep_sigma_lrs = "0.1,0.01";
  const auto cells = sweep_grid(c);
  CHECK(cells.size() == 6);
  CHECK(cells[0].label == "svd_gd_0.1");
  CHECK(cells[4].label == "frozen_w1");
  c.sweep_cells = "svd:gd,frozen_w1:gd:1";
  CHECK_THROWS_AS(sweep_grid(c), ConfigError);
  c.sweep_cells = "svd:gd:0.1";
  c.explicit_keys.insert("sweep_modes");
  CHECK_THROWS_AS(sweep_grid(c), ConfigError);
}

TEST_CASE("evaluate matches the training log and appends rows") {
  TempDir dir("evaluate");
  RunConfig c = tiny(dir.path);
  const auto p = run_pretrain(c);
  const auto e1 = run_evaluate(c, p.checkpoint);
  const auto e2 = run_evaluate(c, p.checkpoint);
  CHECK(e1.report.relative_error == e2.report.relative_error);
  CHECK(std::abs(e1.report.relative_error - p.result.records.back().rel_err) <= 1e-12);
  CHECK(e1.report.iteration == c.iters);
  CHECK(lines(e1.log).size() == 3);
}
