#include "svdpinn/harness/commands.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "svdpinn/errors.hpp"

namespace svdpinn::harness {

namespace fs = std::filesystem;

namespace {

std::string canonical_problem(const RunConfig& c) {
  return std::string(to_string(parse_problem_kind(c.problem)));
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    std::string item = s.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_rate(const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || !(v >= 0.0) || !std::isfinite(v)) {
    throw ConfigError("bad learning rate '" + text + "'");
  }
  return v;
}

std::string cell_label(const SweepCell& c) {
  if (c.mode != TrainMode::SvdTransfer) return std::string(to_string(c.mode));
  return "svd_" + std::string(to_string(c.sigma.kind)) + "_" + format_number(c.sigma.lr);
}

Checkpoint make_checkpoint(const RunConfig& c, TrainMode mode, double epsilon, const TrainState& state,
                           const std::string& basis_id = {}, const std::string& basis_path = {}) {
  Checkpoint ck;
  ck.meta.problem = canonical_problem(c);
  ck.meta.dim = c.dim;
  ck.meta.width = state.params.width();
  ck.meta.epsilon = epsilon;
  ck.meta.mode = mode;
  ck.meta.iteration = state.iteration;
  ck.meta.seed = state.seed;
  ck.meta.sample_round = state.sample_round;
  ck.meta.basis_id = basis_id;
  ck.meta.basis_path = basis_path;
  ck.state = state;
  return ck;
}

Checkpoint load_theta0(const RunConfig& c, const fs::path& path) {
  Checkpoint theta0 = load_checkpoint(path);
  require_structure(theta0.meta, canonical_problem(c), c.dim, c.width, path);
  if (theta0.state.params.w1.factored()) {
    throw ConfigError(path.string() + ": the pretrained network must hold a dense hidden weight");
  }
  return theta0;
}

/// Reuses an existing archive built from the same θ₀, otherwise writes one.
BasisArchive obtain_basis(const RunConfig& c, const Checkpoint& theta0, const fs::path& file, bool& created) {
  created = false;
  if (fs::exists(file)) {
    BasisArchive b = load_basis(file);
    if (b.source_hash != hidden_weight_hash(theta0.state.params)) {
      throw ConfigError(file.string() + " was built from a different pretrained network; use another out_dir");
    }
    return b;
  }
  BasisArchive b = make_basis(theta0.state.params, structural_hash(canonical_problem(c), c.dim, c.width));
  save_basis(file, b);
  created = true;
  return b;
}

struct TransferJob {
  TrainMode mode;
  OptimizerHyper sigma;
  fs::path run_dir;
  fs::path basis_file;
  std::string basis_relative;
};

TransferOutputs transfer_job(const RunConfig& c, const Checkpoint& theta0, const TransferJob& job) {
  ensure_directory(job.run_dir);
  TrainConfig tc = train_config(c);
  tc.sigma = job.sigma;
  tc.sigma_head = kSigmaColumns;
  const auto problem = problem_for(c, c.epsilon);

  TransferOutputs out;
  NetworkParams start = theta0.state.params;
  std::string basis_id;
  if (job.mode == TrainMode::SvdTransfer) {
    const BasisArchive basis = obtain_basis(c, theta0, job.basis_file, out.basis_created);
    start = attach_basis(start, basis);
    basis_id = basis.id;
    out.basis = job.basis_file;
  }
  const std::string tag = epsilon_tag(c.epsilon);
  out.log = job.run_dir / ("run_" + tag + ".csv");
  out.checkpoint = job.run_dir / ("theta_" + tag + ".ckpt");
  RunLog log(out.log, kSigmaColumns);
  out.result = train(std::move(start), job.mode, *problem, tc, [&](const RunRecord& r) { log.write(r); });
  save_checkpoint(out.checkpoint,
                  make_checkpoint(c, job.mode, c.epsilon, out.result.state, basis_id, job.basis_relative));
  return out;
}

}  // namespace

RunLog::RunLog(const fs::path& path, std::size_t sigma_columns) : path_(path), sigma_columns_(sigma_columns) {
  if (path.has_parent_path()) ensure_directory(path.parent_path());
  out_.open(path, std::ios::trunc);
  if (!out_) throw IoError("cannot write " + path.string());
  out_ << "iter,loss_total,loss_int,loss_bc,loss_ic,rel_err,wall_ms";
  for (std::size_t k = 0; k < sigma_columns_; ++k) out_ << ",sigma_head_" << k;
  out_ << '\n' << std::flush;
}

void RunLog::write(const RunRecord& r) {
  out_ << r.iteration << ',' << format_number(r.loss.total) << ',' << format_number(r.loss.interior) << ','
       << format_number(r.loss.boundary) << ',' << format_number(r.loss.initial) << ','
       << format_number(r.rel_err) << ',' << format_number(std::round(r.wall_ms * 1000.0) / 1000.0);
  for (std::size_t k = 0; k < sigma_columns_; ++k) {
    out_ << ',';
    if (k < r.sigma_head.size()) out_ << format_number(r.sigma_head[k]);
  }
  out_ << '\n' << std::flush;
  if (!out_) throw IoError("write failed for " + path_.string());
  ++rows_;
}

std::string epsilon_tag(double epsilon) { return "eps" + format_number(epsilon); }

PretrainOutputs run_pretrain(const RunConfig& c) {
  validate(c);
  ensure_directory(c.out_dir);
  TrainConfig tc = train_config(c);
  tc.sigma_head = 0;
  const auto problem = problem_for(c, 0.0);
  PretrainOutputs out;
  out.log = c.out_dir / "pretrain.csv";
  out.checkpoint = c.out_dir / "theta0.ckpt";
  RunLog log(out.log, 0);
  out.result = pretrain(*problem, c.width, tc, [&](const RunRecord& r) { log.write(r); });
  save_checkpoint(out.checkpoint, make_checkpoint(c, TrainMode::Full, 0.0, out.result.state));
  return out;
}

TransferOutputs run_transfer(const RunConfig& c, const fs::path& theta0_path) {
  validate(c);
  const TrainMode mode = parse_train_mode(c.mode);
  if (mode != TrainMode::SvdTransfer) {
    std::vector<std::string> stray;
    for (const char* k : {"sigma_optimizer", "sigma_lr"}) {
      if (c.explicit_keys.contains(k)) stray.emplace_back(k);
    }
    if (!stray.empty()) {
      std::string msg = "keys only apply to mode=svd:";
      for (const auto& k : stray) msg += " " + k;
      throw ConfigError(msg);
    }
  }
  const Checkpoint theta0 = load_theta0(c, theta0_path);
  TransferJob job{mode, train_config(c).sigma, c.out_dir, c.out_dir / kBasisFileName, kBasisFileName};
  return transfer_job(c, theta0, job);
}

std::vector<SweepCell> sweep_grid(const RunConfig& c) {
  std::vector<SweepCell> cells;
  std::vector<std::string> problems;
  auto add = [&](SweepCell cell) {
    cell.label = cell_label(cell);
    const bool dup = std::ranges::any_of(cells, [&](const SweepCell& x) { return x.label == cell.label; });
    if (!dup) cells.push_back(std::move(cell));
  };
  if (!c.sweep_cells.empty()) {
    for (const char* k : {"sweep_modes", "sweep_sigma_optimizers", "sweep_sigma_lrs"}) {
      if (c.explicit_keys.contains(k)) problems.push_back(std::string(k) + ": cannot be combined with sweep_cells");
    }
    for (const auto& entry : split(c.sweep_cells, ',')) {
      try {
        const auto parts = split(entry, ':');
        SweepCell cell;
        cell.mode = parse_train_mode(parts.empty() ? entry : parts[0]);
        if (cell.mode == TrainMode::SvdTransfer) {
          if (parts.size() != 3) throw ConfigError("svd cells need the form svd:<optimizer>:<lr>");
          cell.sigma = {parse_optimizer_kind(parts[1]), parse_rate(parts[2])};
        } else if (parts.size() != 1) {
          throw ConfigError("only svd cells take an optimizer and rate");
        }
        add(cell);
      } catch (const ConfigError& e) {
        problems.push_back("sweep_cells: '" + entry + "': " + e.what());
      }
    }
  } else {
    try {
      for (const auto& m : split(c.sweep_modes, ',')) {
        SweepCell cell;
        cell.mode = parse_train_mode(m);
        if (cell.mode != TrainMode::SvdTransfer) {
          add(cell);
          continue;
        }
        for (const auto& o : split(c.sweep_sigma_optimizers, ',')) {
          for (const auto& lr : split(c.sweep_sigma_lrs, ',')) {
            cell.sigma = {parse_optimizer_kind(o), parse_rate(lr)};
            add(cell);
          }
        }
      }
    } catch (const ConfigError& e) {
      problems.push_back(std::string("sweep grid: ") + e.what());
    }
  }
  if (problems.empty() && cells.empty()) problems.emplace_back("sweep grid is empty");
  if (!problems.empty()) {
    std::string msg = "invalid sweep:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ConfigError(msg);
  }
  return cells;
}

SweepOutputs run_sweep(const RunConfig& c, const fs::path& theta0_path,
                       const std::function<void(const SweepRow&)>& progress) {
  validate(c);
  const auto cells = sweep_grid(c);
  const Checkpoint theta0 = load_theta0(c, theta0_path);
  ensure_directory(c.out_dir);

  SweepOutputs out;
  out.summary = c.out_dir / "summary.csv";
  std::ofstream summary(out.summary, std::ios::trunc);
  if (!summary) throw IoError("cannot write " + out.summary.string());
  summary << "cell,mode,sigma_optimizer,sigma_lr,final_rel_err,best_rel_err,status\n" << std::flush;

  const std::string parent_basis = (fs::path("..") / kBasisFileName).generic_string();
  for (const auto& cell : cells) {
    SweepRow row;
    row.cell = cell;
    row.directory = c.out_dir / cell.label;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.final_rel_err = row.best_rel_err = nan;
    try {
      TransferJob job{cell.mode, cell.sigma, row.directory, c.out_dir / kBasisFileName, parent_basis};
      const TransferOutputs t = transfer_job(c, theta0, job);
      const auto& recs = t.result.records;
      if (!recs.empty()) {
        row.final_rel_err = recs.back().rel_err;
        row.best_rel_err = std::ranges::min(recs, {}, &RunRecord::rel_err).rel_err;
      }
      row.status = t.result.diverged ? "diverged: " + t.result.diagnostic : "ok";
    } catch (const Error& e) {
      row.status = std::string("error: ") + e.what();
    }
    std::string status = row.status;
    std::ranges::replace(status, ',', ';');
    std::ranges::replace(status, '\n', ' ');
    const bool svd_cell = cell.mode == TrainMode::SvdTransfer;
    summary << cell.label << ',' << to_string(cell.mode) << ','
            << (svd_cell ? std::string(to_string(cell.sigma.kind)) : "") << ','
            << (svd_cell ? format_number(cell.sigma.lr) : "") << ',' << format_number(row.final_rel_err) << ','
            << format_number(row.best_rel_err) << ',' << status << '\n'
            << std::flush;
    if (!summary) throw IoError("write failed for " + out.summary.string());
    if (progress) progress(row);
    out.rows.push_back(std::move(row));
  }
  return out;
}

EvaluateOutputs run_evaluate(const RunConfig& c, const fs::path& checkpoint) {
  validate(c);
  const Checkpoint ck = load_checkpoint(checkpoint);
  require_structure(ck.meta, canonical_problem(c), c.dim, std::nullopt, checkpoint);
  const auto problem = problem_for(c, c.epsilon);
  const SampleBatch test = make_test_batch(c.seed, c.dim, c.n_test);
  EvaluateOutputs out;
  out.report = evaluate(ck.state.params, *problem, test, ck.meta.iteration);

  ensure_directory(c.out_dir);
  out.log = c.out_dir / "evaluate.csv";
  const bool fresh = !fs::exists(out.log);
  std::ofstream log(out.log, std::ios::app);
  if (!log) throw IoError("cannot write " + out.log.string());
  if (fresh) log << "checkpoint,problem,dim,epsilon,iteration,seed,n_test,rel_err\n";
  log << checkpoint.generic_string() << ',' << out.report.problem << ',' << c.dim << ','
      << format_number(c.epsilon) << ',' << out.report.iteration << ',' << c.seed << ',' << c.n_test << ','
      << format_number(out.report.relative_error) << '\n';
  if (!log) throw IoError("write failed for " + out.log.string());
  return out;
}

}  // namespace svdpinn::harness
