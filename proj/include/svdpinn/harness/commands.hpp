#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "svdpinn/eval.hpp"
#include "svdpinn/harness/checkpoint.hpp"
#include "svdpinn/harness/config.hpp"

namespace svdpinn::harness {

inline constexpr std::size_t kSigmaColumns = 16;

/// CSV run log: iter,loss_total,loss_int,loss_bc,loss_ic,rel_err,wall_ms
/// followed by sigma_head_0..sigma_head_{k-1} when k > 0. Rows are flushed
/// as they are written.
class RunLog {
 public:
  RunLog(const std::filesystem::path& path, std::size_t sigma_columns);
  void write(const RunRecord& record);
  std::size_t rows() const { return rows_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t sigma_columns_;
  std::size_t rows_ = 0;
};

std::string epsilon_tag(double epsilon);  // "eps0.5"

struct PretrainOutputs {
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  TrainResult result;
};

/// Full training at ε = 0 (whatever `epsilon` says); writes theta0.ckpt and
/// pretrain.csv into out_dir.
PretrainOutputs run_pretrain(const RunConfig& config);

struct TransferOutputs {
  std::filesystem::path checkpoint;
  std::filesystem::path log;
  std::filesystem::path basis;  // empty unless mode is svd
  bool basis_created = false;
  TrainResult result;
};

/// Trains `mode` at `epsilon` from θ₀ and writes theta_eps<ε>.ckpt and
/// run_eps<ε>.csv into out_dir. In svd mode the bases come from
/// out_dir/basis.svd, which is created on first use.
TransferOutputs run_transfer(const RunConfig& config, const std::filesystem::path& theta0);

struct SweepCell {
  std::string label;
  TrainMode mode = TrainMode::SvdTransfer;
  OptimizerHyper sigma;  // meaningful for svd cells only
};

/// Explicit sweep_cells, else sweep_modes × sweep_sigma_optimizers × sweep_sigma_lrs
/// (non-svd modes contribute one cell each).
std::vector<SweepCell> sweep_grid(const RunConfig& config);

struct SweepRow {
  SweepCell cell;
  double final_rel_err = 0.0;
  double best_rel_err = 0.0;
  std::string status;  // "ok", "diverged: ..." or "error: ..."
  std::filesystem::path directory;
};

struct SweepOutputs {
  std::filesystem::path summary;
  std::vector<SweepRow> rows;
};

/// One transfer per cell in out_dir/<label>/, all with the configured seed
/// so cells are paired, sharing out_dir/basis.svd. A failing cell is
/// recorded and the sweep continues. Writes out_dir/summary.csv.
SweepOutputs run_sweep(const RunConfig& config, const std::filesystem::path& theta0,
                       const std::function<void(const SweepRow&)>& progress = {});

struct EvaluateOutputs {
  ErrorReport report;
  std::filesystem::path log;
};

/// Relative error of a checkpoint on the configured problem and ε, using the
/// test set of the configured seed; appends a row to out_dir/evaluate.csv.
EvaluateOutputs run_evaluate(const RunConfig& config, const std::filesystem::path& checkpoint);

}  // namespace svdpinn::harness
