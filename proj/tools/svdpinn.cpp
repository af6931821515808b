#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "svdpinn/errors.hpp"
#include "svdpinn/eval.hpp"
#include "svdpinn/harness/commands.hpp"

namespace fs = std::filesystem;
using namespace svdpinn;
using namespace svdpinn::harness;

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kUsage = 2, kNumeric = 3 };

struct CommonArgs {
  std::string config;
  std::vector<std::string> overrides;
  bool progress = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config, "key=value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", args.overrides, "override one key (repeatable), e.g. --set iters=200");
  cmd->add_flag("-p,--progress", args.progress, "print every logged record to stderr");
}

RunConfig resolve(const CommonArgs& args) {
  std::optional<fs::path> file;
  if (!args.config.empty()) file = args.config;
  return load_config(file, args.overrides);
}

void print_record(const char* tag, const RunRecord& r) {
  std::fprintf(stderr, "[%s] iter %6llu  loss %.6e  rel_err %.6e  %.0f ms\n", tag,
               static_cast<unsigned long long>(r.iteration), r.loss.total, r.rel_err, r.wall_ms);
}

void print_param_counts(std::uint64_t n, std::uint64_t m, std::uint64_t r, std::uint64_t d_in) {
  std::printf("n=%llu m=%llu r=%llu d_in=%llu\n", static_cast<unsigned long long>(n),
              static_cast<unsigned long long>(m), static_cast<unsigned long long>(r),
              static_cast<unsigned long long>(d_in));
  std::printf("%-9s %16s %14s %16s %14s %10s\n", "scheme", "formula/model", "formula_total", "stored/model",
              "stored_total", "shared");
  for (auto scheme : {StorageScheme::Standard, StorageScheme::SvdShared}) {
    const ParamCount c = param_count(scheme, n, m, r, d_in);
    std::printf("%-9s %16llu %14llu %16llu %14llu %10llu\n",
                scheme == StorageScheme::Standard ? "standard" : "svd",
                static_cast<unsigned long long>(c.formula_per_model), static_cast<unsigned long long>(c.formula_total),
                static_cast<unsigned long long>(c.stored_per_model), static_cast<unsigned long long>(c.stored_total),
                static_cast<unsigned long long>(c.shared));
  }
  std::printf("stored counts include the second hidden bias (m entries per model), which the formulas omit\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Physics-informed network training with transfer over a singular-value parameterization"};
  app.require_subcommand(1);
  std::string keys;
  for (const auto& k : config_keys()) keys += (keys.empty() ? "" : " ") + k;
  app.footer("Configuration keys: " + keys + "\nDefault out_dir: $" + std::string(kOutputRootEnv) + " or ./runs");

  CommonArgs pre_args, xfer_args, sweep_args, eval_args;
  std::string theta0_xfer, theta0_sweep, eval_checkpoint, audit_checkpoint;
  std::uint64_t pc_n = 10, pc_m = 100, pc_r = 1, pc_d_in = 11;

  auto* pre = app.add_subcommand("pretrain", "train from scratch at epsilon = 0; writes theta0.ckpt, pretrain.csv");
  add_common(pre, pre_args);

  auto* xfer = app.add_subcommand("transfer", "train from theta0 at the configured epsilon and mode");
  add_common(xfer, xfer_args);
  xfer->add_option("--theta0", theta0_xfer, "pretrained checkpoint (default <out_dir>/theta0.ckpt)");

  auto* sweep = app.add_subcommand("sweep", "one transfer per grid cell; writes summary.csv");
  add_common(sweep, sweep_args);
  sweep->add_option("--theta0", theta0_sweep, "pretrained checkpoint (default <out_dir>/theta0.ckpt)");

  auto* eval = app.add_subcommand("evaluate", "relative error of a checkpoint; appends evaluate.csv");
  add_common(eval, eval_args);
  eval->add_option("--checkpoint", eval_checkpoint, "checkpoint to evaluate")->required();

  auto* pc = app.add_subcommand("param-count", "storage formulas for n models");
  pc->add_option("-n,--models", pc_n, "number of models")->check(CLI::PositiveNumber);
  pc->add_option("-m,--width", pc_m, "hidden width")->check(CLI::PositiveNumber);
  pc->add_option("-r,--outputs", pc_r, "output dimension")->check(CLI::PositiveNumber);
  pc->add_option("-d,--d-in", pc_d_in, "network input dimension")->check(CLI::PositiveNumber);
  pc->add_option("--checkpoint", audit_checkpoint, "also count the entries serialized in this checkpoint")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*pre) {
      const RunConfig cfg = resolve(pre_args);
      std::string tag = "pretrain";
      const auto out = run_pretrain(cfg);
      if (pre_args.progress) {
        for (const auto& r : out.result.records) print_record(tag.c_str(), r);
      }
      const auto& last = out.result.records.back();
      std::printf("pretrain %s d=%zu m=%zu: %llu iterations, rel_err %.6e\n  %s\n  %s\n", cfg.problem.c_str(), cfg.dim,
                  cfg.width, static_cast<unsigned long long>(last.iteration), last.rel_err,
                  out.checkpoint.string().c_str(), out.log.string().c_str());
      return kOk;
    }
    if (*xfer) {
      const RunConfig cfg = resolve(xfer_args);
      const fs::path theta0 = theta0_xfer.empty() ? cfg.out_dir / "theta0.ckpt" : fs::path(theta0_xfer);
      const auto out = run_transfer(cfg, theta0);
      if (xfer_args.progress) {
        for (const auto& r : out.result.records) print_record("transfer", r);
      }
      const auto& recs = out.result.records;
      std::printf("transfer %s eps=%s mode=%s: rel_err %.6e -> %.6e\n  %s\n  %s\n", cfg.problem.c_str(),
                  format_number(cfg.epsilon).c_str(), cfg.mode.c_str(), recs.front().rel_err, recs.back().rel_err,
                  out.checkpoint.string().c_str(), out.log.string().c_str());
      if (!out.basis.empty()) {
        std::printf("  %s (%s)\n", out.basis.string().c_str(), out.basis_created ? "created" : "reused");
      }
      if (out.result.diverged) {
        std::fprintf(stderr, "diverged: %s\n", out.result.diagnostic.c_str());
        return kNumeric;
      }
      return kOk;
    }
    if (*sweep) {
      const RunConfig cfg = resolve(sweep_args);
      const fs::path theta0 = theta0_sweep.empty() ? cfg.out_dir / "theta0.ckpt" : fs::path(theta0_sweep);
      bool all_ok = true;
      const auto out = run_sweep(cfg, theta0, [&](const SweepRow& row) {
        all_ok = all_ok && row.status == "ok";
        std::printf("%-24s final %.6e  best %.6e  %s\n", row.cell.label.c_str(), row.final_rel_err,
                    row.best_rel_err, row.status.c_str());
        std::fflush(stdout);
      });
      std::printf("%s\n", out.summary.string().c_str());
      return all_ok ? kOk : kNumeric;
    }
    if (*eval) {
      const RunConfig cfg = resolve(eval_args);
      const auto out = run_evaluate(cfg, eval_checkpoint);
      std::printf("%s eps=%s iteration=%llu n=%zu rel_err=%.10e\n", out.report.problem.c_str(),
                  format_number(cfg.epsilon).c_str(), static_cast<unsigned long long>(out.report.iteration),
                  out.report.n_points, out.report.relative_error);
      return kOk;
    }
    if (*pc) {
      print_param_counts(pc_n, pc_m, pc_r, pc_d_in);
      if (!audit_checkpoint.empty()) {
        const StoredCount s = count_stored_parameters(audit_checkpoint);
        std::printf("%s: %llu per-model entries, %llu shared basis entries\n", audit_checkpoint.c_str(),
                    static_cast<unsigned long long>(s.per_model), static_cast<unsigned long long>(s.shared));
      }
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}
