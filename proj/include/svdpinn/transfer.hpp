#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "svdpinn/loss.hpp"
#include "svdpinn/network.hpp"
#include "svdpinn/optim.hpp"
#include "svdpinn/pde.hpp"
#include "svdpinn/sampling.hpp"

namespace svdpinn {

/// Which parameter blocks a run may update.
///   Full          everything
///   FrozenHidden  W₂ only
///   FrozenW1      everything except W₁
///   SvdTransfer   everything except the singular bases U, V of W₁
enum class TrainMode { Full, FrozenHidden, FrozenW1, SvdTransfer };

std::string_view to_string(TrainMode mode);
/// "full", "frozen_hidden", "frozen_w1" or "svd".
TrainMode parse_train_mode(std::string_view name);

struct TrainConfig {
  std::size_t iters = 5000;
  std::size_t log_every = 10;
  double nu = 1.0;
  double main_lr = 1e-3;
  OptimizerHyper sigma{OptimizerKind::GD, 1e-1};
  SampleCounts counts;
  std::size_t n_test = 4096;
  std::uint64_t seed = 0;
  /// Redraw the training sets every this many iterations; 0 keeps them fixed.
  std::size_t resample_every = 0;
  /// Leading singular values captured per record.
  std::size_t sigma_head = 16;
};

/// One logged row of a training run.
struct RunRecord {
  std::uint64_t iteration = 0;
  LossReport loss;
  double rel_err = 0.0;
  std::vector<double> sigma_head;
  double wall_ms = 0.0;
};

/// Everything needed to persist or resume a run.
struct TrainState {
  NetworkParams params;
  OptimizerState main_opt;
  std::optional<OptimizerState> sigma_opt;
  std::uint64_t seed = 0;
  std::uint64_t sample_round = 0;
  std::uint64_t iteration = 0;
};

struct TrainResult {
  TrainState state;
  std::vector<RunRecord> records;
  bool diverged = false;
  std::string diagnostic;
};

using RecordSink = std::function<void(const RunRecord&)>;

/// Test points shared by every run with the same seed.
SampleBatch make_test_batch(std::uint64_t seed, std::size_t dim, std::size_t n);

/// W₁ = U·diag(σ)·Vᵀ with U, V frozen. Params must hold a dense W₁.
NetworkParams svd_split(const NetworkParams& theta0);
/// Dense twin of a factored network (no-op for dense params).
NetworkParams densify(const NetworkParams& params);

/// Runs `config.iters` iterations of `mode` starting from `start`. One loss
/// gradient is evaluated per iteration at the iteration-start parameters;
/// the non-σ group is stepped first, then σ (followed by clipping at zero).
/// A non-finite loss stops the run with diverged = true and the state at the
/// last finite iterate.
TrainResult train(NetworkParams start, TrainMode mode, const PdeProblem& problem,
                  const TrainConfig& config, const RecordSink& sink = {});

/// Fresh Glorot-initialised network for `problem` seeded from `seed`.
NetworkParams initial_network(const PdeProblem& problem, std::size_t width, std::uint64_t seed);

/// Full training from initial_network(problem, width, config.seed). The
/// problem must be the ε = 0 member of its family. Throws NumericError if
/// the loss diverges.
TrainResult pretrain(const PdeProblem& problem, std::size_t width, const TrainConfig& config,
                     const RecordSink& sink = {});

/// train() from θ₀, splitting W₁ first when mode is SvdTransfer.
TrainResult transfer_train(const NetworkParams& theta0, TrainMode mode, const PdeProblem& problem,
                           const TrainConfig& config, const RecordSink& sink = {});

}  // namespace svdpinn
