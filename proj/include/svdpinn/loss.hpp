#pragma once

#include "svdpinn/network.hpp"
#include "svdpinn/pde.hpp"
#include "svdpinn/sampling.hpp"

namespace svdpinn {

/// total = nu·interior + boundary + initial; each term is a batch mean of
/// ½·residual².
struct LossReport {
  double interior = 0.0;
  double boundary = 0.0;
  double initial = 0.0;
  double total = 0.0;
  double nu = 1.0;
};

struct LossAndGrad {
  LossReport report;
  ParamGrad grad;
};

LossReport pinn_loss(const NetworkParams& params, const PdeProblem& problem,
                     const TrainingBatches& batches, double nu);

/// Loss and its gradient with respect to every parameter block (sigma too
/// when the hidden weight is factored).
LossAndGrad pinn_loss_grad(const NetworkParams& params, const PdeProblem& problem,
                           const TrainingBatches& batches, double nu);

}  // namespace svdpinn
