#include "svdpinn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "svdpinn/errors.hpp"

namespace svdpinn {

namespace {

constexpr std::size_t kChunk = 64;

void check_inputs(const NetworkParams& params, const PdeProblem& problem,
                  const TrainingBatches& batches, double nu) {
  if (!(nu > 0.0) || !std::isfinite(nu)) throw ConfigError("nu must be a positive finite number");
  if (batches.interior.empty() || batches.boundary.empty() || batches.initial.empty()) {
    throw ConfigError("interior, boundary and initial batches must all be non-empty");
  }
  if (params.output_dim() != problem.output_dim()) {
    throw DimensionError("network output dimension " + std::to_string(params.output_dim()) +
                         " does not match the problem's " + std::to_string(problem.output_dim()));
  }
  if (params.input_dim() != problem.dim() + 1) {
    throw DimensionError("network input dimension " + std::to_string(params.input_dim()) +
                         " does not match (t, x) for a " + std::to_string(problem.dim()) +
                         "-d problem");
  }
}

LossReport evaluate(const NetworkParams& params, const PdeProblem& problem,
                    const TrainingBatches& batches, double nu, ParamGrad* grad) {
  check_inputs(params, problem, batches, nu);
  const std::size_t d = problem.dim();
  const Matrix w1 = params.w1.effective();
  JetEngine engine(params, w1);
  JetBatch cot;
  std::vector<double> sens_grad(d);

  LossReport report;
  report.nu = nu;

  {
    const SampleBatch& batch = batches.interior;
    const double scale = nu / static_cast<double>(batch.count());
    double sum = 0.0;
    for (std::size_t begin = 0; begin < batch.count(); begin += kChunk) {
      const std::size_t end = std::min(batch.count(), begin + kChunk);
      const JetBatch& jets = engine.forward(batch, begin, end, JetOrder::Full);
      if (grad != nullptr && cot.count != end - begin) cot = JetBatch(end - begin, 1, d);
      for (std::size_t s = 0; s < end - begin; ++s) {
        const std::size_t i = begin + s;
        JetSample jet{jets.value[s], jets.dt[s],
                      std::span<const double>(jets.grad_x).subspan(s * d, d),
                      jets.laplacian_x[s]};
        JetSensitivity sens;
        sens.grad_x = sens_grad;
        const double res = problem.interior_residual(jet, batch.times[i], batch.point(i),
                                                     grad != nullptr ? &sens : nullptr);
        sum += 0.5 * res * res;
        if (grad != nullptr) {
          const double w = scale * res;
          cot.value[s] = w * sens.value;
          cot.dt[s] = w * sens.dt;
          for (std::size_t j = 0; j < d; ++j) cot.grad_x[s * d + j] = w * sens_grad[j];
          cot.laplacian_x[s] = w * sens.laplacian_x;
        }
      }
      if (grad != nullptr) engine.backward(cot, *grad);
    }
    report.interior = sum / static_cast<double>(batch.count());
  }

  auto value_term = [&](const SampleBatch& batch, bool initial) {
    const double scale = 1.0 / static_cast<double>(batch.count());
    double sum = 0.0;
    for (std::size_t begin = 0; begin < batch.count(); begin += kChunk) {
      const std::size_t end = std::min(batch.count(), begin + kChunk);
      const JetBatch& jets = engine.forward(batch, begin, end, JetOrder::ValueOnly);
      if (grad != nullptr && cot.count != end - begin) cot = JetBatch(end - begin, 1, d);
      for (std::size_t s = 0; s < end - begin; ++s) {
        const std::size_t i = begin + s;
        const double res =
            initial ? problem.initial_residual(jets.value[s], batch.point(i))
                    : problem.boundary_residual(jets.value[s], batch.times[i], batch.point(i));
        sum += 0.5 * res * res;
        if (grad != nullptr) cot.value[s] = scale * res;
      }
      if (grad != nullptr) engine.backward(cot, *grad);
    }
    return sum / static_cast<double>(batch.count());
  };
  report.boundary = value_term(batches.boundary, false);
  report.initial = value_term(batches.initial, true);
  report.total = nu * report.interior + report.boundary + report.initial;

  if (grad != nullptr) project_hidden_gradient(params, *grad);
  return report;
}

}  // namespace

LossReport pinn_loss(const NetworkParams& params, const PdeProblem& problem,
                     const TrainingBatches& batches, double nu) {
  return evaluate(params, problem, batches, nu, nullptr);
}

LossAndGrad pinn_loss_grad(const NetworkParams& params, const PdeProblem& problem,
                           const TrainingBatches& batches, double nu) {
  LossAndGrad out{{}, ParamGrad::zeros_like(params)};
  out.report = evaluate(params, problem, batches, nu, &out.grad);
  return out;
}

}  // namespace svdpinn
