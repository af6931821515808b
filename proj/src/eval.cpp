#include "svdpinn/eval.hpp"

#include <cmath>

#include "svdpinn/errors.hpp"

namespace svdpinn {

double relative_error(std::span<const double> predictions, std::span<const double> exact) {
  if (predictions.size() != exact.size()) {
    throw DimensionError("relative_error: " + std::to_string(predictions.size()) +
                         " predictions vs " + std::to_string(exact.size()) + " exact values");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < exact.size(); ++i) {
    const double e = predictions[i] - exact[i];
    num += e * e;
    den += exact[i] * exact[i];
  }
  if (!(den > 0.0)) throw NumericError("relative_error: exact values are all zero");
  const double err = std::sqrt(num / den);
  if (std::isnan(err)) throw NumericError("relative_error: NaN");
  return err;
}

std::vector<double> exact_values(const PdeProblem& problem, const SampleBatch& test) {
  std::vector<double> y(test.count());
  for (std::size_t i = 0; i < test.count(); ++i) y[i] = problem.exact_value(test.times[i], test.point(i));
  return y;
}

ErrorReport evaluate(const NetworkParams& params, const PdeProblem& problem,
                     const SampleBatch& test, std::uint64_t iteration) {
  if (test.empty()) throw ConfigError("evaluate: empty test batch");
  if (params.output_dim() != 1) throw DimensionError("evaluate: scalar-output networks only");
  const std::vector<double> predicted = forward_batch(params, test);
  ErrorReport report;
  report.relative_error = relative_error(predicted, exact_values(problem, test));
  report.n_points = test.count();
  report.problem = std::string(to_string(problem.kind()));
  report.epsilon = problem.epsilon();
  report.iteration = iteration;
  return report;
}

ParamCount param_count(StorageScheme scheme, std::uint64_t n, std::uint64_t m, std::uint64_t r,
                       std::uint64_t d) {
  if (n == 0 || m == 0 || r == 0 || d == 0) throw ConfigError("param_count: arguments must be positive");
  ParamCount c;
  if (scheme == StorageScheme::Standard) {
    c.formula_per_model = m * m + (r + d + 1) * m + r;
    c.shared = 0;
  } else {
    c.formula_per_model = (r + d + 2) * m + r;
    c.shared = 2 * m * m;
  }
  c.formula_total = n * c.formula_per_model + c.shared;
  c.stored_per_model = c.formula_per_model + m;
  c.stored_total = n * c.stored_per_model + c.shared;
  return c;
}

}  // namespace svdpinn
