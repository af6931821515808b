#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace svdpinn {

enum class OptimizerKind { GD, RMSProp, Adam };

std::string_view to_string(OptimizerKind kind);
/// "gd", "rmsprop" or "adam"; throws ConfigError otherwise.
OptimizerKind parse_optimizer_kind(std::string_view name);

struct OptimizerHyper {
  OptimizerKind kind = OptimizerKind::Adam;
  double lr = 1e-3;
  double beta1 = 0.9;    // Adam first moment
  double beta2 = 0.999;  // Adam second moment
  double rho = 0.9;      // RMSProp decay
  double eps = 1e-8;
};

/// Mutable blocks of one parameter group with their gradients.
struct ParamGroup {
  std::string name;
  std::vector<std::span<double>> params;
  std::vector<std::span<const double>> grads;

  std::size_t size() const;
};

/// Accumulators are flat over the concatenated blocks of the group they
/// were created for.
struct OptimizerState {
  OptimizerHyper hyper;
  std::uint64_t step_count = 0;
  std::vector<double> first_moment;   // Adam
  std::vector<double> second_moment;  // RMSProp, Adam

  static OptimizerState create(const OptimizerHyper& hyper, std::size_t n);
};

/// One update of `group` in place. Throws NumericError naming the group if a
/// gradient entry is not finite, DimensionError on shape mismatch.
void step(OptimizerState& state, ParamGroup& group);

/// max(sigma, 0) elementwise, in place.
void project_nonnegative(std::span<double> sigma);
[[nodiscard]] std::vector<double> projected_nonnegative(std::vector<double> sigma);

}  // namespace svdpinn
