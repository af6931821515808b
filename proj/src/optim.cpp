#include "svdpinn/optim.hpp"

#include <algorithm>
#include <cmath>

#include "svdpinn/errors.hpp"

namespace svdpinn {

std::string_view to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::GD:
      return "gd";
    case OptimizerKind::RMSProp:
      return "rmsprop";
    case OptimizerKind::Adam:
      return "adam";
  }
  return "unknown";
}

OptimizerKind parse_optimizer_kind(std::string_view name) {
  if (name == "gd") return OptimizerKind::GD;
  if (name == "rmsprop") return OptimizerKind::RMSProp;
  if (name == "adam") return OptimizerKind::Adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected gd|rmsprop|adam)");
}

std::size_t ParamGroup::size() const {
  std::size_t n = 0;
  for (auto p : params) n += p.size();
  return n;
}

OptimizerState OptimizerState::create(const OptimizerHyper& hyper, std::size_t n) {
  OptimizerState s;
  s.hyper = hyper;
  if (hyper.kind == OptimizerKind::Adam) s.first_moment.assign(n, 0.0);
  if (hyper.kind != OptimizerKind::GD) s.second_moment.assign(n, 0.0);
  return s;
}

void step(OptimizerState& state, ParamGroup& group) {
  if (group.params.size() != group.grads.size()) {
    throw DimensionError("group '" + group.name + "': parameter and gradient block counts differ");
  }
  const std::size_t n = group.size();
  const auto& h = state.hyper;
  if ((h.kind == OptimizerKind::Adam && state.first_moment.size() != n) ||
      (h.kind != OptimizerKind::GD && state.second_moment.size() != n)) {
    throw DimensionError("group '" + group.name + "': optimizer state has the wrong size");
  }
  for (std::size_t b = 0; b < group.params.size(); ++b) {
    if (group.params[b].size() != group.grads[b].size()) {
      throw DimensionError("group '" + group.name + "': block " + std::to_string(b) +
                           " parameter/gradient sizes differ");
    }
    for (double g : group.grads[b]) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in group '" + group.name + "'");
    }
  }

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(h.beta1, t);
  const double bias2 = 1.0 - std::pow(h.beta2, t);

  std::size_t offset = 0;
  for (std::size_t b = 0; b < group.params.size(); ++b) {
    auto theta = group.params[b];
    auto grad = group.grads[b];
    for (std::size_t i = 0; i < theta.size(); ++i, ++offset) {
      const double g = grad[i];
      switch (h.kind) {
        case OptimizerKind::GD:
          theta[i] -= h.lr * g;
          break;
        case OptimizerKind::RMSProp: {
          double& v = state.second_moment[offset];
          v = h.rho * v + (1.0 - h.rho) * g * g;
          theta[i] -= h.lr * g / (std::sqrt(v) + h.eps);
          break;
        }
        case OptimizerKind::Adam: {
          double& m = state.first_moment[offset];
          double& v = state.second_moment[offset];
          m = h.beta1 * m + (1.0 - h.beta1) * g;
          v = h.beta2 * v + (1.0 - h.beta2) * g * g;
          theta[i] -= h.lr * (m / bias1) / (std::sqrt(v / bias2) + h.eps);
          break;
        }
      }
    }
  }
}

void project_nonnegative(std::span<double> sigma) {
  for (double& s : sigma) s = std::max(s, 0.0);
}

std::vector<double> projected_nonnegative(std::vector<double> sigma) {
  project_nonnegative(std::span<double>(sigma));
  return sigma;
}

}  // namespace svdpinn
