#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "svdpinn/network.hpp"
#include "svdpinn/pde.hpp"
#include "svdpinn/sampling.hpp"

namespace svdpinn {

/// sqrt(Σ(ŷ−y)² / Σy²). Throws DimensionError on length mismatch and
/// NumericError when Σy² is zero.
double relative_error(std::span<const double> predictions, std::span<const double> exact);

struct ErrorReport {
  double relative_error = 0.0;
  std::size_t n_points = 0;
  std::string problem;
  double epsilon = 0.0;
  std::uint64_t iteration = 0;
};

ErrorReport evaluate(const NetworkParams& params, const PdeProblem& problem,
                     const SampleBatch& test, std::uint64_t iteration = 0);

/// Exact solution values at the test points.
std::vector<double> exact_values(const PdeProblem& problem, const SampleBatch& test);

enum class StorageScheme { Standard, SvdShared };

/// Parameter counts for storing `n_pdes` networks. `formula_*` are the
/// published accounting m² + (r+d+1)·m + r per network, and
/// n·((r+d+2)·m + r) + 2m² for shared singular bases, with d the network
/// input dimension. `stored_*` count what a checkpoint actually holds: both
/// hidden bias vectors are stored, so each network carries m more values
/// than the formula.
struct ParamCount {
  std::uint64_t formula_per_model = 0;
  std::uint64_t formula_total = 0;
  std::uint64_t stored_per_model = 0;
  std::uint64_t stored_total = 0;
  std::uint64_t shared = 0;  // 2m² for SvdShared, 0 otherwise
};

ParamCount param_count(StorageScheme scheme, std::uint64_t n_pdes, std::uint64_t width,
                       std::uint64_t output_dim, std::uint64_t input_dim);

}  // namespace svdpinn
