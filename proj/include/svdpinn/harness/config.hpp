#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "svdpinn/pde.hpp"
#include "svdpinn/transfer.hpp"

namespace svdpinn::harness {

/// Environment variable naming the default output root (fallback "./runs").
inline constexpr const char* kOutputRootEnv = "SVDPINN_OUTPUT_ROOT";

/// Flat run configuration. Keys in a config file use the field names.
struct RunConfig {
  std::string problem = "parabolic";
  std::size_t dim = 2;
  double epsilon = 0.0;
  std::size_t width = 64;
  double nu = 1.0;
  std::uint64_t seed = 0;
  std::size_t n_interior = 4000;
  std::size_t n_boundary = 1000;
  std::size_t n_initial = 1000;
  std::size_t n_test = 4096;
  std::size_t resample_every = 0;
  std::size_t iters = 5000;
  std::string mode = "svd";
  std::string sigma_optimizer = "gd";
  double sigma_lr = 0.1;
  double main_lr = 1e-3;
  std::size_t log_every = 10;
  std::filesystem::path out_dir;

  // sweep grid: either an explicit cell list ("svd:gd:0.1,frozen_w1")
  // or the Cartesian product of the three lists below
  std::string sweep_cells;
  std::string sweep_modes = "svd,frozen_w1";
  std::string sweep_sigma_optimizers = "gd,rmsprop,adam";
  std::string sweep_sigma_lrs = "0.1,0.01,0.001";

  /// Keys given explicitly by a file or an override.
  std::set<std::string> explicit_keys;
};

/// Defaults, with out_dir taken from the environment.
RunConfig default_config();

/// All recognised keys, in documentation order.
const std::vector<std::string>& config_keys();

/// Sets one key. Throws ConfigError naming the key on an unknown key or a
/// malformed value.
void set_value(RunConfig& config, std::string_view key, std::string_view value);

/// Parses "key=value" lines; '#' starts a comment, blank lines are skipped.
/// `source` names the input in error messages.
void apply_text(RunConfig& config, std::string_view text, std::string_view source);

/// Defaults, then `file` (if any), then each "key=value" override in order.
/// Every offending key is reported in a single ConfigError.
RunConfig load_config(const std::optional<std::filesystem::path>& file,
                      const std::vector<std::string>& overrides);

/// Range and enum checks, one message per offending key.
std::vector<std::string> validation_problems(const RunConfig& config);
/// Throws ConfigError listing every validation problem.
void validate(const RunConfig& config);

TrainConfig train_config(const RunConfig& config);
std::unique_ptr<PdeProblem> problem_for(const RunConfig& config, double epsilon);

/// Hash of the fields that fix tensor shapes: problem, dim and width.
std::uint64_t structural_hash(std::string_view problem, std::size_t dim, std::size_t width);

/// Shortest decimal text that reads back to the same double ("0.5", "2", "1e-08").
std::string format_number(double value);

}  // namespace svdpinn::harness
