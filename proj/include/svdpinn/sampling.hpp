#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

namespace svdpinn {

/// Counter-based generator: output i is a SplitMix64 hash of (key, i).
///
/// The whole state is the pair (key, counter), which makes it trivial to
/// persist and to split into independent labelled streams.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng() = default;
  CounterRng(std::uint64_t key, std::uint64_t counter = 0) : key_(key), counter_(counter) {}

  /// Stream for `label` under a master seed. Same (seed, label) always gives
  /// the same stream.
  static CounterRng stream(std::uint64_t seed, std::string_view label);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal (Box–Muller, one draw per call).
  double gaussian();

  std::uint64_t key() const noexcept { return key_; }
  std::uint64_t counter() const noexcept { return counter_; }

  friend bool operator==(const CounterRng&, const CounterRng&) = default;

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

std::uint64_t fnv1a64(std::span<const unsigned char> bytes,
                      std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis = 0xcbf29ce484222325ULL);

enum class SampleKind { Interior, Boundary, Initial, Test };

/// Collocation points on (0,1) x B^d. `points` is row-major n x dim.
struct SampleBatch {
  SampleKind kind = SampleKind::Interior;
  std::size_t dim = 0;
  std::vector<double> times;
  std::vector<double> points;

  std::size_t count() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }
  std::span<const double> point(std::size_t i) const { return {points.data() + i * dim, dim}; }

  void append(const SampleBatch& other);
};

/// Radii closer than this to the origin (and, for interior points, to the
/// unit sphere) are rejected.
inline constexpr double kShellRadius = 1e-8;

SampleBatch sample_interior(std::size_t n, std::size_t dim, CounterRng& rng);
SampleBatch sample_boundary(std::size_t n, std::size_t dim, CounterRng& rng);
SampleBatch sample_initial(std::size_t n, std::size_t dim, CounterRng& rng);
/// Interior points at mixed times, tagged as a test set.
SampleBatch sample_test(std::size_t n, std::size_t dim, CounterRng& rng);

struct TrainingBatches {
  SampleBatch interior;
  SampleBatch boundary;
  SampleBatch initial;
};

struct SampleCounts {
  std::size_t interior = 4000;
  std::size_t boundary = 1000;
  std::size_t initial = 1000;
};

/// Draws the three training sets from disjoint streams of one master seed.
/// `round` > 0 selects a fresh resampling round.
TrainingBatches draw_training_batches(std::uint64_t seed, std::size_t dim,
                                      const SampleCounts& counts, std::uint64_t round = 0);

}  // namespace svdpinn
