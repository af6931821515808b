#include "svdpinn/sampling.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace svdpinn {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t splitmix_finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Gaussian direction, redrawn in the (measure-zero) event of a null vector.
void gaussian_direction(std::span<double> out, CounterRng& rng) {
  for (;;) {
    double norm_sq = 0.0;
    for (double& g : out) {
      g = rng.gaussian();
      norm_sq += g * g;
    }
    if (norm_sq > 0.0) {
      const double inv = 1.0 / std::sqrt(norm_sq);
      for (double& g : out) g *= inv;
      return;
    }
  }
}

void fill_ball(SampleBatch& batch, std::size_t i, CounterRng& rng, bool reject_outer) {
  auto x = std::span<double>(batch.points).subspan(i * batch.dim, batch.dim);
  const double inv_dim = 1.0 / static_cast<double>(batch.dim);
  for (;;) {
    gaussian_direction(x, rng);
    const double radius = std::pow(rng.uniform(), inv_dim);
    if (radius <= kShellRadius) continue;
    if (reject_outer && radius >= 1.0 - kShellRadius) continue;
    for (double& xi : x) xi *= radius;
    return;
  }
}

SampleBatch ball_batch(SampleKind kind, std::size_t n, std::size_t dim, CounterRng& rng,
                       bool zero_time) {
  SampleBatch batch;
  batch.kind = kind;
  batch.dim = dim;
  batch.times.resize(n);
  batch.points.resize(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    batch.times[i] = zero_time ? 0.0 : rng.uniform();
    fill_ball(batch, i, rng, kind != SampleKind::Initial);
  }
  return batch;
}

}  // namespace

CounterRng CounterRng::stream(std::uint64_t seed, std::string_view label) {
  return CounterRng(splitmix_finalize(fnv1a64(label) ^ splitmix_finalize(seed + kGolden)));
}

CounterRng::result_type CounterRng::operator()() {
  ++counter_;
  return splitmix_finalize(key_ + counter_ * kGolden);
}

double CounterRng::uniform() {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::gaussian() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view text, std::uint64_t basis) {
  return fnv1a64(std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()),
                 basis);
}

void SampleBatch::append(const SampleBatch& other) {
  times.insert(times.end(), other.times.begin(), other.times.end());
  points.insert(points.end(), other.points.begin(), other.points.end());
}

SampleBatch sample_interior(std::size_t n, std::size_t dim, CounterRng& rng) {
  return ball_batch(SampleKind::Interior, n, dim, rng, false);
}

SampleBatch sample_initial(std::size_t n, std::size_t dim, CounterRng& rng) {
  return ball_batch(SampleKind::Initial, n, dim, rng, true);
}

SampleBatch sample_test(std::size_t n, std::size_t dim, CounterRng& rng) {
  return ball_batch(SampleKind::Test, n, dim, rng, false);
}

SampleBatch sample_boundary(std::size_t n, std::size_t dim, CounterRng& rng) {
  SampleBatch batch;
  batch.kind = SampleKind::Boundary;
  batch.dim = dim;
  batch.times.resize(n);
  batch.points.resize(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    batch.times[i] = rng.uniform();
    gaussian_direction(std::span<double>(batch.points).subspan(i * dim, dim), rng);
  }
  return batch;
}

TrainingBatches draw_training_batches(std::uint64_t seed, std::size_t dim,
                                      const SampleCounts& counts, std::uint64_t round) {
  const std::string suffix = round == 0 ? std::string() : "/" + std::to_string(round);
  auto interior_rng = CounterRng::stream(seed, "interior" + suffix);
  auto boundary_rng = CounterRng::stream(seed, "boundary" + suffix);
  auto initial_rng = CounterRng::stream(seed, "initial" + suffix);
  return {sample_interior(counts.interior, dim, interior_rng),
          sample_boundary(counts.boundary, dim, boundary_rng),
          sample_initial(counts.initial, dim, initial_rng)};
}

}  // namespace svdpinn
