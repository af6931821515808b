#include "svdpinn/pde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "svdpinn/errors.hpp"
#include "svdpinn/sampling.hpp"

namespace svdpinn {

std::string_view to_string(ProblemKind kind) {
  switch (kind) {
    case ProblemKind::LinearParabolic:
      return "parabolic";
    case ProblemKind::AllenCahn:
      return "allen_cahn";
  }
  return "unknown";
}

ProblemKind parse_problem_kind(std::string_view name) {
  if (name == "parabolic") return ProblemKind::LinearParabolic;
  if (name == "allen_cahn") return ProblemKind::AllenCahn;
  throw ConfigError("unknown problem '" + std::string(name) + "' (expected parabolic|allen_cahn)");
}

PdeProblem::PdeProblem(std::size_t dim, double epsilon) : dim_(dim), epsilon_(epsilon) {
  if (dim == 0) throw ConfigError("problem dimension must be >= 1");
  if (!std::isfinite(epsilon)) throw ConfigError("epsilon must be finite");
}

void PdeProblem::check_point(std::span<const double> x) const {
  if (x.size() != dim_) {
    throw DimensionError("point has " + std::to_string(x.size()) + " coordinates, problem is " +
                         std::to_string(dim_) + "-d");
  }
}

namespace {

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double xi : x) s += xi * xi;
  return std::sqrt(s);
}

void require_off_origin(double rho) {
  if (rho < kShellRadius) throw SingularPointError("point within 1e-8 of the origin");
}

}  // namespace

// ---- linear parabolic ------------------------------------------------------
//
// With ρ = ‖x‖, s = √(1−t):
//   u_t = u·(−ρ/(2s) − ε),  ∇u = u·s·x/ρ,  Δu = u·(s² + s(d−1)/ρ)
//   ∇a = x/(2ρ),  ∇a·∇u = u·s/2

double LinearParabolic::diffusivity(std::span<const double> x) { return 1.0 + 0.5 * norm(x); }

double LinearParabolic::exact_value(double t, std::span<const double> x) const {
  check_point(x);
  return std::exp(norm(x) * std::sqrt(1.0 - t) + epsilon() * (1.0 - t));
}

JetSample LinearParabolic::exact_jet(double t, std::span<const double> x,
                                     std::span<double> grad_out) const {
  check_point(x);
  const double rho = norm(x);
  require_off_origin(rho);
  const double s = std::sqrt(1.0 - t);
  const double u = std::exp(rho * s + epsilon() * (1.0 - t));
  const double dims = static_cast<double>(dim());
  for (std::size_t j = 0; j < dim(); ++j) grad_out[j] = u * s * x[j] / rho;
  JetSample jet;
  jet.value = u;
  jet.dt = u * (-rho / (2.0 * s) - epsilon());
  jet.grad_x = grad_out;
  jet.laplacian_x = u * (s * s + s * (dims - 1.0) / rho);
  return jet;
}

double LinearParabolic::forcing(double t, std::span<const double> x) const {
  check_point(x);
  const double rho = norm(x);
  require_off_origin(rho);
  const double s = std::sqrt(1.0 - t);
  const double u = std::exp(rho * s + epsilon() * (1.0 - t));
  const double dims = static_cast<double>(dim());
  const double a = 1.0 + 0.5 * rho;
  const double ut = u * (-rho / (2.0 * s) - epsilon());
  const double lap = u * (s * s + s * (dims - 1.0) / rho);
  const double grad_a_dot_grad_u = 0.5 * u * s;
  return ut - a * lap - grad_a_dot_grad_u;
}

double LinearParabolic::interior_residual(const JetSample& jet, double t,
                                          std::span<const double> x,
                                          JetSensitivity* sens) const {
  check_point(x);
  const double rho = norm(x);
  require_off_origin(rho);
  const double a = 1.0 + 0.5 * rho;
  double grad_term = 0.0;
  for (std::size_t j = 0; j < dim(); ++j) grad_term += x[j] / (2.0 * rho) * jet.grad_x[j];
  if (sens != nullptr) {
    sens->value = 0.0;
    sens->dt = 1.0;
    sens->laplacian_x = -a;
    for (std::size_t j = 0; j < dim(); ++j) sens->grad_x[j] = -x[j] / (2.0 * rho);
  }
  return jet.dt - a * jet.laplacian_x - grad_term - forcing(t, x);
}

// ---- Allen–Cahn ------------------------------------------------------------
//
// u = e^{−t}·q(ρ) with w = 1−ρ, c = π/2, q = sin(c·w^2.5) + ε·sin(c·w).
// Radial calculus: ∇u = e^{−t}·q'(ρ)·x/ρ, Δu = e^{−t}·(q'' + (d−1)·q'/ρ).

namespace {

constexpr double kHalfPi = 0.5 * std::numbers::pi;

struct RadialProfile {
  double q, dq, d2q;
};

RadialProfile allen_cahn_profile(double rho, double eps) {
  const double w = std::max(0.0, 1.0 - rho);
  const double w15 = std::pow(w, 1.5);
  const double w25 = w15 * w;
  const double arg = kHalfPi * w25;
  const double inner = 2.5 * kHalfPi * w15;  // d(arg)/dw
  RadialProfile p;
  p.q = std::sin(arg) + eps * std::sin(kHalfPi * w);
  // d/dρ = −d/dw
  p.dq = -(std::cos(arg) * inner + eps * kHalfPi * std::cos(kHalfPi * w));
  p.d2q = -std::sin(arg) * inner * inner + std::cos(arg) * 2.5 * 1.5 * kHalfPi * std::sqrt(w) -
          eps * kHalfPi * kHalfPi * std::sin(kHalfPi * w);
  return p;
}

void require_off_sphere(double rho) {
  if (std::abs(1.0 - rho) < kShellRadius) {
    throw SingularPointError("derivatives requested within 1e-8 of the unit sphere");
  }
}

}  // namespace

double AllenCahn::exact_value(double t, std::span<const double> x) const {
  check_point(x);
  return std::exp(-t) * allen_cahn_profile(norm(x), epsilon()).q;
}

JetSample AllenCahn::exact_jet(double t, std::span<const double> x,
                               std::span<double> grad_out) const {
  check_point(x);
  const double rho = norm(x);
  require_off_origin(rho);
  require_off_sphere(rho);
  const auto prof = allen_cahn_profile(rho, epsilon());
  const double decay = std::exp(-t);
  const double dims = static_cast<double>(dim());
  for (std::size_t j = 0; j < dim(); ++j) grad_out[j] = decay * prof.dq * x[j] / rho;
  JetSample jet;
  jet.value = decay * prof.q;
  jet.dt = -jet.value;
  jet.grad_x = grad_out;
  jet.laplacian_x = decay * (prof.d2q + (dims - 1.0) * prof.dq / rho);
  return jet;
}

double AllenCahn::forcing(double t, std::span<const double> x) const {
  check_point(x);
  const double rho = norm(x);
  require_off_origin(rho);
  require_off_sphere(rho);
  const auto prof = allen_cahn_profile(rho, epsilon());
  const double decay = std::exp(-t);
  const double dims = static_cast<double>(dim());
  const double u = decay * prof.q;
  const double lap = decay * (prof.d2q + (dims - 1.0) * prof.dq / rho);
  return -u - lap - u + u * u * u;
}

double AllenCahn::interior_residual(const JetSample& jet, double t, std::span<const double> x,
                                    JetSensitivity* sens) const {
  const double u = jet.value;
  if (sens != nullptr) {
    sens->value = -1.0 + 3.0 * u * u;
    sens->dt = 1.0;
    sens->laplacian_x = -1.0;
    std::fill(sens->grad_x.begin(), sens->grad_x.end(), 0.0);
  }
  return jet.dt - jet.laplacian_x - u + u * u * u - forcing(t, x);
}

std::unique_ptr<PdeProblem> linear_parabolic(std::size_t dim, double epsilon) {
  return std::make_unique<LinearParabolic>(dim, epsilon);
}

std::unique_ptr<PdeProblem> allen_cahn(std::size_t dim, double epsilon) {
  return std::make_unique<AllenCahn>(dim, epsilon);
}

std::unique_ptr<PdeProblem> make_problem(ProblemKind kind, std::size_t dim, double epsilon) {
  switch (kind) {
    case ProblemKind::LinearParabolic:
      return linear_parabolic(dim, epsilon);
    case ProblemKind::AllenCahn:
      return allen_cahn(dim, epsilon);
  }
  throw ConfigError("unknown problem kind");
}

double rhs_consistency_check(const PdeProblem& problem, std::size_t points) {
  const std::size_t d = problem.dim();
  auto rng = CounterRng::stream(0x5eed, "rhs-consistency");
  const SampleBatch interior = sample_interior(points, d, rng);
  const SampleBatch boundary = sample_boundary(points, d, rng);
  const SampleBatch initial = sample_initial(points, d, rng);

  std::vector<double> grad(d);
  double worst = 0.0;
  for (std::size_t i = 0; i < interior.count(); ++i) {
    const auto x = interior.point(i);
    const JetSample jet = problem.exact_jet(interior.times[i], x, grad);
    worst = std::max(worst,
                     std::abs(problem.interior_residual(jet, interior.times[i], x, nullptr)));
  }
  for (std::size_t i = 0; i < boundary.count(); ++i) {
    const auto x = boundary.point(i);
    const double u = problem.exact_value(boundary.times[i], x);
    worst = std::max(worst, std::abs(problem.boundary_residual(u, boundary.times[i], x)));
  }
  for (std::size_t i = 0; i < initial.count(); ++i) {
    const auto x = initial.point(i);
    const double u = problem.exact_value(0.0, x);
    worst = std::max(worst, std::abs(problem.initial_residual(u, x)));
  }
  return worst;
}

}  // namespace svdpinn
