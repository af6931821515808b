#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace svdpinn {

/// Scalar jet at one point: u, ∂u/∂t, ∇ₓu, Δₓu.
struct JetSample {
  double value = 0.0;
  double dt = 0.0;
  std::span<const double> grad_x;
  double laplacian_x = 0.0;
};

/// Partial derivatives of a residual with respect to the jet components.
/// `grad_x` points into caller-owned storage of length d.
struct JetSensitivity {
  double value = 0.0;
  double dt = 0.0;
  std::span<double> grad_x;
  double laplacian_x = 0.0;
};

enum class ProblemKind { LinearParabolic, AllenCahn };

std::string_view to_string(ProblemKind kind);
/// Accepts "parabolic" and "allen_cahn"; throws ConfigError otherwise.
ProblemKind parse_problem_kind(std::string_view name);

/// Initial-boundary value problem on (0,1) x {‖x‖ < 1} whose right-hand sides
/// come from a closed-form exact solution u_ε. Output dimension is 1.
///
/// Residuals:
///   interior  D[u](t,x) - f_ε(t,x)
///   boundary  u(t,x) - g_ε(t,x)   on ‖x‖ = 1
///   initial   u(0,x) - h_ε(x)
class PdeProblem {
 public:
  PdeProblem(std::size_t dim, double epsilon);
  virtual ~PdeProblem() = default;

  virtual ProblemKind kind() const = 0;
  std::size_t dim() const noexcept { return dim_; }
  std::size_t output_dim() const noexcept { return 1; }
  double epsilon() const noexcept { return epsilon_; }

  /// Exact solution value; defined on the closed ball.
  virtual double exact_value(double t, std::span<const double> x) const = 0;
  /// Exact jet. Writes ∇ₓu into grad_out (length d). Throws
  /// SingularPointError where the radial derivatives are undefined.
  virtual JetSample exact_jet(double t, std::span<const double> x,
                              std::span<double> grad_out) const = 0;

  /// f_ε.
  virtual double forcing(double t, std::span<const double> x) const = 0;
  double boundary_data(double t, std::span<const double> x) const { return exact_value(t, x); }
  double initial_data(std::span<const double> x) const { return exact_value(0.0, x); }

  /// Interior residual; if `sens` is non-null also writes its partials with
  /// respect to the jet components.
  virtual double interior_residual(const JetSample& jet, double t, std::span<const double> x,
                                   JetSensitivity* sens) const = 0;
  double boundary_residual(double value, double t, std::span<const double> x) const {
    return value - boundary_data(t, x);
  }
  double initial_residual(double value, std::span<const double> x) const {
    return value - initial_data(x);
  }

 protected:
  void check_point(std::span<const double> x) const;

 private:
  std::size_t dim_;
  double epsilon_;
};

/// ∂u/∂t − ∇·(a∇u) = f_ε with a(x) = 1 + ‖x‖/2 and
/// u_ε(t,x) = exp(‖x‖·√(1−t) + ε(1−t)).
class LinearParabolic : public PdeProblem {
 public:
  using PdeProblem::PdeProblem;
  ProblemKind kind() const override { return ProblemKind::LinearParabolic; }

  double exact_value(double t, std::span<const double> x) const override;
  JetSample exact_jet(double t, std::span<const double> x,
                      std::span<double> grad_out) const override;
  double forcing(double t, std::span<const double> x) const override;
  double interior_residual(const JetSample& jet, double t, std::span<const double> x,
                           JetSensitivity* sens) const override;

  static double diffusivity(std::span<const double> x);
};

/// ∂u/∂t − Δu − u + u³ = f_ε with
/// u_ε(t,x) = e^{−t}·(sin(π/2·(1−‖x‖)^{2.5}) + ε·sin(π/2·(1−‖x‖))).
class AllenCahn : public PdeProblem {
 public:
  using PdeProblem::PdeProblem;
  ProblemKind kind() const override { return ProblemKind::AllenCahn; }

  double exact_value(double t, std::span<const double> x) const override;
  JetSample exact_jet(double t, std::span<const double> x,
                      std::span<double> grad_out) const override;
  double forcing(double t, std::span<const double> x) const override;
  double interior_residual(const JetSample& jet, double t, std::span<const double> x,
                           JetSensitivity* sens) const override;
};

std::unique_ptr<PdeProblem> linear_parabolic(std::size_t dim, double epsilon);
std::unique_ptr<PdeProblem> allen_cahn(std::size_t dim, double epsilon);
std::unique_ptr<PdeProblem> make_problem(ProblemKind kind, std::size_t dim, double epsilon);

/// Largest |residual| of the exact solution's own jets over a fixed seeded
/// cloud of interior, boundary and initial points (`points` of each kind).
double rhs_consistency_check(const PdeProblem& problem, std::size_t points = 1000);

}  // namespace svdpinn
