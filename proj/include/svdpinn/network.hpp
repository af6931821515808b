#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "svdpinn/linalg.hpp"
#include "svdpinn/sampling.hpp"

namespace svdpinn {

enum class Activation { Tanh };

struct DenseHidden {
  Matrix w;
};

/// W₁ = U · diag(sigma) · Vᵀ with U, V frozen.
struct FactoredHidden {
  Matrix u;
  Matrix v;
  Vector sigma;
};

/// Hidden-to-hidden weight, stored either densely or in factored form.
class HiddenWeight {
 public:
  HiddenWeight() = default;
  explicit HiddenWeight(DenseHidden dense);
  /// Validates orthonormality of u, v (to 1e-8) and sigma >= 0.
  explicit HiddenWeight(FactoredHidden factored);

  bool factored() const noexcept { return std::holds_alternative<FactoredHidden>(rep_); }
  std::size_t width() const;

  const DenseHidden& dense() const { return std::get<DenseHidden>(rep_); }
  DenseHidden& dense() { return std::get<DenseHidden>(rep_); }
  const FactoredHidden& factors() const { return std::get<FactoredHidden>(rep_); }
  FactoredHidden& factors() { return std::get<FactoredHidden>(rep_); }

  /// The matrix the layer actually applies.
  Matrix effective() const;

 private:
  std::variant<DenseHidden, FactoredHidden> rep_;
};

/// Two-hidden-layer MLP  W₂·tanh(W₁·tanh(W₀z + b₀) + b₁) + b₂.
struct NetworkParams {
  Matrix w0;
  Vector b0;
  HiddenWeight w1;
  Vector b1;
  Matrix w2;
  Vector b2;
  Activation activation = Activation::Tanh;

  std::size_t input_dim() const noexcept { return w0.cols(); }
  std::size_t width() const noexcept { return w0.rows(); }
  std::size_t output_dim() const noexcept { return w2.rows(); }

  /// Throws DimensionError / NumericError if shapes disagree or entries are
  /// not finite.
  void validate() const;
};

/// Glorot-uniform weights, zero biases, dense hidden weight.
NetworkParams init_params(std::size_t input_dim, std::size_t width, std::size_t output_dim,
                          CounterRng& rng);

/// Derivative of the loss with respect to every parameter block. `w1` is the
/// gradient with respect to the effective hidden matrix; `sigma` is filled
/// (and only sized) when the hidden weight is factored.
struct ParamGrad {
  Matrix w0;
  Vector b0;
  Matrix w1;
  Vector sigma;
  Vector b1;
  Matrix w2;
  Vector b2;

  static ParamGrad zeros_like(const NetworkParams& p);
  ParamGrad& operator+=(const ParamGrad& other);
  ParamGrad& operator*=(double s);
  /// Largest absolute entry across all blocks.
  double max_abs() const;
};

/// Fills grad.sigma[k] = u_kᵀ · grad.w1 · v_k for factored params.
void project_hidden_gradient(const NetworkParams& p, ParamGrad& grad);

/// Network output with first time derivative, spatial gradient and spatial
/// Laplacian at one point.
struct Jet {
  Vector value;        // r
  Vector dt;           // r
  Matrix grad_x;       // r x d
  Vector laplacian_x;  // r
};

/// Jets for a batch of points; every array is sample-major: entry (i, k) of
/// `value` sits at i*r + k, and grad_x at (i*r + k)*d + j.
struct JetBatch {
  std::size_t count = 0;
  std::size_t outputs = 0;
  std::size_t dim = 0;
  std::vector<double> value;
  std::vector<double> dt;
  std::vector<double> grad_x;
  std::vector<double> laplacian_x;

  JetBatch() = default;
  JetBatch(std::size_t n, std::size_t r, std::size_t d);
  Jet at(std::size_t i) const;
};

Vector forward(const NetworkParams& p, std::span<const double> input);

/// Output values for a batch of (t, x) points.
std::vector<double> forward_batch(const NetworkParams& p, const SampleBatch& batch);

/// Jet at (t, x). Exact first derivatives and Laplacian by second-order
/// forward tangent propagation, one seeded direction per input coordinate.
Jet forward_jet(const NetworkParams& p, double t, std::span<const double> x);

/// Gradient of <cotangent, jet> with respect to all parameters.
ParamGrad backward_jet(const NetworkParams& p, double t, std::span<const double> x,
                       const Jet& cotangent);

/// Which jet components a batched evaluation produces.
enum class JetOrder { ValueOnly, Full };

/// Forward intermediates for one batch; opaque to callers.
struct JetTape;

/// Batched engine behind forward_jet/backward_jet. `w1_effective` must be
/// p.w1.effective(); it is passed in so callers can hoist it out of loops.
class JetEngine {
 public:
  JetEngine(const NetworkParams& p, const Matrix& w1_effective);
  ~JetEngine();
  JetEngine(const JetEngine&) = delete;
  JetEngine& operator=(const JetEngine&) = delete;

  /// Evaluates samples [begin, end) of `batch`. Throws NumericError on
  /// non-finite intermediates.
  const JetBatch& forward(const SampleBatch& batch, std::size_t begin, std::size_t end,
                          JetOrder order);
  /// Accumulates the gradient of <cotangent, last forward jets> into `grad`
  /// (dense w1 block; call project_hidden_gradient afterwards if factored).
  void backward(const JetBatch& cotangent, ParamGrad& grad);

 private:
  const NetworkParams& params_;
  const Matrix& w1_;
  std::unique_ptr<JetTape> tape_;
  JetBatch jets_;
};

}  // namespace svdpinn
