#include "svdpinn/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "svdpinn/errors.hpp"

namespace svdpinn {

HiddenWeight::HiddenWeight(DenseHidden dense) : rep_(std::move(dense)) {
  if (!std::get<DenseHidden>(rep_).w.square()) throw DimensionError("hidden weight must be square");
}

HiddenWeight::HiddenWeight(FactoredHidden factored) : rep_(std::move(factored)) {
  const auto& f = std::get<FactoredHidden>(rep_);
  const std::size_t m = f.sigma.size();
  if (!f.u.square() || !f.v.square() || f.u.rows() != m || f.v.rows() != m) {
    throw DimensionError("factored hidden weight: u, v must be " + std::to_string(m) + "x" +
                         std::to_string(m));
  }
  if (orthonormality_defect(f.u) > 1e-8 || orthonormality_defect(f.v) > 1e-8) {
    throw NumericError("factored hidden weight: u or v is not orthonormal");
  }
  for (double s : f.sigma) {
    if (!std::isfinite(s) || s < 0.0) throw NumericError("factored hidden weight: sigma must be >= 0");
  }
}

std::size_t HiddenWeight::width() const {
  return factored() ? factors().sigma.size() : dense().w.rows();
}

Matrix HiddenWeight::effective() const {
  if (!factored()) return dense().w;
  return reconstruct(SvdFactors{factors().u, factors().sigma, factors().v});
}

namespace {

void require_finite(std::span<const double> xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite value in ") + what);
  }
}

}  // namespace

void NetworkParams::validate() const {
  const std::size_t m = width();
  const std::size_t r = output_dim();
  if (m == 0 || input_dim() == 0 || r == 0) throw DimensionError("network has an empty layer");
  if (b0.size() != m || w1.width() != m || b1.size() != m || w2.cols() != m || b2.size() != r) {
    throw DimensionError("network parameter shapes are inconsistent");
  }
  require_finite(w0.data(), "w0");
  require_finite(b0, "b0");
  if (w1.factored()) {
    require_finite(w1.factors().sigma, "sigma");
  } else {
    require_finite(w1.dense().w.data(), "w1");
  }
  require_finite(b1, "b1");
  require_finite(w2.data(), "w2");
  require_finite(b2, "b2");
}

NetworkParams init_params(std::size_t input_dim, std::size_t width, std::size_t output_dim,
                          CounterRng& rng) {
  auto glorot = [&rng](std::size_t rows, std::size_t cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Matrix w(rows, cols);
    for (double& x : w.data()) x = (2.0 * rng.uniform() - 1.0) * limit;
    return w;
  };
  NetworkParams p;
  p.w0 = glorot(width, input_dim);
  p.b0.assign(width, 0.0);
  p.w1 = HiddenWeight(DenseHidden{glorot(width, width)});
  p.b1.assign(width, 0.0);
  p.w2 = glorot(output_dim, width);
  p.b2.assign(output_dim, 0.0);
  return p;
}

ParamGrad ParamGrad::zeros_like(const NetworkParams& p) {
  ParamGrad g;
  const std::size_t m = p.width();
  g.w0 = Matrix(m, p.input_dim());
  g.b0.assign(m, 0.0);
  g.w1 = Matrix(m, m);
  if (p.w1.factored()) g.sigma.assign(m, 0.0);
  g.b1.assign(m, 0.0);
  g.w2 = Matrix(p.output_dim(), m);
  g.b2.assign(p.output_dim(), 0.0);
  return g;
}

namespace {

template <typename Fn>
void for_each_block(ParamGrad& g, Fn&& fn) {
  fn(g.w0.data());
  fn(std::span<double>(g.b0));
  fn(g.w1.data());
  fn(std::span<double>(g.sigma));
  fn(std::span<double>(g.b1));
  fn(g.w2.data());
  fn(std::span<double>(g.b2));
}

}  // namespace

ParamGrad& ParamGrad::operator+=(const ParamGrad& other) {
  auto add = [](std::span<double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DimensionError("ParamGrad shapes differ");
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  };
  add(w0.data(), other.w0.data());
  add(b0, other.b0);
  add(w1.data(), other.w1.data());
  add(sigma, other.sigma);
  add(b1, other.b1);
  add(w2.data(), other.w2.data());
  add(b2, other.b2);
  return *this;
}

ParamGrad& ParamGrad::operator*=(double s) {
  for_each_block(*this, [s](std::span<double> xs) {
    for (double& x : xs) x *= s;
  });
  return *this;
}

double ParamGrad::max_abs() const {
  double worst = 0.0;
  for_each_block(const_cast<ParamGrad&>(*this), [&worst](std::span<double> xs) {
    for (double x : xs) worst = std::max(worst, std::abs(x));
  });
  return worst;
}

void project_hidden_gradient(const NetworkParams& p, ParamGrad& grad) {
  if (!p.w1.factored()) return;
  const auto& f = p.w1.factors();
  const std::size_t m = f.sigma.size();
  const Matrix ut_g = f.u.transposed() * grad.w1;
  grad.sigma.assign(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += ut_g(k, j) * f.v(j, k);
    grad.sigma[k] = s;
  }
}

JetBatch::JetBatch(std::size_t n, std::size_t r, std::size_t d)
    : count(n),
      outputs(r),
      dim(d),
      value(n * r, 0.0),
      dt(n * r, 0.0),
      grad_x(n * r * d, 0.0),
      laplacian_x(n * r, 0.0) {}

Jet JetBatch::at(std::size_t i) const {
  Jet j;
  j.value.assign(value.begin() + i * outputs, value.begin() + (i + 1) * outputs);
  j.dt.assign(dt.begin() + i * outputs, dt.begin() + (i + 1) * outputs);
  j.grad_x = Matrix(outputs, dim,
                    std::vector<double>(grad_x.begin() + i * outputs * dim,
                                        grad_x.begin() + (i + 1) * outputs * dim));
  j.laplacian_x.assign(laplacian_x.begin() + i * outputs,
                       laplacian_x.begin() + (i + 1) * outputs);
  return j;
}

namespace {

// Y (rows x n) = W (rows x inner) * X (inner x n)
void mul(std::span<const double> w, std::size_t rows, std::size_t inner, const double* x,
         std::size_t n, double* y) {
  std::fill(y, y + rows * n, 0.0);
  for (std::size_t i = 0; i < rows; ++i) {
    double* yi = y + i * n;
    for (std::size_t l = 0; l < inner; ++l) {
      const double wil = w[i * inner + l];
      const double* xl = x + l * n;
      for (std::size_t c = 0; c < n; ++c) yi[c] += wil * xl[c];
    }
  }
}

// Y (inner x n) = Wᵀ * X, W is rows x inner, X is rows x n
void mul_transposed(std::span<const double> w, std::size_t rows, std::size_t inner,
                    const double* x, std::size_t n, double* y) {
  std::fill(y, y + inner * n, 0.0);
  for (std::size_t l = 0; l < rows; ++l) {
    const double* xl = x + l * n;
    for (std::size_t j = 0; j < inner; ++j) {
      const double wlj = w[l * inner + j];
      double* yj = y + j * n;
      for (std::size_t c = 0; c < n; ++c) yj[c] += wlj * xl[c];
    }
  }
}

double dot(const double* a, const double* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t c = 0;
  for (; c + 4 <= n; c += 4) {
    s0 += a[c] * b[c];
    s1 += a[c + 1] * b[c + 1];
    s2 += a[c + 2] * b[c + 2];
    s3 += a[c + 3] * b[c + 3];
  }
  for (; c < n; ++c) s0 += a[c] * b[c];
  return (s0 + s1) + (s2 + s3);
}

// G (p x q) += A (p x n) * Bᵀ, B is q x n
void accumulate_outer(const double* a, std::size_t p, const double* b, std::size_t q,
                      std::size_t n, std::span<double> g) {
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < q; ++j) g[i * q + j] += dot(a + i * n, b + j * n, n);
}

}  // namespace

// Column layout of every m x (blocks*n) array: block c, sample s at c*n + s.
// Block 0 is the value, blocks 1..d+1 the tangents along t, x_1..x_d, and the
// last block the sum of pure second tangents along x_1..x_d.
struct JetTape {
  std::size_t n = 0;
  std::size_t blocks = 0;
  std::vector<double> inputs;  // n x (d+1)
  std::vector<double> a0, s0;  // m x n
  std::vector<double> y;       // input to W1
  std::vector<double> h;       // W1 y (+ b1 on block 0)
  std::vector<double> a1, s1;  // m x n
  std::vector<double> z;       // input to W2
  std::vector<double> out;     // r x (blocks*n)
};

JetEngine::JetEngine(const NetworkParams& p, const Matrix& w1_effective)
    : params_(p), w1_(w1_effective), tape_(std::make_unique<JetTape>()) {
  if (w1_.rows() != p.width() || w1_.cols() != p.width()) {
    throw DimensionError("effective hidden weight does not match network width");
  }
}

JetEngine::~JetEngine() = default;

const JetBatch& JetEngine::forward(const SampleBatch& batch, std::size_t begin, std::size_t end,
                                   JetOrder order) {
  const std::size_t din = params_.input_dim();
  const std::size_t d = din - 1;
  const std::size_t m = params_.width();
  const std::size_t r = params_.output_dim();
  if (batch.dim != d) {
    throw DimensionError("sample dimension " + std::to_string(batch.dim) +
                         " does not match network input dimension " + std::to_string(din));
  }
  if (end < begin || end > batch.count()) throw DimensionError("sample range out of bounds");

  JetTape& tp = *tape_;
  const std::size_t n = end - begin;
  const std::size_t k = order == JetOrder::Full ? d + 3 : 1;
  const std::size_t cols = k * n;
  tp.n = n;
  tp.blocks = k;

  tp.inputs.resize(n * din);
  for (std::size_t s = 0; s < n; ++s) {
    tp.inputs[s * din] = batch.times[begin + s];
    auto x = batch.point(begin + s);
    std::copy(x.begin(), x.end(), tp.inputs.begin() + s * din + 1);
  }

  tp.a0.resize(m * n);
  tp.s0.resize(m * n);
  tp.y.resize(m * cols);
  const auto& w0 = params_.w0;
  for (std::size_t i = 0; i < m; ++i) {
    auto w0i = w0.row(i);
    double sumsq = 0.0;
    for (std::size_t j = 1; j < din; ++j) sumsq += w0i[j] * w0i[j];
    double* yi = tp.y.data() + i * cols;
    for (std::size_t s = 0; s < n; ++s) {
      double pre = params_.b0[i];
      const double* zin = tp.inputs.data() + s * din;
      for (std::size_t j = 0; j < din; ++j) pre += w0i[j] * zin[j];
      if (!std::isfinite(pre)) throw NumericError("non-finite pre-activation in layer 0");
      const double a = std::tanh(pre);
      const double sl = 1.0 - a * a;
      tp.a0[i * n + s] = a;
      tp.s0[i * n + s] = sl;
      yi[s] = a;
      if (k > 1) {
        for (std::size_t c = 0; c < din; ++c) yi[(c + 1) * n + s] = sl * w0i[c];
        yi[(d + 2) * n + s] = -2.0 * a * sl * sumsq;
      }
    }
  }

  tp.h.resize(m * cols);
  mul(w1_.data(), m, m, tp.y.data(), cols, tp.h.data());

  tp.a1.resize(m * n);
  tp.s1.resize(m * n);
  tp.z.resize(m * cols);
  for (std::size_t i = 0; i < m; ++i) {
    double* hi = tp.h.data() + i * cols;
    double* zi = tp.z.data() + i * cols;
    for (std::size_t s = 0; s < n; ++s) {
      hi[s] += params_.b1[i];
      if (!std::isfinite(hi[s])) throw NumericError("non-finite pre-activation in layer 1");
      const double a = std::tanh(hi[s]);
      const double sl = 1.0 - a * a;
      tp.a1[i * n + s] = a;
      tp.s1[i * n + s] = sl;
      zi[s] = a;
      if (k > 1) {
        double sumsq = 0.0;
        for (std::size_t c = 1; c <= din; ++c) {
          const double hc = hi[c * n + s];
          zi[c * n + s] = sl * hc;
          if (c >= 2) sumsq += hc * hc;
        }
        zi[(d + 2) * n + s] = sl * hi[(d + 2) * n + s] - 2.0 * a * sl * sumsq;
      }
    }
  }

  tp.out.resize(r * cols);
  mul(params_.w2.data(), r, m, tp.z.data(), cols, tp.out.data());

  if (jets_.count != n || jets_.outputs != r || jets_.dim != d) {
    jets_ = JetBatch(n, r, d);
  } else if (k == 1) {
    std::ranges::fill(jets_.dt, 0.0);
    std::ranges::fill(jets_.grad_x, 0.0);
    std::ranges::fill(jets_.laplacian_x, 0.0);
  }
  for (std::size_t q = 0; q < r; ++q) {
    double* oq = tp.out.data() + q * cols;
    for (std::size_t s = 0; s < n; ++s) {
      oq[s] += params_.b2[q];
      jets_.value[s * r + q] = oq[s];
      if (k > 1) {
        jets_.dt[s * r + q] = oq[n + s];
        for (std::size_t j = 0; j < d; ++j) jets_.grad_x[(s * r + q) * d + j] = oq[(2 + j) * n + s];
        jets_.laplacian_x[s * r + q] = oq[(d + 2) * n + s];
      }
    }
  }
  require_finite(tp.out, "network output jet");
  return jets_;
}

void JetEngine::backward(const JetBatch& cot, ParamGrad& grad) {
  const JetTape& tp = *tape_;
  const std::size_t din = params_.input_dim();
  const std::size_t d = din - 1;
  const std::size_t m = params_.width();
  const std::size_t r = params_.output_dim();
  const std::size_t n = tp.n;
  const std::size_t k = tp.blocks;
  const std::size_t cols = k * n;
  if (cot.count != n || cot.outputs != r || cot.dim != d) {
    throw DimensionError("cotangent batch does not match the last forward pass");
  }

  std::vector<double> out_bar(r * cols, 0.0);
  for (std::size_t q = 0; q < r; ++q) {
    double* oq = out_bar.data() + q * cols;
    for (std::size_t s = 0; s < n; ++s) {
      oq[s] = cot.value[s * r + q];
      if (k > 1) {
        oq[n + s] = cot.dt[s * r + q];
        for (std::size_t j = 0; j < d; ++j) oq[(2 + j) * n + s] = cot.grad_x[(s * r + q) * d + j];
        oq[(d + 2) * n + s] = cot.laplacian_x[s * r + q];
      }
      grad.b2[q] += oq[s];
    }
  }
  accumulate_outer(out_bar.data(), r, tp.z.data(), m, cols, grad.w2.data());

  std::vector<double> z_bar(m * cols);
  mul_transposed(params_.w2.data(), r, m, out_bar.data(), cols, z_bar.data());

  std::vector<double> h_bar(m * cols);
  for (std::size_t i = 0; i < m; ++i) {
    const double* hi = tp.h.data() + i * cols;
    const double* zb = z_bar.data() + i * cols;
    double* hb = h_bar.data() + i * cols;
    for (std::size_t s = 0; s < n; ++s) {
      const double a = tp.a1[i * n + s];
      const double sl = tp.s1[i * n + s];
      if (k == 1) {
        hb[s] = zb[s] * sl;
        continue;
      }
      const double zs = zb[(d + 2) * n + s];
      const double hs = hi[(d + 2) * n + s];
      double sumsq = 0.0;
      double s_bar = 0.0;
      for (std::size_t c = 1; c <= din; ++c) {
        const double hc = hi[c * n + s];
        const double zc = zb[c * n + s];
        double v = sl * zc;
        if (c >= 2) {
          sumsq += hc * hc;
          v -= 4.0 * a * sl * hc * zs;
        }
        hb[c * n + s] = v;
        s_bar += zc * hc;
      }
      hb[(d + 2) * n + s] = sl * zs;
      s_bar += zs * (hs - 2.0 * a * sumsq);
      const double a_bar = zb[s] - 2.0 * a * s_bar - 2.0 * sl * sumsq * zs;
      hb[s] = a_bar * sl;
    }
    for (std::size_t s = 0; s < n; ++s) grad.b1[i] += hb[s];
  }
  accumulate_outer(h_bar.data(), m, tp.y.data(), m, cols, grad.w1.data());

  std::vector<double> y_bar(m * cols);
  mul_transposed(w1_.data(), m, m, h_bar.data(), cols, y_bar.data());

  std::vector<double> g_bar(din);
  for (std::size_t i = 0; i < m; ++i) {
    auto w0i = params_.w0.row(i);
    double sumsq = 0.0;
    for (std::size_t j = 1; j < din; ++j) sumsq += w0i[j] * w0i[j];
    const double* yb = y_bar.data() + i * cols;
    std::fill(g_bar.begin(), g_bar.end(), 0.0);
    auto dw0 = grad.w0.row(i);
    for (std::size_t s = 0; s < n; ++s) {
      const double a = tp.a0[i * n + s];
      const double sl = tp.s0[i * n + s];
      double a_bar = yb[s];
      if (k > 1) {
        const double ys = yb[(d + 2) * n + s];
        double s_bar = -2.0 * a * sumsq * ys;
        for (std::size_t c = 0; c < din; ++c) {
          const double yc = yb[(c + 1) * n + s];
          g_bar[c] += sl * yc;
          if (c >= 1) g_bar[c] -= 4.0 * a * sl * w0i[c] * ys;
          s_bar += yc * w0i[c];
        }
        a_bar += -2.0 * a * s_bar - 2.0 * sl * sumsq * ys;
      }
      const double h0_bar = a_bar * sl;
      grad.b0[i] += h0_bar;
      const double* zin = tp.inputs.data() + s * din;
      for (std::size_t j = 0; j < din; ++j) dw0[j] += h0_bar * zin[j];
    }
    for (std::size_t j = 0; j < din; ++j) dw0[j] += g_bar[j];
  }
}

namespace {

constexpr std::size_t kChunk = 64;

SampleBatch single_point(double t, std::span<const double> x) {
  SampleBatch b;
  b.dim = x.size();
  b.times = {t};
  b.points.assign(x.begin(), x.end());
  return b;
}

}  // namespace

Vector forward(const NetworkParams& p, std::span<const double> input) {
  if (input.size() != p.input_dim()) {
    throw DimensionError("forward: input has " + std::to_string(input.size()) +
                         " coordinates, network expects " + std::to_string(p.input_dim()));
  }
  const Matrix w1 = p.w1.effective();
  JetEngine engine(p, w1);
  return engine.forward(single_point(input[0], input.subspan(1)), 0, 1, JetOrder::ValueOnly).value;
}

std::vector<double> forward_batch(const NetworkParams& p, const SampleBatch& batch) {
  const Matrix w1 = p.w1.effective();
  JetEngine engine(p, w1);
  const std::size_t r = p.output_dim();
  std::vector<double> out(batch.count() * r);
  for (std::size_t begin = 0; begin < batch.count(); begin += kChunk) {
    const std::size_t end = std::min(batch.count(), begin + kChunk);
    const auto& jets = engine.forward(batch, begin, end, JetOrder::ValueOnly);
    std::copy(jets.value.begin(), jets.value.end(), out.begin() + begin * r);
  }
  return out;
}

Jet forward_jet(const NetworkParams& p, double t, std::span<const double> x) {
  const Matrix w1 = p.w1.effective();
  JetEngine engine(p, w1);
  return engine.forward(single_point(t, x), 0, 1, JetOrder::Full).at(0);
}

ParamGrad backward_jet(const NetworkParams& p, double t, std::span<const double> x,
                       const Jet& cotangent) {
  const std::size_t r = p.output_dim();
  const std::size_t d = x.size();
  if (cotangent.value.size() != r || cotangent.dt.size() != r || cotangent.grad_x.rows() != r ||
      cotangent.grad_x.cols() != d || cotangent.laplacian_x.size() != r) {
    throw DimensionError("backward_jet: cotangent shape does not match the jet");
  }
  const Matrix w1 = p.w1.effective();
  JetEngine engine(p, w1);
  engine.forward(single_point(t, x), 0, 1, JetOrder::Full);
  JetBatch cot(1, r, d);
  cot.value = cotangent.value;
  cot.dt = cotangent.dt;
  cot.grad_x.assign(cotangent.grad_x.data().begin(), cotangent.grad_x.data().end());
  cot.laplacian_x = cotangent.laplacian_x;
  ParamGrad grad = ParamGrad::zeros_like(p);
  engine.backward(cot, grad);
  project_hidden_gradient(p, grad);
  return grad;
}

}  // namespace svdpinn
