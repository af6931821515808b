#include <cmath>
#include <numbers>

#include "doctest.h"
#include "svdpinn/errors.hpp"
#include "svdpinn/pde.hpp"
#include "svdpinn/sampling.hpp"
#include "test_support.hpp"

using namespace svdpinn;
using svdpinn::testing::close;
using svdpinn::testing::fd_jet;
using svdpinn::testing::FdJet;
using svdpinn::testing::safe_points;

namespace {

struct CorruptedForcing : LinearParabolic {
  using LinearParabolic::LinearParabolic;
  double forcing(double t, std::span<const double> x) const override {
    return LinearParabolic::forcing(t, x) + 1.0;
  }
};

}  // namespace

TEST_CASE("parabolic exact solution special values") {
  const auto p = linear_parabolic(3, 0.7);
  CHECK(p->exact_value(1.0, std::vector<double>{0.2, 0.3, -0.1}) == 1.0);
  CHECK(p->exact_value(0.0, std::vector<double>{0.0, 0.0, 0.0}) == doctest::Approx(std::exp(0.7)));
}

TEST_CASE("allen-cahn exact solution special values") {
  const auto p = allen_cahn(2, 0.5);
  const double s = 1.0 / std::sqrt(2.0);
  CHECK(std::abs(p->exact_value(0.3, std::vector<double>{s, s})) <= 1e-15);
  CHECK(p->boundary_data(0.6, std::vector<double>{1.0, 0.0}) == 0.0);
  CHECK(p->exact_value(0.0, std::vector<double>{0.0, 0.0}) == doctest::Approx(1.5));
  // a point a hair outside the sphere still evaluates (boundary samples)
  CHECK(std::isfinite(p->exact_value(0.1, std::vector<double>{1.0 + 1e-13, 0.0})));
}

TEST_CASE("closed-form derivatives match finite differences of the exact value") {
  for (double eps : {0.0, 0.5, 2.0}) {
    for (std::size_t d : {1u, 2u, 3u}) {
      for (auto kind : {ProblemKind::LinearParabolic, ProblemKind::AllenCahn}) {
        const auto p = make_problem(kind, d, eps);
        for (const auto& [t, x] : safe_points(d, 40, 1e-3)) {
          std::vector<double> g(d);
          const JetSample jet = p->exact_jet(t, x, g);
          const FdJet fd = fd_jet(*p, t, x);
          CHECK(close(jet.dt, fd.dt, 1e-6, 1e-9));
          INFO(to_string(kind) << " d=" << d << " eps=" << eps << " t=" << t);
          for (std::size_t i = 0; i < d; ++i) CHECK(close(jet.grad_x[i], fd.grad[i], 1e-6, 1e-8));
          CHECK(close(jet.laplacian_x, fd.lap, 1e-6, 1e-7));
        }
      }
    }
  }
}

TEST_CASE("interior residual of exact jets vanishes") {
  for (const auto& [kind, eps] : std::vector<std::pair<ProblemKind, double>>{
           {ProblemKind::LinearParabolic, 0.5}, {ProblemKind::AllenCahn, 2.0}}) {
    const auto p = make_problem(kind, 2, eps);
    auto rng = CounterRng::stream(3, "pts");
    const SampleBatch b = sample_interior(100, 2, rng);
    std::vector<double> g(2);
    for (std::size_t i = 0; i < b.count(); ++i) {
      const JetSample jet = p->exact_jet(b.times[i], b.point(i), g);
      CHECK(std::abs(p->interior_residual(jet, b.times[i], b.point(i), nullptr)) <= 1e-8);
    }
  }
}

TEST_CASE("rhs consistency check") {
  CHECK(rhs_consistency_check(*linear_parabolic(2, 0.0)) <= 1e-8);
  CHECK(rhs_consistency_check(*allen_cahn(2, 0.5)) <= 1e-8);
  const CorruptedForcing bad(2, 0.0);
  CHECK(rhs_consistency_check(bad) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("divergence-form expansion of the parabolic operator") {
  // ∇·(a∇u) by central differences of the flux a(x)·∂u/∂x_i, versus aΔu + ∇a·∇u.
  const auto p = linear_parabolic(2, 0.5);
  const double h = 1e-5;
  for (const auto& [t, x] : safe_points(2, 20, 1e-2)) {
    std::vector<double> g(2);
    const JetSample jet = p->exact_jet(t, x, g);
    const double rho = std::hypot(x[0], x[1]);
    const double expanded =
        LinearParabolic::diffusivity(x) * jet.laplacian_x + (x[0] * g[0] + x[1] * g[1]) / (2 * rho);
    double div = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      std::vector<double> gp(2), gm(2);
      p->exact_jet(t, xp, gp);
      p->exact_jet(t, xm, gm);
      div += (LinearParabolic::diffusivity(xp) * gp[i] - LinearParabolic::diffusivity(xm) * gm[i]) /
             (2 * h);
    }
    CHECK(close(expanded, div, 1e-6, 1e-7));
  }
}

TEST_CASE("exact solutions are continuous in epsilon") {
  const std::vector<double> x{0.3, -0.2};
  for (auto kind : {ProblemKind::LinearParabolic, ProblemKind::AllenCahn}) {
    for (double eps : {0.0, 0.5, 2.0, 50.0}) {
      const double u = make_problem(kind, 2, eps)->exact_value(0.4, x);
      const double v = make_problem(kind, 2, eps + 1e-6)->exact_value(0.4, x);
      CHECK(std::abs(u - v) <= 1e-5 * (1.0 + std::abs(u)));
    }
  }
}

TEST_CASE("allen-cahn at epsilon zero is the single-sine profile") {
  const auto p = allen_cahn(3, 0.0);
  const std::vector<double> x{0.1, 0.2, 0.3};
  const double rho = std::sqrt(0.14);
  const double expected = std::exp(-0.25) * std::sin(std::numbers::pi / 2 * std::pow(1 - rho, 2.5));
  CHECK(p->exact_value(0.25, x) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("singular shells are rejected") {
  const auto par = linear_parabolic(2, 0.0);
  const auto ac = allen_cahn(2, 0.0);
  std::vector<double> g(2);
  CHECK_THROWS_AS(par->forcing(0.5, std::vector<double>{0.0, 5e-9}), SingularPointError);
  CHECK_THROWS_AS(par->exact_jet(0.5, std::vector<double>{0.0, 0.0}, g), SingularPointError);
  CHECK_THROWS_AS(ac->exact_jet(0.5, std::vector<double>{1.0 - 1e-9, 0.0}, g), SingularPointError);
  CHECK_THROWS_AS(ac->forcing(0.5, std::vector<double>{0.0, 0.0}), SingularPointError);
  CHECK_NOTHROW(ac->exact_value(0.5, std::vector<double>{0.0, 0.0}));
}

TEST_CASE("problem names round-trip and bad input is rejected") {
  CHECK(parse_problem_kind("parabolic") == ProblemKind::LinearParabolic);
  CHECK(parse_problem_kind("allen_cahn") == ProblemKind::AllenCahn);
  CHECK_THROWS_AS(parse_problem_kind("heat"), ConfigError);
  CHECK_THROWS_AS(linear_parabolic(0, 0.0), ConfigError);
  CHECK_THROWS_AS(linear_parabolic(2, 0.0)->exact_value(0.0, std::vector<double>{1.0}),
                  DimensionError);
}
