#include <cmath>

#include "doctest.h"
#include "svdpinn/errors.hpp"
#include "svdpinn/transfer.hpp"

using namespace svdpinn;

namespace {

TrainConfig small_config(std::size_t iters) {
  TrainConfig c;
  c.iters = iters;
  c.log_every = 5;
  c.counts = {64, 16, 16};
  c.n_test = 128;
  c.seed = 3;
  return c;
}

bool same_blocks_except_w2(const NetworkParams& a, const NetworkParams& b) {
  return a.w0 == b.w0 && a.b0 == b.b0 && a.w1.effective() == b.w1.effective() && a.b1 == b.b1 &&
         a.b2 == b.b2;
}

}  // namespace

TEST_CASE("zero iterations returns the initialization") {
  const auto prob = linear_parabolic(2, 0.0);
  const NetworkParams init = initial_network(*prob, 8, 3);
  const TrainResult r = pretrain(*prob, 8, small_config(0));
  CHECK(r.state.params.w0 == init.w0);
  CHECK(r.state.params.w1.effective() == init.w1.effective());
  CHECK(r.state.params.w2 == init.w2);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].iteration == 0);
}

TEST_CASE("training is deterministic for a fixed seed") {
  const auto prob = allen_cahn(2, 0.0);
  const TrainResult a = pretrain(*prob, 8, small_config(15));
  const TrainResult b = pretrain(*prob, 8, small_config(15));
  CHECK(a.state.params.w1.effective() == b.state.params.w1.effective());
  CHECK(a.state.params.w2 == b.state.params.w2);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) CHECK(a.records[i].rel_err == b.records[i].rel_err);
}

TEST_CASE("log schedule covers iteration zero, every interval and the last iteration") {
  const auto prob = linear_parabolic(1, 0.0);
  for (std::size_t iters : {0u, 5u, 12u, 20u}) {
    std::vector<std::uint64_t> seen;
    const TrainResult r =
        train(initial_network(*prob, 4, 1), TrainMode::Full, *prob, small_config(iters),
              [&](const RunRecord& rec) { seen.push_back(rec.iteration); });
    const std::size_t expected = (iters + 4) / 5 + 1;
    CHECK(r.records.size() == expected);
    CHECK(seen.size() == expected);
    CHECK(seen.front() == 0);
    CHECK(seen.back() == iters);
  }
}

TEST_CASE("svd_split preserves the network function") {
  const auto prob = linear_parabolic(2, 0.0);
  const NetworkParams p = pretrain(*prob, 16, small_config(10)).state.params;
  const NetworkParams f = svd_split(p);
  REQUIRE(f.w1.factored());
  const SampleBatch test = make_test_batch(9, 2, 200);
  const auto y0 = forward_batch(p, test);
  const auto y1 = forward_batch(f, test);
  for (std::size_t i = 0; i < y0.size(); ++i) CHECK(std::abs(y0[i] - y1[i]) <= 1e-9);
  CHECK_THROWS_AS(svd_split(f), ConfigError);
  CHECK(max_abs_diff(densify(f).w1.dense().w, p.w1.dense().w) <= 1e-12);
}

TEST_CASE("frozen blocks stay bit-identical") {
  const auto prob = linear_parabolic(2, 0.0);
  const NetworkParams theta0 = pretrain(*prob, 8, small_config(10)).state.params;
  const auto target = linear_parabolic(2, 0.5);

  const TrainResult hidden = transfer_train(theta0, TrainMode::FrozenHidden, *target, small_config(10));
  CHECK(same_blocks_except_w2(hidden.state.params, theta0));
  CHECK(hidden.state.params.w2 != theta0.w2);

  const TrainResult w1 = transfer_train(theta0, TrainMode::FrozenW1, *target, small_config(10));
  CHECK(w1.state.params.w1.effective() == theta0.w1.effective());
  CHECK(w1.state.params.w0 != theta0.w0);

  const NetworkParams split = svd_split(theta0);
  const TrainResult s = transfer_train(split, TrainMode::SvdTransfer, *target, small_config(10));
  CHECK(s.state.params.w1.factors().u == split.w1.factors().u);
  CHECK(s.state.params.w1.factors().v == split.w1.factors().v);
  CHECK(s.state.params.w1.factors().sigma != split.w1.factors().sigma);
}

TEST_CASE("svd mode with a zero sigma rate tracks the frozen baseline") {
  const auto prob = allen_cahn(2, 0.0);
  const NetworkParams theta0 = pretrain(*prob, 8, small_config(10)).state.params;
  const auto target = allen_cahn(2, 0.5);
  TrainConfig c = small_config(30);
  c.sigma = {OptimizerKind::GD, 0.0};
  const TrainResult s = transfer_train(theta0, TrainMode::SvdTransfer, *target, c);
  const TrainResult f = transfer_train(theta0, TrainMode::FrozenW1, *target, c);
  REQUIRE(s.records.size() == f.records.size());
  for (std::size_t i = 0; i < s.records.size(); ++i)
    CHECK(std::abs(s.records[i].rel_err - f.records[i].rel_err) <= 1e-6);
}

TEST_CASE("sigma stays nonnegative under aggressive steps") {
  const auto prob = linear_parabolic(2, 0.0);
  const NetworkParams theta0 = pretrain(*prob, 8, small_config(5)).state.params;
  const auto target = linear_parabolic(2, 2.0);
  for (auto kind : {OptimizerKind::GD, OptimizerKind::RMSProp, OptimizerKind::Adam}) {
    TrainConfig c = small_config(25);
    c.log_every = 1;
    c.sigma = {kind, 5.0};
    const TrainResult r = transfer_train(theta0, TrainMode::SvdTransfer, *target, c);
    for (const auto& rec : r.records) {
      REQUIRE(!rec.sigma_head.empty());
      for (double s : rec.sigma_head) CHECK(s >= 0.0);
    }
    for (double s : r.state.params.w1.factors().sigma) CHECK(s >= 0.0);
  }
}

TEST_CASE("pretraining improves on the initialization and warm start helps") {
  const auto prob = linear_parabolic(2, 0.0);
  TrainConfig c = small_config(600);
  c.counts = {256, 64, 64};
  c.log_every = 100;
  const TrainResult r = pretrain(*prob, 16, c);
  CHECK(r.records.back().loss.total < 0.5 * r.records.front().loss.total);
  CHECK(r.records.back().rel_err < r.records.front().rel_err);
  const auto target = linear_parabolic(2, 0.1);
  TrainConfig c0 = small_config(0);
  const double warm = transfer_train(r.state.params, TrainMode::SvdTransfer, *target, c0).records[0].rel_err;
  const double fresh = train(initial_network(*target, 16, c.seed + 1), TrainMode::Full, *target, c0).records[0].rel_err;
  CHECK(warm < fresh);
}

TEST_CASE("configuration errors") {
  const auto prob = linear_parabolic(2, 0.0);
  CHECK_THROWS_AS(pretrain(*linear_parabolic(2, 0.5), 8, small_config(1)), ConfigError);
  TrainConfig c = small_config(1);
  c.log_every = 0;
  CHECK_THROWS_AS(pretrain(*prob, 8, c), ConfigError);
  CHECK_THROWS_AS(train(initial_network(*prob, 8, 1), TrainMode::SvdTransfer, *prob, small_config(1)),
                  ConfigError);
  CHECK(parse_train_mode("frozen_hidden") == TrainMode::FrozenHidden);
  CHECK_THROWS_AS(parse_train_mode("partial"), ConfigError);
}

TEST_CASE("divergence is reported instead of thrown") {
  const auto prob = linear_parabolic(2, 0.0);
  TrainConfig c = small_config(40);
  c.main_lr = 1e6;
  const TrainResult r = train(initial_network(*prob, 8, 1), TrainMode::Full, *prob, c);
  if (r.diverged) {
    CHECK(!r.diagnostic.empty());
    for (const auto& rec : r.records) CHECK(std::isfinite(rec.loss.total));
  }
}
