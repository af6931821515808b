#include "svdpinn/transfer.hpp"

#include <chrono>
#include <cmath>

#include "svdpinn/errors.hpp"
#include "svdpinn/eval.hpp"

namespace svdpinn {

std::string_view to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::Full:
      return "full";
    case TrainMode::FrozenHidden:
      return "frozen_hidden";
    case TrainMode::FrozenW1:
      return "frozen_w1";
    case TrainMode::SvdTransfer:
      return "svd";
  }
  return "unknown";
}

TrainMode parse_train_mode(std::string_view name) {
  if (name == "full") return TrainMode::Full;
  if (name == "frozen_hidden") return TrainMode::FrozenHidden;
  if (name == "frozen_w1") return TrainMode::FrozenW1;
  if (name == "svd") return TrainMode::SvdTransfer;
  throw ConfigError("unknown mode '" + std::string(name) +
                    "' (expected full|frozen_hidden|frozen_w1|svd)");
}

SampleBatch make_test_batch(std::uint64_t seed, std::size_t dim, std::size_t n) {
  auto rng = CounterRng::stream(seed, "test");
  return sample_test(n, dim, rng);
}

NetworkParams svd_split(const NetworkParams& theta0) {
  if (theta0.w1.factored()) throw ConfigError("svd_split: hidden weight is already factored");
  SvdFactors f = svd(theta0.w1.dense().w);
  NetworkParams out = theta0;
  out.w1 = HiddenWeight(FactoredHidden{std::move(f.u), std::move(f.v), std::move(f.sigma)});
  return out;
}

NetworkParams densify(const NetworkParams& params) {
  if (!params.w1.factored()) return params;
  NetworkParams out = params;
  out.w1 = HiddenWeight(DenseHidden{params.w1.effective()});
  return out;
}

namespace {

struct Groups {
  ParamGroup main;
  std::optional<ParamGroup> sigma;
};

Groups make_groups(NetworkParams& p, const ParamGrad& g, TrainMode mode) {
  Groups groups;
  groups.main.name = "main";
  auto add = [&](std::span<double> param, std::span<const double> grad) {
    groups.main.params.push_back(param);
    groups.main.grads.push_back(grad);
  };
  if (mode == TrainMode::FrozenHidden) {
    add(p.w2.data(), g.w2.data());
    return groups;
  }
  add(p.w0.data(), g.w0.data());
  add(p.b0, g.b0);
  if (mode == TrainMode::Full) add(p.w1.dense().w.data(), g.w1.data());
  add(p.b1, g.b1);
  add(p.w2.data(), g.w2.data());
  add(p.b2, g.b2);
  if (mode == TrainMode::SvdTransfer) {
    ParamGroup sigma;
    sigma.name = "sigma";
    sigma.params.push_back(p.w1.factors().sigma);
    sigma.grads.push_back(g.sigma);
    groups.sigma = std::move(sigma);
  }
  return groups;
}

std::vector<double> sigma_head(const NetworkParams& p, std::size_t k) {
  std::vector<double> head;
  if (k == 0) return head;
  const std::vector<double> sigma =
      p.w1.factored() ? p.w1.factors().sigma : svd(p.w1.dense().w).sigma;
  head.assign(sigma.begin(), sigma.begin() + static_cast<std::ptrdiff_t>(std::min(k, sigma.size())));
  return head;
}

}  // namespace

TrainResult train(NetworkParams start, TrainMode mode, const PdeProblem& problem,
                  const TrainConfig& config, const RecordSink& sink) {
  if (config.log_every == 0) throw ConfigError("log_every must be >= 1");
  if (!(config.main_lr >= 0.0)) throw ConfigError("main_lr must be >= 0");
  if (!(config.sigma.lr >= 0.0)) throw ConfigError("sigma_lr must be >= 0");
  start.validate();
  if (mode == TrainMode::SvdTransfer && !start.w1.factored()) {
    throw ConfigError("svd mode needs a factored hidden weight (call svd_split first)");
  }
  if (mode != TrainMode::SvdTransfer && start.w1.factored()) start = densify(start);

  const auto clock_start = std::chrono::steady_clock::now();
  const std::size_t d = problem.dim();

  TrainResult result;
  TrainState& st = result.state;
  st.params = std::move(start);
  st.seed = config.seed;

  {
    ParamGrad shape = ParamGrad::zeros_like(st.params);
    Groups g = make_groups(st.params, shape, mode);
    st.main_opt = OptimizerState::create({OptimizerKind::Adam, config.main_lr}, g.main.size());
    if (g.sigma) st.sigma_opt = OptimizerState::create(config.sigma, g.sigma->size());
  }

  TrainingBatches batches = draw_training_batches(config.seed, d, config.counts);
  const SampleBatch test = make_test_batch(config.seed, d, config.n_test);

  auto log = [&](std::uint64_t it, const LossReport& loss) {
    RunRecord rec;
    rec.iteration = it;
    rec.loss = loss;
    rec.rel_err = evaluate(st.params, problem, test, it).relative_error;
    rec.sigma_head = sigma_head(st.params, config.sigma_head);
    rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                            clock_start)
                      .count();
    result.records.push_back(rec);
    if (sink) sink(rec);
  };

  for (std::uint64_t it = 0;; ++it) {
    if (config.resample_every > 0 && it > 0 && it % config.resample_every == 0 &&
        it < config.iters) {
      st.sample_round = it / config.resample_every;
      batches = draw_training_batches(config.seed, d, config.counts, st.sample_round);
    }
    const bool last = it == config.iters;
    const bool logged = last || it % config.log_every == 0;

    LossAndGrad lg;
    try {
      if (last) {
        lg.report = pinn_loss(st.params, problem, batches, config.nu);
      } else {
        lg = pinn_loss_grad(st.params, problem, batches, config.nu);
      }
    } catch (const NumericError& e) {
      result.diverged = true;
      result.diagnostic = "iteration " + std::to_string(it) + ": " + e.what();
      return result;
    }
    if (!std::isfinite(lg.report.total)) {
      result.diverged = true;
      result.diagnostic = "iteration " + std::to_string(it) + ": loss is not finite";
      return result;
    }
    if (logged) log(it, lg.report);
    if (last) break;

    Groups g = make_groups(st.params, lg.grad, mode);
    try {
      step(st.main_opt, g.main);
      if (g.sigma) {
        step(*st.sigma_opt, *g.sigma);
        project_nonnegative(st.params.w1.factors().sigma);
      }
    } catch (const NumericError& e) {
      result.diverged = true;
      result.diagnostic = "iteration " + std::to_string(it) + ": " + e.what();
      return result;
    }
    st.iteration = it + 1;
  }
  return result;
}

NetworkParams initial_network(const PdeProblem& problem, std::size_t width, std::uint64_t seed) {
  if (width == 0) throw ConfigError("width must be >= 1");
  auto rng = CounterRng::stream(seed, "init");
  return init_params(problem.dim() + 1, width, problem.output_dim(), rng);
}

TrainResult pretrain(const PdeProblem& problem, std::size_t width, const TrainConfig& config,
                     const RecordSink& sink) {
  if (problem.epsilon() != 0.0) throw ConfigError("pretraining runs on the epsilon = 0 problem");
  TrainResult r = train(initial_network(problem, width, config.seed), TrainMode::Full, problem,
                        config, sink);
  if (r.diverged) throw NumericError("pretraining diverged at " + r.diagnostic);
  return r;
}

TrainResult transfer_train(const NetworkParams& theta0, TrainMode mode, const PdeProblem& problem,
                           const TrainConfig& config, const RecordSink& sink) {
  if (mode == TrainMode::SvdTransfer && !theta0.w1.factored()) {
    return train(svd_split(theta0), mode, problem, config, sink);
  }
  return train(theta0, mode, problem, config, sink);
}

}  // namespace svdpinn
