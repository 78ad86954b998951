#include "vdn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "vdn/distributions.hpp"

namespace vdn {

void TrainConfig::validate() const {
  if (critic_update_every < 1) {
    throw ConfigError("TrainConfig: critic_update_every must be >= 1");
  }
  if (!(task_lr >= 0.0) || !(gan_lr >= 0.0)) {
    throw ConfigError("TrainConfig: learning rates must be non-negative");
  }
  if (batch_size == 0) throw ConfigError("TrainConfig: batch_size must be positive");
  if (schedule == LrSchedule::Cosine && cosine_epochs == 0) {
    throw ConfigError("TrainConfig: cosine_epochs must be positive");
  }
  weights.validate();
}

void rmsprop_update(std::vector<double>& param, const std::vector<double>& grad,
                    std::vector<double>& state, double lr, double rho,
                    double eps) {
  if (param.size() != grad.size() || param.size() != state.size()) {
    throw ContractError("rmsprop_update: size mismatch");
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    state[i] = rho * state[i] + (1.0 - rho) * grad[i] * grad[i];
    param[i] -= lr * grad[i] / (std::sqrt(state[i]) + eps);
  }
}

void sgd_update(std::vector<double>& param, const std::vector<double>& grad,
                double lr) {
  if (param.size() != grad.size()) throw ContractError("sgd_update: size mismatch");
  for (std::size_t i = 0; i < param.size(); ++i) param[i] -= lr * grad[i];
}

GroupOptimizer::GroupOptimizer(OptimKind kind, double base_lr, double rho,
                               double eps, std::vector<Tensor> params)
    : kind_(kind), base_lr_(base_lr), rho_(rho), eps_(eps),
      params_(std::move(params)) {
  state_.reserve(params_.size());
  for (const auto& p : params_) state_.emplace_back(p.size(), 0.0);
}

void GroupOptimizer::step(double lr_factor) {
  const double lr = base_lr_ * lr_factor;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = params_[i];
    if (p.grad().empty()) continue;  // no gradient reached this parameter
    if (kind_ == OptimKind::RmsProp) {
      rmsprop_update(p.data(), p.grad(), state_[i], lr, rho_, eps_);
    } else {
      sgd_update(p.data(), p.grad(), lr);
    }
  }
}

double lr_factor(const TrainConfig& cfg, std::size_t epoch) {
  switch (cfg.schedule) {
    case LrSchedule::Constant:
      return 1.0;
    case LrSchedule::StepDecay:
      return epoch >= cfg.step_decay_epoch ? cfg.step_decay_gamma : 1.0;
    case LrSchedule::Cosine: {
      const double t = std::min<double>(1.0, static_cast<double>(epoch) /
                                                 static_cast<double>(cfg.cosine_epochs));
      return 0.5 * (1.0 + std::cos(std::numbers::pi * t));
    }
  }
  return 1.0;
}

ShuffledStyles shuffle_styles(const Tensor& z_d, Rng& rng) {
  if (z_d.shape().size() != 2 || z_d.shape()[0] == 0) {
    throw ContractError("shuffle_styles: need a non-empty (B, zd) batch");
  }
  std::vector<std::size_t> perm = rng.permutation(z_d.shape()[0]);
  return ShuffledStyles{take_rows(z_d, perm), std::move(perm)};
}

namespace {

std::vector<Tensor> merge(std::vector<Tensor> a, const std::vector<Tensor>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

double global_grad_norm(const std::vector<Tensor>& params) {
  double acc = 0.0;
  for (const auto& p : params) {
    for (double g : p.grad()) acc += g * g;
  }
  return std::sqrt(acc);
}

void scale_grads(std::vector<Tensor>& params, double factor) {
  for (auto& p : params) {
    auto n = p.node();
    for (auto& g : n->grad) g *= factor;
  }
}

}  // namespace

Trainer::Trainer(VdnModel& model, const TrainConfig& cfg)
    : model_(model), cfg_(cfg), rng_(cfg.seed),
      task_opt_(cfg.task_optimizer, cfg.task_lr, cfg.rmsprop_rho, cfg.rmsprop_eps,
                merge(model.params(Group::Ec), model.params(Group::Et))),
      gen_gan_opt_(cfg.gan_optimizer, cfg.gan_lr, cfg.rmsprop_rho, cfg.rmsprop_eps,
                   merge(model.params(Group::Ed), model.params(Group::G))),
      critic_opt_(cfg.gan_optimizer, cfg.gan_lr, cfg.rmsprop_rho, cfg.rmsprop_eps,
                  merge(model.params(Group::Dx), model.params(Group::Dc))) {
  cfg_.validate();
}

void Trainer::apply_phase_masks(Phase phase) {
  const bool gen = phase == Phase::Generator;
  model_.set_group_requires_grad(Group::Ec, gen);
  model_.set_group_requires_grad(Group::Ed, gen);
  model_.set_group_requires_grad(Group::Et, gen);
  model_.set_group_requires_grad(Group::G, gen);
  model_.set_group_requires_grad(Group::Dx, !gen);
  model_.set_group_requires_grad(Group::Dc, !gen);
}

void Trainer::update_groups(Phase phase) {
  if (phase == Phase::Generator) {
    if (cfg_.clip_gradients) {
      auto params = merge(merge(model_.params(Group::Ec), model_.params(Group::Et)),
                          merge(model_.params(Group::Ed), model_.params(Group::G)));
      const double norm = global_grad_norm(params);
      if (norm > cfg_.clip_norm && norm > 0.0) {
        scale_grads(params, cfg_.clip_norm / norm);
      }
    }
    task_opt_.step(current_lr_factor_);
    gen_gan_opt_.step(current_lr_factor_);
  } else {
    if (cfg_.clip_gradients) {
      auto params = merge(model_.params(Group::Dx), model_.params(Group::Dc));
      const double norm = global_grad_norm(params);
      if (norm > cfg_.clip_norm && norm > 0.0) {
        scale_grads(params, cfg_.clip_norm / norm);
      }
    }
    critic_opt_.step(current_lr_factor_);
  }
}

LossReport Trainer::train_step(const Batch& batch, std::size_t step_index) {
  apply_phase_masks(Phase::Generator);
  model_.zero_all_grads();
  TotalLoss gen = total_loss(model_, batch, cfg_.weights, Phase::Generator, rng_,
                             cfg_.objective);
  if (!gen.report.finite()) {
    std::ostringstream os;
    os << "train_step " << step_index << ": non-finite generator loss"
       << " (task " << gen.report.l_task << ", reg " << gen.report.l_reg
       << ", rec " << gen.report.l_rec << ", gan " << gen.report.l_gan << ")";
    throw NumericError(os.str());
  }
  gen.total.backward();
  update_groups(Phase::Generator);

  if (step_index % cfg_.critic_update_every == 0) {
    apply_phase_masks(Phase::Critic);
    model_.zero_all_grads();
    TotalLoss dis = total_loss(model_, batch, cfg_.weights, Phase::Critic, rng_,
                               cfg_.objective);
    if (!dis.report.finite()) {
      throw NumericError("train_step " + std::to_string(step_index) +
                         ": non-finite critic loss");
    }
    dis.total.backward();
    update_groups(Phase::Critic);
  }
  apply_phase_masks(Phase::Generator);
  return gen.report;
}

TrainLog Trainer::fit(const Dataset& train, const Dataset& test) {
  train.validate();
  TrainLog log;
  if (cfg_.epochs == 0) return log;

  // Stratified round-robin batches: the same number of examples from every
  // domain in each batch, reshuffled per epoch.
  std::vector<std::vector<std::size_t>> by_domain(train.domain_count);
  for (std::size_t i = 0; i < train.examples.size(); ++i) {
    by_domain[static_cast<std::size_t>(train.examples[i].d)].push_back(i);
  }
  std::vector<std::vector<std::size_t>> groups;
  for (auto& g : by_domain) {
    if (!g.empty()) groups.push_back(g);
  }
  if (groups.empty()) throw ContractError("fit: empty training set");
  const std::size_t per = std::max<std::size_t>(1, cfg_.batch_size / groups.size());
  std::size_t min_count = groups[0].size();
  for (const auto& g : groups) min_count = std::min(min_count, g.size());
  const std::size_t batches = std::max<std::size_t>(1, min_count / per);

  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
    current_lr_factor_ = lr_factor(cfg_, epoch);
    for (auto& g : groups) {
      std::vector<std::size_t> perm = rng_.permutation(g.size());
      std::vector<std::size_t> shuffled(g.size());
      for (std::size_t i = 0; i < g.size(); ++i) shuffled[i] = g[perm[i]];
      g = std::move(shuffled);
    }
    LossReport sum;
    for (std::size_t bi = 0; bi < batches; ++bi) {
      std::vector<std::size_t> idx;
      idx.reserve(per * groups.size());
      for (const auto& g : groups) {
        for (std::size_t j = 0; j < per; ++j) idx.push_back(g[bi * per + j]);
      }
      Batch batch{examples_tensor(train, idx), labels_of(train, idx),
                  domains_of(train, idx)};
      LossReport r = train_step(batch, ++step);
      sum.l_task += r.l_task;
      sum.l_reg += r.l_reg;
      sum.l_rec += r.l_rec;
      sum.l_gan += r.l_gan;
      sum.total += r.total;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    const double nb = static_cast<double>(batches);
    rec.mean_loss = LossReport{sum.l_task / nb, sum.l_reg / nb, sum.l_rec / nb,
                               sum.l_gan / nb, sum.total / nb};
    rec.train_accuracy = evaluate_accuracy(model_, train);
    rec.train_accuracy_per_domain = evaluate_accuracy_per_domain(model_, train);
    if (test.size() > 0) {
      rec.test_accuracy = evaluate_accuracy(model_, test);
      rec.test_accuracy_per_domain = evaluate_accuracy_per_domain(model_, test);
    }
    rec.mean_kl = mean_conditional_kl(model_, train);
    log.epochs.push_back(std::move(rec));
  }
  return log;
}

namespace {

std::vector<std::size_t> all_indices(const Dataset& data) {
  std::vector<std::size_t> idx(data.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return idx;
}

}  // namespace

double evaluate_accuracy(const VdnModel& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  auto idx = all_indices(data);
  std::vector<int> pred = model.predict(examples_tensor(data, idx));
  std::size_t hits = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (pred[i] == data.examples[i].y) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(idx.size());
}

std::map<int, double> evaluate_accuracy_per_domain(const VdnModel& model,
                                                   const Dataset& data) {
  std::map<int, std::pair<std::size_t, std::size_t>> counts;  // hits, total
  auto idx = all_indices(data);
  if (idx.empty()) return {};
  std::vector<int> pred = model.predict(examples_tensor(data, idx));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    auto& [hits, total] = counts[data.examples[i].d];
    ++total;
    if (pred[i] == data.examples[i].y) ++hits;
  }
  std::map<int, double> out;
  for (const auto& [d, ht] : counts) {
    out[d] = static_cast<double>(ht.first) / static_cast<double>(ht.second);
  }
  return out;
}

double mean_conditional_kl(const VdnModel& model, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  DiagGaussian q = model.encode_content(examples_tensor(data, all_indices(data)));
  return kl_to_standard_normal(q).value() / static_cast<double>(data.size());
}

ToyResult run_toy_xor(const ToyConfig& cfg) {
  Rng data_rng(cfg.seed);
  Dataset train = gen_xor(cfg.n_train, data_rng);
  Dataset test = gen_xor(cfg.n_test, data_rng);

  ModelConfig mc;
  mc.input_dim = 3;
  mc.zc_dim = 2;
  mc.zd_dim = 2;
  mc.hidden = 8;
  mc.critic_hidden = 16;
  mc.ep_dim = 4;
  mc.class_count = 2;
  mc.domain_count = 1;
  mc.toy_mode = true;
  mc.reparameterize = true;
  VdnModel model(mc, cfg.seed ^ 0x7031u);

  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.task_optimizer = OptimKind::Sgd;
  tc.task_lr = cfg.lr;
  tc.gan_optimizer = OptimKind::Sgd;
  tc.gan_lr = cfg.critic_lr;
  tc.critic_update_every = cfg.critic_update_every;
  if (cfg.cosine) {
    tc.schedule = LrSchedule::Cosine;
    tc.cosine_epochs = cfg.epochs;
  }
  tc.seed = cfg.seed;
  tc.weights.lambda_reg = cfg.with_reg ? cfg.lambda_reg : 0.0;
  tc.weights.lambda_gan = 0.0;
  tc.weights.lambda_rec = 0.0;
  tc.objective.augmentation = false;
  tc.objective.reparameterize = true;
  tc.objective.use_gan = false;
  tc.objective.use_rec = false;
  tc.objective.use_reg = cfg.with_reg;

  Trainer trainer(model, tc);
  TrainLog log = trainer.fit(train, test);

  ToyResult out;
  for (const auto& rec : log.epochs) {
    out.kl_per_epoch.push_back(rec.mean_kl);
    out.acc_per_epoch.push_back(rec.test_accuracy);
  }
  out.test_accuracy = log.epochs.empty() ? 0.0 : log.epochs.back().test_accuracy;
  out.final_kl = log.epochs.empty() ? 0.0 : log.epochs.back().mean_kl;
  return out;
}

}  // namespace vdn
