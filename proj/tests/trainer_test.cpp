#include <doctest.h>

#include <cmath>
#include <map>
#include <numbers>
#include <set>

#include "vdn/trainer.hpp"

using namespace vdn;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.input_dim = 12;
  cfg.zc_dim = 4;
  cfg.zd_dim = 3;
  cfg.hidden = 8;
  cfg.critic_hidden = 8;
  cfg.ep_dim = 6;
  cfg.class_count = 4;
  cfg.domain_count = 2;
  return cfg;
}

Batch random_batch(const ModelConfig& cfg, std::size_t b, Rng& rng) {
  std::vector<double> v(b * cfg.input_dim);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  Batch batch;
  batch.x = Tensor::from_data({b, cfg.input_dim}, std::move(v));
  batch.y.resize(b);
  batch.d.resize(b);
  for (std::size_t i = 0; i < b; ++i) {
    batch.y[i] = static_cast<int>(rng.uniform_index(cfg.class_count));
    batch.d[i] = static_cast<int>(rng.uniform_index(cfg.domain_count));
  }
  return batch;
}

std::vector<double> snapshot(const VdnModel& model, Group g) {
  std::vector<double> out;
  for (const auto& p : model.params(g)) {
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  return out;
}

Dataset tiny_dataset(std::size_t n_per_domain, std::size_t domains, Rng& rng) {
  Dataset data;
  data.feature_dim = 12;
  data.class_count = 4;
  data.domain_count = domains;
  for (std::size_t d = 0; d < domains; ++d) {
    for (std::size_t i = 0; i < n_per_domain; ++i) {
      LabeledExample e;
      e.x.resize(12);
      for (auto& v : e.x) v = rng.uniform(-1, 1);
      e.y = static_cast<int>(i % 4);
      e.d = static_cast<int>(d);
      data.examples.push_back(std::move(e));
    }
  }
  return data;
}

}  // namespace

TEST_CASE("rmsprop with zero gradient decays state and keeps the parameter") {
  std::vector<double> p = {1.5}, g = {0.0}, s = {0.04};
  rmsprop_update(p, g, s, 1e-3, 0.99, 1e-8);
  CHECK(p[0] == 1.5);
  CHECK(s[0] == doctest::Approx(0.0396).epsilon(1e-15));
}

TEST_CASE("rmsprop single step matches the hand computation") {
  std::vector<double> p = {0.0}, g = {1.0}, s = {0.0};
  rmsprop_update(p, g, s, 5e-5, 0.99, 1e-8);
  CHECK(s[0] == doctest::Approx(0.01).epsilon(1e-15));
  const double expected = -5e-5 / (0.1 + 1e-8);
  CHECK(p[0] == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("rmsprop two constant-gradient steps reproduce the recurrence") {
  const double rho = 0.9, eps = 1e-8, lr = 0.01, grad = 0.5;
  std::vector<double> p = {0.0}, g = {grad}, s = {0.0};
  rmsprop_update(p, g, s, lr, rho, eps);
  rmsprop_update(p, g, s, lr, rho, eps);
  // Independent recurrence.
  double s_ref = 0.0, p_ref = 0.0;
  for (int i = 0; i < 2; ++i) {
    s_ref = rho * s_ref + (1 - rho) * grad * grad;
    p_ref -= lr * grad / (std::sqrt(s_ref) + eps);
  }
  CHECK(p[0] == doctest::Approx(p_ref).epsilon(1e-15));
  CHECK(s[0] == doctest::Approx(s_ref).epsilon(1e-15));
}

TEST_CASE("shuffle of a single row is the identity") {
  Rng rng(1);
  Tensor z = Tensor::from_data({1, 3}, {1.0, 2.0, 3.0});
  ShuffledStyles s = shuffle_styles(z, rng);
  CHECK(s.perm == std::vector<std::size_t>{0});
  CHECK(s.z_d.data() == z.data());
}

TEST_CASE("shuffle preserves the multiset of rows") {
  Rng rng(2);
  Tensor z = Tensor::from_data({4, 2}, {1, 1, 2, 2, 3, 3, 4, 4});
  ShuffledStyles s = shuffle_styles(z, rng);
  std::multiset<double> before(z.data().begin(), z.data().end());
  std::multiset<double> after(s.z_d.data().begin(), s.z_d.data().end());
  CHECK(before == after);
}

TEST_CASE("three-row shuffles hit all six permutations uniformly") {
  Rng rng(3);
  Tensor z = Tensor::from_data({3, 1}, {0, 1, 2});
  std::map<std::vector<std::size_t>, int> counts;
  const int trials = 10000;
  for (int i = 0; i < trials; ++i) {
    counts[shuffle_styles(z, rng).perm]++;
  }
  CHECK(counts.size() == 6);
  for (const auto& [perm, c] : counts) {
    const double freq = static_cast<double>(c) / trials;
    CHECK(std::fabs(freq - 1.0 / 6.0) < 0.02);
  }
}

TEST_CASE("learning-rate schedules follow their closed forms") {
  TrainConfig cfg;
  cfg.schedule = LrSchedule::StepDecay;
  cfg.step_decay_epoch = 50;
  cfg.step_decay_gamma = 0.1;
  CHECK(lr_factor(cfg, 0) == 1.0);
  CHECK(lr_factor(cfg, 49) == 1.0);
  CHECK(lr_factor(cfg, 50) == 0.1);
  CHECK(lr_factor(cfg, 99) == 0.1);

  cfg.schedule = LrSchedule::Cosine;
  cfg.cosine_epochs = 100;
  for (std::size_t e : {0ul, 10ul, 50ul, 99ul, 100ul, 130ul}) {
    const double t = std::min(1.0, static_cast<double>(e) / 100.0);
    const double expected = 0.5 * (1.0 + std::cos(std::numbers::pi * t));
    CHECK(std::fabs(lr_factor(cfg, e) - expected) < 1e-15);
  }
  CHECK(lr_factor(cfg, 100) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("critic updates follow the configured cadence") {
  ModelConfig mc = small_config();
  VdnModel model(mc, 41);
  TrainConfig tc;
  tc.critic_update_every = 5;
  tc.task_lr = 0.01;
  tc.gan_lr = 0.01;
  tc.seed = 7;
  Trainer trainer(model, tc);
  Rng rng(6);
  for (std::size_t step = 1; step <= 10; ++step) {
    Batch batch = random_batch(mc, 4, rng);
    const auto dx_before = snapshot(model, Group::Dx);
    const auto dc_before = snapshot(model, Group::Dc);
    const auto ec_before = snapshot(model, Group::Ec);
    trainer.train_step(batch, step);
    const bool critic_changed = snapshot(model, Group::Dx) != dx_before ||
                                snapshot(model, Group::Dc) != dc_before;
    CHECK(critic_changed == (step % 5 == 0));
    CHECK(snapshot(model, Group::Ec) != ec_before);  // generator updates always
  }
}

TEST_CASE("cadence one updates both groups every step") {
  ModelConfig mc = small_config();
  VdnModel model(mc, 43);
  TrainConfig tc;
  tc.critic_update_every = 1;
  tc.task_lr = 0.01;
  tc.gan_lr = 0.01;
  Trainer trainer(model, tc);
  Rng rng(8);
  for (std::size_t step = 1; step <= 3; ++step) {
    Batch batch = random_batch(mc, 4, rng);
    const auto dx_before = snapshot(model, Group::Dx);
    trainer.train_step(batch, step);
    CHECK(snapshot(model, Group::Dx) != dx_before);
  }
}

TEST_CASE("zero learning rates leave parameters bit-identical") {
  ModelConfig mc = small_config();
  VdnModel model(mc, 47);
  TrainConfig tc;
  tc.task_lr = 0.0;
  tc.gan_lr = 0.0;
  tc.critic_update_every = 1;
  Trainer trainer(model, tc);
  Rng rng(9);
  Batch batch = random_batch(mc, 4, rng);
  std::vector<std::vector<double>> before;
  for (Group g : {Group::Ec, Group::Ed, Group::Et, Group::G, Group::Dx, Group::Dc})
    before.push_back(snapshot(model, g));
  trainer.train_step(batch, 1);
  std::size_t k = 0;
  for (Group g : {Group::Ec, Group::Ed, Group::Et, Group::G, Group::Dx, Group::Dc})
    CHECK(snapshot(model, g) == before[k++]);
}

TEST_CASE("fit with zero epochs changes nothing and returns an empty log") {
  ModelConfig mc = small_config();
  VdnModel model(mc, 53);
  TrainConfig tc;
  tc.epochs = 0;
  Trainer trainer(model, tc);
  Rng rng(10);
  Dataset data = tiny_dataset(8, 2, rng);
  const auto before = snapshot(model, Group::Ec);
  TrainLog log = trainer.fit(data, Dataset{});
  CHECK(log.epochs.empty());
  CHECK(snapshot(model, Group::Ec) == before);
}

TEST_CASE("identical seeds give identical trajectories") {
  auto run = [] {
    ModelConfig mc = small_config();
    VdnModel model(mc, 59);
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 8;
    tc.task_lr = 0.05;
    tc.gan_lr = 1e-4;
    tc.seed = 17;
    Trainer trainer(model, tc);
    Rng rng(11);
    Dataset data = tiny_dataset(12, 2, rng);
    TrainLog log = trainer.fit(data, Dataset{});
    std::vector<double> params;
    for (Group g : {Group::Ec, Group::Ed, Group::Et, Group::G, Group::Dx, Group::Dc}) {
      auto s = snapshot(model, g);
      params.insert(params.end(), s.begin(), s.end());
    }
    return std::make_pair(log, params);
  };
  auto [log1, p1] = run();
  auto [log2, p2] = run();
  CHECK(p1 == p2);
  REQUIRE(log1.epochs.size() == log2.epochs.size());
  for (std::size_t e = 0; e < log1.epochs.size(); ++e) {
    CHECK(log1.epochs[e].mean_loss.total == log2.epochs[e].mean_loss.total);
    CHECK(log1.epochs[e].train_accuracy == log2.epochs[e].train_accuracy);
    CHECK(log1.epochs[e].mean_kl == log2.epochs[e].mean_kl);
  }
}

TEST_CASE("a critic ascent step improves the critic objective on average") {
  // Frozen generator, small lr, averaged over seeds.
  int improved = 0;
  const int trials = 6;
  for (int t = 0; t < trials; ++t) {
    ModelConfig mc = small_config();
    VdnModel model(mc, 61 + static_cast<std::uint64_t>(t));
    TrainConfig tc;
    tc.task_lr = 0.0;  // freeze task nets
    tc.gan_lr = 5e-3;
    tc.gan_optimizer = OptimKind::Sgd;
    tc.critic_update_every = 1;
    tc.seed = 100 + static_cast<std::uint64_t>(t);
    Trainer trainer(model, tc);
    Rng rng(200 + t);
    Batch batch = random_batch(mc, 16, rng);

    ObjectiveOptions opts;
    LossWeights w;
    auto critic_value = [&](std::uint64_t s) {
      Rng eval_rng(s);
      TotalLoss tl = total_loss(model, batch, w, Phase::Critic, eval_rng, opts);
      return -tl.report.total;  // the maximized quantity
    };
    const double before = critic_value(999);
    // One critic-only step: generator groups frozen by zero task lr, but Ed/G
    // still have gan_lr; isolate by running the critic phase directly.
    model.set_group_requires_grad(Group::Ec, false);
    model.set_group_requires_grad(Group::Ed, false);
    model.set_group_requires_grad(Group::Et, false);
    model.set_group_requires_grad(Group::G, false);
    model.set_group_requires_grad(Group::Dx, true);
    model.set_group_requires_grad(Group::Dc, true);
    model.zero_all_grads();
    Rng step_rng(999);
    TotalLoss tl = total_loss(model, batch, w, Phase::Critic, step_rng, opts);
    tl.total.backward();
    for (Group g : {Group::Dx, Group::Dc}) {
      for (auto& p : model.params(g)) {
        if (p.grad().empty()) continue;
        auto& data = p.data();
        for (std::size_t i = 0; i < data.size(); ++i) data[i] -= 5e-3 * p.grad()[i];
      }
    }
    if (critic_value(999) > before) ++improved;
  }
  CHECK(improved >= 5);
}

TEST_CASE("toy runner smoke test") {
  ToyConfig cfg;
  cfg.epochs = 3;
  cfg.n_train = 128;
  cfg.n_test = 128;
  cfg.seed = 5;
  cfg.with_reg = true;
  ToyResult res = run_toy_xor(cfg);
  CHECK(res.acc_per_epoch.size() == 3);
  CHECK(res.test_accuracy >= 0.0);
  CHECK(res.test_accuracy <= 1.0);
  CHECK(std::isfinite(res.final_kl));
}
