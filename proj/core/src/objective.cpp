#include "vdn/objective.hpp"

#include <cmath>

#include "vdn/fdiv.hpp"

namespace vdn {

bool LossReport::finite() const {
  return std::isfinite(l_task) && std::isfinite(l_reg) && std::isfinite(l_rec) &&
         std::isfinite(l_gan) && std::isfinite(total);
}

Tensor one_hot(const std::vector<int>& labels, std::size_t classes) {
  std::vector<double> data(labels.size() * classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw ContractError("one_hot: label " + std::to_string(y) +
                          " out of range [0, " + std::to_string(classes) + ")");
    }
    data[i * classes + static_cast<std::size_t>(y)] = 1.0;
  }
  return Tensor::from_data(Shape{labels.size(), classes}, std::move(data));
}

namespace {

// Pair a single-logit head with an implicit zero logit so binary heads run
// through the same cross-entropy as multi-class ones.
Tensor as_two_class(const Tensor& logits) {
  Tensor zeros = Tensor::zeros(Shape{logits.shape()[0], 1});
  return concat(zeros, logits, 1);
}

Tensor ce_through_head(const VdnModel& model, const Tensor& z_c,
                       const std::vector<int>& y) {
  Tensor logits = model.task_logits(z_c);
  if (logits.shape()[1] == 1) logits = as_two_class(logits);
  return softmax_cross_entropy(logits, y);
}

}  // namespace

Tensor l_task(const VdnModel& model, const Tensor& x, const std::vector<int>& y,
              const Tensor* x_gen, const std::vector<int>* y_gen) {
  DiagGaussian q = model.encode_content(x);
  Tensor loss = ce_through_head(model, q.mu, y);
  if (x_gen != nullptr) {
    if (y_gen == nullptr || y_gen->size() != x_gen->shape()[0]) {
      throw ContractError("l_task: generated batch needs inherited labels");
    }
    DiagGaussian qg = model.encode_content(*x_gen);
    loss = add(loss, ce_through_head(model, qg.mu, *y_gen));
  }
  return loss;
}

Tensor l_rec(const VdnModel& model, const Tensor& x) {
  EncodeResult enc = model.encode(x);
  Tensor x_hat = model.generate(enc.q_zc.mu, enc.z_d);
  Tensor diff = abs(sub(model.perceptual(x), model.perceptual(x_hat)));
  return scale(sum(diff), 1.0 / static_cast<double>(x.shape()[0]));
}

GanTerms l_gan(const VdnModel& model, const Tensor& x_real,
               const std::vector<int>& real_domains, const Tensor& x_fake,
               const std::vector<int>& style_domains) {
  if (real_domains.size() != x_real.shape()[0] ||
      style_domains.size() != x_fake.shape()[0]) {
    throw ContractError("l_gan: missing domain labels");
  }
  Tensor real = mean(model.image_critic(x_real, real_domains));
  Tensor fake = mean(model.image_critic(x_fake, style_domains));
  return GanTerms{neg(fake), sub(real, fake)};
}

TotalLoss total_loss(const VdnModel& model, const Batch& batch,
                     const LossWeights& weights, Phase phase, Rng& rng,
                     const ObjectiveOptions& opts) {
  weights.validate();
  const std::size_t b = batch.x.shape()[0];
  if (batch.y.size() != b || batch.d.size() != b) {
    throw ContractError("total_loss: batch labels do not match batch size");
  }
  const auto& cfg = model.config();

  EncodeResult enc = model.encode(batch.x);
  Tensor z_c = enc.q_zc.mu;
  if (opts.reparameterize) {
    Tensor noise = Tensor::from_data(z_c.shape(), rng.normal_vec(z_c.size()));
    z_c = reparam_sample(enc.q_zc, noise);
  }

  // Style shuffle (Algorithm step): permute z_d rows, remember the source
  // domain of every style for the conditional critic.
  std::vector<std::size_t> perm = rng.permutation(b);
  Tensor z_d_shuffled = take_rows(enc.z_d, perm);
  std::vector<int> style_domains(b);
  std::vector<int> gen_labels(b);
  for (std::size_t i = 0; i < b; ++i) {
    style_domains[i] = batch.d[perm[i]];
    gen_labels[i] = batch.y[i];  // content keeps its label
  }

  const bool needs_gan = opts.use_gan && weights.lambda_gan > 0.0;
  const bool needs_aug = opts.augmentation;
  Tensor x_rand;
  if (needs_gan || needs_aug) {
    x_rand = model.generate(z_c, z_d_shuffled);
  }

  Tensor task, reg, rec;
  GanTerms gan;

  if (phase == Phase::Generator) {
    Tensor x_aug;
    const Tensor* aug_ptr = nullptr;
    if (needs_aug) {
      x_aug = opts.detach_augmentation
                  ? Tensor::from_data(x_rand.shape(), x_rand.data())
                  : x_rand;
      aug_ptr = &x_aug;
    }
    task = l_task(model, batch.x, batch.y, aug_ptr, needs_aug ? &gen_labels : nullptr);
    if (opts.use_rec && weights.lambda_rec > 0.0) rec = l_rec(model, batch.x);
  }

  if (opts.use_reg && weights.lambda_reg > 0.0) {
    Tensor prior = Tensor::from_data(z_c.shape(), rng.normal_vec(z_c.size()));
    std::vector<int> random_domains(b);
    for (auto& d : random_domains)
      d = static_cast<int>(rng.uniform_index(cfg.domain_count));
    Tensor fake_tags = one_hot(batch.d, cfg.domain_count);
    Tensor real_tags = one_hot(random_domains, cfg.domain_count);
    reg = l_reg(z_c, prior, fake_tags, real_tags,
                [&model](const Tensor& in) { return model.code_critic(in); });
  }

  if (needs_gan) {
    gan = l_gan(model, batch.x, batch.d, x_rand, style_domains);
  }

  TotalLoss out;
  out.style_perm = std::move(perm);
  auto& r = out.report;
  r.l_task = task.defined() ? task.value() : 0.0;
  r.l_reg = reg.defined() ? reg.value() : 0.0;
  r.l_rec = rec.defined() ? rec.value() : 0.0;
  r.l_gan = gan.critic_term.defined() ? gan.critic_term.value() : 0.0;

  if (phase == Phase::Generator) {
    Tensor total = task.defined() ? task : Tensor::scalar(0.0);
    if (reg.defined()) total = add(total, scale(reg, weights.lambda_reg));
    if (gan.critic_term.defined())
      total = add(total, scale(gan.critic_term, weights.lambda_gan));
    if (rec.defined()) total = add(total, scale(rec, weights.lambda_rec));
    out.total = total;
  } else {
    // L_dis = -(lambda_reg L_reg + lambda_gan L_gan)
    Tensor acc = Tensor::scalar(0.0);
    if (reg.defined()) acc = add(acc, scale(reg, weights.lambda_reg));
    if (gan.critic_term.defined())
      acc = add(acc, scale(gan.critic_term, weights.lambda_gan));
    out.total = neg(acc);
  }
  r.total = out.total.value();

  if (opts.term_grad_norms) {
    auto norm_of = [&model](const Tensor& term) {
      const_cast<VdnModel&>(model).zero_all_grads();
      term.backward();
      double acc = 0.0;
      for (const auto& p : model.trainable_params()) {
        for (double g : p.grad()) acc += g * g;
      }
      return std::sqrt(acc);
    };
    if (task.defined()) r.grad_norm_task = norm_of(task);
    if (reg.defined()) r.grad_norm_reg = norm_of(reg);
    if (rec.defined()) r.grad_norm_rec = norm_of(rec);
    if (gan.critic_term.defined()) r.grad_norm_gan = norm_of(gan.critic_term);
    const_cast<VdnModel&>(model).zero_all_grads();
  }
  return out;
}

}  // namespace vdn
