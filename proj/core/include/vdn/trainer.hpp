#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vdn/datasets.hpp"
#include "vdn/objective.hpp"

namespace vdn {

enum class OptimKind { Sgd, RmsProp };
enum class LrSchedule { Constant, StepDecay, Cosine };

struct TrainConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 64;
  // Two optimizer groups, mirroring the split between the task networks
  // (E_c, E_t) and the adversarial machinery (E_d, G, D_x, D_c).
  OptimKind task_optimizer = OptimKind::Sgd;
  double task_lr = 0.05;
  OptimKind gan_optimizer = OptimKind::RmsProp;
  double gan_lr = 5e-5;
  double rmsprop_rho = 0.99;
  double rmsprop_eps = 1e-8;
  // Critic groups update once per this many generator updates.
  std::size_t critic_update_every = 5;
  LrSchedule schedule = LrSchedule::Constant;
  std::size_t step_decay_epoch = 50;
  double step_decay_gamma = 0.1;
  std::size_t cosine_epochs = 100;
  std::uint64_t seed = 1;
  bool clip_gradients = false;
  double clip_norm = 5.0;
  LossWeights weights;
  ObjectiveOptions objective;

  void validate() const;
};

// s <- rho s + (1 - rho) g^2 ; theta <- theta - lr g / (sqrt(s) + eps)
void rmsprop_update(std::vector<double>& param, const std::vector<double>& grad,
                    std::vector<double>& state, double lr, double rho,
                    double eps);
void sgd_update(std::vector<double>& param, const std::vector<double>& grad,
                double lr);

// Per-parameter-group optimizer with its own kind, base rate and state.
class GroupOptimizer {
 public:
  GroupOptimizer(OptimKind kind, double base_lr, double rho, double eps,
                 std::vector<Tensor> params);

  void step(double lr_factor);
  double base_lr() const { return base_lr_; }

 private:
  OptimKind kind_;
  double base_lr_, rho_, eps_;
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> state_;
};

// Closed-form learning-rate factor at a given epoch (multiplies base lr).
double lr_factor(const TrainConfig& cfg, std::size_t epoch);

struct ShuffledStyles {
  Tensor z_d;
  std::vector<std::size_t> perm;
};
// Uniformly random row permutation of a style batch.
ShuffledStyles shuffle_styles(const Tensor& z_d, Rng& rng);

struct EpochRecord {
  std::size_t epoch = 0;
  LossReport mean_loss;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::map<int, double> train_accuracy_per_domain;
  std::map<int, double> test_accuracy_per_domain;
  double mean_kl = 0.0;  // closed-form D(Q(z_c|x) || N(0, I)) on the train set
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
};

class Trainer {
 public:
  Trainer(VdnModel& model, const TrainConfig& cfg);

  // One generator update, plus a critic update when the 1-based step index
  // is a multiple of critic_update_every. Throws NumericError with the
  // diagnostic report embedded in the message if the loss goes non-finite.
  LossReport train_step(const Batch& batch, std::size_t step_index);

  // Full Algorithm run: stratified balanced batches, per-epoch reshuffle,
  // schedule, per-epoch evaluation. Final model is the trained `model`.
  TrainLog fit(const Dataset& train, const Dataset& test);

  Rng& rng() { return rng_; }

 private:
  void apply_phase_masks(Phase phase);
  void update_groups(Phase phase);

  VdnModel& model_;
  TrainConfig cfg_;
  Rng rng_;
  GroupOptimizer task_opt_;
  GroupOptimizer gen_gan_opt_;
  GroupOptimizer critic_opt_;
  double current_lr_factor_ = 1.0;
};

// Accuracy of the inference path (E_c mean + E_t) over a dataset.
double evaluate_accuracy(const VdnModel& model, const Dataset& data);
std::map<int, double> evaluate_accuracy_per_domain(const VdnModel& model,
                                                   const Dataset& data);
// Mean closed-form KL(Q(z_c|x) || N(0,I)) over a dataset.
double mean_conditional_kl(const VdnModel& model, const Dataset& data);

// The appendix XOR experiment: tiny reparameterized classifier trained with
// plain SGD, optionally with the adversarial information-gain regularizer.
struct ToyConfig {
  std::size_t n_train = 2000;
  std::size_t n_test = 2000;
  std::size_t epochs = 1200;
  std::size_t batch_size = 64;
  double lr = 0.4;
  double critic_lr = 0.1;
  double lambda_reg = 0.3;
  std::size_t critic_update_every = 1;
  bool cosine = true;  // anneal both learning rates to zero over the run
  bool with_reg = true;
  std::uint64_t seed = 1;
};

struct ToyResult {
  double test_accuracy = 0.0;
  double final_kl = 0.0;  // D(Q(z_c|x) || P(z_c)) at end of training
  std::vector<double> kl_per_epoch;
  std::vector<double> acc_per_epoch;
};

ToyResult run_toy_xor(const ToyConfig& cfg);

}  // namespace vdn
