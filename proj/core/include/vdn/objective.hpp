#pragma once

#include <optional>
#include <vector>

#include "vdn/model.hpp"
#include "vdn/rng.hpp"

namespace vdn {

struct LossWeights {
  double lambda_reg = 0.1;
  double lambda_rec = 1.0;
  double lambda_gan = 1.0;

  void validate() const {
    if (lambda_reg < 0 || lambda_rec < 0 || lambda_gan < 0) {
      throw ConfigError("LossWeights: weights must be non-negative");
    }
  }
};

struct Batch {
  Tensor x;            // (B, input_dim)
  std::vector<int> y;  // class labels
  std::vector<int> d;  // domain labels
};

enum class Phase { Generator, Critic };

struct LossReport {
  double l_task = 0.0;
  double l_reg = 0.0;
  double l_rec = 0.0;
  double l_gan = 0.0;
  double total = 0.0;
  // Diagnostic gradient norms per term; filled only when requested.
  double grad_norm_task = 0.0;
  double grad_norm_reg = 0.0;
  double grad_norm_rec = 0.0;
  double grad_norm_gan = 0.0;

  bool finite() const;
};

struct ObjectiveOptions {
  bool augmentation = true;        // second term of the task loss
  bool reparameterize = true;      // sample z_c instead of using the mean
  bool detach_augmentation = false;  // cut grad into G/E_c from the aug term
  bool use_reg = true;             // information gain term
  bool use_gan = true;             // adversarial posterior terms
  bool use_rec = true;             // perceptual reconstruction
  bool term_grad_norms = false;    // fill LossReport diagnostics
};

// Cross entropy of E_t on real inputs plus, when enabled, on generated
// samples labeled by their content source. In toy mode the single-logit
// head is paired with an implicit zero logit for class 0.
Tensor l_task(const VdnModel& model, const Tensor& x, const std::vector<int>& y,
              const Tensor* x_gen, const std::vector<int>* y_gen);

// Mean L1 distance between frozen perceptual features of x and of its
// reconstruction through the content mean and style code.
Tensor l_rec(const VdnModel& model, const Tensor& x);

// Adversarial image loss. critic_term = E[D_x(x|d)] - E[D_x(G|d')] where d'
// is the style source's domain; generator_term is the negated fake term.
struct GanTerms {
  Tensor generator_term;
  Tensor critic_term;
};
GanTerms l_gan(const VdnModel& model, const Tensor& x_real,
               const std::vector<int>& real_domains, const Tensor& x_fake,
               const std::vector<int>& style_domains);

// One full loss evaluation for the given phase, consuming rng for the
// reparameterization noise, the style shuffle, the prior draws and the
// critic's random real tags, in that order. The returned total tensor is
// ready for backward(); parameter groups outside the phase have had
// requires_grad turned off by the caller.
struct TotalLoss {
  Tensor total;
  LossReport report;
  std::vector<std::size_t> style_perm;
};
TotalLoss total_loss(const VdnModel& model, const Batch& batch,
                     const LossWeights& weights, Phase phase, Rng& rng,
                     const ObjectiveOptions& opts);

// One-hot rows for a label vector.
Tensor one_hot(const std::vector<int>& labels, std::size_t classes);

}  // namespace vdn
