#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vdn/distributions.hpp"
#include "vdn/rng.hpp"
#include "vdn/tensor.hpp"

namespace vdn {

struct ModelConfig {
  std::size_t input_dim = 432;  // flattened feature size
  std::size_t zc_dim = 8;
  std::size_t zd_dim = 4;
  std::size_t hidden = 64;
  std::size_t critic_hidden = 64;
  std::size_t ep_dim = 32;  // width of the frozen perceptual features
  std::size_t class_count = 4;
  std::size_t domain_count = 4;
  bool reparameterize = true;
  // Tiny fully-connected topology (3,3) -> (3,2) -> (2,1) used by the XOR
  // experiment; forces zc_dim = 2, input_dim = 3 and a 1-logit task head.
  bool toy_mode = false;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

enum class Group { Ec, Ed, Et, G, Dx, Dc };

const char* group_name(Group g);

struct Linear {
  Tensor w;  // (in, out)
  Tensor b;  // (out)

  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng);
  Tensor operator()(const Tensor& x) const;  // x (B, in) -> (B, out)
};

struct EncodeResult {
  DiagGaussian q_zc;  // (B, zc)
  Tensor z_d;         // (B, zd)
};

// The six trainable networks plus the frozen perceptual map E_p.
// Test-time inference touches only E_c's mean head and E_t.
class VdnModel {
 public:
  VdnModel(const ModelConfig& cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }

  // Content path only (E_c); safe for inference-only use.
  DiagGaussian encode_content(const Tensor& x) const;
  // Full encoder pass: content distribution and style code.
  EncodeResult encode(const Tensor& x) const;
  // G(z_c, z_d) squashed to [-1, 1].
  Tensor generate(const Tensor& z_c, const Tensor& z_d) const;
  // E_t class logits from content codes. In toy mode the head emits one
  // logit; callers pair it with an implicit zero logit for class 0.
  Tensor task_logits(const Tensor& z_c) const;
  // D_x with one output head per source domain, selected by the style
  // source's domain label.
  Tensor image_critic(const Tensor& x, const std::vector<int>& style_domains) const;
  // D_c dual critic on (code ++ one-hot tag); output strictly negative (B).
  Tensor code_critic(const Tensor& code_and_tag) const;
  // Frozen perceptual features; never receives gradient.
  Tensor perceptual(const Tensor& x) const;

  // argmax class prediction through E_c mean + E_t only.
  std::vector<int> predict(const Tensor& x) const;

  std::vector<Tensor> params(Group g) const;
  std::vector<Tensor> trainable_params() const;
  std::vector<std::pair<std::string, Tensor>> named_params() const;  // incl. E_p

  void set_group_requires_grad(Group g, bool on);
  void zero_all_grads();

  // Checkpoint: `<stem>.manifest` text file plus `<stem>.blob` little-endian
  // f64 payload. Round-trips are byte-identical.
  void save(const std::string& stem) const;
  static VdnModel load(const std::string& stem);
  // Load and verify the stored config against an expected one; a class or
  // domain count drift raises ConfigError before any weights are touched.
  static VdnModel load(const std::string& stem, const ModelConfig& expected);

 private:
  VdnModel() = default;

  ModelConfig cfg_;
  // E_c trunk + two heads emitting mu and log_var.
  std::vector<Linear> ec_trunk_;
  Linear ec_mu_, ec_logvar_;
  std::vector<Linear> ed_;
  std::vector<Linear> et_;
  std::vector<Linear> g_;
  std::vector<Linear> dx_;
  std::vector<Linear> dc_;
  std::vector<Linear> ep_;  // frozen
};

}  // namespace vdn
