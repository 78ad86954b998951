#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "vdn/rng.hpp"
#include "vdn/tensor.hpp"

namespace vdn {

struct LabeledExample {
  std::vector<double> x;
  int y = 0;
  int d = 0;
};

struct Dataset {
  std::vector<LabeledExample> examples;
  std::size_t feature_dim = 0;
  std::size_t class_count = 0;
  std::size_t domain_count = 0;
  // Image metadata for the synthetic track; 0 when the data is not an image.
  std::size_t image_hw = 0;
  std::size_t channels = 0;
  bool degenerate_styles = false;

  std::size_t size() const { return examples.size(); }
  void validate() const;
};

// One domain's style: an invertible per-pixel affine map in channel space
// (channel mixing gains), an additive background field (planar gradient plus
// a wave, each with its own color), and a monotone contrast curve. The final
// squash into (-1, 1) is tanh, so every style is exactly invertible.
struct DomainStyle {
  std::array<double, 9> channel_mix;  // row-major 3x3, invertible
  double angle = 0.0;                 // background orientation
  double phase = 0.0;
  double freq = 1.0;
  double grad_amp = 0.0;
  double wave_amp = 0.0;
  std::array<double, 3> grad_color{};
  std::array<double, 3> wave_color{};
  double contrast = 1.0;  // sign(v) |v|^contrast before the squash
};

// Content parameters are shared by every domain; only the class changes the
// blob placement. This is what makes the class-conditional content
// distribution domain-invariant by construction.
struct ContentSpec {
  std::size_t image_hw = 12;
  std::size_t classes = 4;
  double blob_amp = 0.55;
  double blob_amp_jitter = 0.25;  // multiplicative, uniform in [1-j, 1+j]
  double center_jitter = 1.4;
  double radius_lo = 1.0;
  double radius_hi = 1.8;
  double pixel_noise = 0.03;
  std::array<double, 3> base_color{1.0, 0.75, 0.5};
};

struct DomainSpec {
  ContentSpec content;
  std::vector<DomainStyle> styles;

  std::size_t domains() const { return styles.size(); }
};

// Ground-truth latent factors of one generated example, for probes.
struct ContentFactors {
  double center_y = 0.0;
  double center_x = 0.0;
  double radius = 0.0;
  double amplitude = 0.0;
};

// The appendix toy task: x ~ U(-1,1)^3, y = parity of the coordinate signs,
// single pseudo-domain.
Dataset gen_xor(std::size_t n, Rng& rng);

// Styles drawn from a fixed family: well-conditioned random channel mixes
// plus domain-specific background fields.
DomainSpec default_domain_spec(std::size_t domains = 4, std::size_t classes = 4,
                               std::size_t image_hw = 12,
                               std::uint64_t style_seed = 42);

Dataset gen_multidomain(const DomainSpec& spec, std::size_t n_per_domain,
                        Rng& rng);
Dataset gen_multidomain(const DomainSpec& spec, std::size_t n_per_domain,
                        Rng& rng, std::vector<ContentFactors>* factors_out);

// Split into (train = everything else, test = the held-out domain).
std::pair<Dataset, Dataset> lodo_split(const Dataset& data, int held_out_domain);

// Apply / exactly invert one domain style on a raw content image
// (channel-major, values pre-squash). Used by the translation oracle tests.
std::vector<double> apply_style(const DomainStyle& s, std::size_t hw,
                                const std::vector<double>& content);
std::vector<double> invert_style(const DomainStyle& s, std::size_t hw,
                                 const std::vector<double>& styled);

// Serialization: `<stem>.manifest` (text) + `<stem>.blob` (little-endian f64;
// per example: x[feature_dim], y, d).
void save_dataset(const Dataset& data, const std::string& stem);
Dataset load_dataset(const std::string& stem);

// Batch assembly helpers.
Tensor examples_tensor(const Dataset& data, const std::vector<std::size_t>& idx);
std::vector<int> labels_of(const Dataset& data, const std::vector<std::size_t>& idx);
std::vector<int> domains_of(const Dataset& data, const std::vector<std::size_t>& idx);

}  // namespace vdn
