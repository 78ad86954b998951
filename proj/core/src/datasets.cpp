#include "vdn/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace vdn {

void Dataset::validate() const {
  for (const auto& e : examples) {
    if (e.x.size() != feature_dim) throw InvariantError("Dataset: ragged features");
    if (e.y < 0 || static_cast<std::size_t>(e.y) >= class_count) {
      throw InvariantError("Dataset: label " + std::to_string(e.y) + " out of range");
    }
    if (e.d < 0 || static_cast<std::size_t>(e.d) >= domain_count) {
      throw InvariantError("Dataset: domain " + std::to_string(e.d) + " out of range");
    }
    for (double v : e.x) {
      if (!std::isfinite(v)) throw InvariantError("Dataset: non-finite feature");
    }
  }
}

Dataset gen_xor(std::size_t n, Rng& rng) {
  if (n == 0) throw ContractError("gen_xor: n must be positive");
  Dataset out;
  out.feature_dim = 3;
  out.class_count = 2;
  out.domain_count = 1;
  out.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    LabeledExample e;
    e.x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    const int bits = (e.x[0] > 0.0) + (e.x[1] > 0.0) + (e.x[2] > 0.0);
    e.y = bits % 2;
    e.d = 0;
    out.examples.push_back(std::move(e));
  }
  return out;
}

namespace {

std::array<double, 9> well_conditioned_mix(Rng& rng) {
  // Random 3x3 with singular values clipped into [0.5, 2.0]; invertible and
  // far from degenerate. Clipping happens through a crude polar-ish iteration:
  // we instead sample until the determinant and norms are in a healthy band.
  for (;;) {
    std::array<double, 9> a;
    for (std::size_t i = 0; i < 9; ++i) {
      const bool diag = (i % 4) == 0;
      a[i] = (diag ? 1.0 : 0.0) + rng.uniform(-0.4, 0.4);
    }
    const double det = a[0] * (a[4] * a[8] - a[5] * a[7]) -
                       a[1] * (a[3] * a[8] - a[5] * a[6]) +
                       a[2] * (a[3] * a[7] - a[4] * a[6]);
    double frob = 0.0;
    for (double v : a) frob += v * v;
    if (det > 0.55 && frob < 6.5) return a;
  }
}

void mix_inverse(const std::array<double, 9>& a, std::array<double, 9>& inv) {
  const double det = a[0] * (a[4] * a[8] - a[5] * a[7]) -
                     a[1] * (a[3] * a[8] - a[5] * a[6]) +
                     a[2] * (a[3] * a[7] - a[4] * a[6]);
  if (std::fabs(det) < 1e-12) throw InvariantError("DomainStyle: singular channel mix");
  const double id = 1.0 / det;
  inv[0] = (a[4] * a[8] - a[5] * a[7]) * id;
  inv[1] = (a[2] * a[7] - a[1] * a[8]) * id;
  inv[2] = (a[1] * a[5] - a[2] * a[4]) * id;
  inv[3] = (a[5] * a[6] - a[3] * a[8]) * id;
  inv[4] = (a[0] * a[8] - a[2] * a[6]) * id;
  inv[5] = (a[2] * a[3] - a[0] * a[5]) * id;
  inv[6] = (a[3] * a[7] - a[4] * a[6]) * id;
  inv[7] = (a[1] * a[6] - a[0] * a[7]) * id;
  inv[8] = (a[0] * a[4] - a[1] * a[3]) * id;
}

std::vector<double> background_field(const DomainStyle& s, std::size_t hw) {
  std::vector<double> bg(3 * hw * hw);
  for (std::size_t u = 0; u < hw; ++u) {
    for (std::size_t v = 0; v < hw; ++v) {
      const double uu = hw > 1 ? -1.0 + 2.0 * static_cast<double>(u) / (hw - 1) : 0.0;
      const double vv = hw > 1 ? -1.0 + 2.0 * static_cast<double>(v) / (hw - 1) : 0.0;
      const double t = std::cos(s.angle) * uu + std::sin(s.angle) * vv;
      const double grad = s.grad_amp * t;
      const double wave =
          s.wave_amp * std::sin(2.0 * std::numbers::pi * s.freq * t + s.phase);
      for (std::size_t c = 0; c < 3; ++c) {
        bg[(c * hw + u) * hw + v] = s.grad_color[c] * grad + s.wave_color[c] * wave;
      }
    }
  }
  return bg;
}

double contrast_fwd(double v, double gamma) {
  if (gamma == 1.0) return v;
  return std::copysign(std::pow(std::fabs(v), gamma), v);
}

double contrast_inv(double v, double gamma) {
  if (gamma == 1.0) return v;
  return std::copysign(std::pow(std::fabs(v), 1.0 / gamma), v);
}

}  // namespace

std::vector<double> apply_style(const DomainStyle& s, std::size_t hw,
                                const std::vector<double>& content) {
  const std::size_t px = hw * hw;
  if (content.size() != 3 * px) throw ContractError("apply_style: bad content size");
  std::vector<double> bg = background_field(s, hw);
  std::vector<double> out(3 * px);
  for (std::size_t p = 0; p < px; ++p) {
    const double r = content[p], g = content[px + p], b = content[2 * px + p];
    for (std::size_t c = 0; c < 3; ++c) {
      double v = s.channel_mix[c * 3] * r + s.channel_mix[c * 3 + 1] * g +
                 s.channel_mix[c * 3 + 2] * b + bg[c * px + p];
      out[c * px + p] = std::tanh(contrast_fwd(v, s.contrast));
    }
  }
  return out;
}

std::vector<double> invert_style(const DomainStyle& s, std::size_t hw,
                                 const std::vector<double>& styled) {
  const std::size_t px = hw * hw;
  if (styled.size() != 3 * px) throw ContractError("invert_style: bad image size");
  std::array<double, 9> inv;
  mix_inverse(s.channel_mix, inv);
  std::vector<double> bg = background_field(s, hw);
  std::vector<double> out(3 * px);
  for (std::size_t p = 0; p < px; ++p) {
    double pre[3];
    for (std::size_t c = 0; c < 3; ++c) {
      const double y = styled[c * px + p];
      if (!(y > -1.0 && y < 1.0)) {
        throw DomainError("invert_style: value outside (-1, 1)");
      }
      pre[c] = contrast_inv(std::atanh(y), s.contrast) - bg[c * px + p];
    }
    for (std::size_t c = 0; c < 3; ++c) {
      out[c * px + p] =
          inv[c * 3] * pre[0] + inv[c * 3 + 1] * pre[1] + inv[c * 3 + 2] * pre[2];
    }
  }
  return out;
}

DomainSpec default_domain_spec(std::size_t domains, std::size_t classes,
                               std::size_t image_hw, std::uint64_t style_seed) {
  if (domains < 1 || classes < 2) {
    throw ContractError("default_domain_spec: need >= 1 domain and >= 2 classes");
  }
  DomainSpec spec;
  spec.content.image_hw = image_hw;
  spec.content.classes = classes;
  Rng rng(style_seed);
  for (std::size_t d = 0; d < domains; ++d) {
    DomainStyle s;
    s.channel_mix = well_conditioned_mix(rng);
    s.angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    s.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    s.freq = rng.uniform(0.5, 1.5);
    s.grad_amp = rng.uniform(0.5, 0.85);
    s.wave_amp = rng.uniform(0.4, 0.7);
    for (auto* col : {&s.grad_color, &s.wave_color}) {
      double mx = 0.0;
      for (auto& v : *col) {
        v = rng.uniform(-1.0, 1.0);
        mx = std::max(mx, std::fabs(v));
      }
      for (auto& v : *col) v /= std::max(mx, 1e-9);
    }
    s.contrast = 1.0;
    spec.styles.push_back(s);
  }
  return spec;
}

Dataset gen_multidomain(const DomainSpec& spec, std::size_t n_per_domain,
                        Rng& rng) {
  return gen_multidomain(spec, n_per_domain, rng, nullptr);
}

Dataset gen_multidomain(const DomainSpec& spec, std::size_t n_per_domain,
                        Rng& rng, std::vector<ContentFactors>* factors_out) {
  if (spec.domains() < 3) throw ContractError("gen_multidomain: need >= 3 domains");
  if (spec.content.classes < 2) throw ContractError("gen_multidomain: need >= 2 classes");
  if (n_per_domain == 0) throw ContractError("gen_multidomain: n_per_domain must be positive");
  const auto& c = spec.content;
  const std::size_t hw = c.image_hw;
  const std::size_t px = hw * hw;

  // Identical styles would make the domains indistinguishable; flag it.
  bool degenerate = false;
  for (std::size_t i = 0; i + 1 < spec.styles.size() && !degenerate; ++i) {
    degenerate = spec.styles[i].channel_mix == spec.styles[i + 1].channel_mix &&
                 spec.styles[i].grad_amp == spec.styles[i + 1].grad_amp &&
                 spec.styles[i].angle == spec.styles[i + 1].angle;
  }

  Dataset out;
  out.feature_dim = 3 * px;
  out.class_count = c.classes;
  out.domain_count = spec.domains();
  out.image_hw = hw;
  out.channels = 3;
  out.degenerate_styles = degenerate;
  out.examples.reserve(spec.domains() * n_per_domain);

  // Class anchors on a 2x2 quadrant grid (classes beyond 4 subdivide further).
  auto anchor = [&](int y) {
    const double q = static_cast<double>(hw - 1);
    const double lo = 0.25 * q, hi = 0.75 * q;
    switch (y % 4) {
      case 0: return std::pair<double, double>{lo, lo};
      case 1: return std::pair<double, double>{lo, hi};
      case 2: return std::pair<double, double>{hi, lo};
      default: return std::pair<double, double>{hi, hi};
    }
  };

  for (std::size_t d = 0; d < spec.domains(); ++d) {
    for (std::size_t i = 0; i < n_per_domain; ++i) {
      const int y = static_cast<int>(i % c.classes);  // exact class balance
      auto [ay, ax] = anchor(y);
      ContentFactors f;
      f.center_y = ay + rng.uniform(-c.center_jitter, c.center_jitter);
      f.center_x = ax + rng.uniform(-c.center_jitter, c.center_jitter);
      f.radius = rng.uniform(c.radius_lo, c.radius_hi);
      f.amplitude = c.blob_amp * rng.uniform(1.0 - c.blob_amp_jitter,
                                             1.0 + c.blob_amp_jitter);
      std::vector<double> content(3 * px);
      for (std::size_t u = 0; u < hw; ++u) {
        for (std::size_t v = 0; v < hw; ++v) {
          const double dy = static_cast<double>(u) - f.center_y;
          const double dx = static_cast<double>(v) - f.center_x;
          const double blob =
              f.amplitude * std::exp(-(dy * dy + dx * dx) / (2.0 * f.radius * f.radius));
          for (std::size_t ch = 0; ch < 3; ++ch) {
            content[(ch * hw + u) * hw + v] = blob * c.base_color[ch];
          }
        }
      }
      // Per-pixel noise in content space, shared structure across domains.
      for (auto& v : content) v += rng.normal() * c.pixel_noise;

      LabeledExample e;
      e.x = apply_style(spec.styles[d], hw, content);
      e.y = y;
      e.d = static_cast<int>(d);
      out.examples.push_back(std::move(e));
      if (factors_out) factors_out->push_back(f);
    }
  }
  return out;
}

std::pair<Dataset, Dataset> lodo_split(const Dataset& data, int held_out_domain) {
  std::set<int> present;
  for (const auto& e : data.examples) present.insert(e.d);
  if (!present.count(held_out_domain)) {
    throw ContractError("lodo_split: domain " + std::to_string(held_out_domain) +
                        " not present in the dataset");
  }
  Dataset train = data, test = data;
  train.examples.clear();
  test.examples.clear();
  for (const auto& e : data.examples) {
    (e.d == held_out_domain ? test : train).examples.push_back(e);
  }
  return {std::move(train), std::move(test)};
}

void save_dataset(const Dataset& data, const std::string& stem) {
  std::ofstream manifest(stem + ".manifest");
  if (!manifest) throw IoError("save_dataset: cannot write " + stem + ".manifest");
  manifest << "vdn-dataset v1\n";
  manifest << "count = " << data.examples.size() << '\n';
  manifest << "feature_dim = " << data.feature_dim << '\n';
  manifest << "class_count = " << data.class_count << '\n';
  manifest << "domain_count = " << data.domain_count << '\n';
  manifest << "image_hw = " << data.image_hw << '\n';
  manifest << "channels = " << data.channels << '\n';
  manifest << "degenerate_styles = " << (data.degenerate_styles ? 1 : 0) << '\n';
  manifest << "record = x[feature_dim] y d (little-endian f64, row-major, "
              "examples contiguous)\n";
  std::ofstream blob(stem + ".blob", std::ios::binary);
  if (!blob) throw IoError("save_dataset: cannot write " + stem + ".blob");
  for (const auto& e : data.examples) {
    blob.write(reinterpret_cast<const char*>(e.x.data()),
               static_cast<std::streamsize>(e.x.size() * sizeof(double)));
    const double y = e.y, d = e.d;
    blob.write(reinterpret_cast<const char*>(&y), sizeof(double));
    blob.write(reinterpret_cast<const char*>(&d), sizeof(double));
  }
  if (!blob) throw IoError("save_dataset: short write");
}

Dataset load_dataset(const std::string& stem) {
  std::ifstream manifest(stem + ".manifest");
  if (!manifest) throw IoError("load_dataset: cannot read " + stem + ".manifest");
  std::string line;
  if (!std::getline(manifest, line) || line != "vdn-dataset v1") {
    throw IoError("load_dataset: corrupt manifest header");
  }
  Dataset out;
  std::size_t count = 0;
  while (std::getline(manifest, line)) {
    std::istringstream is(line);
    std::string key, eq;
    is >> key >> eq;
    if (key == "record") continue;
    std::size_t value = 0;
    is >> value;
    if (!is || eq != "=") throw IoError("load_dataset: corrupt line: " + line);
    if (key == "count") count = value;
    else if (key == "feature_dim") out.feature_dim = value;
    else if (key == "class_count") out.class_count = value;
    else if (key == "domain_count") out.domain_count = value;
    else if (key == "image_hw") out.image_hw = value;
    else if (key == "channels") out.channels = value;
    else if (key == "degenerate_styles") out.degenerate_styles = value != 0;
    else throw IoError("load_dataset: unknown manifest key: " + key);
  }
  std::ifstream blob(stem + ".blob", std::ios::binary);
  if (!blob) throw IoError("load_dataset: cannot read " + stem + ".blob");
  const std::size_t record = out.feature_dim + 2;
  out.examples.resize(count);
  std::vector<double> buf(record);
  for (auto& e : out.examples) {
    blob.read(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(record * sizeof(double)));
    if (!blob) throw IoError("load_dataset: truncated blob");
    e.x.assign(buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(out.feature_dim));
    e.y = static_cast<int>(buf[out.feature_dim]);
    e.d = static_cast<int>(buf[out.feature_dim + 1]);
  }
  out.validate();
  return out;
}

Tensor examples_tensor(const Dataset& data, const std::vector<std::size_t>& idx) {
  std::vector<double> flat;
  flat.reserve(idx.size() * data.feature_dim);
  for (auto i : idx) {
    const auto& x = data.examples.at(i).x;
    flat.insert(flat.end(), x.begin(), x.end());
  }
  return Tensor::from_data(Shape{idx.size(), data.feature_dim}, std::move(flat));
}

std::vector<int> labels_of(const Dataset& data, const std::vector<std::size_t>& idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = data.examples.at(idx[i]).y;
  return out;
}

std::vector<int> domains_of(const Dataset& data, const std::vector<std::size_t>& idx) {
  std::vector<int> out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = data.examples.at(idx[i]).d;
  return out;
}

}  // namespace vdn
