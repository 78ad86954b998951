#include "vdn/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "vdn/fdiv.hpp"

namespace vdn {

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ConfigError(std::string("ModelConfig: ") + name + " must be positive");
  };
  positive(input_dim, "input_dim");
  positive(zc_dim, "zc_dim");
  positive(zd_dim, "zd_dim");
  positive(hidden, "hidden");
  positive(critic_hidden, "critic_hidden");
  positive(ep_dim, "ep_dim");
  positive(class_count, "class_count");
  positive(domain_count, "domain_count");
  if (toy_mode && zc_dim != 2) {
    throw ConfigError("ModelConfig: toy_mode forces zc_dim = 2");
  }
  if (toy_mode && input_dim != 3) {
    throw ConfigError("ModelConfig: toy_mode forces input_dim = 3");
  }
}

const char* group_name(Group g) {
  switch (g) {
    case Group::Ec: return "Ec";
    case Group::Ed: return "Ed";
    case Group::Et: return "Et";
    case Group::G: return "G";
    case Group::Dx: return "Dx";
    case Group::Dc: return "Dc";
  }
  return "?";
}

Linear::Linear(std::size_t in, std::size_t out, Rng& rng) {
  // Uniform fan-in init, zero bias.
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::vector<double> wv(in * out);
  for (auto& v : wv) v = rng.uniform(-bound, bound);
  w = Tensor::from_data(Shape{in, out}, std::move(wv), true);
  b = Tensor::zeros(Shape{out}, true);
}

Tensor Linear::operator()(const Tensor& x) const {
  return add(matmul(x, w), b);
}

namespace {

Tensor mlp_forward(const std::vector<Linear>& layers, Tensor x,
                   double leak = -1.0) {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = layers[i](x);
    if (i + 1 < layers.size()) {
      x = leak >= 0.0 ? leaky_relu(x, leak) : relu(x);
    }
  }
  return x;
}

}  // namespace

VdnModel::VdnModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(seed);
  if (cfg_.toy_mode) {
    // (3,3) trunk, (3,2) heads, (2,1) task head per the XOR setup.
    ec_trunk_.emplace_back(3, 3, rng);
    ec_mu_ = Linear(3, 2, rng);
    ec_logvar_ = Linear(3, 2, rng);
    et_.emplace_back(2, 1, rng);
  } else {
    ec_trunk_.emplace_back(cfg_.input_dim, cfg_.hidden, rng);
    ec_mu_ = Linear(cfg_.hidden, cfg_.zc_dim, rng);
    ec_logvar_ = Linear(cfg_.hidden, cfg_.zc_dim, rng);
    const std::size_t et_hidden = std::max<std::size_t>(1, cfg_.hidden / 2);
    et_.emplace_back(cfg_.zc_dim, et_hidden, rng);
    et_.emplace_back(et_hidden, cfg_.class_count, rng);
  }
  ed_.emplace_back(cfg_.input_dim, cfg_.hidden, rng);
  ed_.emplace_back(cfg_.hidden, cfg_.zd_dim, rng);
  g_.emplace_back(cfg_.zc_dim + cfg_.zd_dim, cfg_.hidden, rng);
  g_.emplace_back(cfg_.hidden, cfg_.input_dim, rng);
  dx_.emplace_back(cfg_.input_dim, cfg_.hidden, rng);
  dx_.emplace_back(cfg_.hidden, cfg_.hidden, rng);
  dx_.emplace_back(cfg_.hidden, cfg_.domain_count, rng);
  const std::size_t dc_in = cfg_.zc_dim + cfg_.domain_count;
  dc_.emplace_back(dc_in, cfg_.critic_hidden, rng);
  dc_.emplace_back(cfg_.critic_hidden, cfg_.critic_hidden, rng);
  dc_.emplace_back(cfg_.critic_hidden, 1, rng);
  ep_.emplace_back(cfg_.input_dim, cfg_.hidden, rng);
  ep_.emplace_back(cfg_.hidden, cfg_.ep_dim, rng);
  for (auto& l : ep_) {
    l.w.set_requires_grad(false);
    l.b.set_requires_grad(false);
  }
}

DiagGaussian VdnModel::encode_content(const Tensor& x) const {
  if (x.shape().size() != 2 || x.shape()[1] != cfg_.input_dim) {
    throw ContractError("encode: expected (B, " + std::to_string(cfg_.input_dim) +
                        "), got " + shape_str(x.shape()));
  }
  Tensor h = x;
  for (const auto& l : ec_trunk_) h = relu(l(h));
  return DiagGaussian(ec_mu_(h), ec_logvar_(h));
}

EncodeResult VdnModel::encode(const Tensor& x) const {
  DiagGaussian q = encode_content(x);
  Tensor zd = mlp_forward(ed_, x);
  return EncodeResult{std::move(q), std::move(zd)};
}

Tensor VdnModel::generate(const Tensor& z_c, const Tensor& z_d) const {
  if (z_c.shape().size() != 2 || z_c.shape()[1] != cfg_.zc_dim) {
    throw ContractError("generate: z_c must be (B, " + std::to_string(cfg_.zc_dim) +
                        "), got " + shape_str(z_c.shape()));
  }
  if (z_d.shape().size() != 2 || z_d.shape()[1] != cfg_.zd_dim ||
      z_d.shape()[0] != z_c.shape()[0]) {
    throw ContractError("generate: z_d must be (B, " + std::to_string(cfg_.zd_dim) +
                        "), got " + shape_str(z_d.shape()));
  }
  Tensor h = concat(z_c, z_d, 1);
  return tanh(mlp_forward(g_, h));
}

Tensor VdnModel::task_logits(const Tensor& z_c) const {
  return mlp_forward(et_, z_c);
}

Tensor VdnModel::image_critic(const Tensor& x,
                              const std::vector<int>& style_domains) const {
  if (style_domains.size() != x.shape()[0]) {
    throw ContractError("image_critic: missing domain labels, batch " +
                        std::to_string(x.shape()[0]) + " vs " +
                        std::to_string(style_domains.size()));
  }
  Tensor scores = mlp_forward(dx_, x, 0.2);
  return select_columns(scores, style_domains);
}

Tensor VdnModel::code_critic(const Tensor& code_and_tag) const {
  Tensor v = mlp_forward(dc_, code_and_tag, 0.2);
  return reshape(gf_activation(v), Shape{code_and_tag.shape()[0]});
}

Tensor VdnModel::perceptual(const Tensor& x) const {
  return mlp_forward(ep_, x);
}

std::vector<int> VdnModel::predict(const Tensor& x) const {
  DiagGaussian q = encode_content(x);
  Tensor logits = task_logits(q.mu);
  const std::size_t b = logits.shape()[0];
  const std::size_t c = logits.shape()[1];
  std::vector<int> out(b);
  if (c == 1) {
    // single-logit binary head: class 1 iff logit > 0
    for (std::size_t i = 0; i < b; ++i) out[i] = logits.at(i, 0) > 0.0 ? 1 : 0;
    return out;
  }
  for (std::size_t i = 0; i < b; ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < c; ++j)
      if (logits.at(i, j) > logits.at(i, best)) best = j;
    out[i] = static_cast<int>(best);
  }
  return out;
}

std::vector<Tensor> VdnModel::params(Group g) const {
  std::vector<Tensor> out;
  auto push = [&out](const std::vector<Linear>& ls) {
    for (const auto& l : ls) {
      out.push_back(l.w);
      out.push_back(l.b);
    }
  };
  switch (g) {
    case Group::Ec:
      push(ec_trunk_);
      out.push_back(ec_mu_.w);
      out.push_back(ec_mu_.b);
      out.push_back(ec_logvar_.w);
      out.push_back(ec_logvar_.b);
      break;
    case Group::Ed: push(ed_); break;
    case Group::Et: push(et_); break;
    case Group::G: push(g_); break;
    case Group::Dx: push(dx_); break;
    case Group::Dc: push(dc_); break;
  }
  return out;
}

std::vector<Tensor> VdnModel::trainable_params() const {
  std::vector<Tensor> out;
  for (Group g : {Group::Ec, Group::Ed, Group::Et, Group::G, Group::Dx, Group::Dc}) {
    auto p = params(g);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<std::pair<std::string, Tensor>> VdnModel::named_params() const {
  std::vector<std::pair<std::string, Tensor>> out;
  auto push = [&out](const std::string& prefix, const std::vector<Linear>& ls) {
    for (std::size_t i = 0; i < ls.size(); ++i) {
      out.emplace_back(prefix + ".l" + std::to_string(i) + ".w", ls[i].w);
      out.emplace_back(prefix + ".l" + std::to_string(i) + ".b", ls[i].b);
    }
  };
  push("Ec.trunk", ec_trunk_);
  out.emplace_back("Ec.mu.w", ec_mu_.w);
  out.emplace_back("Ec.mu.b", ec_mu_.b);
  out.emplace_back("Ec.logvar.w", ec_logvar_.w);
  out.emplace_back("Ec.logvar.b", ec_logvar_.b);
  push("Ed", ed_);
  push("Et", et_);
  push("G", g_);
  push("Dx", dx_);
  push("Dc", dc_);
  push("Ep", ep_);
  return out;
}

void VdnModel::set_group_requires_grad(Group g, bool on) {
  for (auto& p : params(g)) p.set_requires_grad(on);
}

void VdnModel::zero_all_grads() {
  for (auto& [name, p] : named_params()) p.zero_grad();
}

// --- checkpoint ----------------------------------------------------------

namespace {

void write_config(std::ostream& os, const ModelConfig& c) {
  os << "config input_dim = " << c.input_dim << '\n';
  os << "config zc_dim = " << c.zc_dim << '\n';
  os << "config zd_dim = " << c.zd_dim << '\n';
  os << "config hidden = " << c.hidden << '\n';
  os << "config critic_hidden = " << c.critic_hidden << '\n';
  os << "config ep_dim = " << c.ep_dim << '\n';
  os << "config class_count = " << c.class_count << '\n';
  os << "config domain_count = " << c.domain_count << '\n';
  os << "config reparameterize = " << (c.reparameterize ? 1 : 0) << '\n';
  os << "config toy_mode = " << (c.toy_mode ? 1 : 0) << '\n';
}

std::string shape_record(const Shape& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += 'x';
    out += std::to_string(s[i]);
  }
  return out.empty() ? "1" : out;
}

}  // namespace

void VdnModel::save(const std::string& stem) const {
  const std::string manifest_path = stem + ".manifest";
  const std::string blob_path = stem + ".blob";
  std::ofstream manifest(manifest_path);
  if (!manifest) throw IoError("save: cannot write " + manifest_path);
  manifest << "vdn-checkpoint v1\n";
  write_config(manifest, cfg_);
  std::ofstream blob(blob_path, std::ios::binary);
  if (!blob) throw IoError("save: cannot write " + blob_path);
  std::size_t offset = 0;
  for (const auto& [name, p] : named_params()) {
    const std::size_t bytes = p.size() * sizeof(double);
    manifest << "param " << name << " f64 " << shape_record(p.shape()) << ' '
             << offset << ' ' << bytes << '\n';
    blob.write(reinterpret_cast<const char*>(p.data().data()),
               static_cast<std::streamsize>(bytes));
    offset += bytes;
  }
  manifest << "end " << offset << '\n';
  if (!manifest || !blob) throw IoError("save: short write under " + stem);
}

VdnModel VdnModel::load(const std::string& stem, const ModelConfig& expected) {
  VdnModel m = load(stem);
  if (!(m.config() == expected)) {
    throw ConfigError("load: checkpoint config does not match the expected one "
                      "(class/domain counts or dimensions differ)");
  }
  return m;
}

VdnModel VdnModel::load(const std::string& stem) {
  const std::string manifest_path = stem + ".manifest";
  const std::string blob_path = stem + ".blob";
  std::ifstream manifest(manifest_path);
  if (!manifest) throw IoError("load: cannot read " + manifest_path);
  std::string line;
  if (!std::getline(manifest, line) || line != "vdn-checkpoint v1") {
    throw IoError("load: corrupt manifest header in " + manifest_path);
  }
  ModelConfig cfg;
  struct Rec {
    std::string name;
    std::string shape;
    std::size_t offset;
    std::size_t bytes;
  };
  std::vector<Rec> recs;
  std::size_t total = 0;
  bool saw_end = false;
  while (std::getline(manifest, line)) {
    std::istringstream is(line);
    std::string tag;
    is >> tag;
    if (tag == "config") {
      std::string key, eq;
      std::size_t value;
      is >> key >> eq >> value;
      if (!is || eq != "=") throw IoError("load: corrupt config line: " + line);
      if (key == "input_dim") cfg.input_dim = value;
      else if (key == "zc_dim") cfg.zc_dim = value;
      else if (key == "zd_dim") cfg.zd_dim = value;
      else if (key == "hidden") cfg.hidden = value;
      else if (key == "critic_hidden") cfg.critic_hidden = value;
      else if (key == "ep_dim") cfg.ep_dim = value;
      else if (key == "class_count") cfg.class_count = value;
      else if (key == "domain_count") cfg.domain_count = value;
      else if (key == "reparameterize") cfg.reparameterize = value != 0;
      else if (key == "toy_mode") cfg.toy_mode = value != 0;
      else throw IoError("load: unknown config key: " + key);
    } else if (tag == "param") {
      Rec r;
      std::string dtype;
      is >> r.name >> dtype >> r.shape >> r.offset >> r.bytes;
      if (!is || dtype != "f64") throw IoError("load: corrupt param line: " + line);
      recs.push_back(std::move(r));
    } else if (tag == "end") {
      is >> total;
      saw_end = true;
    } else if (!tag.empty()) {
      throw IoError("load: corrupt manifest line: " + line);
    }
  }
  if (!saw_end) throw IoError("load: manifest missing end record");

  VdnModel model(cfg, /*seed=*/0);
  auto named = model.named_params();
  if (named.size() != recs.size()) {
    throw ConfigError("load: checkpoint lists " + std::to_string(recs.size()) +
                      " parameters, model has " + std::to_string(named.size()) +
                      "; config mismatch");
  }
  std::ifstream blob(blob_path, std::ios::binary);
  if (!blob) throw IoError("load: cannot read " + blob_path);
  blob.seekg(0, std::ios::end);
  const std::size_t blob_size = static_cast<std::size_t>(blob.tellg());
  if (blob_size != total) {
    throw IoError("load: blob " + blob_path + " is " + std::to_string(blob_size) +
                  " bytes, manifest expects " + std::to_string(total) +
                  "; truncated or corrupt");
  }
  blob.seekg(0);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    auto& [name, p] = named[i];
    const Rec& r = recs[i];
    if (r.name != name) {
      throw ConfigError("load: parameter " + std::to_string(i) + " is " + r.name +
                        ", model expects " + name + "; config mismatch");
    }
    if (r.shape != shape_record(p.shape())) {
      throw ConfigError("load: " + name + " has shape " + r.shape +
                        ", model expects " + shape_record(p.shape()) +
                        "; config mismatch");
    }
    if (r.bytes != p.size() * sizeof(double)) {
      throw IoError("load: " + name + " length mismatch");
    }
    blob.seekg(static_cast<std::streamoff>(r.offset));
    blob.read(reinterpret_cast<char*>(p.data().data()),
              static_cast<std::streamsize>(r.bytes));
    if (!blob) throw IoError("load: short read for " + name);
  }
  return model;
}

}  // namespace vdn
