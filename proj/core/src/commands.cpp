#include "vdn/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "vdn/bounds.hpp"
#include "vdn/config.hpp"
#include "vdn/datasets.hpp"
#include "vdn/trainer.hpp"

namespace vdn {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed,
                           const std::optional<std::uint64_t>& config_seed) {
  if (flag_seed) return *flag_seed;
  if (config_seed) return *config_seed;
  if (const char* env = std::getenv("VDN_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("VDN_SEED is not an integer: " + std::string(env));
    }
  }
  return 1;
}

int cmd_gen_data(const GenDataArgs& args) {
  try {
    if (args.n == 0) {
      std::cerr << "gen-data: --n must be positive\n";
      return 2;
    }
    if (args.out.empty()) {
      std::cerr << "gen-data: --out is required\n";
      return 2;
    }
    if (args.task != "xor" && args.task != "multidomain") {
      std::cerr << "gen-data: --task must be xor or multidomain\n";
      return 2;
    }
    if (!fs::path(args.out).parent_path().empty()) {
      fs::create_directories(fs::path(args.out).parent_path());
    }
    Rng rng(args.seed);
    Dataset data;
    if (args.task == "xor") {
      data = gen_xor(args.n, rng);
    } else {
      DomainSpec spec = default_domain_spec(args.domains, args.classes,
                                            args.image_hw, args.style_seed);
      data = gen_multidomain(spec, args.n, rng);
    }
    save_dataset(data, args.out);
    std::cout << "wrote " << data.size() << " examples (" << data.class_count
              << " classes, " << data.domain_count << " domains) to " << args.out
              << ".{manifest,blob}\n";
    return 0;
  } catch (const Error& e) {
    std::cerr << "gen-data: " << e.what() << '\n';
    return 1;
  }
}

namespace {

const std::vector<std::string> kTrainKeys = {
    "epochs", "batch_size", "task_lr", "gan_lr", "task_optimizer",
    "gan_optimizer", "rmsprop_rho", "rmsprop_eps", "critic_update_every",
    "schedule", "step_decay_epoch", "step_decay_gamma", "cosine_epochs",
    "lambda_reg", "lambda_rec", "lambda_gan", "augmentation", "reparameterize",
    "detach_augmentation", "use_reg", "use_gan", "use_rec", "clip_gradients",
    "clip_norm", "zc_dim", "zd_dim", "hidden", "critic_hidden", "ep_dim",
    "seed", "mode", "data", "holdout_domain", "out",
    // toy-xor keys
    "toy_n_train", "toy_n_test", "toy_lr", "toy_critic_lr", "toy_lambda_reg",
    "toy_critic_update_every", "toy_cosine"};

OptimKind parse_optimizer(const std::string& s, const char* key) {
  if (s == "sgd") return OptimKind::Sgd;
  if (s == "rmsprop") return OptimKind::RmsProp;
  throw ConfigError(std::string("config: ") + key + " must be sgd or rmsprop");
}

LrSchedule parse_schedule(const std::string& s) {
  if (s == "constant") return LrSchedule::Constant;
  if (s == "step") return LrSchedule::StepDecay;
  if (s == "cosine") return LrSchedule::Cosine;
  throw ConfigError("config: schedule must be constant, step or cosine");
}

const char* schedule_name(LrSchedule s) {
  switch (s) {
    case LrSchedule::Constant: return "constant";
    case LrSchedule::StepDecay: return "step";
    case LrSchedule::Cosine: return "cosine";
  }
  return "constant";
}

const char* optimizer_name(OptimKind k) {
  return k == OptimKind::Sgd ? "sgd" : "rmsprop";
}

struct ResolvedTrain {
  TrainConfig train;
  ModelConfig model;
  std::string mode;
  std::string data;
  int holdout = -1;
  std::string out;
  ToyConfig toy;
};

ResolvedTrain resolve_train(const TrainArgs& args) {
  KeyValueConfig cfg;
  if (!args.config_path.empty()) {
    cfg = KeyValueConfig::parse_file(args.config_path);
    cfg.require_known(kTrainKeys);
  }
  ResolvedTrain r;
  std::optional<std::uint64_t> cfg_seed;
  if (cfg.has("seed")) cfg_seed = cfg.get_u64("seed", 1);
  r.train.seed = resolve_seed(args.seed, cfg_seed);

  r.mode = !args.mode.empty() ? args.mode : cfg.get_string("mode", "multidomain");
  r.data = !args.data.empty() ? args.data : cfg.get_string("data", "");
  if (args.holdout_domain) {
    r.holdout = *args.holdout_domain;
  } else if (cfg.has("holdout_domain")) {
    r.holdout = static_cast<int>(cfg.get_u64("holdout_domain", 0));
  }
  r.out = !args.out.empty() ? args.out : cfg.get_string("out", "");

  auto& t = r.train;
  t.epochs = cfg.get_size("epochs", 60);
  t.batch_size = cfg.get_size("batch_size", 64);
  t.task_lr = cfg.get_double("task_lr", 0.05);
  t.gan_lr = cfg.get_double("gan_lr", 5e-5);
  t.task_optimizer = parse_optimizer(cfg.get_string("task_optimizer", "sgd"),
                                     "task_optimizer");
  t.gan_optimizer = parse_optimizer(cfg.get_string("gan_optimizer", "rmsprop"),
                                    "gan_optimizer");
  t.rmsprop_rho = cfg.get_double("rmsprop_rho", 0.99);
  t.rmsprop_eps = cfg.get_double("rmsprop_eps", 1e-8);
  t.critic_update_every = cfg.get_size("critic_update_every", 5);
  t.schedule = parse_schedule(cfg.get_string("schedule", "constant"));
  t.step_decay_epoch = cfg.get_size("step_decay_epoch", 50);
  t.step_decay_gamma = cfg.get_double("step_decay_gamma", 0.1);
  t.cosine_epochs = cfg.get_size("cosine_epochs", 100);
  t.weights.lambda_reg = cfg.get_double("lambda_reg", 0.1);
  t.weights.lambda_rec = cfg.get_double("lambda_rec", 1.0);
  t.weights.lambda_gan = cfg.get_double("lambda_gan", 1.0);
  t.objective.augmentation = cfg.get_bool("augmentation", true);
  t.objective.reparameterize = cfg.get_bool("reparameterize", false);
  t.objective.detach_augmentation = cfg.get_bool("detach_augmentation", false);
  t.objective.use_reg = cfg.get_bool("use_reg", true);
  t.objective.use_gan = cfg.get_bool("use_gan", true);
  t.objective.use_rec = cfg.get_bool("use_rec", true);
  t.clip_gradients = cfg.get_bool("clip_gradients", false);
  t.clip_norm = cfg.get_double("clip_norm", 5.0);

  auto& m = r.model;
  m.zc_dim = cfg.get_size("zc_dim", 8);
  m.zd_dim = cfg.get_size("zd_dim", 4);
  m.hidden = cfg.get_size("hidden", 64);
  m.critic_hidden = cfg.get_size("critic_hidden", 64);
  m.ep_dim = cfg.get_size("ep_dim", 32);
  m.reparameterize = t.objective.reparameterize;

  auto& toy = r.toy;
  toy.n_train = cfg.get_size("toy_n_train", 2000);
  toy.n_test = cfg.get_size("toy_n_test", 2000);
  toy.epochs = t.epochs;
  toy.batch_size = t.batch_size;
  toy.lr = cfg.get_double("toy_lr", 0.4);
  toy.critic_lr = cfg.get_double("toy_critic_lr", 0.1);
  toy.lambda_reg = cfg.get_double("toy_lambda_reg", 0.3);
  toy.critic_update_every = cfg.get_size("toy_critic_update_every", 1);
  toy.cosine = cfg.get_bool("toy_cosine", true);
  toy.seed = t.seed;
  return r;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::map<std::string, std::string> manifest_keys(const ResolvedTrain& r) {
  std::map<std::string, std::string> out;
  auto put = [&out](const std::string& k, auto v) {
    if constexpr (std::is_floating_point_v<decltype(v)>) {
      out[k] = fmt_double(v);
    } else {
      out[k] = std::to_string(v);
    }
  };
  const auto& t = r.train;
  put("epochs", t.epochs);
  put("batch_size", t.batch_size);
  put("task_lr", t.task_lr);
  put("gan_lr", t.gan_lr);
  out["task_optimizer"] = optimizer_name(t.task_optimizer);
  out["gan_optimizer"] = optimizer_name(t.gan_optimizer);
  put("rmsprop_rho", t.rmsprop_rho);
  put("rmsprop_eps", t.rmsprop_eps);
  put("critic_update_every", t.critic_update_every);
  out["schedule"] = schedule_name(t.schedule);
  put("step_decay_epoch", t.step_decay_epoch);
  put("step_decay_gamma", t.step_decay_gamma);
  put("cosine_epochs", t.cosine_epochs);
  put("lambda_reg", t.weights.lambda_reg);
  put("lambda_rec", t.weights.lambda_rec);
  put("lambda_gan", t.weights.lambda_gan);
  put("augmentation", static_cast<int>(t.objective.augmentation));
  put("reparameterize", static_cast<int>(t.objective.reparameterize));
  put("detach_augmentation", static_cast<int>(t.objective.detach_augmentation));
  put("use_reg", static_cast<int>(t.objective.use_reg));
  put("use_gan", static_cast<int>(t.objective.use_gan));
  put("use_rec", static_cast<int>(t.objective.use_rec));
  put("clip_gradients", static_cast<int>(t.clip_gradients));
  put("clip_norm", t.clip_norm);
  put("zc_dim", r.model.zc_dim);
  put("zd_dim", r.model.zd_dim);
  put("hidden", r.model.hidden);
  put("critic_hidden", r.model.critic_hidden);
  put("ep_dim", r.model.ep_dim);
  put("seed", t.seed);
  out["mode"] = r.mode;
  out["data"] = r.data;
  put("holdout_domain", r.holdout);
  out["out"] = r.out;
  put("toy_n_train", r.toy.n_train);
  put("toy_n_test", r.toy.n_test);
  put("toy_lr", r.toy.lr);
  put("toy_critic_lr", r.toy.critic_lr);
  put("toy_lambda_reg", r.toy.lambda_reg);
  put("toy_critic_update_every", r.toy.critic_update_every);
  put("toy_cosine", static_cast<int>(r.toy.cosine));
  return out;
}

void write_metrics_csv(const std::string& path, const TrainLog& log) {
  std::ofstream csv(path);
  if (!csv) throw IoError("train: cannot write " + path);
  csv << "# schema = vdn-metrics-v1\n";
  csv << "epoch,split,domain,loss_task,loss_reg,loss_gan,loss_rec,accuracy\n";
  csv.precision(17);
  for (const auto& rec : log.epochs) {
    const auto& m = rec.mean_loss;
    auto row = [&](const char* split, int domain, double acc) {
      csv << rec.epoch << ',' << split << ',' << domain << ',' << m.l_task << ','
          << m.l_reg << ',' << m.l_gan << ',' << m.l_rec << ',' << acc << '\n';
    };
    row("train", -1, rec.train_accuracy);
    for (const auto& [d, acc] : rec.train_accuracy_per_domain) row("train", d, acc);
    if (!rec.test_accuracy_per_domain.empty()) {
      for (const auto& [d, acc] : rec.test_accuracy_per_domain) row("test", d, acc);
    }
  }
  if (!csv) throw IoError("train: short write to " + path);
}

int train_toy_pair(const ResolvedTrain& r) {
  fs::create_directories(r.out);
  RunManifest manifest;
  manifest.resolved = manifest_keys(r);
  manifest.code_version = code_version_string();
  manifest.started_at = utc_timestamp();
  const std::string manifest_path = (fs::path(r.out) / "manifest.txt").string();
  manifest.write(manifest_path);

  std::ofstream csv(fs::path(r.out) / "toy_metrics.csv");
  if (!csv) throw IoError("train: cannot write toy_metrics.csv");
  csv << "# schema = vdn-toy-metrics-v1\n";
  csv << "variant,epoch,test_accuracy,kl\n";
  csv.precision(17);
  for (const bool with_reg : {false, true}) {
    ToyConfig toy = r.toy;
    toy.with_reg = with_reg;
    ToyResult res = run_toy_xor(toy);
    const char* name = with_reg ? "with_reg" : "baseline";
    for (std::size_t e = 0; e < res.acc_per_epoch.size(); ++e) {
      csv << name << ',' << e << ',' << res.acc_per_epoch[e] << ','
          << res.kl_per_epoch[e] << '\n';
    }
    std::cout << name << ": test accuracy " << res.test_accuracy
              << ", final D(Q(zc|x)||P(zc)) " << res.final_kl << '\n';
  }
  manifest.finished_at = utc_timestamp();
  manifest.write(manifest_path);
  return 0;
}

}  // namespace

int cmd_train(const TrainArgs& args) {
  try {
    ResolvedTrain r = resolve_train(args);
    if (r.out.empty()) {
      std::cerr << "train: --out is required\n";
      return 2;
    }
    if (r.mode == "toy-xor") return train_toy_pair(r);
    if (r.mode != "multidomain") {
      std::cerr << "train: mode must be multidomain or toy-xor\n";
      return 2;
    }
    if (r.data.empty()) {
      std::cerr << "train: --data is required\n";
      return 2;
    }

    Dataset all = load_dataset(r.data);
    Dataset train = all, test;
    test.feature_dim = all.feature_dim;
    test.class_count = all.class_count;
    test.domain_count = all.domain_count;
    if (r.holdout >= 0) {
      auto split = lodo_split(all, r.holdout);
      train = std::move(split.first);
      test = std::move(split.second);
    }

    r.model.input_dim = all.feature_dim;
    r.model.class_count = all.class_count;
    r.model.domain_count = all.domain_count;

    fs::create_directories(r.out);
    RunManifest manifest;
    manifest.resolved = manifest_keys(r);
    manifest.code_version = code_version_string();
    manifest.started_at = utc_timestamp();
    const std::string manifest_path = (fs::path(r.out) / "manifest.txt").string();
    manifest.write(manifest_path);

    VdnModel model(r.model, r.train.seed);
    Trainer trainer(model, r.train);
    TrainLog log = trainer.fit(train, test);

    write_metrics_csv((fs::path(r.out) / "metrics.csv").string(), log);
    model.save((fs::path(r.out) / "checkpoint").string());
    manifest.finished_at = utc_timestamp();
    manifest.write(manifest_path);
    if (!log.epochs.empty()) {
      std::cout << "final train accuracy " << log.epochs.back().train_accuracy;
      if (test.size() > 0) {
        std::cout << ", target accuracy " << log.epochs.back().test_accuracy;
      }
      std::cout << '\n';
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "train: " << e.what() << '\n';
    return 1;
  }
}

int cmd_eval(const EvalArgs& args) {
  try {
    if (args.checkpoint.empty() || args.data.empty()) {
      std::cerr << "eval: --checkpoint and --data are required\n";
      return 2;
    }
    VdnModel model = VdnModel::load(args.checkpoint);
    Dataset data = load_dataset(args.data);
    if (model.config().input_dim != data.feature_dim ||
        model.config().class_count != data.class_count) {
      std::cerr << "eval: checkpoint expects input_dim "
                << model.config().input_dim << " / " << model.config().class_count
                << " classes, dataset has " << data.feature_dim << " / "
                << data.class_count << '\n';
      return 1;
    }
    const double acc = evaluate_accuracy(model, data);
    const auto per_domain = evaluate_accuracy_per_domain(model, data);
    json j;
    j["schema"] = "vdn-eval-v1";
    j["checkpoint"] = args.checkpoint;
    j["data"] = args.data;
    j["mean_accuracy"] = acc;
    json jd = json::object();
    for (const auto& [d, a] : per_domain) jd[std::to_string(d)] = a;
    j["per_domain_accuracy"] = jd;
    const std::string text = j.dump(2);
    std::cout << text << '\n';
    if (!args.json_out.empty()) {
      std::ofstream out(args.json_out);
      if (!out) throw IoError("eval: cannot write " + args.json_out);
      out << text << '\n';
    }
    return 0;
  } catch (const Error& e) {
    std::cerr << "eval: " << e.what() << '\n';
    return 1;
  }
}

int cmd_verify(const VerifyArgs& args) {
  try {
    if (args.worlds == 0) {
      std::cerr << "verify: --worlds must be positive\n";
      return 2;
    }
    std::vector<std::string> suites;
    if (args.suite == "all") {
      suites = {"lemma1", "thm1", "relax", "thm2"};
    } else if (args.suite == "lemma1" || args.suite == "thm1" ||
               args.suite == "relax" || args.suite == "thm2") {
      suites = {args.suite};
    } else {
      std::cerr << "verify: --suite must be all|lemma1|thm1|relax|thm2\n";
      return 2;
    }
    json reports = json::array();
    bool all_pass = true;
    for (const auto& s : suites) {
      SuiteReport rep = run_suite(s, args.worlds, args.seed);
      json j;
      j["suite"] = rep.suite;
      j["worlds"] = rep.worlds;
      j["seed"] = rep.seed;
      j["checks"] = rep.checks;
      j["pass"] = rep.pass;
      if (s == "lemma1") {
        j["max_residual"] = rep.worst_residual;
      } else {
        j["min_slack"] = rep.min_slack;
      }
      if (s == "relax") j["spearman_ratio_m"] = rep.spearman_ratio_m;
      json viol = json::array();
      for (const auto& v : rep.violations) {
        viol.push_back({{"world_seed", v.world_seed}, {"x", v.x}, {"value", v.value}});
      }
      j["violations"] = viol;
      reports.push_back(j);
      all_pass = all_pass && rep.pass;
      std::cout << rep.suite << ": " << (rep.pass ? "pass" : "FAIL") << " ("
                << rep.checks << " checks";
      if (s == "lemma1") {
        std::cout << ", max residual " << rep.worst_residual;
      } else {
        std::cout << ", min slack " << rep.min_slack;
      }
      if (s == "relax") std::cout << ", spearman " << rep.spearman_ratio_m;
      std::cout << ")\n";
    }
    json root;
    root["schema"] = "vdn-verify-v1";
    root["pass"] = all_pass;
    root["suites"] = reports;
    if (!args.json_out.empty()) {
      std::ofstream out(args.json_out);
      if (!out) throw IoError("verify: cannot write " + args.json_out);
      out << root.dump(2) << '\n';
    }
    return all_pass ? 0 : 1;
  } catch (const Error& e) {
    std::cerr << "verify: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace vdn
