#include <CLI11.hpp>

#include "vdn/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Variational disentanglement lab: data generation, training, "
               "evaluation and theory verification"};
  app.require_subcommand(1);

  vdn::GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  gen_cmd->add_option("--task", gen.task, "xor | multidomain")
      ->default_str("multidomain");
  gen_cmd->add_option("--n", gen.n,
                      "examples (xor: total, multidomain: per domain)");
  gen_cmd->add_option("--domains", gen.domains, "domain count");
  gen_cmd->add_option("--classes", gen.classes, "class count");
  gen_cmd->add_option("--image-hw", gen.image_hw, "image side length");
  gen_cmd->add_option("--style-seed", gen.style_seed, "style family seed");
  gen_cmd->add_option("--seed", gen.seed, "sampling seed");
  gen_cmd->add_option("--out", gen.out, "output stem");

  vdn::TrainArgs train;
  std::int64_t holdout = -1;
  std::uint64_t train_seed = 0;
  bool train_seed_set = false;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--config", train.config_path, "key = value config file");
  train_cmd->add_option("--data", train.data, "dataset stem");
  auto* hopt = train_cmd->add_option("--holdout-domain", holdout,
                                     "domain held out as the unseen target");
  train_cmd->add_option("--out", train.out, "output directory");
  auto* sopt = train_cmd->add_option("--seed", train_seed, "run seed");
  train_cmd->add_option("--mode", train.mode, "multidomain | toy-xor");
  train_cmd->callback([&] {
    if (hopt->count() > 0) train.holdout_domain = static_cast<int>(holdout);
    if (sopt->count() > 0) train_seed_set = true;
  });

  vdn::EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", eval.checkpoint, "checkpoint stem");
  eval_cmd->add_option("--data", eval.data, "dataset stem");
  eval_cmd->add_option("--json", eval.json_out, "write metrics JSON here");

  vdn::VerifyArgs verify;
  auto* verify_cmd =
      app.add_subcommand("verify", "Run the exact theory checks");
  verify_cmd->add_option("--suite", verify.suite, "all|lemma1|thm1|relax|thm2");
  verify_cmd->add_option("--worlds", verify.worlds, "number of random worlds");
  verify_cmd->add_option("--seed", verify.seed, "world seed base");
  verify_cmd->add_option("--json", verify.json_out, "write the report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (gen_cmd->parsed()) return vdn::cmd_gen_data(gen);
  if (train_cmd->parsed()) {
    if (train_seed_set) train.seed = train_seed;
    return vdn::cmd_train(train);
  }
  if (eval_cmd->parsed()) return vdn::cmd_eval(eval);
  if (verify_cmd->parsed()) return vdn::cmd_verify(verify);
  return 2;
}
