#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace vdn {

// Subcommand implementations behind the CLI. Each returns a process exit
// code: 0 success, 1 runtime failure, 2 usage error. They throw nothing;
// errors are printed to stderr.

struct GenDataArgs {
  std::string task = "multidomain";  // xor | multidomain
  std::size_t n = 0;                 // xor: total count; multidomain: per domain
  std::size_t domains = 4;
  std::size_t classes = 4;
  std::size_t image_hw = 12;
  std::uint64_t style_seed = 42;
  std::uint64_t seed = 1;
  std::string out;  // dataset stem
};
int cmd_gen_data(const GenDataArgs& args);

struct TrainArgs {
  std::string config_path;  // optional key=value file
  std::string data;         // dataset stem (ignored in toy-xor mode)
  std::optional<int> holdout_domain;
  std::string out;  // output directory
  std::optional<std::uint64_t> seed;  // overrides config/env
  std::string mode;                   // "", "multidomain" or "toy-xor"
};
int cmd_train(const TrainArgs& args);

struct EvalArgs {
  std::string checkpoint;  // stem
  std::string data;        // stem
  std::string json_out;    // optional path
};
int cmd_eval(const EvalArgs& args);

struct VerifyArgs {
  std::string suite = "all";  // all | lemma1 | thm1 | relax | thm2
  std::size_t worlds = 100;
  std::uint64_t seed = 1;
  std::string json_out;  // optional path
};
int cmd_verify(const VerifyArgs& args);

// Seed resolution order: explicit flag, then config key, then VDN_SEED, then 1.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed,
                           const std::optional<std::uint64_t>& config_seed);

}  // namespace vdn
