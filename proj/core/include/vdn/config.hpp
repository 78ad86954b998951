#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vdn/errors.hpp"

namespace vdn {

// Flat `key = value` configuration: one pair per line, `#` starts a comment,
// no sections, no nesting. Unknown keys are an error listing the valid ones.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(const std::string& text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  void set(const std::string& key, std::string value);

  std::string get_string(const std::string& key, std::string fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  // Throws ConfigError naming every unknown key and the allowed set.
  void require_known(const std::vector<std::string>& known) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

// Snapshot of one run: every resolved config key plus seed and paths, written
// before training starts. The manifest is itself a valid config file, so
// `train --config <manifest>` reproduces the run bit for bit; timestamps and
// the code version ride along as comments.
struct RunManifest {
  std::map<std::string, std::string> resolved;
  std::string code_version;
  std::string started_at;
  std::string finished_at;

  void write(const std::string& path) const;
};

std::string code_version_string();
std::string utc_timestamp();

}  // namespace vdn
