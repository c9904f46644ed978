#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "spatial/io.hpp"

namespace spatial {

/// Flat `key = value` file; `#` starts a comment.
class Config {
 public:
  static Config parse(const std::string& text);
  static Config load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  const std::string& text(const std::string& key) const;
  std::string text_or(const std::string& key, const std::string& fallback) const;
  double number(const std::string& key) const;
  double number_or(const std::string& key, double fallback) const;
  std::size_t count(const std::string& key) const;
  std::size_t count_or(const std::string& key, std::size_t fallback) const;
  std::uint64_t seed(const std::string& key) const;
  /// Resolved against the config file's directory.
  std::filesystem::path path(const std::string& key) const;

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  void reject_unknown(const std::set<std::string>& allowed) const;

 private:
  std::map<std::string, std::string> values_;
  std::filesystem::path base_;
};

enum class ExitCode : int { Ok = 0, NumericalError = 1, ValidationError = 2 };

struct RunOptions {
  std::string command;
  std::filesystem::path config;
  std::filesystem::path out_dir = "out";
  std::optional<std::uint64_t> seed;
  int threads = 0;  // 0: OpenMP default
};

struct RunResult {
  ExitCode code = ExitCode::Ok;
  std::string message;
  std::vector<std::string> written;
};

/// Builds the outputs of `command` without touching the file system.
io::OutputSet run_pipeline(const std::string& command, const Config& config);

/// Loads the config, runs the command and publishes the outputs atomically.
RunResult run(const RunOptions& options);

}  // namespace spatial
