#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "skewstab/config.hpp"

namespace skewstab {

/// CSV table; cells are preformatted so output bytes never depend on locale.
struct Table {
  std::string name;  ///< file stem
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }
  std::string csv() const;
};

std::string cell(double v);
std::string cell(int v);
std::string cell(std::size_t v);
std::string cell(bool v);

struct Verdict {
  std::string name;
  bool pass = true;
  double value = 0.0;
  double bound = 0.0;
  std::string detail;
};

struct RunReport {
  std::string id;
  std::string digest;
  std::uint64_t seed = 0;
  std::vector<Table> tables;
  std::vector<Verdict> verdicts;
  nlohmann::json summary = nlohmann::json::object();
  double wall_clock = 0.0;
  std::string version;

  bool all_pass() const;
  /// Deterministic part: everything except wall-clock.
  nlohmann::json to_json() const;
};

struct RunOptions {
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::ostream* log = nullptr;  ///< progress lines when set
};

inline const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"verify", "fixed-point", "spectral", "stability", "correlations", "clt"};
  return names;
}

/// Runs one subcommand. Module errors propagate; failed bounds land in verdicts.
RunReport run_experiment(const std::string& subcommand, const ExperimentConfig& cfg, const RunOptions& opts = {});

/// Writes <table>.csv, summary.json and timing.json under `dir`.
void write_report(const RunReport& report, const std::string& dir);

inline constexpr int kExitPass = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitUsage = 2;

}  // namespace skewstab
