#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "skewstab/error.hpp"
#include "skewstab/limit_theorems.hpp"
#include "skewstab/perturbation.hpp"
#include "skewstab/skew_product.hpp"

namespace skewstab {

/// Invalid configuration; `pointer` is the JSON pointer of the offending value.
class ConfigError : public Error {
 public:
  ConfigError(std::string pointer, const std::string& message)
      : Error(pointer.empty() ? message : pointer + ": " + message), pointer_(std::move(pointer)) {}
  const std::string& pointer() const noexcept { return pointer_; }

 private:
  std::string pointer_;
};

struct SpectralBlock {
  int samples = 5;
  int nmax = 12;
  int depth = 3;
  int gap_depth = 4;
  int gap_iters = 16;
};

struct StabilityBlock {
  std::vector<double> offset_shift;
  std::vector<double> weight_shift;
  double delta_max = 0.2;
  double k5 = 1.0;
  std::vector<double> deltas;
  int depth = 2;
  int grid = 1 << 20;
  double tolerance = 1e-10;
};

struct CorrelationBlock {
  nlohmann::json psi;
  nlohmann::json phi;
  int lags = 12;
  int gordin_lags = 12;
  std::size_t mc_samples = 200000;
};

struct CltBlock {
  nlohmann::json observable;
  int n = 2000;
  int trials = 5000;
  int J = 30;
  int J_check = 35;
  int burn_in = 40;
  int seeds = 5;
  int mean_depth = 1;
  int mean_grid = 1 << 16;
  double mean_tolerance = 1e-12;
  std::size_t mc_samples = 200000;
};

struct ExperimentConfig {
  nlohmann::json raw;
  std::string source_path;
  std::string digest;  ///< 16 hex digits over the canonical JSON
  std::optional<SystemSpec> system;
  int depth = 6;
  int grid = 512;
  double tolerance = 1e-6;
  std::uint64_t seed = 1;
  std::optional<SpectralBlock> spectral;
  std::optional<StabilityBlock> stability;
  std::optional<CorrelationBlock> correlations;
  std::optional<CltBlock> clt;

  const SystemSpec& sys() const { return *system; }
};

ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "<memory>");
ExperimentConfig parse_config_json(const nlohmann::json& doc, const std::string& source = "<memory>");

/// Builds an observable from its JSON description (already validated).
Observable build_observable(const nlohmann::json& spec, const TransitionMatrix& matrix, const std::string& pointer = "");

PerturbationFamily build_family(const ExperimentConfig& cfg);

/// FNV-1a over a string, as 16 hex digits.
std::string digest_hex(const std::string& text);

}  // namespace skewstab
