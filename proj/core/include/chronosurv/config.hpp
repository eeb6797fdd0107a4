#pragma once

#include <cstdint>
#include <string>

#include "chronosurv/baselines.hpp"
#include "chronosurv/cohort.hpp"
#include "chronosurv/training.hpp"

namespace chronosurv {

// Resolved run configuration: flat key=value namespaces cohort.*, model.*,
// loss.*, sampling.*, train.*, plus the top-level seed. Unknown keys are
// rejected by name.
struct RunConfig {
  CohortConfig cohort;
  TrainConfig train;          // carries model/loss/sampling sub-configs
  int baseline_epochs = 10;   // horizon-bank training epochs
  bool monotonize_reports = true;
  std::uint64_t seed = 1;
};

// Parses `key = value` lines ('#' comments, blank lines allowed). Throws
// InvalidConfigError naming the offending key or value.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text);

// Every run writes its fully resolved configuration next to its outputs.
void write_resolved_config(const RunConfig& cfg, const std::string& path);

}  // namespace chronosurv
