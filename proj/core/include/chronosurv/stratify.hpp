#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chronosurv/cohort.hpp"
#include "chronosurv/curve.hpp"
#include "chronosurv/survstats.hpp"

namespace chronosurv {

enum class RiskGroup { high, low };

struct RiskAssignment {
  std::map<std::string, RiskGroup> group_of;
  double high_centroid = 0.0;  // lower AUSPC = higher risk
  double low_centroid = 0.0;
};

struct KMeans1DResult {
  std::vector<int> assignment;     // cluster index per input value, 0 = lowest centroid
  std::vector<double> centroids;   // ascending
};

// Exact 1-D k-means: clusters of an optimal solution are contiguous in
// sorted order, so the global optimum is found by dynamic programming over
// split positions (for k=2 this is the exhaustive best-split search). The
// seed parameter is accepted for interface stability but unused; the solver
// is deterministic.
KMeans1DResult kmeans_1d(const std::vector<double>& values, int k = 2, std::uint64_t seed = 0);

// Groups patients by AUSPC with k=2; the cluster with the lower centroid is
// the high-risk group.
RiskAssignment assign_risk(const std::map<std::string, double>& auspc_map);

struct SubgroupResult {
  RiskAssignment risk;
  LogRankResult log_rank;
  int n_high = 0;
  int n_low = 0;
};

struct SubgroupReport {
  std::map<std::string, SubgroupResult> by_category;
  std::vector<std::string> skipped;  // categories with too few patients or degenerate AUSPC
};

enum class SubgroupField { t_stage };

// Independent k-means + log-rank within each category of the chosen field.
// Categories with fewer than 4 patients or fewer than 2 distinct AUSPC
// values are skipped with a notice rather than failing the whole report.
SubgroupReport subgroup_stratify(const std::vector<const PatientRecord*>& patients,
                                 const std::map<std::string, double>& auspc_map,
                                 SubgroupField by = SubgroupField::t_stage);

void write_stratification_csv(const RiskAssignment& risk,
                              const std::map<std::string, double>& auspc_map,
                              const std::string& path);
void write_stratification_json(const RiskAssignment& risk, const LogRankResult& lr,
                               const std::string& path);
void write_subgroup_json(const SubgroupReport& report, const std::string& path);

}  // namespace chronosurv
