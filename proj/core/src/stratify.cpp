#include "chronosurv/stratify.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include <json.hpp>

#include "chronosurv/errors.hpp"

namespace chronosurv {

KMeans1DResult kmeans_1d(const std::vector<double>& values, int k, std::uint64_t seed) {
  (void)seed;
  const std::size_t n = values.size();
  if (k < 1) throw InvalidConfigError("kmeans_1d: k must be >= 1");
  std::set<double> distinct(values.begin(), values.end());
  if (static_cast<int>(distinct.size()) < k)
    throw DegenerateClusterError("kmeans_1d: fewer distinct values than clusters");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  // Prefix sums over the sorted values for O(1) segment SSE.
  std::vector<double> prefix(n + 1, 0.0), prefix2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = values[order[i]];
    prefix[i + 1] = prefix[i] + x;
    prefix2[i + 1] = prefix2[i] + x * x;
  }
  const auto segment_sse = [&](std::size_t lo, std::size_t hi) {  // [lo, hi)
    const double cnt = static_cast<double>(hi - lo);
    const double sum = prefix[hi] - prefix[lo];
    return (prefix2[hi] - prefix2[lo]) - sum * sum / cnt;
  };

  // dp[c][i]: minimal SSE partitioning the first i sorted values into c
  // clusters; clusters must be non-empty.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const std::size_t kk = static_cast<std::size_t>(k);
  std::vector<std::vector<double>> dp(kk + 1, std::vector<double>(n + 1, kInf));
  std::vector<std::vector<std::size_t>> cut(kk + 1, std::vector<std::size_t>(n + 1, 0));
  dp[0][0] = 0.0;
  for (std::size_t c = 1; c <= kk; ++c) {
    for (std::size_t i = c; i <= n; ++i) {
      for (std::size_t j = c - 1; j < i; ++j) {
        if (dp[c - 1][j] == kInf) continue;
        const double cost = dp[c - 1][j] + segment_sse(j, i);
        if (cost < dp[c][i]) {
          dp[c][i] = cost;
          cut[c][i] = j;
        }
      }
    }
  }

  // Recover cluster boundaries on the sorted order.
  std::vector<std::size_t> bounds(kk + 1, 0);
  bounds[kk] = n;
  for (std::size_t c = kk; c >= 1; --c) bounds[c - 1] = cut[c][bounds[c]];

  KMeans1DResult out;
  out.assignment.assign(n, 0);
  for (std::size_t c = 0; c < kk; ++c) {
    const std::size_t lo = bounds[c], hi = bounds[c + 1];
    double sum = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      out.assignment[order[i]] = static_cast<int>(c);
      sum += values[order[i]];
    }
    out.centroids.push_back(sum / static_cast<double>(hi - lo));
  }
  return out;
}

RiskAssignment assign_risk(const std::map<std::string, double>& auspc_map) {
  if (auspc_map.size() < 2) throw DegenerateClusterError("assign_risk: need at least 2 patients");
  std::vector<std::string> ids;
  std::vector<double> values;
  for (const auto& [id, v] : auspc_map) {
    ids.push_back(id);
    values.push_back(v);
  }
  const KMeans1DResult km = kmeans_1d(values, 2);

  RiskAssignment out;
  out.high_centroid = km.centroids[0];  // centroids ascend; low AUSPC = high risk
  out.low_centroid = km.centroids[1];
  for (std::size_t i = 0; i < ids.size(); ++i)
    out.group_of[ids[i]] = km.assignment[i] == 0 ? RiskGroup::high : RiskGroup::low;
  return out;
}

SubgroupReport subgroup_stratify(const std::vector<const PatientRecord*>& patients,
                                 const std::map<std::string, double>& auspc_map,
                                 SubgroupField by) {
  (void)by;  // t_stage is the only stratified field
  SubgroupReport report;
  for (int stage = 1; stage <= 4; ++stage) {
    const std::string name = "T" + std::to_string(stage);
    std::vector<const PatientRecord*> members;
    for (const auto* p : patients) {
      if (p->t_stage && *p->t_stage == stage && auspc_map.count(p->id) != 0)
        members.push_back(p);
    }
    std::set<double> distinct;
    for (const auto* p : members) distinct.insert(auspc_map.at(p->id));
    if (members.size() < 4 || distinct.size() < 2) {
      report.skipped.push_back(name);
      continue;
    }

    std::map<std::string, double> sub_auspc;
    for (const auto* p : members) sub_auspc[p->id] = auspc_map.at(p->id);
    SubgroupResult result;
    result.risk = assign_risk(sub_auspc);

    std::vector<double> times_high, times_low;
    std::vector<int> events_high, events_low;
    for (const auto* p : members) {
      const bool high = result.risk.group_of.at(p->id) == RiskGroup::high;
      (high ? times_high : times_low).push_back(static_cast<double>(p->survival_days()));
      (high ? events_high : events_low).push_back(p->event ? 1 : 0);
    }
    result.n_high = static_cast<int>(times_high.size());
    result.n_low = static_cast<int>(times_low.size());
    if (times_high.empty() || times_low.empty()) {
      report.skipped.push_back(name);
      continue;
    }
    try {
      result.log_rank = log_rank(times_high, events_high, times_low, events_low);
    } catch (const UndefinedStatError&) {
      report.skipped.push_back(name);
      continue;
    }
    report.by_category.emplace(name, std::move(result));
  }
  return report;
}

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_stratification_csv(const RiskAssignment& risk,
                              const std::map<std::string, double>& auspc_map,
                              const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write stratification csv: " + path);
  out << "id,auspc_days,group\n";
  for (const auto& [id, area] : auspc_map) {
    const char* group = risk.group_of.at(id) == RiskGroup::high ? "high" : "low";
    out << id << ',' << fmt6(area) << ',' << group << '\n';
  }
  if (!out) throw IoError("stratification csv write failed: " + path);
}

void write_stratification_json(const RiskAssignment& risk, const LogRankResult& lr,
                               const std::string& path) {
  int n_high = 0, n_low = 0;
  for (const auto& [id, g] : risk.group_of) (g == RiskGroup::high ? n_high : n_low) += 1;
  nlohmann::ordered_json j;
  j["high_centroid_days"] = risk.high_centroid;
  j["low_centroid_days"] = risk.low_centroid;
  j["n_high"] = n_high;
  j["n_low"] = n_low;
  j["chi2"] = lr.chi2;
  j["p"] = lr.p;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write stratification json: " + path);
  out << j.dump(2) << '\n';
}

void write_subgroup_json(const SubgroupReport& report, const std::string& path) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json cats;
  for (const auto& [name, res] : report.by_category) {
    nlohmann::ordered_json c;
    c["high_centroid_days"] = res.risk.high_centroid;
    c["low_centroid_days"] = res.risk.low_centroid;
    c["n_high"] = res.n_high;
    c["n_low"] = res.n_low;
    c["chi2"] = res.log_rank.chi2;
    c["p"] = res.log_rank.p;
    cats[name] = c;
  }
  j["categories"] = cats;
  j["skipped"] = report.skipped;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write subgroup json: " + path);
  out << j.dump(2) << '\n';
}

}  // namespace chronosurv
