#include "chronosurv/survstats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "chronosurv/errors.hpp"

namespace chronosurv {

double KMCurve::at(double t) const {
  double s = 1.0;
  for (std::size_t i = 0; i < event_times.size(); ++i) {
    if (event_times[i] <= t) s = survival[i];
    else break;
  }
  return s;
}

KMCurve km_fit(const std::vector<double>& times, const std::vector<int>& events) {
  const std::size_t n = times.size();
  if (n == 0 || events.size() != n) throw InvalidInputError("km_fit: empty or mismatched input");

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (times[a] != times[b]) return times[a] < times[b];
    return events[a] > events[b];  // deaths before censorings at ties
  });

  KMCurve km;
  double s = 1.0;
  std::size_t i = 0;
  std::size_t at_risk = n;
  while (i < n) {
    const double t = times[order[i]];
    int deaths = 0, censored = 0;
    std::size_t j = i;
    while (j < n && times[order[j]] == t) {
      (events[order[j]] != 0 ? deaths : censored) += 1;
      ++j;
    }
    if (deaths > 0) {
      s *= 1.0 - static_cast<double>(deaths) / static_cast<double>(at_risk);
      km.event_times.push_back(t);
      km.survival.push_back(s);
      km.at_risk.push_back(static_cast<int>(at_risk));
    }
    for (int c = 0; c < censored; ++c) km.censor_marks.push_back(t);
    at_risk -= static_cast<std::size_t>(deaths + censored);
    i = j;
  }
  return km;
}

LogRankResult log_rank(const std::vector<double>& times_a, const std::vector<int>& events_a,
                       const std::vector<double>& times_b, const std::vector<int>& events_b) {
  if (times_a.empty() || times_b.empty()) throw InvalidInputError("log_rank: empty group");
  if (times_a.size() != events_a.size() || times_b.size() != events_b.size())
    throw InvalidInputError("log_rank: mismatched arrays");

  std::size_t total_events = 0;
  for (int e : events_a) total_events += (e != 0);
  for (int e : events_b) total_events += (e != 0);
  if (total_events == 0) throw UndefinedStatError("log_rank: no events in either group");

  std::vector<double> event_times;
  for (std::size_t i = 0; i < times_a.size(); ++i)
    if (events_a[i] != 0) event_times.push_back(times_a[i]);
  for (std::size_t i = 0; i < times_b.size(); ++i)
    if (events_b[i] != 0) event_times.push_back(times_b[i]);
  std::sort(event_times.begin(), event_times.end());
  event_times.erase(std::unique(event_times.begin(), event_times.end()), event_times.end());

  double observed_a = 0.0, expected_a = 0.0, variance = 0.0;
  for (const double t : event_times) {
    double n_a = 0.0, n_b = 0.0, d_a = 0.0, d_b = 0.0;
    for (std::size_t i = 0; i < times_a.size(); ++i) {
      if (times_a[i] >= t) n_a += 1.0;
      if (events_a[i] != 0 && times_a[i] == t) d_a += 1.0;
    }
    for (std::size_t i = 0; i < times_b.size(); ++i) {
      if (times_b[i] >= t) n_b += 1.0;
      if (events_b[i] != 0 && times_b[i] == t) d_b += 1.0;
    }
    const double n = n_a + n_b;
    const double d = d_a + d_b;
    if (n <= 0.0 || d <= 0.0) continue;
    observed_a += d_a;
    expected_a += d * n_a / n;
    if (n > 1.0)
      variance += d * (n_a / n) * (n_b / n) * (n - d) / (n - 1.0);
  }

  LogRankResult out;
  if (variance <= 0.0) {
    out.chi2 = 0.0;
    out.p = 1.0;
    return out;
  }
  const double diff = observed_a - expected_a;
  out.chi2 = diff * diff / variance;
  out.p = std::erfc(std::sqrt(out.chi2 / 2.0));
  return out;
}

std::optional<double> c_index(const std::vector<double>& risk, const std::vector<double>& times,
                              const std::vector<int>& events) {
  const std::size_t n = risk.size();
  if (times.size() != n || events.size() != n) throw InvalidInputError("c_index: mismatched arrays");

  double concordant = 0.0;
  std::size_t comparable = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (events[i] == 0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (times[i] >= times[j]) continue;  // needs strict t_i < t_j
      ++comparable;
      if (risk[i] > risk[j]) concordant += 1.0;
      else if (risk[i] == risk[j]) concordant += 0.5;
    }
  }
  if (comparable == 0) return std::nullopt;
  return concordant / static_cast<double>(comparable);
}

HorizonOutcome horizon_outcomes(const std::vector<double>& death_risk_at_tau,
                                const std::vector<const PatientRecord*>& patients, double tau) {
  if (death_risk_at_tau.size() != patients.size())
    throw InvalidInputError("horizon_outcomes: mismatched arrays");
  if (tau <= 0.0) throw InvalidInputError("horizon_outcomes: tau must be > 0");
  HorizonOutcome out;
  for (std::size_t i = 0; i < patients.size(); ++i) {
    const PatientRecord* p = patients[i];
    const double survived = static_cast<double>(p->survival_days());
    if (p->event && survived <= tau) out.case_scores.push_back(death_risk_at_tau[i]);
    else if (survived > tau) out.control_scores.push_back(death_risk_at_tau[i]);
    // censored at or before tau: excluded
  }
  return out;
}

std::optional<double> time_dependent_auc(const std::vector<double>& probs_at_tau,
                                         const std::vector<const PatientRecord*>& patients,
                                         double tau) {
  std::vector<double> risk(probs_at_tau.size());
  for (std::size_t i = 0; i < probs_at_tau.size(); ++i) risk[i] = 1.0 - probs_at_tau[i];
  const HorizonOutcome ho = horizon_outcomes(risk, patients, tau);
  if (ho.case_scores.empty() || ho.control_scores.empty()) return std::nullopt;

  double wins = 0.0;
  for (const double c : ho.case_scores) {
    for (const double k : ho.control_scores) {
      if (c > k) wins += 1.0;
      else if (c == k) wins += 0.5;
    }
  }
  return wins / (static_cast<double>(ho.case_scores.size()) *
                 static_cast<double>(ho.control_scores.size()));
}

std::optional<double> accuracy_at(const std::vector<double>& probs_at_tau,
                                  const std::vector<const PatientRecord*>& patients, double tau,
                                  double threshold) {
  if (probs_at_tau.size() != patients.size()) throw InvalidInputError("accuracy_at: mismatched arrays");
  if (tau <= 0.0) throw InvalidInputError("accuracy_at: tau must be > 0");
  std::size_t correct = 0, eligible = 0;
  for (std::size_t i = 0; i < patients.size(); ++i) {
    const PatientRecord* p = patients[i];
    const double survived = static_cast<double>(p->survival_days());
    const bool is_case = p->event && survived <= tau;
    const bool is_control = survived > tau;
    if (!is_case && !is_control) continue;
    ++eligible;
    const bool predicted_alive = probs_at_tau[i] >= threshold;
    if (predicted_alive == is_control) ++correct;
  }
  if (eligible == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(eligible);
}

double auspc(const SurvivalCurve& curve, int horizon_days) {
  const std::size_t n = curve.grid_days.size();
  if (n < 2 || curve.probs.size() != n) throw InvalidInputError("auspc: degenerate curve");
  if (curve.grid_days.front() > 0 || curve.grid_days.back() < horizon_days)
    throw InvalidInputError("auspc: grid does not cover [0, horizon]");
  double area = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double dt = static_cast<double>(curve.grid_days[k + 1] - curve.grid_days[k]);
    area += 0.5 * (curve.probs[k] + curve.probs[k + 1]) * dt;
  }
  return area;
}

std::optional<double> predicted_death_time(const SurvivalCurve& curve) {
  const std::size_t n = curve.grid_days.size();
  if (n == 0 || curve.probs.size() != n) throw InvalidInputError("predicted_death_time: bad curve");
  if (curve.probs[0] < 0.5) return static_cast<double>(curve.grid_days[0]);
  for (std::size_t k = 1; k < n; ++k) {
    if (curve.probs[k] < 0.5) {
      const double p0 = curve.probs[k - 1], p1 = curve.probs[k];
      const double t0 = static_cast<double>(curve.grid_days[k - 1]);
      const double t1 = static_cast<double>(curve.grid_days[k]);
      return t0 + (p0 - 0.5) / (p0 - p1) * (t1 - t0);
    }
  }
  return std::nullopt;
}

double curve_prob_at(const SurvivalCurve& curve, double t_days) {
  const std::size_t n = curve.grid_days.size();
  if (n == 0) throw InvalidInputError("curve_prob_at: empty curve");
  if (t_days <= curve.grid_days.front()) return curve.probs.front();
  if (t_days >= curve.grid_days.back()) return curve.probs.back();
  for (std::size_t k = 1; k < n; ++k) {
    if (static_cast<double>(curve.grid_days[k]) >= t_days) {
      const double t0 = static_cast<double>(curve.grid_days[k - 1]);
      const double t1 = static_cast<double>(curve.grid_days[k]);
      const double w = (t_days - t0) / (t1 - t0);
      return curve.probs[k - 1] * (1.0 - w) + curve.probs[k] * w;
    }
  }
  return curve.probs.back();
}

EvalReport evaluate_curves(const std::vector<const PatientRecord*>& patients,
                           const std::vector<SurvivalCurve>& curves, int horizon_days) {
  if (patients.size() != curves.size()) throw InvalidInputError("evaluate_curves: size mismatch");
  EvalReport report;
  for (int h = 1; h <= 10; ++h) report.horizons_years.push_back(0.5 * h);

  std::vector<double> risk(patients.size());
  std::vector<double> times(patients.size());
  std::vector<int> events(patients.size());
  for (std::size_t i = 0; i < patients.size(); ++i) {
    const double area = auspc(curves[i], horizon_days);
    report.auspc_per_patient[patients[i]->id] = area;
    risk[i] = 1.0 - area / static_cast<double>(horizon_days);
    times[i] = static_cast<double>(patients[i]->survival_days());
    events[i] = patients[i]->event ? 1 : 0;
  }
  report.c_index = c_index(risk, times, events);

  double auc_sum = 0.0;
  int auc_count = 0;
  for (const double years : report.horizons_years) {
    const double tau = years * 365.0;
    std::vector<double> probs(patients.size());
    for (std::size_t i = 0; i < patients.size(); ++i) probs[i] = curve_prob_at(curves[i], tau);
    const auto auc = time_dependent_auc(probs, patients, tau);
    const auto acc = accuracy_at(probs, patients, tau);
    report.auc_by_horizon[years] = auc;
    report.accuracy_by_horizon[years] = acc;
    std::vector<double> r(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) r[i] = 1.0 - probs[i];
    const HorizonOutcome ho = horizon_outcomes(r, patients, tau);
    report.counts_by_horizon[years] = {static_cast<int>(ho.case_scores.size()),
                                       static_cast<int>(ho.control_scores.size())};
    if (auc) {
      auc_sum += *auc;
      ++auc_count;
    }
  }
  if (auc_count > 0) report.mean_auc = auc_sum / static_cast<double>(auc_count);
  return report;
}

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string opt_fmt(const std::optional<double>& v) { return v ? fmt6(*v) : "NA"; }

}  // namespace

void write_report_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write report: " + path);
  out << "years,auc,accuracy,n_cases,n_controls\n";
  for (const double years : report.horizons_years) {
    const auto counts = report.counts_by_horizon.at(years);
    out << fmt6(years) << ',' << opt_fmt(report.auc_by_horizon.at(years)) << ','
        << opt_fmt(report.accuracy_by_horizon.at(years)) << ',' << counts.first << ','
        << counts.second << '\n';
  }
  double acc_sum = 0.0;
  int acc_count = 0;
  for (const auto& [years, acc] : report.accuracy_by_horizon) {
    if (acc) {
      acc_sum += *acc;
      ++acc_count;
    }
  }
  const std::optional<double> mean_acc =
      acc_count > 0 ? std::optional<double>(acc_sum / acc_count) : std::nullopt;
  out << "Mean," << opt_fmt(report.mean_auc) << ',' << opt_fmt(mean_acc) << ",,\n";
  if (!out) throw IoError("report write failed: " + path);
}

void write_report_json(const EvalReport& report, const std::string& path) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json horizons = nlohmann::ordered_json::array();
  for (const double years : report.horizons_years) {
    nlohmann::ordered_json h;
    h["years"] = years;
    const auto& auc = report.auc_by_horizon.at(years);
    const auto& acc = report.accuracy_by_horizon.at(years);
    h["auc"] = auc ? nlohmann::ordered_json(*auc) : nlohmann::ordered_json(nullptr);
    h["accuracy"] = acc ? nlohmann::ordered_json(*acc) : nlohmann::ordered_json(nullptr);
    h["n_cases"] = report.counts_by_horizon.at(years).first;
    h["n_controls"] = report.counts_by_horizon.at(years).second;
    horizons.push_back(h);
  }
  j["horizons"] = horizons;
  j["mean_auc"] = report.mean_auc ? nlohmann::ordered_json(*report.mean_auc)
                                  : nlohmann::ordered_json(nullptr);
  j["c_index"] = report.c_index ? nlohmann::ordered_json(*report.c_index)
                                : nlohmann::ordered_json(nullptr);
  nlohmann::ordered_json per_patient;
  for (const auto& [id, area] : report.auspc_per_patient) per_patient[id] = area;
  j["auspc_per_patient"] = per_patient;

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write report: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("report write failed: " + path);
}

}  // namespace chronosurv
