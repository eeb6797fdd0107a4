#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chronosurv/cohort.hpp"
#include "chronosurv/curve.hpp"

namespace chronosurv {

// Product-limit estimate. Steps are recorded at distinct event times only;
// censorings shrink the risk set without a step and are kept separately for
// plotting tick marks.
struct KMCurve {
  std::vector<double> event_times;
  std::vector<double> survival;   // S just after each event time
  std::vector<int> at_risk;       // risk-set size just before each event time
  std::vector<double> censor_marks;

  // Right-continuous evaluation; S(t) = 1 before the first event.
  double at(double t) const;
};

// times >= 0, events in {0,1}; deaths are processed before censorings that
// share the same time.
KMCurve km_fit(const std::vector<double>& times, const std::vector<int>& events);

struct LogRankResult {
  double chi2 = 0.0;
  double p = 1.0;
};

// Two-sample log-rank test; p from the 1-df chi-square via
// p = erfc(sqrt(chi2/2)).
LogRankResult log_rank(const std::vector<double>& times_a, const std::vector<int>& events_a,
                       const std::vector<double>& times_b, const std::vector<int>& events_b);

// Harrell's concordance. Comparable pairs are (i, j) with event_i and
// t_i < t_j; risk ties count 0.5. Empty comparable set -> nullopt.
std::optional<double> c_index(const std::vector<double>& risk, const std::vector<double>& times,
                              const std::vector<int>& events);

// Case/control outcome for the time-dependent metrics at horizon tau:
// case = died by tau, control = followed beyond tau, censored at or before
// tau = excluded.
struct HorizonOutcome {
  std::vector<double> case_scores;     // score = predicted death risk at tau
  std::vector<double> control_scores;
};

HorizonOutcome horizon_outcomes(const std::vector<double>& death_risk_at_tau,
                                const std::vector<const PatientRecord*>& patients, double tau);

// Rank statistic (Mann-Whitney) between cases and controls on the predicted
// death risk (1 - survival prob) at tau. Either side empty -> nullopt.
std::optional<double> time_dependent_auc(const std::vector<double>& probs_at_tau,
                                         const std::vector<const PatientRecord*>& patients,
                                         double tau);

// Same inclusion rule; predicted alive iff survival prob >= threshold.
std::optional<double> accuracy_at(const std::vector<double>& probs_at_tau,
                                  const std::vector<const PatientRecord*>& patients, double tau,
                                  double threshold = 0.5);

// Area under the survival probability curve by the trapezoid rule, in days.
// The grid must cover [0, horizon].
double auspc(const SurvivalCurve& curve, int horizon_days = 1825);

// First 0.5 crossing of a monotonized curve, linearly interpolated; absent
// when the curve never drops below 0.5.
std::optional<double> predicted_death_time(const SurvivalCurve& curve);

// Linear interpolation of the curve at an arbitrary time inside the grid.
double curve_prob_at(const SurvivalCurve& curve, double t_days);

struct EvalReport {
  std::vector<double> horizons_years;
  std::map<double, std::optional<double>> auc_by_horizon;
  std::map<double, std::optional<double>> accuracy_by_horizon;
  std::map<double, std::pair<int, int>> counts_by_horizon;  // (n_cases, n_controls)
  std::optional<double> mean_auc;
  std::optional<double> c_index;
  std::map<std::string, double> auspc_per_patient;
};

// Evaluates predicted curves against recorded outcomes at the ten half-year
// horizons. The concordance risk score is 1 - AUSPC/horizon.
EvalReport evaluate_curves(const std::vector<const PatientRecord*>& patients,
                           const std::vector<SurvivalCurve>& curves, int horizon_days = 1825);

void write_report_csv(const EvalReport& report, const std::string& path);
void write_report_json(const EvalReport& report, const std::string& path);

}  // namespace chronosurv
