#include "chronosurv/losses.hpp"

#include <algorithm>
#include <cmath>

#include "chronosurv/errors.hpp"

namespace chronosurv {

void validate(const LossConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha <= 1.0)) throw InvalidConfigError("loss.alpha must be in (0, 1]");
  if (!(cfg.gamma >= 0.0)) throw InvalidConfigError("loss.gamma must be >= 0");
  if (!(cfg.lambda >= 0.0)) throw InvalidConfigError("loss.lambda must be >= 0");
}

LossValueGrad focal_loss(double p, int y, const LossConfig& cfg) {
  const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  const double pt = (y == 1) ? pc : 1.0 - pc;
  const double at = (y == 1) ? cfg.alpha : 1.0 - cfg.alpha;
  const double one_m = 1.0 - pt;
  const double log_pt = std::log(pt);

  LossValueGrad out;
  out.value = -at * std::pow(one_m, cfg.gamma) * log_pt;

  // d/dpt = -alpha_t [ (1-pt)^g / pt - g (1-pt)^(g-1) log(pt) ]
  double d_dpt = -at * (std::pow(one_m, cfg.gamma) / pt);
  if (cfg.gamma > 0.0) d_dpt += at * cfg.gamma * std::pow(one_m, cfg.gamma - 1.0) * log_pt;
  out.d_dp = (y == 1) ? d_dpt : -d_dpt;
  // The clamp saturates: outside the clamp range the loss is constant in p.
  if (p < kProbClamp || p > 1.0 - kProbClamp) out.d_dp = 0.0;
  return out;
}

SclResult scl(const std::vector<std::pair<double, double>>& curve_samples) {
  SclResult out;
  const std::size_t n = curve_samples.size();
  out.d_dp.assign(n, 0.0);
  if (n < 2) return out;

  // Ordered pairs t1 < t2 regardless of input order.
  std::size_t pairs = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (curve_samples[i].first < curve_samples[j].first) {
        ++pairs;
        const double diff = curve_samples[j].second - curve_samples[i].second;
        if (diff > 0.0) {
          sum += diff;
          out.d_dp[j] += 1.0;
          out.d_dp[i] -= 1.0;
        }
      }
    }
  }
  if (pairs == 0) return out;
  const double inv = 1.0 / static_cast<double>(pairs);
  out.value = sum * inv;
  for (double& g : out.d_dp) g *= inv;
  return out;
}

double combined_loss(const std::vector<double>& focal_terms,
                     const std::vector<double>& scl_terms,
                     const LossConfig& cfg) {
  double focal_mean = 0.0;
  if (!focal_terms.empty()) {
    for (double f : focal_terms) focal_mean += f;
    focal_mean /= static_cast<double>(focal_terms.size());
  }
  double scl_mean = 0.0;
  if (!scl_terms.empty()) {
    for (double s : scl_terms) scl_mean += s;
    scl_mean /= static_cast<double>(scl_terms.size());
  }
  return focal_mean + cfg.lambda * scl_mean;
}

CoxNllResult cox_partial_nll(const std::vector<double>& risk_scores,
                             const std::vector<double>& times,
                             const std::vector<int>& events) {
  const std::size_t n = risk_scores.size();
  if (times.size() != n || events.size() != n)
    throw InvalidInputError("cox_partial_nll: array lengths differ");
  std::size_t n_events = 0;
  for (int e : events) n_events += (e != 0);
  if (n_events == 0) throw UndefinedStatError("cox_partial_nll: no events, likelihood undefined");

  // Shift by max(r) so exp() cannot overflow; the partial likelihood is
  // invariant under the shift.
  double rmax = risk_scores[0];
  for (double r : risk_scores) rmax = std::max(rmax, r);

  CoxNllResult out;
  out.d_drisk.assign(n, 0.0);
  double value = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (events[i] == 0) continue;
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (times[j] >= times[i]) denom += std::exp(risk_scores[j] - rmax);
    }
    value -= (risk_scores[i] - rmax) - std::log(denom);
    out.d_drisk[i] -= 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (times[j] >= times[i]) out.d_drisk[j] += std::exp(risk_scores[j] - rmax) / denom;
    }
  }
  out.value = value;
  return out;
}

}  // namespace chronosurv
