#pragma once

#include <utility>
#include <vector>

namespace chronosurv {

struct LossConfig {
  double alpha = 0.25;  // class balance factor; alpha for y=1, (1-alpha) for y=0
  double gamma = 2.0;   // focusing parameter; 0 recovers cross-entropy
  double lambda = 1.0;  // weight of the survival consistency term
};

void validate(const LossConfig& cfg);

// Probabilities are clamped to [kProbClamp, 1 - kProbClamp] before taking
// logs; a numerical guard, not part of the loss definition.
inline constexpr double kProbClamp = 1e-7;

struct LossValueGrad {
  double value = 0.0;
  double d_dp = 0.0;
};

// Focal loss of a single prediction: -alpha_t * (1 - p_t)^gamma * log(p_t),
// p_t = p if y is the positive class else 1-p. Returns the value and the
// analytic derivative with respect to p.
LossValueGrad focal_loss(double p, int y, const LossConfig& cfg);

// Survival consistency penalty over one patient's sampled (t, p) pairs:
// mean over all ordered pairs t1 < t2 of max(0, p(t2) - p(t1)). Subgradient 0
// at ties. Fewer than two samples yields 0 by convention.
struct SclResult {
  double value = 0.0;
  std::vector<double> d_dp;  // one slot per input sample
};
SclResult scl(const std::vector<std::pair<double, double>>& curve_samples);

// Final loss: mean focal over the batch terms + lambda * mean SCL over the
// batch patients.
double combined_loss(const std::vector<double>& focal_terms,
                     const std::vector<double>& scl_terms,
                     const LossConfig& cfg);

// Negative Breslow partial log-likelihood for the Cox baseline, with exact
// gradients in the risk scores. Throws UndefinedStatError when no events.
struct CoxNllResult {
  double value = 0.0;
  std::vector<double> d_drisk;
};
CoxNllResult cox_partial_nll(const std::vector<double>& risk_scores,
                             const std::vector<double>& times,
                             const std::vector<int>& events);

}  // namespace chronosurv
