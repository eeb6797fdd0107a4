#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chronosurv/cohort.hpp"
#include "chronosurv/curve.hpp"
#include "chronosurv/model.hpp"
#include "chronosurv/sampling.hpp"
#include "chronosurv/training.hpp"

namespace chronosurv {

// Fixed-horizon comparison arm: ten independent time-free classifiers at
// half-year horizons. A horizon whose eligible labels are single-class is
// marked untrainable; the bank is still returned.
struct HorizonModelBank {
  std::vector<double> horizons_years;               // 0.5, 1.0, ..., 5.0
  std::vector<std::optional<ModelParams>> models;   // nullopt = untrainable
};

inline constexpr int kHorizonCount = 10;

// Outcome at a fixed horizon: deceased if death <= tau, alive if follow-up
// extends beyond tau, excluded (nullopt) if censored at or before tau.
std::optional<OsLabel> label_at_horizon(const PatientRecord& patient, double tau_days);

struct HorizonTrainConfig {
  int epochs = 10;
  int batch_patients = 16;
  bool augment = true;
  AdamHyper adam;
  LossConfig loss;          // focal only; lambda ignored for the bank
  ModelConfig model;        // time_conditioned is forced off per horizon
};

HorizonModelBank train_horizon_bank(const CohortDataset& cohort, const PatientInputs& inputs,
                                    const HorizonTrainConfig& config, std::uint64_t seed);

// Probability that a bank model assigns to "alive" for one patient.
double horizon_bank_prob(const ModelParams& params, const ModelInput& input);

// Time-conditioned model over tabular features; identical contract to the
// image forward with a dense encoder in place of the conv stack.
double tabular_proposed(const std::vector<double>& features, double t_norm,
                        const ModelParams& params);

// Unweighted mean of two probabilities.
double ensemble(double prob_a, double prob_b);

// Point-wise mean of two curves on the same grid.
SurvivalCurve ensemble_curves(const SurvivalCurve& a, const SurvivalCurve& b);

struct CoxFitOptions {
  int hidden = 0;          // 0 = linear Cox; > 0 adds one ReLU hidden layer
  double lr = 0.05;
  int max_steps = 5000;
  double grad_tol = 1e-6;
  bool use_adam = true;    // plain gradient descent when false
};

struct CoxFit {
  std::vector<double> weights;         // linear weights, or flattened [W1, b1, w2] for the MLP
  std::vector<double> risk_scores;
  std::vector<double> nll_trajectory;  // NLL after each optimizer step
  bool converged = false;
};

// Cox partial-likelihood baseline on tabular features, trained by minimizing
// cox_partial_nll until the gradient norm drops below grad_tol or max_steps.
CoxFit cox_tabular(const std::vector<std::vector<double>>& features,
                   const std::vector<double>& times, const std::vector<int>& events,
                   const CoxFitOptions& options = {});

// Bank checkpoint directory layout: <dir>/h<months>/checkpoint.bin.
void save_horizon_bank(const HorizonModelBank& bank, const std::string& dir, std::uint64_t seed);
HorizonModelBank load_horizon_bank(const std::string& dir);

}  // namespace chronosurv
