#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "chronosurv/cohort.hpp"
#include "chronosurv/losses.hpp"
#include "chronosurv/model.hpp"
#include "chronosurv/sampling.hpp"

namespace chronosurv {

struct AdamHyper {
  double lr = 1e-4;  // initial; the live rate lives in OptimState
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;
};

struct OptimState {
  std::vector<double> m, v;
  long step = 0;
  double lr = 0.0;
  int epochs_since_improvement = 0;
  double best_val_loss = 0.0;
  bool has_best = false;
};

OptimState make_optim_state(const ModelParams& params, double initial_lr);

// One Adam update with decoupled weight decay: params *= (1 - lr*wd) before
// the bias-corrected moment step. Throws AbortEpochError on a non-finite
// gradient.
void adam_step(ModelParams& params, const GradientStore& grads, OptimState& state,
               const AdamHyper& hyper);

// Plateau schedule: five consecutive epochs without validation improvement
// (strict, 1e-9 margin) divide the rate by 5 and reset the counter. Returns
// whether this epoch improved on the best.
bool schedule_lr(OptimState& state, double val_loss);

struct TrainConfig {
  int epochs = 100;
  int k_folds = 5;
  int batch_patients = 16;  // a batch is a group of patients with all their time samples
  bool augment = true;      // independent horizontal flip of each collage half, p = 0.5
  AdamHyper adam;
  LossConfig loss;
  SamplingConfig sampling;
  ModelConfig model;
};

struct TrainLogRow {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;  // rate in effect during the epoch
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
  // Instrumentation: gradient-contributing sample count per patient id.
  // Validation patients must never appear here.
  std::map<std::string, long> grad_samples;
  int best_epoch = 0;
};

// Precomputed per-patient model inputs: normalized stem-pooled collages for
// the image encoder, feature vectors for the tabular one.
struct PatientInputs {
  ModelConfig model;
  std::map<std::string, Tensor3> pooled;
  std::map<std::string, std::vector<double>> features;

  ModelInput input_for(const std::string& id) const;
};

PatientInputs prepare_inputs(const CohortDataset& cohort, const ModelConfig& model,
                             const CohortStats* stats);

// In-place horizontal flip of the two collage halves (columns split at
// cols/2), each applied independently.
void flip_collage_halves(Tensor3& t, bool flip_left, bool flip_right);

struct FoldResult {
  ModelParams params;
  TrainLog log;
};

// Trains one fold: per epoch, phase sampling + augmentation, batched
// forward/backward with the combined loss, Adam per batch, a deterministic
// validation pass on the held-out fold (fixed seeded time samples), and the
// plateau schedule. Returns the parameters with the best validation loss.
FoldResult train_fold(const CohortDataset& cohort, const PatientInputs& inputs, int fold_id,
                      const FoldAssignment& folds, const TrainConfig& config, std::uint64_t seed);

struct CvResult {
  FoldAssignment folds;
  std::vector<FoldResult> fold_results;
};

CvResult train_cv(const CohortDataset& cohort, int k, const TrainConfig& config,
                  std::uint64_t seed);

// Test-time prediction: mean of the per-fold probabilities at each grid
// point, optionally monotonized afterwards.
SurvivalCurve predict_ensemble_curve(const std::vector<const ModelParams*>& models,
                                     const ModelInput& input, const std::vector<int>& grid_days,
                                     bool monotonize, int horizon_days = 1825);

void write_trainlog_csv(const TrainLog& log, const std::string& path);

// Run directory layout: <run_dir>/fold<k>/checkpoint.bin + trainlog.csv.
void save_run(const std::string& run_dir, const CvResult& cv, std::uint64_t seed);
std::vector<ModelParams> load_run(const std::string& run_dir);

}  // namespace chronosurv
