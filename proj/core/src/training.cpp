#include "chronosurv/training.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "chronosurv/errors.hpp"
#include "chronosurv/nn.hpp"
#include "chronosurv/threads.hpp"

namespace chronosurv {

namespace fs = std::filesystem;

OptimState make_optim_state(const ModelParams& params, double initial_lr) {
  OptimState s;
  s.m.assign(params.values.size(), 0.0);
  s.v.assign(params.values.size(), 0.0);
  s.lr = initial_lr;
  s.best_val_loss = std::numeric_limits<double>::infinity();
  return s;
}

void adam_step(ModelParams& params, const GradientStore& grads, OptimState& state,
               const AdamHyper& hyper) {
  const std::size_t n = params.values.size();
  if (grads.size() != n || state.m.size() != n)
    throw ContractViolationError("adam_step: shape mismatch");
  for (double g : grads)
    if (!std::isfinite(g)) throw AbortEpochError("adam_step: non-finite gradient");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  const double decay = 1.0 - state.lr * hyper.weight_decay;
  for (std::size_t i = 0; i < n; ++i) {
    params.values[i] *= decay;
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grads[i];
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    params.values[i] -= state.lr * m_hat / (std::sqrt(v_hat) + hyper.eps);
  }
}

bool schedule_lr(OptimState& state, double val_loss) {
  const bool improved = val_loss < state.best_val_loss - 1e-9;
  if (improved) {
    state.best_val_loss = val_loss;
    state.has_best = true;
    state.epochs_since_improvement = 0;
    return true;
  }
  state.epochs_since_improvement += 1;
  if (state.epochs_since_improvement >= 5) {
    state.lr /= 5.0;
    state.epochs_since_improvement = 0;
  }
  return false;
}

ModelInput PatientInputs::input_for(const std::string& id) const {
  ModelInput in;
  if (model.kind == EncoderKind::image) {
    in.image = &pooled.at(id);
    in.image_pooled = true;
  } else {
    in.features = &features.at(id);
  }
  return in;
}

PatientInputs prepare_inputs(const CohortDataset& cohort, const ModelConfig& model,
                             const CohortStats* stats) {
  PatientInputs out;
  out.model = model;
  if (model.kind == EncoderKind::image) {
    std::vector<Tensor3> slots(cohort.patients.size());
    parallel_for(cohort.patients.size(), [&](std::size_t i) {
      const VolumeSet& vs = cohort.volumes.at(cohort.patients[i].id);
      const ProjectionCollage collage = build_collage(vs);
      Tensor3 norm = normalize_collage(collage);
      slots[i] = nn::avgpool_forward(norm, model.stem_pool);
    });
    for (std::size_t i = 0; i < cohort.patients.size(); ++i)
      out.pooled.emplace(cohort.patients[i].id, std::move(slots[i]));
  } else {
    if (stats == nullptr)
      throw ContractViolationError("prepare_inputs: tabular encoder needs cohort stats");
    for (const auto& p : cohort.patients)
      out.features.emplace(p.id, featurize_tabular(p, *stats).values);
  }
  return out;
}

void flip_collage_halves(Tensor3& t, bool flip_left, bool flip_right) {
  const int half = t.cols / 2;
  const auto flip_range = [&](int c0, int c1) {
    for (int ch = 0; ch < t.ch; ++ch)
      for (int r = 0; r < t.rows; ++r)
        for (int a = c0, b = c1 - 1; a < b; ++a, --b) std::swap(t.at(ch, r, a), t.at(ch, r, b));
  };
  if (flip_left) flip_range(0, half);
  if (flip_right) flip_range(half, t.cols);
}

namespace {

struct PatientWork {
  std::string id;
  std::size_t cohort_index = 0;
  const PatientRecord* record = nullptr;
  std::vector<TimeSample> samples;
  bool flip_left = false, flip_right = false;
};

struct PatientShare {
  GradientStore grads;
  double focal_sum = 0.0;
  double scl_value = 0.0;
  long n_samples = 0;
};

// Loss terms (no gradients) of a patient's sample set under fixed params.
void eval_loss_terms(const ModelParams& params, const ModelInput& input,
                     const std::vector<TimeSample>& samples, const LossConfig& loss,
                     double* focal_sum, double* scl_value, long* n_samples) {
  const EncoderCache enc = encode_forward(params, input);
  std::vector<std::pair<double, double>> tp;
  double fsum = 0.0;
  for (const TimeSample& s : samples) {
    const HeadCache hc = head_forward(params, enc.emb, s.t_norm);
    fsum += focal_loss(hc.prob, s.label == OsLabel::deceased ? 0 : 1, loss).value;
    tp.emplace_back(static_cast<double>(s.t_days), hc.prob);
  }
  *focal_sum = fsum;
  *scl_value = scl(tp).value;
  *n_samples = static_cast<long>(samples.size());
}

}  // namespace

FoldResult train_fold(const CohortDataset& cohort, const PatientInputs& inputs, int fold_id,
                      const FoldAssignment& folds, const TrainConfig& config, std::uint64_t seed) {
  validate(config.loss);
  validate(config.sampling);

  std::vector<PatientWork> train_pool, val_pool;
  for (std::size_t i = 0; i < cohort.patients.size(); ++i) {
    const PatientRecord& p = cohort.patients[i];
    PatientWork w;
    w.id = p.id;
    w.cohort_index = i;
    w.record = &p;
    (folds.fold_of.at(p.id) == fold_id ? val_pool : train_pool).push_back(std::move(w));
  }
  if (train_pool.empty()) throw InvalidInputError("train_fold: empty training set");

  FoldResult result;
  result.params = make_params(config.model);
  {
    Rng rng = Rng::stream(seed, {rngtag::kParamInit, static_cast<std::uint64_t>(fold_id)});
    init_params(result.params, rng);
  }
  if (config.epochs == 0) return result;

  // Validation time samples are drawn once per fold and reused every epoch,
  // so the schedule sees comparable losses.
  for (PatientWork& w : val_pool) {
    Rng rng = Rng::stream(seed, {rngtag::kValidationSampling, static_cast<std::uint64_t>(fold_id),
                                 static_cast<std::uint64_t>(w.cohort_index)});
    w.samples = sample_epoch(*w.record, rng, config.sampling);
  }

  OptimState state = make_optim_state(result.params, config.adam.lr);
  ModelParams best_params = result.params;
  const bool is_image = config.model.kind == EncoderKind::image;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr_in_effect = state.lr;

    for (PatientWork& w : train_pool) {
      Rng srng = Rng::stream(seed, {rngtag::kEpochSampling, static_cast<std::uint64_t>(fold_id),
                                    static_cast<std::uint64_t>(epoch),
                                    static_cast<std::uint64_t>(w.cohort_index)});
      w.samples = sample_epoch(*w.record, srng, config.sampling);
      if (config.augment && is_image) {
        Rng arng = Rng::stream(seed, {rngtag::kAugmentation, static_cast<std::uint64_t>(fold_id),
                                      static_cast<std::uint64_t>(epoch),
                                      static_cast<std::uint64_t>(w.cohort_index)});
        w.flip_left = arng.bernoulli(0.5);
        w.flip_right = arng.bernoulli(0.5);
      } else {
        w.flip_left = w.flip_right = false;
      }
    }

    std::vector<std::size_t> order(train_pool.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    {
      Rng rng = Rng::stream(seed, {rngtag::kEpochShuffle, static_cast<std::uint64_t>(fold_id),
                                   static_cast<std::uint64_t>(epoch)});
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }

    double epoch_focal = 0.0, epoch_scl = 0.0;
    long epoch_samples = 0, epoch_patients = 0;

    const std::size_t batch_size = static_cast<std::size_t>(config.batch_patients);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      const std::size_t members = end - start;

      long batch_samples = 0;
      for (std::size_t i = start; i < end; ++i)
        batch_samples += static_cast<long>(train_pool[order[i]].samples.size());
      if (batch_samples == 0) continue;
      const double focal_scale = 1.0 / static_cast<double>(batch_samples);
      const double scl_scale = config.loss.lambda / static_cast<double>(members);

      std::vector<PatientShare> shares(members);
      parallel_for(members, [&](std::size_t slot) {
        const PatientWork& w = train_pool[order[start + slot]];
        PatientShare& share = shares[slot];
        share.grads = make_gradients(result.params);
        share.n_samples = static_cast<long>(w.samples.size());
        if (w.samples.empty()) return;

        ModelInput input = inputs.input_for(w.id);
        Tensor3 flipped;
        if (is_image && (w.flip_left || w.flip_right)) {
          flipped = *input.image;
          flip_collage_halves(flipped, w.flip_left, w.flip_right);
          input.image = &flipped;
        }

        const EncoderCache enc = encode_forward(result.params, input);
        std::vector<HeadCache> heads;
        heads.reserve(w.samples.size());
        std::vector<std::pair<double, double>> tp;
        for (const TimeSample& s : w.samples) {
          heads.push_back(head_forward(result.params, enc.emb, s.t_norm));
          tp.emplace_back(static_cast<double>(s.t_days), heads.back().prob);
        }
        const SclResult patient_scl = scl(tp);
        share.scl_value = patient_scl.value;

        std::vector<double> d_emb(enc.emb.size(), 0.0);
        for (std::size_t k = 0; k < w.samples.size(); ++k) {
          const int y = w.samples[k].label == OsLabel::deceased ? 0 : 1;
          const LossValueGrad f = focal_loss(heads[k].prob, y, config.loss);
          share.focal_sum += f.value;
          const double d_prob = f.d_dp * focal_scale + patient_scl.d_dp[k] * scl_scale;
          head_backward(result.params, enc.emb, heads[k], d_prob, share.grads, d_emb);
        }
        encoder_backward(result.params, enc, d_emb, share.grads, nullptr);
      });

      // Fixed-order reduction keeps training independent of the thread count.
      GradientStore batch_grads = make_gradients(result.params);
      for (std::size_t slot = 0; slot < members; ++slot) {
        const PatientShare& share = shares[slot];
        for (std::size_t i = 0; i < batch_grads.size(); ++i) batch_grads[i] += share.grads[i];
        epoch_focal += share.focal_sum;
        epoch_scl += share.scl_value;
        epoch_samples += share.n_samples;
        result.log.grad_samples[train_pool[order[start + slot]].id] += share.n_samples;
      }
      epoch_patients += static_cast<long>(members);

      adam_step(result.params, batch_grads, state, config.adam);
    }

    const double train_loss =
        (epoch_samples > 0 ? epoch_focal / static_cast<double>(epoch_samples) : 0.0) +
        (epoch_patients > 0 ? config.loss.lambda * epoch_scl / static_cast<double>(epoch_patients)
                            : 0.0);

    double val_focal = 0.0, val_scl = 0.0;
    long val_samples = 0;
    std::vector<std::array<double, 2>> val_terms(val_pool.size());
    std::vector<long> val_counts(val_pool.size(), 0);
    parallel_for(val_pool.size(), [&](std::size_t i) {
      const PatientWork& w = val_pool[i];
      double fsum = 0.0, sv = 0.0;
      long ns = 0;
      eval_loss_terms(result.params, inputs.input_for(w.id), w.samples, config.loss, &fsum, &sv, &ns);
      val_terms[i] = {fsum, sv};
      val_counts[i] = ns;
    });
    for (std::size_t i = 0; i < val_pool.size(); ++i) {
      val_focal += val_terms[i][0];
      val_scl += val_terms[i][1];
      val_samples += val_counts[i];
    }
    const double val_loss =
        (val_samples > 0 ? val_focal / static_cast<double>(val_samples) : 0.0) +
        (!val_pool.empty() ? config.loss.lambda * val_scl / static_cast<double>(val_pool.size())
                           : 0.0);

    if (!std::isfinite(train_loss) || !std::isfinite(val_loss))
      throw AbortEpochError("train_fold: non-finite loss at epoch " + std::to_string(epoch));

    if (schedule_lr(state, val_loss)) {
      best_params = result.params;
      result.log.best_epoch = epoch;
    }
    result.log.rows.push_back({epoch, train_loss, val_loss, lr_in_effect});
  }

  result.params = std::move(best_params);
  return result;
}

CvResult train_cv(const CohortDataset& cohort, int k, const TrainConfig& config,
                  std::uint64_t seed) {
  CvResult cv;
  cv.folds = split_folds(cohort, k, seed);

  const CohortStats* stats_ptr = nullptr;
  CohortStats stats;
  PatientInputs shared_inputs;
  if (config.model.kind == EncoderKind::image) {
    shared_inputs = prepare_inputs(cohort, config.model, nullptr);
  }

  for (int fold = 0; fold < k; ++fold) {
    if (config.model.kind == EncoderKind::tabular) {
      // Featurization statistics must come from this fold's training split.
      stats = compute_cohort_stats(cohort, cv.folds, fold);
      stats_ptr = &stats;
      const PatientInputs fold_inputs = prepare_inputs(cohort, config.model, stats_ptr);
      cv.fold_results.push_back(train_fold(cohort, fold_inputs, fold, cv.folds, config, seed));
    } else {
      cv.fold_results.push_back(train_fold(cohort, shared_inputs, fold, cv.folds, config, seed));
    }
  }
  return cv;
}

SurvivalCurve predict_ensemble_curve(const std::vector<const ModelParams*>& models,
                                     const ModelInput& input, const std::vector<int>& grid_days,
                                     bool monotonize, int horizon_days) {
  if (models.empty()) throw InvalidInputError("predict_ensemble_curve: no models");
  SurvivalCurve curve;
  curve.grid_days = grid_days;
  curve.probs.assign(grid_days.size(), 0.0);
  for (const ModelParams* m : models) {
    const SurvivalCurve one = predict_curve(*m, input, grid_days, false, horizon_days);
    for (std::size_t i = 0; i < curve.probs.size(); ++i) curve.probs[i] += one.probs[i];
  }
  const double inv = 1.0 / static_cast<double>(models.size());
  for (double& p : curve.probs) p *= inv;
  if (monotonize) {
    double running = curve.probs.front();
    for (double& p : curve.probs) {
      running = std::min(running, p);
      p = running;
    }
    curve.monotonized = true;
  }
  return curve;
}

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

void write_trainlog_csv(const TrainLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write trainlog: " + path);
  out << "epoch,train_loss,val_loss,lr\n";
  for (const auto& row : log.rows)
    out << row.epoch << ',' << fmt6(row.train_loss) << ',' << fmt6(row.val_loss) << ','
        << fmt6(row.lr) << '\n';
  if (!out) throw IoError("trainlog write failed: " + path);
}

void save_run(const std::string& run_dir, const CvResult& cv, std::uint64_t seed) {
  std::error_code ec;
  fs::create_directories(run_dir, ec);
  for (std::size_t fold = 0; fold < cv.fold_results.size(); ++fold) {
    const fs::path fold_dir = fs::path(run_dir) / ("fold" + std::to_string(fold));
    fs::create_directories(fold_dir, ec);
    CheckpointMeta meta;
    meta.seed = seed;
    meta.fold = static_cast<int>(fold);
    meta.epoch = cv.fold_results[fold].log.best_epoch;
    save_checkpoint(cv.fold_results[fold].params, meta, (fold_dir / "checkpoint.bin").string());
    write_trainlog_csv(cv.fold_results[fold].log, (fold_dir / "trainlog.csv").string());
  }
}

std::vector<ModelParams> load_run(const std::string& run_dir) {
  std::vector<ModelParams> models;
  for (int fold = 0;; ++fold) {
    const fs::path ckpt = fs::path(run_dir) / ("fold" + std::to_string(fold)) / "checkpoint.bin";
    if (!fs::exists(ckpt)) break;
    models.push_back(load_checkpoint(ckpt.string()));
  }
  if (models.empty()) throw IoError("no checkpoints under run dir: " + run_dir);
  return models;
}

}  // namespace chronosurv
