#include "chronosurv/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "chronosurv/errors.hpp"
#include "chronosurv/losses.hpp"
#include "chronosurv/threads.hpp"

namespace chronosurv {

namespace fs = std::filesystem;

std::optional<OsLabel> label_at_horizon(const PatientRecord& patient, double tau_days) {
  if (tau_days <= 0.0) throw InvalidInputError("label_at_horizon: tau must be > 0");
  if (patient.event && static_cast<double>(*patient.death_days()) <= tau_days)
    return OsLabel::deceased;
  if (static_cast<double>(patient.survival_days()) > tau_days) return OsLabel::alive;
  return std::nullopt;  // censored at or before tau
}

namespace {

// Focal-loss-only training of one time-free classifier on the eligible
// patients of a single horizon.
ModelParams train_one_horizon(const CohortDataset& cohort, const PatientInputs& inputs,
                              const HorizonTrainConfig& config, double tau_days,
                              std::uint64_t seed, int horizon_index) {
  struct Member {
    const PatientRecord* record;
    std::size_t cohort_index;
    int y;  // 1 = alive at tau
  };
  std::vector<Member> members;
  for (std::size_t i = 0; i < cohort.patients.size(); ++i) {
    const auto label = label_at_horizon(cohort.patients[i], tau_days);
    if (!label) continue;
    members.push_back({&cohort.patients[i], i, *label == OsLabel::alive ? 1 : 0});
  }
  bool has_alive = false, has_dead = false;
  for (const Member& m : members) (m.y == 1 ? has_alive : has_dead) = true;
  if (!has_alive || !has_dead)
    throw UndefinedStatError("horizon has single-class labels");

  ModelConfig model_cfg = config.model;
  model_cfg.time_conditioned = false;
  ModelParams params = make_params(model_cfg);
  {
    Rng rng = Rng::stream(seed, {rngtag::kParamInit, 0xB0, static_cast<std::uint64_t>(horizon_index)});
    init_params(params, rng);
  }
  OptimState state = make_optim_state(params, config.adam.lr);
  const bool is_image = model_cfg.kind == EncoderKind::image;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<std::size_t> order(members.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng = Rng::stream(seed, {rngtag::kEpochShuffle, 0xB0,
                                         static_cast<std::uint64_t>(horizon_index),
                                         static_cast<std::uint64_t>(epoch)});
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);

    const std::size_t batch = static_cast<std::size_t>(config.batch_patients);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      const std::size_t n = end - start;
      const double scale = 1.0 / static_cast<double>(n);

      std::vector<GradientStore> shares(n);
      parallel_for(n, [&](std::size_t slot) {
        const Member& m = members[order[start + slot]];
        shares[slot] = make_gradients(params);

        ModelInput input = inputs.input_for(m.record->id);
        Tensor3 flipped;
        if (config.augment && is_image) {
          Rng arng = Rng::stream(seed, {rngtag::kAugmentation, 0xB0,
                                        static_cast<std::uint64_t>(horizon_index),
                                        static_cast<std::uint64_t>(epoch), m.cohort_index});
          const bool fl = arng.bernoulli(0.5), fr = arng.bernoulli(0.5);
          if (fl || fr) {
            flipped = *input.image;
            flip_collage_halves(flipped, fl, fr);
            input.image = &flipped;
          }
        }

        const EncoderCache enc = encode_forward(params, input);
        const HeadCache head = head_forward(params, enc.emb, 0.0);
        const LossValueGrad f = focal_loss(head.prob, m.y, config.loss);
        std::vector<double> d_emb(enc.emb.size(), 0.0);
        head_backward(params, enc.emb, head, f.d_dp * scale, shares[slot], d_emb);
        encoder_backward(params, enc, d_emb, shares[slot], nullptr);
      });

      GradientStore batch_grads = make_gradients(params);
      for (const GradientStore& share : shares)
        for (std::size_t i = 0; i < batch_grads.size(); ++i) batch_grads[i] += share[i];
      adam_step(params, batch_grads, state, config.adam);
    }
  }
  return params;
}

}  // namespace

HorizonModelBank train_horizon_bank(const CohortDataset& cohort, const PatientInputs& inputs,
                                    const HorizonTrainConfig& config, std::uint64_t seed) {
  HorizonModelBank bank;
  for (int h = 1; h <= kHorizonCount; ++h) bank.horizons_years.push_back(0.5 * h);
  for (int h = 0; h < kHorizonCount; ++h) {
    const double tau = bank.horizons_years[static_cast<std::size_t>(h)] * 365.0;
    try {
      bank.models.push_back(train_one_horizon(cohort, inputs, config, tau, seed, h));
    } catch (const UndefinedStatError&) {
      bank.models.push_back(std::nullopt);
    }
  }
  return bank;
}

double horizon_bank_prob(const ModelParams& params, const ModelInput& input) {
  const EncoderCache enc = encode_forward(params, input);
  return head_forward(params, enc.emb, 0.0).prob;
}

double tabular_proposed(const std::vector<double>& features, double t_norm,
                        const ModelParams& params) {
  if (params.config.kind != EncoderKind::tabular)
    throw ContractViolationError("tabular_proposed: params are not a tabular model");
  ModelInput input;
  input.features = &features;
  return forward(params, input, t_norm).prob;
}

double ensemble(double prob_a, double prob_b) {
  if (prob_a < 0.0 || prob_a > 1.0 || prob_b < 0.0 || prob_b > 1.0)
    throw InvalidInputError("ensemble: probabilities must be in [0, 1]");
  return 0.5 * (prob_a + prob_b);
}

SurvivalCurve ensemble_curves(const SurvivalCurve& a, const SurvivalCurve& b) {
  if (a.grid_days != b.grid_days) throw InvalidInputError("ensemble_curves: grids differ");
  SurvivalCurve out;
  out.grid_days = a.grid_days;
  out.probs.resize(a.probs.size());
  for (std::size_t i = 0; i < a.probs.size(); ++i) out.probs[i] = ensemble(a.probs[i], b.probs[i]);
  out.monotonized = a.monotonized && b.monotonized;
  return out;
}

namespace {

struct CoxModelView {
  // Linear: weights = w[p]. MLP: weights = [W1 (h x p), b1 (h), w2 (h)].
  int p = 0, hidden = 0;

  std::size_t size() const {
    return hidden == 0 ? static_cast<std::size_t>(p)
                       : static_cast<std::size_t>(hidden) * p + 2 * static_cast<std::size_t>(hidden);
  }

  double risk(const std::vector<double>& w, const std::vector<double>& x) const {
    if (hidden == 0) {
      double r = 0.0;
      for (int i = 0; i < p; ++i) r += w[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
      return r;
    }
    double r = 0.0;
    for (int h = 0; h < hidden; ++h) {
      double a = w[static_cast<std::size_t>(hidden) * p + static_cast<std::size_t>(h)];  // b1
      for (int i = 0; i < p; ++i) a += w[static_cast<std::size_t>(h) * p + static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
      if (a > 0.0) r += w[static_cast<std::size_t>(hidden) * p + static_cast<std::size_t>(hidden) + static_cast<std::size_t>(h)] * a;
    }
    return r;
  }

  // Accumulates d_risk * d(risk)/d(w) into grad.
  void accumulate(const std::vector<double>& w, const std::vector<double>& x, double d_risk,
                  std::vector<double>& grad) const {
    if (hidden == 0) {
      for (int i = 0; i < p; ++i) grad[static_cast<std::size_t>(i)] += d_risk * x[static_cast<std::size_t>(i)];
      return;
    }
    for (int h = 0; h < hidden; ++h) {
      double a = w[static_cast<std::size_t>(hidden) * p + static_cast<std::size_t>(h)];
      for (int i = 0; i < p; ++i) a += w[static_cast<std::size_t>(h) * p + static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
      const double w2 = w[static_cast<std::size_t>(hidden) * p + static_cast<std::size_t>(hidden) + static_cast<std::size_t>(h)];
      if (a > 0.0) {
        grad[static_cast<std::size_t>(hidden) * p + static_cast<std::size_t>(hidden) + static_cast<std::size_t>(h)] += d_risk * a;
        grad[static_cast<std::size_t>(hidden) * p + static_cast<std::size_t>(h)] += d_risk * w2;
        for (int i = 0; i < p; ++i)
          grad[static_cast<std::size_t>(h) * p + static_cast<std::size_t>(i)] += d_risk * w2 * x[static_cast<std::size_t>(i)];
      }
    }
  }
};

}  // namespace

CoxFit cox_tabular(const std::vector<std::vector<double>>& features,
                   const std::vector<double>& times, const std::vector<int>& events,
                   const CoxFitOptions& options) {
  const std::size_t n = features.size();
  if (n == 0 || times.size() != n || events.size() != n)
    throw InvalidInputError("cox_tabular: empty or mismatched input");
  std::size_t n_events = 0;
  for (int e : events) n_events += (e != 0);
  if (n_events == 0) throw UndefinedStatError("cox_tabular: no events");

  CoxModelView view;
  view.p = static_cast<int>(features[0].size());
  view.hidden = options.hidden;

  CoxFit fit;
  fit.weights.assign(view.size(), 0.0);
  if (view.hidden > 0) {
    // Zero init would freeze the ReLU layer; use a small deterministic spread.
    Rng rng = Rng::stream(0xC0C5, {static_cast<std::uint64_t>(view.p), static_cast<std::uint64_t>(view.hidden)});
    for (double& w : fit.weights) w = rng.uniform(-0.1, 0.1);
  }

  std::vector<double> m(view.size(), 0.0), v(view.size(), 0.0);
  std::vector<double> risks(n), grad(view.size());
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  for (int step = 1; step <= options.max_steps; ++step) {
    for (std::size_t i = 0; i < n; ++i) risks[i] = view.risk(fit.weights, features[i]);
    const CoxNllResult nll = cox_partial_nll(risks, times, events);

    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      view.accumulate(fit.weights, features[i], nll.d_drisk[i], grad);

    double gnorm = 0.0;
    for (double g : grad) gnorm += g * g;
    gnorm = std::sqrt(gnorm);

    if (options.use_adam) {
      const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < view.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        fit.weights[i] -= options.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
      }
    } else {
      for (std::size_t i = 0; i < view.size(); ++i) fit.weights[i] -= options.lr * grad[i];
    }

    for (std::size_t i = 0; i < n; ++i) risks[i] = view.risk(fit.weights, features[i]);
    fit.nll_trajectory.push_back(cox_partial_nll(risks, times, events).value);

    if (gnorm < options.grad_tol) {
      fit.converged = true;
      break;
    }
  }

  fit.risk_scores.resize(n);
  for (std::size_t i = 0; i < n; ++i) fit.risk_scores[i] = view.risk(fit.weights, features[i]);
  return fit;
}

void save_horizon_bank(const HorizonModelBank& bank, const std::string& dir, std::uint64_t seed) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  for (std::size_t h = 0; h < bank.models.size(); ++h) {
    if (!bank.models[h]) continue;
    const int months = static_cast<int>(std::lround(bank.horizons_years[h] * 12.0));
    const fs::path hd = fs::path(dir) / ("h" + std::to_string(months));
    fs::create_directories(hd, ec);
    CheckpointMeta meta;
    meta.seed = seed;
    meta.fold = static_cast<int>(h);
    save_checkpoint(*bank.models[h], meta, (hd / "checkpoint.bin").string());
  }
}

HorizonModelBank load_horizon_bank(const std::string& dir) {
  HorizonModelBank bank;
  for (int h = 1; h <= kHorizonCount; ++h) {
    bank.horizons_years.push_back(0.5 * h);
    const int months = h * 6;
    const fs::path ckpt = fs::path(dir) / ("h" + std::to_string(months)) / "checkpoint.bin";
    if (fs::exists(ckpt)) bank.models.push_back(load_checkpoint(ckpt.string()));
    else bank.models.push_back(std::nullopt);
  }
  return bank;
}

}  // namespace chronosurv
