#include <doctest.h>

#include <algorithm>
#include <cmath>

#include <filesystem>

#include "chronosurv/baselines.hpp"
#include "chronosurv/errors.hpp"
#include "chronosurv/rng.hpp"
#include "chronosurv/survstats.hpp"
#include "oracles.hpp"

using namespace chronosurv;

TEST_SUITE_BEGIN("baselines");

namespace {

PatientRecord patient_surv(int scan, std::optional<int> death, int lfd) {
  PatientRecord p;
  p.id = "b";
  p.scan_day = scan;
  p.lfd_day = lfd;
  if (death) {
    p.event = true;
    p.death_day = death;
  }
  return p;
}

ModelConfig bank_model() {
  ModelConfig cfg;
  cfg.stem_pool = 8;
  cfg.conv_widths = {4, 6, 6};
  cfg.embed_dim = 6;
  cfg.temporal_hidden = 3;
  cfg.classifier_hidden = 3;
  return cfg;
}

}  // namespace

TEST_CASE("label_at_horizon boundary rules") {
  // death at day 400, tau 365: alive at the horizon
  CHECK(*label_at_horizon(patient_surv(0, 400, 500), 365.0) == OsLabel::alive);
  // censored at day 200, tau 365: excluded
  CHECK_FALSE(label_at_horizon(patient_surv(0, std::nullopt, 200), 365.0).has_value());
  // death exactly at tau counts as deceased
  CHECK(*label_at_horizon(patient_surv(0, 365, 500), 365.0) == OsLabel::deceased);
  // censored exactly at tau: not known beyond it, excluded
  CHECK_FALSE(label_at_horizon(patient_surv(0, std::nullopt, 365), 365.0).has_value());
  CHECK_THROWS_AS(label_at_horizon(patient_surv(0, 100, 200), 0.0), InvalidInputError);
}

TEST_CASE("horizon label sets are nested across horizons") {
  Rng rng(91);
  for (int trial = 0; trial < 200; ++trial) {
    const int scan = static_cast<int>(rng.uniform_int(0, 40));
    const int lfd = scan + static_cast<int>(rng.uniform_int(30, 1800));
    PatientRecord p;
    if (rng.bernoulli(0.5))
      p = patient_surv(scan, scan + static_cast<int>(rng.uniform_int(1, lfd - scan)), lfd);
    else
      p = patient_surv(scan, std::nullopt, lfd);

    bool was_deceased = false, was_excluded = false;
    for (int h = 1; h <= 10; ++h) {
      const auto label = label_at_horizon(p, 0.5 * h * 365.0);
      if (was_deceased) CHECK(*label == OsLabel::deceased);
      if (!label) was_excluded = true;
      else if (was_excluded) CHECK(*label == OsLabel::deceased);
      if (label && *label == OsLabel::deceased) was_deceased = true;
    }
  }
}

TEST_CASE("horizon bank on a cohort where nobody dies is fully untrainable") {
  CohortConfig cc;
  cc.n = 6;
  cc.vol_nx = cc.vol_ny = 12;
  cc.vol_nz = 16;
  cc.lambda0 = 1e-9;  // essentially no events
  const CohortDataset cohort = generate_cohort(cc, 41);
  bool any_event = false;
  for (const auto& p : cohort.patients) any_event |= p.event;
  REQUIRE_FALSE(any_event);

  HorizonTrainConfig cfg;
  cfg.model = bank_model();
  cfg.epochs = 1;
  const PatientInputs inputs = prepare_inputs(cohort, cfg.model, nullptr);
  const HorizonModelBank bank = train_horizon_bank(cohort, inputs, cfg, 41);
  CHECK(bank.models.size() == kHorizonCount);
  for (const auto& m : bank.models) CHECK_FALSE(m.has_value());
}

TEST_CASE("horizon bank trains ten models and matches eligibility tallies") {
  CohortConfig cc;
  cc.n = 16;
  cc.vol_nx = cc.vol_ny = 12;
  cc.vol_nz = 16;
  cc.beta_tmtv = 1.5;
  cc.lambda0 = 1.5e-3;
  const CohortDataset cohort = generate_cohort(cc, 43);

  HorizonTrainConfig cfg;
  cfg.model = bank_model();
  cfg.epochs = 2;
  cfg.adam.lr = 1e-3;
  const PatientInputs inputs = prepare_inputs(cohort, cfg.model, nullptr);
  const HorizonModelBank bank = train_horizon_bank(cohort, inputs, cfg, 43);
  REQUIRE(bank.horizons_years.size() == kHorizonCount);
  CHECK(bank.horizons_years.front() == doctest::Approx(0.5));
  CHECK(bank.horizons_years.back() == doctest::Approx(5.0));

  for (int h = 0; h < kHorizonCount; ++h) {
    const double tau = bank.horizons_years[static_cast<std::size_t>(h)] * 365.0;
    int alive = 0, dead = 0;
    for (const auto& p : cohort.patients) {
      const auto label = label_at_horizon(p, tau);
      if (!label) continue;
      (*label == OsLabel::alive ? alive : dead) += 1;
    }
    const bool trainable = alive > 0 && dead > 0;
    CHECK(bank.models[static_cast<std::size_t>(h)].has_value() == trainable);
  }
}

TEST_CASE("tabular proposed model honors the shared head contracts") {
  ModelConfig cfg;
  cfg.kind = EncoderKind::tabular;
  cfg.tabular_dim = 15;
  cfg.tabular_hidden = 8;
  cfg.embed_dim = 6;
  cfg.temporal_hidden = 4;
  cfg.classifier_hidden = 4;
  ModelParams params = make_params(cfg);
  Rng rng(92);
  for (double& v : params.values) v = rng.uniform(-0.5, 0.5);

  std::vector<double> feats(15);
  for (double& f : feats) f = rng.uniform(-1.0, 1.0);

  SUBCASE("all-ones temporal embedding makes the output time independent") {
    std::fill_n(params.block("time1.w"), params.block_count("time1.w"), 0.0);
    std::fill_n(params.block("time1.b"), params.block_count("time1.b"), 0.0);
    std::fill_n(params.block("time2.w"), params.block_count("time2.w"), 0.0);
    std::fill_n(params.block("time2.b"), params.block_count("time2.b"), 1.0);
    const double p0 = tabular_proposed(feats, 0.0, params);
    CHECK(tabular_proposed(feats, 0.5, params) == p0);
    CHECK(tabular_proposed(feats, 1.0, params) == p0);
  }
  SUBCASE("repeat calls are bit identical") {
    CHECK(tabular_proposed(feats, 0.37, params) == tabular_proposed(feats, 0.37, params));
  }
  SUBCASE("image params are rejected") {
    const ModelParams image_params = make_params(ModelConfig{});
    CHECK_THROWS_AS(tabular_proposed(feats, 0.5, image_params), ContractViolationError);
  }
}

TEST_CASE("ensemble basics and AUSPC convexity") {
  CHECK(ensemble(0.4, 0.6) == doctest::Approx(0.5));
  CHECK(ensemble(0.7, 0.7) == doctest::Approx(0.7));
  CHECK_THROWS_AS(ensemble(-0.1, 0.5), InvalidInputError);

  Rng rng(93);
  for (int trial = 0; trial < 50; ++trial) {
    SurvivalCurve a, b;
    a.grid_days = b.grid_days = evaluation_grid();
    for (std::size_t i = 0; i < a.grid_days.size(); ++i) {
      a.probs.push_back(rng.uniform(0.0, 1.0));
      b.probs.push_back(rng.uniform(0.0, 1.0));
    }
    const SurvivalCurve mix = ensemble_curves(a, b);
    const double lo = std::min(auspc(a), auspc(b));
    const double hi = std::max(auspc(a), auspc(b));
    const double mid = auspc(mix);
    CHECK(mid >= lo - 1e-9);
    CHECK(mid <= hi + 1e-9);
    for (std::size_t i = 0; i < mix.probs.size(); ++i) {
      CHECK(mix.probs[i] >= std::min(a.probs[i], b.probs[i]) - 1e-15);
      CHECK(mix.probs[i] <= std::max(a.probs[i], b.probs[i]) + 1e-15);
    }
  }
}

TEST_CASE("cox_tabular learns the separating direction") {
  // One binary covariate: x=1 dies early, x=0 dies late.
  std::vector<std::vector<double>> X;
  std::vector<double> times;
  std::vector<int> events;
  for (int i = 0; i < 10; ++i) {
    X.push_back({i < 5 ? 1.0 : 0.0});
    times.push_back(i < 5 ? 10.0 + i : 100.0 + i);
    events.push_back(1);
  }
  CoxFitOptions opt;
  opt.max_steps = 800;
  const CoxFit fit = cox_tabular(X, times, events, opt);
  CHECK(fit.weights[0] > 0.0);  // higher risk for the early-death group

  // The optimizer must push the NLL below the undiscriminating baseline of
  // the two-patient hand case family: start NLL(w=0) > final NLL.
  REQUIRE(!fit.nll_trajectory.empty());
  const std::vector<double> zero_risk(times.size(), 0.0);
  CHECK(fit.nll_trajectory.back() < cox_partial_nll(zero_risk, times, events).value);
}

TEST_CASE("cox_tabular two-patient case drives NLL below ln 2") {
  std::vector<std::vector<double>> X{{1.0}, {0.0}};
  std::vector<double> times{1.0, 2.0};
  std::vector<int> events{1, 1};
  CoxFitOptions opt;
  opt.max_steps = 500;
  const CoxFit fit = cox_tabular(X, times, events, opt);
  CHECK(fit.nll_trajectory.back() < std::log(2.0));
}

TEST_CASE("cox_tabular recovers the rank of the true coefficients (n=500)") {
  Rng rng(94);
  const std::vector<double> beta{1.2, 0.6, -0.8};
  std::vector<std::vector<double>> X;
  std::vector<double> times;
  std::vector<int> events;
  for (int i = 0; i < 500; ++i) {
    std::vector<double> x(3);
    for (double& v : x) v = rng.normal();
    double lp = 0.0;
    for (int j = 0; j < 3; ++j) lp += beta[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
    const double t = rng.exponential(0.01 * std::exp(lp));
    X.push_back(x);
    times.push_back(t);
    events.push_back(1);
  }
  CoxFitOptions opt;
  opt.lr = 0.1;
  opt.max_steps = 600;
  const CoxFit fit = cox_tabular(X, times, events, opt);
  // same sign and same ordering as the true coefficients
  CHECK(fit.weights[0] > 0.0);
  CHECK(fit.weights[1] > 0.0);
  CHECK(fit.weights[2] < 0.0);
  CHECK(fit.weights[0] > fit.weights[1]);
}

TEST_CASE("cox_tabular NLL is non-increasing with a small plain-GD rate") {
  Rng rng(95);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::vector<double>> X;
    std::vector<double> times;
    std::vector<int> events;
    const int n = 8 + static_cast<int>(rng.uniform_int(0, 8));
    for (int i = 0; i < n; ++i) {
      X.push_back({rng.normal(), rng.normal()});
      times.push_back(rng.uniform(1.0, 100.0));
      events.push_back(rng.bernoulli(0.7) ? 1 : 0);
    }
    events[0] = 1;
    CoxFitOptions opt;
    opt.use_adam = false;
    opt.lr = 1e-3;
    opt.max_steps = 200;
    const CoxFit fit = cox_tabular(X, times, events, opt);
    for (std::size_t s = 1; s < fit.nll_trajectory.size(); ++s)
      CHECK(fit.nll_trajectory[s] <= fit.nll_trajectory[s - 1] + 1e-12);
  }
}

TEST_CASE("cox_tabular with a hidden layer still fits the sign structure") {
  std::vector<std::vector<double>> X;
  std::vector<double> times;
  std::vector<int> events;
  Rng rng(96);
  for (int i = 0; i < 60; ++i) {
    const double x = rng.uniform(-1.0, 1.0);
    X.push_back({x});
    times.push_back(rng.exponential(0.02 * std::exp(1.5 * x)));
    events.push_back(1);
  }
  CoxFitOptions opt;
  opt.hidden = 4;
  opt.max_steps = 400;
  const CoxFit fit = cox_tabular(X, times, events, opt);
  // risk scores must rank with x: larger covariate, larger risk
  const auto ci = oracle::c_index(fit.risk_scores, times, events);
  REQUIRE(ci.has_value());
  CHECK(*ci > 0.6);
}

TEST_CASE("cox_tabular rejects event-free input") {
  CHECK_THROWS_AS(cox_tabular({{1.0}}, {1.0}, {0}), UndefinedStatError);
}

TEST_CASE("horizon bank survives a save/load round trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "chronosurv_test_bank";
  fs::remove_all(dir);

  HorizonModelBank bank;
  for (int h = 1; h <= kHorizonCount; ++h) bank.horizons_years.push_back(0.5 * h);
  Rng rng(97);
  for (int h = 0; h < kHorizonCount; ++h) {
    if (h == 3) {
      bank.models.emplace_back(std::nullopt);  // untrainable slot stays empty
      continue;
    }
    ModelConfig cfg = bank_model();
    cfg.time_conditioned = false;
    ModelParams params = make_params(cfg);
    init_params(params, rng);
    bank.models.emplace_back(std::move(params));
  }
  save_horizon_bank(bank, dir.string(), 7);

  const HorizonModelBank loaded = load_horizon_bank(dir.string());
  REQUIRE(loaded.models.size() == kHorizonCount);
  CHECK_FALSE(loaded.models[3].has_value());
  for (int h = 0; h < kHorizonCount; ++h) {
    if (h == 3) continue;
    REQUIRE(loaded.models[static_cast<std::size_t>(h)].has_value());
    CHECK(loaded.models[static_cast<std::size_t>(h)]->values ==
          bank.models[static_cast<std::size_t>(h)]->values);
  }
  CHECK(fs::exists(dir / "h30" / "checkpoint.bin"));  // 2.5 years = 30 months
  fs::remove_all(dir);
}

TEST_SUITE_END();
