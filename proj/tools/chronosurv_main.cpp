// chronosurv: batch experiment driver for time-conditioned survival
// prediction on synthetic FDG-PET/CT cohorts. Every command reads and writes
// files only; reruns with the same seed reproduce outputs byte for byte.
//
// Exit codes: 0 ok, 2 config error, 3 training abort, 4 missing artifacts,
// 5 bad reference (unknown patient), 1 other I/O failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chronosurv/baselines.hpp"
#include "chronosurv/cohort.hpp"
#include "chronosurv/config.hpp"
#include "chronosurv/errors.hpp"
#include "chronosurv/model.hpp"
#include "chronosurv/sampling.hpp"
#include "chronosurv/stratify.hpp"
#include "chronosurv/survstats.hpp"
#include "chronosurv/svg.hpp"
#include "chronosurv/training.hpp"
#include "chronosurv/volume_io.hpp"

namespace fs = std::filesystem;
using namespace chronosurv;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitConfig = 2;
constexpr int kExitTraining = 3;
constexpr int kExitMissingArtifacts = 4;
constexpr int kExitBadReference = 5;

struct SeedFlag {
  std::uint64_t value = 0;
  bool set = false;
};

RunConfig load_config(const std::string& path, const SeedFlag& seed) {
  RunConfig cfg = parse_config_file(path);
  if (seed.set) cfg.seed = seed.value;
  return cfg;
}

CohortDataset load_data(const std::string& data_dir, bool volumes = true) {
  return load_manifest((fs::path(data_dir) / "manifest.json").string(), volumes);
}

// ---------------------------------------------------------------------------
// synth: generate a cohort, write manifest + volume files + resolved config
// ---------------------------------------------------------------------------
int cmd_synth(const std::string& config_path, const std::string& out_dir, const SeedFlag& seed) {
  const RunConfig cfg = load_config(config_path, seed);
  const CohortDataset cohort = generate_cohort(cfg.cohort, cfg.seed);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  save_manifest(cohort, (fs::path(out_dir) / "manifest.json").string());
  write_resolved_config(cfg, (fs::path(out_dir) / "config.resolved").string());
  std::cout << "synth: wrote " << cohort.patients.size() << " patients to " << out_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// project: cache 12-channel collages next to the manifest
// ---------------------------------------------------------------------------
int cmd_project(const std::string& data_dir, const std::string& out_dir) {
  const CohortDataset cohort = load_data(data_dir);
  const fs::path dir = out_dir.empty() ? fs::path(data_dir) / "collages" : fs::path(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  for (const auto& p : cohort.patients) {
    const ProjectionCollage collage = build_collage(cohort.volumes.at(p.id));
    write_tensor((dir / (p.id + ".bin")).string(), collage.channels, "collage");
  }
  std::cout << "project: wrote " << cohort.patients.size() << " collages to " << dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train: stratified k-fold CV of the proposed model
// ---------------------------------------------------------------------------
int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& run_dir, const SeedFlag& seed) {
  const RunConfig cfg = load_config(config_path, seed);
  const CohortDataset cohort = load_data(data_dir);
  const CvResult cv = train_cv(cohort, cfg.train.k_folds, cfg.train, cfg.seed);
  save_run(run_dir, cv, cfg.seed);
  if (cfg.train.model.kind == EncoderKind::tabular) {
    for (int fold = 0; fold < cfg.train.k_folds; ++fold) {
      const CohortStats stats = compute_cohort_stats(cohort, cv.folds, fold);
      nlohmann::ordered_json j;
      j["age_mean"] = stats.age_mean;
      j["age_std"] = stats.age_std;
      j["tmtv_mean"] = stats.tmtv_mean;
      j["tmtv_std"] = stats.tmtv_std;
      j["dmax_q3"] = stats.dmax_q3;
      j["lesion_median"] = stats.lesion_median;
      std::ofstream out(fs::path(run_dir) / ("fold" + std::to_string(fold)) / "stats.json");
      out << j.dump(2) << '\n';
    }
  }
  write_resolved_config(cfg, (fs::path(run_dir) / "config.resolved").string());
  std::cout << "train: " << cfg.train.k_folds << " folds done under " << run_dir << "\n";
  return kExitOk;
}

CohortStats load_stats(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open stats: " + path.string());
  nlohmann::json j = nlohmann::json::parse(in);
  CohortStats s;
  s.age_mean = j.at("age_mean").get<double>();
  s.age_std = j.at("age_std").get<double>();
  s.tmtv_mean = j.at("tmtv_mean").get<double>();
  s.tmtv_std = j.at("tmtv_std").get<double>();
  s.dmax_q3 = j.at("dmax_q3").get<double>();
  s.lesion_median = j.at("lesion_median").get<double>();
  return s;
}

// Ensemble curves of the k fold models for every patient of a cohort.
std::vector<SurvivalCurve> ensemble_cohort_curves(const std::vector<ModelParams>& models,
                                                  const std::string& run_dir,
                                                  const CohortDataset& cohort, bool monotonize) {
  const std::vector<int> grid = evaluation_grid();
  std::vector<SurvivalCurve> curves;

  if (models[0].config.kind == EncoderKind::image) {
    const PatientInputs inputs = prepare_inputs(cohort, models[0].config, nullptr);
    std::vector<const ModelParams*> ptrs;
    for (const auto& m : models) ptrs.push_back(&m);
    for (const auto& p : cohort.patients)
      curves.push_back(predict_ensemble_curve(ptrs, inputs.input_for(p.id), grid, monotonize));
    return curves;
  }

  // Tabular models featurize with their own fold's training statistics.
  std::vector<CohortStats> stats;
  for (std::size_t fold = 0; fold < models.size(); ++fold) {
    const fs::path sp = fs::path(run_dir) / ("fold" + std::to_string(fold)) / "stats.json";
    if (!fs::exists(sp)) throw IoError("missing stats.json for fold " + std::to_string(fold));
    stats.push_back(load_stats(sp));
  }
  for (const auto& p : cohort.patients) {
    SurvivalCurve mix;
    mix.grid_days = grid;
    mix.probs.assign(grid.size(), 0.0);
    for (std::size_t fold = 0; fold < models.size(); ++fold) {
      const FeatureVector fv = featurize_tabular(p, stats[fold]);
      ModelInput input;
      input.features = &fv.values;
      const SurvivalCurve one = predict_curve(models[fold], input, grid, false);
      for (std::size_t i = 0; i < grid.size(); ++i) mix.probs[i] += one.probs[i];
    }
    for (double& v : mix.probs) v /= static_cast<double>(models.size());
    if (monotonize) {
      double running = mix.probs.front();
      for (double& v : mix.probs) {
        running = std::min(running, v);
        v = running;
      }
      mix.monotonized = true;
    }
    curves.push_back(std::move(mix));
  }
  return curves;
}

void km_groups_svg(const std::vector<const PatientRecord*>& a, const std::string& label_a,
                   const std::vector<const PatientRecord*>& b, const std::string& label_b,
                   const std::string& title, const std::string& path) {
  const auto fit = [](const std::vector<const PatientRecord*>& group) {
    std::vector<double> times;
    std::vector<int> events;
    for (const auto* p : group) {
      times.push_back(static_cast<double>(p->survival_days()));
      events.push_back(p->event ? 1 : 0);
    }
    return km_fit(times, events);
  };
  SvgPlot plot(title, "days since scan", "survival probability");
  plot.set_x_range(0.0, 1825.0);
  plot.set_y_range(0.0, 1.0);
  if (!a.empty()) plot.add_km_curve(fit(a), "#c0392b", label_a, 1825.0);
  if (!b.empty()) plot.add_km_curve(fit(b), "#2471a3", label_b, 1825.0);
  plot.write(path);
}

// ---------------------------------------------------------------------------
// evaluate: report.csv/json, risk stratification, KM plots
// ---------------------------------------------------------------------------
int cmd_evaluate(const std::string& run_dir, const std::string& data_dir,
                 const std::string& out_arg) {
  if (!fs::exists(fs::path(run_dir) / "fold0" / "checkpoint.bin")) {
    std::cerr << "evaluate: no checkpoints under " << run_dir << "\n";
    return kExitMissingArtifacts;
  }
  const std::vector<ModelParams> models = load_run(run_dir);
  const CohortDataset cohort = load_data(data_dir);
  const fs::path out_dir = out_arg.empty() ? fs::path(run_dir) : fs::path(out_arg);
  std::error_code ec;
  fs::create_directories(out_dir, ec);

  const std::vector<SurvivalCurve> curves = ensemble_cohort_curves(models, run_dir, cohort, true);
  std::vector<const PatientRecord*> patients;
  for (const auto& p : cohort.patients) patients.push_back(&p);

  const EvalReport report = evaluate_curves(patients, curves);
  write_report_csv(report, (out_dir / "report.csv").string());
  write_report_json(report, (out_dir / "report.json").string());

  // risk stratification on AUSPC
  const RiskAssignment risk = assign_risk(report.auspc_per_patient);
  std::vector<const PatientRecord*> high, low;
  for (const auto& p : cohort.patients)
    (risk.group_of.at(p.id) == RiskGroup::high ? high : low).push_back(&p);
  LogRankResult lr;
  {
    std::vector<double> th, tl;
    std::vector<int> eh, el;
    for (const auto* p : high) {
      th.push_back(static_cast<double>(p->survival_days()));
      eh.push_back(p->event ? 1 : 0);
    }
    for (const auto* p : low) {
      tl.push_back(static_cast<double>(p->survival_days()));
      el.push_back(p->event ? 1 : 0);
    }
    try {
      lr = log_rank(th, eh, tl, el);
    } catch (const UndefinedStatError&) {
      lr = LogRankResult{};
    }
  }
  write_stratification_csv(risk, report.auspc_per_patient, (out_dir / "stratification.csv").string());
  write_stratification_json(risk, lr, (out_dir / "stratification.json").string());

  // KM plots: ground truth vs predicted, risk groups, TMTV median split, sex split
  {
    std::vector<double> gt_times, pred_times;
    std::vector<int> gt_events, pred_events;
    for (std::size_t i = 0; i < patients.size(); ++i) {
      gt_times.push_back(static_cast<double>(patients[i]->survival_days()));
      gt_events.push_back(patients[i]->event ? 1 : 0);
      const auto death = predicted_death_time(curves[i]);
      pred_times.push_back(death ? *death : 1825.0);
      pred_events.push_back(death ? 1 : 0);
    }
    SvgPlot plot("Kaplan-Meier: recorded vs predicted", "days since scan", "survival probability");
    plot.set_x_range(0.0, 1825.0);
    plot.set_y_range(0.0, 1.0);
    plot.add_km_curve(km_fit(gt_times, gt_events), "#1e8449", "recorded", 1825.0);
    plot.add_km_curve(km_fit(pred_times, pred_events), "#7d3c98", "predicted", 1825.0);
    plot.write((out_dir / "km_gt_vs_predicted.svg").string());
  }
  km_groups_svg(high, "high risk", low, "low risk", "Kaplan-Meier: model risk groups",
                (out_dir / "km_risk_groups.svg").string());
  {
    std::vector<double> tmtvs;
    for (const auto& p : cohort.patients) tmtvs.push_back(p.tmtv);
    std::sort(tmtvs.begin(), tmtvs.end());
    const double median = tmtvs[tmtvs.size() / 2];
    std::vector<const PatientRecord*> hi_burden, lo_burden;
    for (const auto& p : cohort.patients)
      (p.tmtv > median ? hi_burden : lo_burden).push_back(&p);
    km_groups_svg(hi_burden, "high TMTV", lo_burden, "low TMTV",
                  "Kaplan-Meier: TMTV median split", (out_dir / "km_tmtv_split.svg").string());
  }
  {
    std::vector<const PatientRecord*> male, female;
    for (const auto& p : cohort.patients)
      (p.sex == Sex::male ? male : female).push_back(&p);
    km_groups_svg(male, "male", female, "female", "Kaplan-Meier: sex split",
                  (out_dir / "km_sex_split.svg").string());
  }

  std::cout << "evaluate: report written to " << out_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// baseline: train the fixed-horizon model bank
// ---------------------------------------------------------------------------
int cmd_baseline(const std::string& config_path, const std::string& data_dir,
                 const std::string& run_dir, const SeedFlag& seed) {
  const RunConfig cfg = load_config(config_path, seed);
  const CohortDataset cohort = load_data(data_dir);

  HorizonTrainConfig bank_cfg;
  bank_cfg.epochs = cfg.baseline_epochs;
  bank_cfg.batch_patients = cfg.train.batch_patients;
  bank_cfg.augment = cfg.train.augment;
  bank_cfg.adam = cfg.train.adam;
  bank_cfg.loss = cfg.train.loss;
  bank_cfg.model = cfg.train.model;

  const PatientInputs inputs = prepare_inputs(cohort, bank_cfg.model, nullptr);
  const HorizonModelBank bank = train_horizon_bank(cohort, inputs, bank_cfg, cfg.seed);
  const fs::path bank_dir = fs::path(run_dir) / "baseline";
  save_horizon_bank(bank, bank_dir.string(), cfg.seed);
  write_resolved_config(cfg, (fs::path(run_dir) / "config.resolved").string());

  std::ofstream out(bank_dir / "bank_report.csv");
  out << "years,eligible_alive,eligible_deceased,trainable\n";
  for (std::size_t h = 0; h < bank.horizons_years.size(); ++h) {
    const double tau = bank.horizons_years[h] * 365.0;
    int alive = 0, dead = 0;
    for (const auto& p : cohort.patients) {
      const auto label = label_at_horizon(p, tau);
      if (!label) continue;
      (*label == OsLabel::alive ? alive : dead) += 1;
    }
    out << bank.horizons_years[h] << ',' << alive << ',' << dead << ','
        << (bank.models[h] ? "yes" : "no") << '\n';
  }
  std::cout << "baseline: bank written to " << bank_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// stratify: risk groups + per-T-stage subgroup analysis
// ---------------------------------------------------------------------------
int cmd_stratify(const std::string& run_dir, const std::string& data_dir,
                 const std::string& out_arg) {
  if (!fs::exists(fs::path(run_dir) / "fold0" / "checkpoint.bin")) {
    std::cerr << "stratify: no checkpoints under " << run_dir << "\n";
    return kExitMissingArtifacts;
  }
  const std::vector<ModelParams> models = load_run(run_dir);
  const CohortDataset cohort = load_data(data_dir);
  const fs::path out_dir = out_arg.empty() ? fs::path(run_dir) : fs::path(out_arg);
  std::error_code ec;
  fs::create_directories(out_dir, ec);

  const std::vector<SurvivalCurve> curves = ensemble_cohort_curves(models, run_dir, cohort, true);
  std::map<std::string, double> auspc_map;
  std::vector<const PatientRecord*> patients;
  for (std::size_t i = 0; i < cohort.patients.size(); ++i) {
    patients.push_back(&cohort.patients[i]);
    auspc_map[cohort.patients[i].id] = auspc(curves[i]);
  }

  const SubgroupReport report = subgroup_stratify(patients, auspc_map);
  write_subgroup_json(report, (out_dir / "subgroups.json").string());
  for (const auto& [category, result] : report.by_category) {
    std::vector<const PatientRecord*> high, low;
    for (const auto* p : patients) {
      if (!p->t_stage || ("T" + std::to_string(*p->t_stage)) != category) continue;
      (result.risk.group_of.at(p->id) == RiskGroup::high ? high : low).push_back(p);
    }
    km_groups_svg(high, "high risk", low, "low risk", "Kaplan-Meier: " + category + " risk groups",
                  (out_dir / ("km_" + category + ".svg")).string());
  }
  for (const auto& skipped : report.skipped)
    std::cout << "stratify: " << skipped << " skipped (too few patients or degenerate AUSPC)\n";
  std::cout << "stratify: subgroup report written to " << out_dir << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// saliency: input-gradient heat map for one patient
// ---------------------------------------------------------------------------
int cmd_saliency(const std::string& run_dir, const std::string& data_dir,
                 const std::string& patient_id, double t_years, const std::string& out_arg) {
  if (!fs::exists(fs::path(run_dir) / "fold0" / "checkpoint.bin")) {
    std::cerr << "saliency: no checkpoints under " << run_dir << "\n";
    return kExitMissingArtifacts;
  }
  const std::vector<ModelParams> models = load_run(run_dir);
  if (models[0].config.kind != EncoderKind::image) {
    std::cerr << "saliency: run holds a tabular model\n";
    return kExitConfig;
  }
  const CohortDataset cohort = load_data(data_dir);
  const PatientRecord* patient = cohort.find(patient_id);
  if (patient == nullptr) {
    std::cerr << "saliency: unknown patient '" << patient_id << "'\n";
    return kExitBadReference;
  }
  const fs::path out_dir = out_arg.empty() ? fs::path(run_dir) : fs::path(out_arg);
  std::error_code ec;
  fs::create_directories(out_dir, ec);

  const ProjectionCollage collage = build_collage(cohort.volumes.at(patient_id));
  const Tensor3 norm = normalize_collage(collage);
  const double t_norm = std::min(t_years * 365.0, 1825.0) / 1825.0;
  const Image2D heat = saliency(models[0], norm, t_norm);

  Image2D base(kCollageRows, kCollageCols);
  for (int r = 0; r < kCollageRows; ++r)
    for (int c = 0; c < kCollageCols; ++c) base.at(r, c) = norm.at(kPetMipOrig, r, c);

  write_pgm(heat, (out_dir / (patient_id + "_saliency.pgm")).string());
  write_saliency_svg(base, heat, (out_dir / (patient_id + "_saliency.svg")).string());
  std::cout << "saliency: maps for " << patient_id << " written to " << out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"chronosurv: time-conditioned survival prediction on synthetic PET/CT cohorts"};
  app.require_subcommand(1);

  std::string config_path, data_dir, run_dir, out_dir, patient_id;
  double t_years = 2.5;
  SeedFlag seed;

  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort (manifest + volumes)");
  synth->add_option("--config", config_path)->required();
  synth->add_option("--out", out_dir)->required();
  synth->add_option("--seed", seed.value)->each([&seed](const std::string&) { seed.set = true; });

  auto* project = app.add_subcommand("project", "cache 12-channel projection collages");
  project->add_option("--data", data_dir)->required();
  project->add_option("--out", out_dir);

  auto* train = app.add_subcommand("train", "stratified k-fold CV training");
  train->add_option("--config", config_path)->required();
  train->add_option("--data", data_dir)->required();
  train->add_option("--run", run_dir)->required();
  train->add_option("--seed", seed.value)->each([&seed](const std::string&) { seed.set = true; });

  auto* evaluate = app.add_subcommand("evaluate", "ensemble evaluation report + KM plots");
  evaluate->add_option("--run", run_dir)->required();
  evaluate->add_option("--data", data_dir)->required();
  evaluate->add_option("--out", out_dir);

  auto* baseline = app.add_subcommand("baseline", "train the fixed-horizon model bank");
  baseline->add_option("--config", config_path)->required();
  baseline->add_option("--data", data_dir)->required();
  baseline->add_option("--run", run_dir)->required();
  baseline->add_option("--seed", seed.value)->each([&seed](const std::string&) { seed.set = true; });

  auto* stratify_cmd = app.add_subcommand("stratify", "risk groups per T-stage category");
  stratify_cmd->add_option("--run", run_dir)->required();
  stratify_cmd->add_option("--data", data_dir)->required();
  stratify_cmd->add_option("--out", out_dir);

  auto* saliency_cmd = app.add_subcommand("saliency", "input-gradient heat map for one patient");
  saliency_cmd->add_option("--run", run_dir)->required();
  saliency_cmd->add_option("--data", data_dir)->required();
  saliency_cmd->add_option("--patient", patient_id)->required();
  saliency_cmd->add_option("--t", t_years, "time horizon in years");
  saliency_cmd->add_option("--out", out_dir);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (synth->parsed()) return cmd_synth(config_path, out_dir, seed);
    if (project->parsed()) return cmd_project(data_dir, out_dir);
    if (train->parsed()) return cmd_train(config_path, data_dir, run_dir, seed);
    if (evaluate->parsed()) return cmd_evaluate(run_dir, data_dir, out_dir);
    if (baseline->parsed()) return cmd_baseline(config_path, data_dir, run_dir, seed);
    if (stratify_cmd->parsed()) return cmd_stratify(run_dir, data_dir, out_dir);
    if (saliency_cmd->parsed()) return cmd_saliency(run_dir, data_dir, patient_id, t_years, out_dir);
  } catch (const InvalidConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const AbortEpochError& e) {
    std::cerr << "training aborted: " << e.what() << "\n";
    return kExitTraining;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitConfig;
}
