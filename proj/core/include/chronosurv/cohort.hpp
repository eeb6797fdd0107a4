#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chronosurv/projection.hpp"

namespace chronosurv {

enum class Sex { male, female };

// T1..T4 / N0..N3 as small ints; absent means the stage was never recorded.
using TStage = int;  // 1..4
using NStage = int;  // 0..3

// Survival bookkeeping plus tabular covariates. All day fields are indices
// relative to the cohort epoch (day 0).
struct PatientRecord {
  std::string id;
  int scan_day = 0;
  std::optional<int> death_day;
  int lfd_day = 0;  // last follow-up
  bool event = false;
  double age = 0.0;
  Sex sex = Sex::male;
  std::optional<TStage> t_stage;
  std::optional<NStage> n_stage;
  double tmtv = 0.0;         // ml
  double dmax = 0.0;         // mm
  int lesion_count = 0;

  // Observation-window helpers (days since scan).
  int followup_days() const { return lfd_day - scan_day; }
  std::optional<int> death_days() const {
    if (!death_day) return std::nullopt;
    return *death_day - scan_day;
  }
  // Time actually survived from scan: death for events, last follow-up otherwise.
  int survival_days() const { return event ? *death_day - scan_day : lfd_day - scan_day; }
};

void validate(const PatientRecord& p);

struct CohortDataset {
  std::vector<PatientRecord> patients;
  std::map<std::string, VolumeSet> volumes;             // id -> volume
  std::map<std::string, double> ground_truth_hazard;    // id -> rate (synthetic only)

  const PatientRecord* find(const std::string& id) const;
};

void validate(const CohortDataset& cohort);

struct FoldAssignment {
  std::map<std::string, int> fold_of;
  int k = 0;
};

// Synthetic cohort generator configuration. The event law is exponential with
// rate lambda0 * exp(beta_tmtv * TMTV/TMTV_max + beta_age * age_norm); the
// betas steer how much signal the images (tumor burden) and the tabular side
// (age) carry. Follow-up is administratively censored by a uniform random
// last-follow-up in [scan + lfd_min_days, scan + lfd_max_days].
struct CohortConfig {
  int n = 0;
  int vol_nx = 32, vol_ny = 32, vol_nz = 44;
  std::array<double, 3> spacing_mm{2.04, 2.04, 3.00};
  int lesion_min = 1, lesion_max = 4;
  double lesion_radius_min_mm = 6.0, lesion_radius_max_mm = 22.0;
  // Optional bimodal burden mix: with this probability a patient draws from
  // the high-burden lesion ranges instead. Widens the normalized-TMTV spread
  // so a fixed beta_tmtv carries a stronger rank signal.
  double high_burden_frac = 0.0;
  int hb_lesion_min = 3, hb_lesion_max = 5;
  double hb_radius_min_mm = 16.0, hb_radius_max_mm = 24.0;
  double lambda0 = 8e-4;       // baseline daily hazard
  double beta_tmtv = 0.0;      // image-channel signal
  double beta_age = 0.0;       // tabular-channel signal
  int lfd_min_days = 90, lfd_max_days = 1825;
  double t_stage_missing_rate = 0.17;
  double n_stage_missing_rate = 0.18;
  double age_min = 50.0, age_max = 85.0;
};

void validate(const CohortConfig& cfg);

// Deterministic in (config, seed): per-patient RNG streams are derived from
// the seed and the patient index, so regeneration is byte-for-byte identical.
CohortDataset generate_cohort(const CohortConfig& cfg, std::uint64_t seed);

// Stratified k-fold split: events and censored patients are dealt
// round-robin after a seeded shuffle, so per-fold event proportion stays
// within +-0.10 of the cohort proportion.
FoldAssignment split_folds(const CohortDataset& cohort, int k, std::uint64_t seed);

// Training-fold summary statistics consumed by featurize_tabular. Computed on
// training folds only so test patients never leak into normalization.
struct CohortStats {
  double age_mean = 0.0, age_std = 1.0;
  double tmtv_mean = 0.0, tmtv_std = 1.0;
  double dmax_q3 = 0.0;
  double lesion_median = 0.0;
};

CohortStats compute_cohort_stats(const std::vector<const PatientRecord*>& training_patients);
CohortStats compute_cohort_stats(const CohortDataset& cohort, const FoldAssignment& folds,
                                 int heldout_fold);

struct FeatureVector {
  std::vector<double> values;
  std::vector<std::string> names;
};

// Tabular feature layout: [age_z, sex, tmtv_z, dmax_gt_q3, lesions_gt_median,
// T1..T4, T_missing, N0..N3, N_missing]. Missing stages encode as all-zero
// one-hot plus a 1 in the missing column; nothing is ever rejected.
inline constexpr int kFeatureLength = 15;

FeatureVector featurize_tabular(const PatientRecord& patient, const CohortStats& stats);

// Cohort manifest: JSON array of patient objects with exactly the
// PatientRecord field names; absent optionals are null. Volume files live
// next to the manifest under volumes/<id>_{hu,suv,mask}.bin.
void save_manifest(const CohortDataset& cohort, const std::string& path);
CohortDataset load_manifest(const std::string& path, bool load_volumes = true);

std::string manifest_volume_path(const std::string& manifest_path, const std::string& id,
                                 const std::string& kind);

}  // namespace chronosurv
