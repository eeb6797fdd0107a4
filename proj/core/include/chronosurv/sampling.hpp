#pragma once

#include <string>
#include <vector>

#include "chronosurv/cohort.hpp"
#include "chronosurv/rng.hpp"

namespace chronosurv {

enum class OsLabel { alive, deceased };

// One training example: (patient, time offset in days, normalized time, OS
// status at that time).
struct TimeSample {
  std::string patient_id;
  int t_days = 0;
  double t_norm = 0.0;
  OsLabel label = OsLabel::alive;
};

struct SamplingConfig {
  int alive_points = 6;
  int deceased_points = 12;
  int horizon_days = 1825;
  int grid_step = 30;
};

void validate(const SamplingConfig& cfg);

// t_norm = min(t, horizon) / horizon. Negative t is rejected.
double normalize_time(int t_days, int horizon_days = 1825);

// Per-epoch phase sampling. Patients alive at last follow-up contribute
// `alive_points` draws from (0, lfd-scan]; deceased patients contribute
// `alive_points` draws from the alive phase (0, death-scan) plus
// `deceased_points` draws from the deceased phase [death-scan, lfd-scan].
// A phase holding no integer day contributes nothing; a phase collapsed to a
// single day contributes exactly one sample.
std::vector<TimeSample> sample_epoch(const PatientRecord& patient, Rng& rng,
                                     const SamplingConfig& cfg = {});

// Fixed evaluation grid: multiples of `step` up to the horizon, with the
// horizon itself always appended ([0, 30, ..., 1800, 1825] by default).
std::vector<int> evaluation_grid(int horizon_days = 1825, int step = 30);

}  // namespace chronosurv
