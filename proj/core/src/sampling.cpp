#include "chronosurv/sampling.hpp"

#include <algorithm>

#include "chronosurv/errors.hpp"

namespace chronosurv {

void validate(const SamplingConfig& cfg) {
  if (cfg.alive_points < 1 || cfg.deceased_points < 1)
    throw InvalidConfigError("sampling point counts must be >= 1");
  if (cfg.horizon_days < 1) throw InvalidConfigError("sampling.horizon_days must be >= 1");
  if (cfg.grid_step < 1) throw InvalidConfigError("sampling.grid_step must be >= 1");
}

double normalize_time(int t_days, int horizon_days) {
  if (t_days < 0) throw InvalidInputError("normalize_time: negative time");
  const int clipped = std::min(t_days, horizon_days);
  return static_cast<double>(clipped) / static_cast<double>(horizon_days);
}

namespace {

// Draws `quota` integer days uniformly from [lo, hi]; an empty range yields
// nothing and a single-day range collapses to one sample.
void draw_phase(std::vector<TimeSample>& out, const PatientRecord& p, Rng& rng,
                int lo, int hi, int quota, OsLabel label, int horizon_days) {
  if (hi < lo) return;
  const int count = (hi == lo) ? 1 : quota;
  for (int s = 0; s < count; ++s) {
    TimeSample ts;
    ts.patient_id = p.id;
    ts.t_days = static_cast<int>(rng.uniform_int(lo, hi));
    ts.t_norm = normalize_time(ts.t_days, horizon_days);
    ts.label = label;
    out.push_back(std::move(ts));
  }
}

}  // namespace

std::vector<TimeSample> sample_epoch(const PatientRecord& patient, Rng& rng,
                                     const SamplingConfig& cfg) {
  validate(cfg);
  if (patient.lfd_day <= patient.scan_day)
    throw InvalidInputError("sample_epoch: observation window is empty for " + patient.id);

  std::vector<TimeSample> out;
  const int followup = patient.followup_days();
  if (!patient.event) {
    // Alive phase is the whole observation window (0, lfd-scan].
    draw_phase(out, patient, rng, 1, followup, cfg.alive_points, OsLabel::alive, cfg.horizon_days);
    return out;
  }
  const int death = *patient.death_days();
  // Alive phase (0, death): open at death, so its last integer day is death-1.
  draw_phase(out, patient, rng, 1, death - 1, cfg.alive_points, OsLabel::alive, cfg.horizon_days);
  // Deceased phase [death, lfd]: closed, always holds at least the death day.
  draw_phase(out, patient, rng, death, followup, cfg.deceased_points, OsLabel::deceased,
             cfg.horizon_days);
  return out;
}

std::vector<int> evaluation_grid(int horizon_days, int step) {
  if (step < 1) throw InvalidConfigError("evaluation_grid: step must be >= 1");
  if (horizon_days < 0) throw InvalidInputError("evaluation_grid: negative horizon");
  std::vector<int> grid;
  for (int t = 0; t <= horizon_days; t += step) grid.push_back(t);
  if (grid.back() != horizon_days) grid.push_back(horizon_days);
  return grid;
}

}  // namespace chronosurv
