#pragma once

#include <vector>

namespace chronosurv {

// Predicted survival probability on an increasing day grid. The raw network
// output is not forced monotone (the consistency loss is a soft mechanism);
// `monotonized` records whether the isotonic running-minimum clamp was
// applied after prediction.
struct SurvivalCurve {
  std::vector<int> grid_days;
  std::vector<double> probs;
  bool monotonized = false;
};

}  // namespace chronosurv
