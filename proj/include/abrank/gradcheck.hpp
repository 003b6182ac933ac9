#pragma once

#include <cstdint>
#include <vector>

#include "abrank/losses.hpp"

namespace abrank {

struct GradCheckCell {
  LossKind kind;
  std::size_t n = 0;
  std::size_t cases = 0;
  double max_error = 0.0;
  bool passed = false;
};

// Compares every loss's analytic gradient against central finite differences
// (step 1e-6) on seeded random queries, for N in [min_n, max_n].
// binary_classification only has N=2 cells. The error metric is
// |analytic - numeric| / max(1, |analytic|, |numeric|), maximized over
// coordinates and cases; a cell passes when it stays below the tolerance.
// Cases near the hinge kink (|s_j - s_k - 1| < 1e-4) are redrawn.
std::vector<GradCheckCell> run_loss_gradcheck(std::size_t cases_per_cell,
                                              std::uint64_t seed,
                                              double tolerance = 1e-5,
                                              std::size_t min_n = 2,
                                              std::size_t max_n = 8);

}  // namespace abrank
