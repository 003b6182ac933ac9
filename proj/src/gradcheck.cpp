#include "abrank/gradcheck.hpp"

#include <cmath>

#include "abrank/rng.hpp"

namespace abrank {

namespace {

constexpr double kStep = 1e-6;

bool near_hinge_kink(const std::vector<double>& labels,
                     const std::vector<double>& scores) {
  for (std::size_t j = 0; j < labels.size(); ++j) {
    for (std::size_t k = 0; k < labels.size(); ++k) {
      if (labels[j] > labels[k] &&
          std::abs(scores[j] - scores[k] - 1.0) < 1e-4) {
        return true;
      }
    }
  }
  return false;
}

bool has_close_scores(const std::vector<double>& scores) {
  for (std::size_t j = 0; j < scores.size(); ++j) {
    for (std::size_t k = j + 1; k < scores.size(); ++k) {
      if (std::abs(scores[j] - scores[k]) < 1e-3) return true;
    }
  }
  return false;
}

// Draws a query whose gradient is differentiable everywhere the finite
// difference probes: distinct labels, well-separated scores, away from the
// hinge kink.
void draw_case(Rng& rng, std::size_t n, std::vector<double>* labels,
               std::vector<double>* scores) {
  for (;;) {
    labels->resize(n);
    scores->resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      (*labels)[i] = rng.uniform01();
      (*scores)[i] = rng.uniform(-2.0, 2.0);
    }
    if (has_close_scores(*scores)) continue;
    if (near_hinge_kink(*labels, *scores)) continue;
    return;
  }
}

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

std::vector<GradCheckCell> run_loss_gradcheck(std::size_t cases_per_cell,
                                              std::uint64_t seed,
                                              double tolerance,
                                              std::size_t min_n,
                                              std::size_t max_n) {
  static constexpr LossKind kAll[] = {
      LossKind::kHinge,        LossKind::kLogistic,
      LossKind::kLambdaRank,   LossKind::kListNetKld,
      LossKind::kListMle,      LossKind::kApproxNdcg,
      LossKind::kBinaryClassification,
  };
  std::vector<GradCheckCell> cells;
  for (const LossKind kind : kAll) {
    for (std::size_t n = min_n; n <= max_n; ++n) {
      if (kind == LossKind::kBinaryClassification && n != 2) continue;
      GradCheckCell cell;
      cell.kind = kind;
      cell.n = n;
      cell.cases = cases_per_cell;
      Rng rng(seed ^ (static_cast<std::uint64_t>(kind) << 32 | n));
      const LossSpec spec{kind, {}};
      std::vector<double> labels;
      std::vector<double> scores;
      for (std::size_t c = 0; c < cases_per_cell; ++c) {
        draw_case(rng, n, &labels, &scores);
        const LossResult analytic = evaluate_loss(spec, labels, scores);
        for (std::size_t i = 0; i < n; ++i) {
          const double original = scores[i];
          scores[i] = original + kStep;
          const double up = evaluate_loss(spec, labels, scores).value;
          scores[i] = original - kStep;
          const double down = evaluate_loss(spec, labels, scores).value;
          scores[i] = original;
          const double numeric = (up - down) / (2.0 * kStep);
          cell.max_error =
              std::max(cell.max_error, relative_error(analytic.grad[i], numeric));
        }
      }
      cell.passed = cell.max_error < tolerance;
      cells.push_back(cell);
    }
  }
  return cells;
}

}  // namespace abrank
