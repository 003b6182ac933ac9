#pragma once

#include <cmath>
#include <span>

#include "abrank/types.hpp"

namespace abrank {

// Gain and discount of the DCG family. Discounts take 1-based ranks and use
// the natural logarithm; NDCG is invariant to the base, delta values are not,
// so one base is fixed for the whole toolkit.
inline double dcg_gain(double label) { return std::exp2(label) - 1.0; }
inline double dcg_discount(std::size_t rank) {
  return std::log1p(static_cast<double>(rank));
}

// Sorts item indices by descending score, ties broken by ascending index.
// Rejects non-finite scores.
Permutation rank_by_scores(std::span<const double> scores);

// DCG of the label-descending ideal ordering; 0 when all labels are 0.
double max_dcg(std::span<const double> labels);

// DCG of the given ordering truncated to the first k ranks (k >= N means the
// full list), unnormalized.
double dcg(std::span<const double> labels, const Permutation& ranks,
           std::size_t k);

// DCG of the score-induced order divided by max_dcg, in [0, 1].
// All-zero labels have no ideal gain and are rejected.
double ndcg(std::span<const double> labels, std::span<const double> scores);

// |G(y_j) - G(y_k)| * |1/D(rank_j) - 1/D(rank_k)| with gains normalized by
// max_dcg; equals the absolute NDCG change from swapping the two items.
double delta_ndcg(std::span<const double> labels, const Permutation& ranks,
                  std::size_t j, std::size_t k);

}  // namespace abrank
