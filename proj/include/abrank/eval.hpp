#pragma once

#include <span>
#include <vector>

#include "abrank/scorer.hpp"
#include "abrank/types.hpp"

namespace abrank {

// Index of the highest score, ties to the lowest index (the same rule as
// rank_by_scores position 1).
std::size_t predict(std::span<const double> scores);
std::size_t predict(const Scorer& scorer, const RankingInstance& instance);

// Fraction of pairs where the gold hypothesis scores strictly higher; exact
// ties count as incorrect.
double binary_accuracy(const Scorer& scorer,
                       const std::vector<BinaryChoiceInstance>& pairs);

struct NdcgResult {
  double mean = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped = 0;  // all-zero-label queries
};

// Mean NDCG truncated at rank k, normalized by the ideal truncated DCG.
// k = 0 means no cutoff.
NdcgResult ndcg_at_k(const Scorer& scorer,
                     const std::vector<RankingInstance>& dataset,
                     std::size_t k);

// Two-way softmax probability of the gold hypothesis of a pair.
double pair_probability(double gold_score, double other_score);

struct Histogram {
  std::vector<double> edges;        // bins + 1 edges spanning [0, 1]
  std::vector<double> frequencies;  // normalized, sums to 1
};

// Distribution of pair_probability over the pairs; the mass right of 0.5 is
// the accuracy up to one bin of quantization.
Histogram margin_histogram(const Scorer& scorer,
                           const std::vector<BinaryChoiceInstance>& pairs,
                           std::size_t bins);

}  // namespace abrank
