#include "abrank/eval.hpp"

#include <algorithm>
#include <cmath>

#include "abrank/ranking.hpp"

namespace abrank {

std::size_t predict(std::span<const double> scores) {
  if (scores.empty()) {
    throw std::invalid_argument("cannot predict from an empty score vector");
  }
  std::size_t best = 0;
  for (std::size_t j = 1; j < scores.size(); ++j) {
    if (!std::isfinite(scores[j])) {
      throw NumericError("non-finite score at index " + std::to_string(j));
    }
    if (scores[j] > scores[best]) best = j;
  }
  return best;
}

std::size_t predict(const Scorer& scorer, const RankingInstance& instance) {
  const std::vector<double> scores = scorer.score(instance);
  return predict(scores);
}

double binary_accuracy(const Scorer& scorer,
                       const std::vector<BinaryChoiceInstance>& pairs) {
  if (pairs.empty()) {
    throw std::invalid_argument("binary_accuracy needs a non-empty pair set");
  }
  std::size_t correct = 0;
  for (const BinaryChoiceInstance& pair : pairs) {
    const auto [s1, s2] = scorer.score_pair(pair);
    const double gold = pair.correct == 1 ? s1 : s2;
    const double other = pair.correct == 1 ? s2 : s1;
    if (gold > other) ++correct;  // tie counts as incorrect
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

NdcgResult ndcg_at_k(const Scorer& scorer,
                     const std::vector<RankingInstance>& dataset,
                     std::size_t k) {
  if (dataset.empty()) {
    throw std::invalid_argument("ndcg_at_k needs a non-empty dataset");
  }
  NdcgResult result;
  double total = 0.0;
  for (const RankingInstance& instance : dataset) {
    const std::size_t depth = k == 0 ? instance.size() : k;
    // ideal truncated DCG: labels sorted descending, summed to depth
    std::vector<double> sorted(instance.labels);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double ideal = 0.0;
    for (std::size_t r = 0; r < std::min(depth, sorted.size()); ++r) {
      ideal += dcg_gain(sorted[r]) / dcg_discount(r + 1);
    }
    if (ideal <= 0.0) {
      ++result.skipped;
      continue;
    }
    const std::vector<double> scores = scorer.score(instance);
    const Permutation ranks = rank_by_scores(scores);
    total += dcg(instance.labels, ranks, depth) / ideal;
    ++result.evaluated;
  }
  if (result.evaluated == 0) {
    throw UntrainableError("every query was skipped (all-zero labels)");
  }
  result.mean = total / static_cast<double>(result.evaluated);
  return result;
}

double pair_probability(double gold_score, double other_score) {
  const double z = gold_score - other_score;
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Histogram margin_histogram(const Scorer& scorer,
                           const std::vector<BinaryChoiceInstance>& pairs,
                           std::size_t bins) {
  if (bins < 2) {
    throw std::invalid_argument("margin_histogram needs at least 2 bins");
  }
  if (pairs.empty()) {
    throw std::invalid_argument("margin_histogram needs a non-empty pair set");
  }
  Histogram hist;
  hist.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    hist.edges[b] = static_cast<double>(b) / static_cast<double>(bins);
  }
  hist.frequencies.assign(bins, 0.0);
  for (const BinaryChoiceInstance& pair : pairs) {
    const auto [s1, s2] = scorer.score_pair(pair);
    const double gold = pair.correct == 1 ? s1 : s2;
    const double other = pair.correct == 1 ? s2 : s1;
    const double p = pair_probability(gold, other);
    // bins are [left, right), the last one closed at 1
    const std::size_t bin = std::min(
        bins - 1, static_cast<std::size_t>(p * static_cast<double>(bins)));
    hist.frequencies[bin] += 1.0;
  }
  for (double& f : hist.frequencies) {
    f /= static_cast<double>(pairs.size());
  }
  return hist;
}

}  // namespace abrank
