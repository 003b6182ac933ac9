#include "abrank/ranking.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace abrank {

namespace {

void check_labels(std::span<const double> labels) {
  if (labels.empty()) {
    throw std::invalid_argument("label list must not be empty");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!std::isfinite(labels[i]) || labels[i] < 0.0 || labels[i] > 1.0) {
      throw std::invalid_argument("label out of [0, 1] at index " +
                                  std::to_string(i));
    }
  }
}

}  // namespace

bool is_trainable(const RankingInstance& instance) {
  if (instance.size() < 2) return false;
  const auto [lo, hi] =
      std::minmax_element(instance.labels.begin(), instance.labels.end());
  return *lo != *hi;
}

Permutation rank_by_scores(std::span<const double> scores) {
  if (scores.empty()) {
    throw std::invalid_argument("cannot rank an empty score vector");
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw NumericError("non-finite score at index " + std::to_string(i));
    }
  }
  Permutation perm;
  perm.order.resize(scores.size());
  std::iota(perm.order.begin(), perm.order.end(), std::size_t{0});
  // stable sort keeps ascending-index order among tied scores
  std::stable_sort(perm.order.begin(), perm.order.end(),
                   [&scores](std::size_t a, std::size_t b) {
                     return scores[a] > scores[b];
                   });
  perm.pos.resize(scores.size());
  for (std::size_t r = 0; r < perm.order.size(); ++r) {
    perm.pos[perm.order[r]] = r;
  }
  return perm;
}

double max_dcg(std::span<const double> labels) {
  check_labels(labels);
  std::vector<double> sorted(labels.begin(), labels.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double total = 0.0;
  for (std::size_t r = 0; r < sorted.size(); ++r) {
    total += dcg_gain(sorted[r]) / dcg_discount(r + 1);
  }
  return total;
}

double dcg(std::span<const double> labels, const Permutation& ranks,
           std::size_t k) {
  if (ranks.size() != labels.size()) {
    throw std::invalid_argument("permutation does not match label list");
  }
  const std::size_t depth = std::min(k, labels.size());
  double total = 0.0;
  for (std::size_t r = 0; r < depth; ++r) {
    total += dcg_gain(labels[ranks.order[r]]) / dcg_discount(r + 1);
  }
  return total;
}

double ndcg(std::span<const double> labels, std::span<const double> scores) {
  if (labels.size() != scores.size()) {
    throw std::invalid_argument("labels and scores must be aligned");
  }
  const double ideal = max_dcg(labels);
  if (ideal <= 0.0) {
    throw UntrainableError("all-zero labels: maxDCG is zero");
  }
  const Permutation ranks = rank_by_scores(scores);
  return dcg(labels, ranks, labels.size()) / ideal;
}

double delta_ndcg(std::span<const double> labels, const Permutation& ranks,
                  std::size_t j, std::size_t k) {
  if (j == k) {
    throw std::invalid_argument("delta_ndcg requires two distinct items");
  }
  if (j >= labels.size() || k >= labels.size() ||
      ranks.size() != labels.size()) {
    throw std::invalid_argument("delta_ndcg index out of range");
  }
  const double ideal = max_dcg(labels);
  if (ideal <= 0.0) {
    throw UntrainableError("all-zero labels: maxDCG is zero");
  }
  const double gain_gap = std::abs(dcg_gain(labels[j]) - dcg_gain(labels[k]));
  const double discount_gap =
      std::abs(1.0 / dcg_discount(ranks.pos[j] + 1) -
               1.0 / dcg_discount(ranks.pos[k] + 1));
  return gain_gap * discount_gap / ideal;
}

}  // namespace abrank
