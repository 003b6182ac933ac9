#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "abrank/types.hpp"

namespace abrank {

enum class LossKind {
  kHinge,
  kLogistic,
  kLambdaRank,
  kListNetKld,
  kListMle,
  kApproxNdcg,
  kBinaryClassification,
};

const char* loss_name(LossKind kind);

// Loss selection by canonical name plus named numeric options. The only
// recognized option is approx_ndcg's "temperature" (default 1).
struct LossSpec {
  LossKind kind = LossKind::kLogistic;
  std::map<std::string, double> options;

  double temperature() const;
  static LossSpec parse(const std::string& name,
                        std::map<std::string, double> options = {});
};

// Per-query losses. Each returns the loss value and its gradient with
// respect to the scores. Values are sums over pairs/positions, not means;
// averaging across queries happens in the empirical risk.

// sum over label-ordered pairs of max(0, 1 - (s_j - s_k)); subgradient 0 at
// the kink.
LossResult pairwise_hinge(std::span<const double> labels,
                          std::span<const double> scores);

// sum over label-ordered pairs of log(1 + e^-(s_j - s_k)).
LossResult pairwise_logistic(std::span<const double> labels,
                             std::span<const double> scores);

// Logistic pairs reweighed by the NDCG change of swapping the pair at the
// current score-induced ranks. Weights are treated as constants by the
// gradient.
LossResult lambdarank(std::span<const double> labels,
                      std::span<const double> scores);

// Cross entropy between the top-one softmax distributions of labels and
// scores. Differs from the true KL divergence by the constant entropy of
// softmax(labels), so gradients coincide.
LossResult listnet_kld(std::span<const double> labels,
                       std::span<const double> scores);

// Negative log likelihood of the label-descending permutation under the
// Plackett-Luce model. Tied labels break by ascending index.
LossResult listmle(std::span<const double> labels,
                   std::span<const double> scores);

// 1 minus a smooth NDCG where each item's rank is approximated by a sum of
// sigmoids of score differences at the given temperature.
LossResult approx_ndcg_loss(std::span<const double> labels,
                            std::span<const double> scores,
                            double temperature = 1.0);

// Logistic loss of the gold-vs-other score difference on a two-hypothesis
// query; identical to pairwise_logistic restricted to N = 2.
LossResult binary_classification(std::span<const double> labels,
                                 std::span<const double> scores);

LossResult evaluate_loss(const LossSpec& spec, std::span<const double> labels,
                         std::span<const double> scores);

// The smooth rank approximation used by approx_ndcg_loss, exposed for
// diagnostics: approx_ranks(s)[j] -> 1 + sum_{u != j} sigmoid((s_u - s_j)/t).
std::vector<double> approx_ranks(std::span<const double> scores,
                                 double temperature = 1.0);

}  // namespace abrank
