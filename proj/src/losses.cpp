#include "abrank/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "abrank/ranking.hpp"

namespace abrank {

namespace {

double softplus(double x) {  // log(1 + e^x) without overflow
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_add_exp(double a, double b) {
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

void check_query(std::span<const double> labels,
                 std::span<const double> scores) {
  if (labels.size() != scores.size()) {
    throw std::invalid_argument("labels and scores must be aligned");
  }
  if (labels.size() < 2) {
    throw std::invalid_argument("a query needs at least two hypotheses");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!std::isfinite(labels[i]) || labels[i] < 0.0 || labels[i] > 1.0) {
      throw std::invalid_argument("label out of [0, 1] at index " +
                                  std::to_string(i));
    }
    if (!std::isfinite(scores[i])) {
      throw NumericError("non-finite score at index " + std::to_string(i));
    }
  }
}

std::vector<double> softmax(std::span<const double> x) {
  const double hi = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - hi);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

}  // namespace

const char* loss_name(LossKind kind) {
  switch (kind) {
    case LossKind::kHinge: return "hinge";
    case LossKind::kLogistic: return "logistic";
    case LossKind::kLambdaRank: return "lambdarank";
    case LossKind::kListNetKld: return "listnet_kld";
    case LossKind::kListMle: return "listmle";
    case LossKind::kApproxNdcg: return "approx_ndcg";
    case LossKind::kBinaryClassification: return "binary_classification";
  }
  return "?";
}

double LossSpec::temperature() const {
  const auto it = options.find("temperature");
  if (it == options.end()) return 1.0;
  if (!(it->second > 0.0)) {
    throw ConfigError("temperature must be positive");
  }
  return it->second;
}

LossSpec LossSpec::parse(const std::string& name,
                         std::map<std::string, double> options) {
  static const std::map<std::string, LossKind> kByName = {
      {"hinge", LossKind::kHinge},
      {"logistic", LossKind::kLogistic},
      {"lambdarank", LossKind::kLambdaRank},
      {"listnet_kld", LossKind::kListNetKld},
      {"listmle", LossKind::kListMle},
      {"approx_ndcg", LossKind::kApproxNdcg},
      {"binary_classification", LossKind::kBinaryClassification},
  };
  const auto it = kByName.find(name);
  if (it == kByName.end()) {
    throw ConfigError("unknown loss kind: " + name);
  }
  LossSpec spec{it->second, std::move(options)};
  for (const auto& [key, value] : spec.options) {
    if (key != "temperature" || spec.kind != LossKind::kApproxNdcg) {
      throw ConfigError("unknown option '" + key + "' for loss " + name);
    }
    (void)value;
  }
  spec.temperature();  // range check
  return spec;
}

LossResult pairwise_hinge(std::span<const double> labels,
                          std::span<const double> scores) {
  check_query(labels, scores);
  const std::size_t n = labels.size();
  LossResult out;
  out.grad.assign(n, 0.0);
  bool any_pair = false;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      if (!(labels[j] > labels[k])) continue;
      any_pair = true;
      const double margin = 1.0 - (scores[j] - scores[k]);
      if (margin > 0.0) {
        out.value += margin;
        out.grad[j] -= 1.0;
        out.grad[k] += 1.0;
      }
    }
  }
  if (!any_pair) {
    throw UntrainableError("untrainable query: no pair with distinct labels");
  }
  return out;
}

LossResult pairwise_logistic(std::span<const double> labels,
                             std::span<const double> scores) {
  check_query(labels, scores);
  const std::size_t n = labels.size();
  LossResult out;
  out.grad.assign(n, 0.0);
  bool any_pair = false;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      if (!(labels[j] > labels[k])) continue;
      any_pair = true;
      const double z = scores[j] - scores[k];
      out.value += softplus(-z);
      const double slope = sigmoid(-z);
      out.grad[j] -= slope;
      out.grad[k] += slope;
    }
  }
  if (!any_pair) {
    throw UntrainableError("untrainable query: no pair with distinct labels");
  }
  return out;
}

LossResult lambdarank(std::span<const double> labels,
                      std::span<const double> scores) {
  check_query(labels, scores);
  const std::size_t n = labels.size();
  const double ideal = max_dcg(labels);
  if (ideal <= 0.0) {
    throw UntrainableError("all-zero labels: maxDCG is zero");
  }
  const Permutation ranks = rank_by_scores(scores);
  LossResult out;
  out.grad.assign(n, 0.0);
  bool any_pair = false;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) {
      if (!(labels[j] > labels[k])) continue;
      any_pair = true;
      const double weight = delta_ndcg(labels, ranks, j, k);
      const double z = scores[j] - scores[k];
      out.value += weight * softplus(-z);
      const double slope = weight * sigmoid(-z);
      out.grad[j] -= slope;
      out.grad[k] += slope;
    }
  }
  if (!any_pair) {
    throw UntrainableError("untrainable query: no pair with distinct labels");
  }
  return out;
}

LossResult listnet_kld(std::span<const double> labels,
                       std::span<const double> scores) {
  check_query(labels, scores);
  const std::size_t n = labels.size();
  const std::vector<double> target = softmax(labels);
  // log softmax of scores, max-subtracted
  const double hi = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (const double s : scores) total += std::exp(s - hi);
  const double log_z = hi + std::log(total);

  LossResult out;
  out.grad.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double log_q = scores[j] - log_z;
    out.value -= target[j] * log_q;
    out.grad[j] = std::exp(log_q) - target[j];
  }
  return out;
}

LossResult listmle(std::span<const double> labels,
                   std::span<const double> scores) {
  check_query(labels, scores);
  const std::size_t n = labels.size();
  // ground-truth permutation: descending label, ties by ascending index
  std::vector<std::size_t> pi(n);
  std::iota(pi.begin(), pi.end(), std::size_t{0});
  std::stable_sort(pi.begin(), pi.end(), [&labels](std::size_t a, std::size_t b) {
    return labels[a] > labels[b];
  });

  // suffix log-sum-exp over e^{s_{pi(t)}}, t >= r
  std::vector<double> log_suffix(n);
  log_suffix[n - 1] = scores[pi[n - 1]];
  for (std::size_t r = n - 1; r-- > 0;) {
    log_suffix[r] = log_add_exp(scores[pi[r]], log_suffix[r + 1]);
  }

  LossResult out;
  out.grad.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    out.value += log_suffix[r] - scores[pi[r]];
  }
  // d/ds_{pi(u)} = sum_{r <= u} P(pi(u) chosen at stage r) - 1
  for (std::size_t u = 0; u < n; ++u) {
    double occupancy = 0.0;
    for (std::size_t r = 0; r <= u; ++r) {
      occupancy += std::exp(scores[pi[u]] - log_suffix[r]);
    }
    out.grad[pi[u]] = occupancy - 1.0;
  }
  return out;
}

std::vector<double> approx_ranks(std::span<const double> scores,
                                 double temperature) {
  if (!(temperature > 0.0)) {
    throw ConfigError("temperature must be positive");
  }
  const std::size_t n = scores.size();
  std::vector<double> ranks(n, 1.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t u = 0; u < n; ++u) {
      if (u == j) continue;
      ranks[j] += sigmoid((scores[u] - scores[j]) / temperature);
    }
  }
  return ranks;
}

LossResult approx_ndcg_loss(std::span<const double> labels,
                            std::span<const double> scores,
                            double temperature) {
  check_query(labels, scores);
  if (!(temperature > 0.0)) {
    throw ConfigError("temperature must be positive");
  }
  const std::size_t n = labels.size();
  const double ideal = max_dcg(labels);
  if (ideal <= 0.0) {
    throw UntrainableError("all-zero labels: maxDCG is zero");
  }
  const std::vector<double> ranks = approx_ranks(scores, temperature);

  LossResult out;
  out.value = 1.0;
  out.grad.assign(n, 0.0);
  // coeff_j = G(y_j) / ((1 + pihat_j) * ln^2(1 + pihat_j)), the sensitivity
  // of the loss to pihat_j
  std::vector<double> coeff(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double log_rank = std::log1p(ranks[j]);
    const double gain = dcg_gain(labels[j]) / ideal;
    out.value -= gain / log_rank;
    coeff[j] = gain / ((1.0 + ranks[j]) * log_rank * log_rank);
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t u = 0; u < n; ++u) {
      if (u == j) continue;
      const double s = sigmoid((scores[u] - scores[j]) / temperature);
      const double d_rank = s * (1.0 - s) / temperature;
      out.grad[u] += coeff[j] * d_rank;
      out.grad[j] -= coeff[j] * d_rank;
    }
  }
  return out;
}

LossResult binary_classification(std::span<const double> labels,
                                 std::span<const double> scores) {
  if (labels.size() != 2 || scores.size() != 2) {
    throw ConfigError("binary_classification requires exactly 2 hypotheses");
  }
  check_query(labels, scores);
  if (labels[0] == labels[1]) {
    throw UntrainableError("untrainable query: tied labels");
  }
  const std::size_t winner = labels[0] > labels[1] ? 0 : 1;
  const std::size_t loser = 1 - winner;
  const double z = scores[winner] - scores[loser];
  LossResult out;
  out.value = softplus(-z);
  out.grad.assign(2, 0.0);
  const double slope = sigmoid(-z);
  out.grad[winner] = -slope;
  out.grad[loser] = slope;
  return out;
}

LossResult evaluate_loss(const LossSpec& spec, std::span<const double> labels,
                         std::span<const double> scores) {
  switch (spec.kind) {
    case LossKind::kHinge: return pairwise_hinge(labels, scores);
    case LossKind::kLogistic: return pairwise_logistic(labels, scores);
    case LossKind::kLambdaRank: return lambdarank(labels, scores);
    case LossKind::kListNetKld: return listnet_kld(labels, scores);
    case LossKind::kListMle: return listmle(labels, scores);
    case LossKind::kApproxNdcg:
      return approx_ndcg_loss(labels, scores, spec.temperature());
    case LossKind::kBinaryClassification:
      return binary_classification(labels, scores);
  }
  throw ConfigError("unknown loss kind");
}

}  // namespace abrank
