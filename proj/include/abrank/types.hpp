#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace abrank {

// Error classes map onto the CLI exit-status classes: ConfigError is a usage
// problem, DataError a malformed input file, NumericError and
// UntrainableError are numeric-failure conditions.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A query that carries no usable ranking signal (all labels equal, or all
// gains zero where a gain-based quantity is required).
class UntrainableError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// One original binary-choice record: two observations (obs1 happens before
// obs2) and two candidate hypotheses, one of which is labeled more plausible.
struct BinaryChoiceInstance {
  std::string story_id;
  std::string obs1;
  std::string obs2;
  std::string hyp1;
  std::string hyp2;
  int correct = 1;  // 1 or 2

  const std::string& gold() const { return correct == 1 ? hyp1 : hyp2; }
  const std::string& other() const { return correct == 1 ? hyp2 : hyp1; }
};

// A query (observation pair) with N candidate hypotheses and plausibility
// labels in [0, 1], index-aligned with the hypotheses.
struct RankingInstance {
  std::string story_id;
  std::string obs1;
  std::string obs2;
  std::vector<std::string> hypotheses;
  std::vector<double> labels;

  std::size_t size() const { return hypotheses.size(); }
};

// A query is trainable when at least two labels differ; otherwise it
// contributes no ordered pair and no ground-truth permutation signal.
bool is_trainable(const RankingInstance& instance);

// Loss value for one query together with d(value)/d(score_j).
struct LossResult {
  double value = 0.0;
  std::vector<double> grad;
};

// A ranking of N items. order[r] is the item at rank r; pos[j] is the rank
// of item j. Both are 0-based; discounts use 1-based rank internally.
struct Permutation {
  std::vector<std::size_t> order;
  std::vector<std::size_t> pos;

  std::size_t size() const { return order.size(); }
  std::size_t rank_of(std::size_t item) const { return pos[item]; }
};

}  // namespace abrank
