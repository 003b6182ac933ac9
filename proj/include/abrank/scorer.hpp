#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "abrank/types.hpp"

namespace abrank {

// Hashed bag-of-ngrams featurization. The hash seed is part of the config:
// the same (texts, config) always produce the same vector, across processes
// and platforms.
struct FeatureConfig {
  int max_ngram_order = 2;           // 1 = unigrams, 2 = +bigrams, ...
  std::size_t hash_dim = 1u << 18;
  std::uint64_t hash_seed = 0x6b8b4567327b23c6ull;
};

// Sparse carrier for a dense hash_dim-dimensional feature vector; entries are
// sorted by index and hold the L2-normalized n-gram counts.
struct FeatureVector {
  std::size_t dim = 0;
  std::vector<std::pair<std::uint32_t, double>> entries;

  double dot(std::span<const double> weights) const;
  void add_scaled(std::span<double> acc, double scale) const;
  double norm() const;
};

// Splits on whitespace and punctuation; bytes outside ASCII count as word
// characters so UTF-8 text stays intact. No case folding.
std::vector<std::string> tokenize(std::string_view text);

// Hashed n-grams over the segment-tagged token stream
// [O1] obs1... [H] hyp... [O2] obs2..., L2-normalized.
FeatureVector featurize(std::string_view obs1, std::string_view hyp,
                        std::string_view obs2, const FeatureConfig& config);

enum class ScorerKind { kLinear, kMlp, kExternal };

const char* scorer_kind_name(ScorerKind kind);
ScorerKind scorer_kind_from_name(const std::string& name);

// The pluggable scoring function f(obs1, hyp, obs2) -> R. Linear holds
// [w(d), b]; mlp holds [W1(h x d), b1(h), w2(h), b2]; external holds no
// parameters and is backed by a ScoreTable.
struct ScorerModel {
  ScorerKind kind = ScorerKind::kLinear;
  FeatureConfig features;
  std::size_t hidden_dim = 0;
  std::vector<double> params;

  static ScorerModel make_linear(const FeatureConfig& config,
                                 std::uint64_t init_seed);
  static ScorerModel make_mlp(const FeatureConfig& config,
                              std::size_t hidden_dim, std::uint64_t init_seed);
  static ScorerModel make_external();

  std::size_t expected_param_count() const;
};

// Activations retained by a forward pass for the matching backward pass.
struct ForwardCache {
  std::vector<FeatureVector> features;
  std::vector<std::vector<double>> hidden_pre;  // mlp pre-activations
};

// One score per hypothesis; fills the cache when given.
std::vector<double> score_forward(const ScorerModel& model,
                                  const RankingInstance& instance,
                                  ForwardCache* cache = nullptr);

// Forward pass over precomputed feature vectors (one per hypothesis).
std::vector<double> score_forward(const ScorerModel& model,
                                  std::span<const FeatureVector> features,
                                  ForwardCache* cache = nullptr);

// Gradient of sum_j upstream_j * s_j with respect to the parameters. ReLU
// subgradient is 0 at 0.
std::vector<double> score_backward(const ScorerModel& model,
                                   const ForwardCache& cache,
                                   std::span<const double> upstream);

// Precomputed scores from an outside encoder, keyed by story_id and aligned
// with the ranking file's hypotheses array.
class ScoreTable {
 public:
  static ScoreTable read(std::istream& in);
  static ScoreTable read_file(const std::string& path);

  void insert(std::string story_id, std::vector<double> scores);
  const std::vector<double>& row(const std::string& story_id) const;
  std::size_t size() const { return rows_.size(); }

  // Total coverage is checked before any scoring pass.
  void check_coverage(const std::vector<RankingInstance>& dataset) const;
  void check_coverage(const std::vector<BinaryChoiceInstance>& pairs) const;

 private:
  std::unordered_map<std::string, std::vector<double>> rows_;
};

// Scoring backend used by evaluation: either a built-in model or an external
// score table.
class Scorer {
 public:
  static Scorer from_model(ScorerModel model);
  static Scorer from_table(ScoreTable table);

  std::vector<double> score(const RankingInstance& instance) const;
  // (score of hyp1, score of hyp2)
  std::pair<double, double> score_pair(const BinaryChoiceInstance& pair) const;

 private:
  explicit Scorer(std::variant<ScorerModel, ScoreTable> impl)
      : impl_(std::move(impl)) {}
  std::variant<ScorerModel, ScoreTable> impl_;
};

// JSON model persistence; parameter round-trips are bit-exact.
void save_model(std::ostream& out, const ScorerModel& model);
void save_model_file(const std::string& path, const ScorerModel& model);
ScorerModel load_model(std::istream& in);
ScorerModel load_model_file(const std::string& path);

}  // namespace abrank
