#include "abrank/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "abrank/rng.hpp"

namespace abrank {

namespace {

using nlohmann::json;

constexpr std::uint64_t kFnvOffset = 1469598103934665603ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv1a_mix(std::uint64_t h, const void* data, std::size_t len) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h = (h ^ bytes[i]) * kFnvPrime;
  }
  return h;
}

bool is_word_byte(unsigned char c) {
  return std::isalnum(c) || c >= 0x80;
}

bool is_blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) {
    return std::isspace(c);
  });
}

void check_feature_config(const FeatureConfig& config) {
  if (config.max_ngram_order < 1) {
    throw ConfigError("n-gram order must be at least 1");
  }
  if (config.hash_dim < 1 || config.hash_dim > (1ull << 32)) {
    throw ConfigError("hash dimension out of range");
  }
}

void append_tokens(std::string_view text, std::vector<std::string>* out) {
  std::string current;
  for (const char c : text) {
    if (is_word_byte(static_cast<unsigned char>(c))) {
      current.push_back(c);
    } else if (!current.empty()) {
      out->push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out->push_back(std::move(current));
}

}  // namespace

double FeatureVector::dot(std::span<const double> weights) const {
  double total = 0.0;
  for (const auto& [index, value] : entries) {
    total += weights[index] * value;
  }
  return total;
}

void FeatureVector::add_scaled(std::span<double> acc, double scale) const {
  for (const auto& [index, value] : entries) {
    acc[index] += scale * value;
  }
}

double FeatureVector::norm() const {
  double total = 0.0;
  for (const auto& [index, value] : entries) {
    (void)index;
    total += value * value;
  }
  return std::sqrt(total);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  append_tokens(text, &tokens);
  return tokens;
}

FeatureVector featurize(std::string_view obs1, std::string_view hyp,
                        std::string_view obs2, const FeatureConfig& config) {
  check_feature_config(config);
  if (is_blank(obs1) || is_blank(hyp) || is_blank(obs2)) {
    throw std::invalid_argument("featurize requires non-empty texts");
  }
  // segment markers are injected as literal tokens so the same word carries
  // a different feature in each role
  std::vector<std::string> tokens;
  tokens.push_back("[O1]");
  append_tokens(obs1, &tokens);
  tokens.push_back("[H]");
  append_tokens(hyp, &tokens);
  tokens.push_back("[O2]");
  append_tokens(obs2, &tokens);

  const std::uint64_t seeded =
      fnv1a_mix(kFnvOffset, &config.hash_seed, sizeof(config.hash_seed));
  std::map<std::uint32_t, double> counts;
  for (int order = 1; order <= config.max_ngram_order; ++order) {
    if (tokens.size() < static_cast<std::size_t>(order)) break;
    for (std::size_t start = 0; start + order <= tokens.size(); ++start) {
      std::uint64_t h = seeded;
      for (int t = 0; t < order; ++t) {
        const std::string& token = tokens[start + t];
        h = fnv1a_mix(h, token.data(), token.size());
        h = fnv1a_mix(h, "\x1f", 1);  // keeps ("ab","c") != ("a","bc")
      }
      counts[static_cast<std::uint32_t>(h % config.hash_dim)] += 1.0;
    }
  }

  FeatureVector vec;
  vec.dim = config.hash_dim;
  vec.entries.assign(counts.begin(), counts.end());
  double norm = 0.0;
  for (const auto& [index, value] : vec.entries) {
    (void)index;
    norm += value * value;
  }
  norm = std::sqrt(norm);
  for (auto& [index, value] : vec.entries) {
    (void)index;
    value /= norm;
  }
  return vec;
}

const char* scorer_kind_name(ScorerKind kind) {
  switch (kind) {
    case ScorerKind::kLinear: return "linear";
    case ScorerKind::kMlp: return "mlp";
    case ScorerKind::kExternal: return "external";
  }
  return "?";
}

ScorerKind scorer_kind_from_name(const std::string& name) {
  if (name == "linear") return ScorerKind::kLinear;
  if (name == "mlp") return ScorerKind::kMlp;
  if (name == "external") return ScorerKind::kExternal;
  throw ConfigError("unknown scorer kind: " + name);
}

std::size_t ScorerModel::expected_param_count() const {
  switch (kind) {
    case ScorerKind::kLinear:
      return features.hash_dim + 1;
    case ScorerKind::kMlp:
      return hidden_dim * features.hash_dim + hidden_dim + hidden_dim + 1;
    case ScorerKind::kExternal:
      return 0;
  }
  return 0;
}

ScorerModel ScorerModel::make_linear(const FeatureConfig& config,
                                     std::uint64_t init_seed) {
  check_feature_config(config);
  ScorerModel model;
  model.kind = ScorerKind::kLinear;
  model.features = config;
  model.params.assign(config.hash_dim + 1, 0.0);
  Rng rng(init_seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(config.hash_dim));
  for (std::size_t i = 0; i < config.hash_dim; ++i) {
    model.params[i] = rng.uniform(-bound, bound);
  }
  // bias starts at zero
  return model;
}

ScorerModel ScorerModel::make_mlp(const FeatureConfig& config,
                                  std::size_t hidden_dim,
                                  std::uint64_t init_seed) {
  check_feature_config(config);
  if (hidden_dim < 1) throw ConfigError("hidden dimension must be positive");
  ScorerModel model;
  model.kind = ScorerKind::kMlp;
  model.features = config;
  model.hidden_dim = hidden_dim;
  model.params.assign(model.expected_param_count(), 0.0);
  Rng rng(init_seed);
  const std::size_t d = config.hash_dim;
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < hidden_dim * d; ++i) {
    model.params[i] = rng.uniform(-bound1, bound1);
  }
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  double* w2 = model.params.data() + hidden_dim * d + hidden_dim;
  for (std::size_t i = 0; i < hidden_dim; ++i) {
    w2[i] = rng.uniform(-bound2, bound2);
  }
  return model;
}

ScorerModel ScorerModel::make_external() {
  ScorerModel model;
  model.kind = ScorerKind::kExternal;
  return model;
}

std::vector<double> score_forward(const ScorerModel& model,
                                  std::span<const FeatureVector> features,
                                  ForwardCache* cache) {
  if (model.kind == ScorerKind::kExternal) {
    throw ConfigError("external scorer has no forward pass; use a ScoreTable");
  }
  if (model.params.size() != model.expected_param_count()) {
    throw DataError("parameter vector does not match model architecture");
  }
  const std::size_t d = model.features.hash_dim;
  std::vector<double> scores(features.size());
  if (cache) {
    cache->features.assign(features.begin(), features.end());
    cache->hidden_pre.clear();
  }
  for (std::size_t j = 0; j < features.size(); ++j) {
    if (features[j].dim != d) {
      throw std::invalid_argument("feature dimension does not match model");
    }
    if (model.kind == ScorerKind::kLinear) {
      scores[j] = features[j].dot({model.params.data(), d}) + model.params[d];
    } else {
      const std::size_t h = model.hidden_dim;
      const double* w1 = model.params.data();
      const double* b1 = model.params.data() + h * d;
      const double* w2 = b1 + h;
      const double b2 = w2[h];
      std::vector<double> pre(h);
      for (std::size_t r = 0; r < h; ++r) {
        pre[r] = features[j].dot({w1 + r * d, d}) + b1[r];
      }
      double s = b2;
      for (std::size_t r = 0; r < h; ++r) {
        if (pre[r] > 0.0) s += w2[r] * pre[r];
      }
      scores[j] = s;
      if (cache) cache->hidden_pre.push_back(std::move(pre));
    }
  }
  return scores;
}

std::vector<double> score_forward(const ScorerModel& model,
                                  const RankingInstance& instance,
                                  ForwardCache* cache) {
  std::vector<FeatureVector> features;
  features.reserve(instance.size());
  for (const std::string& hyp : instance.hypotheses) {
    features.push_back(
        featurize(instance.obs1, hyp, instance.obs2, model.features));
  }
  return score_forward(model, features, cache);
}

std::vector<double> score_backward(const ScorerModel& model,
                                   const ForwardCache& cache,
                                   std::span<const double> upstream) {
  if (model.kind == ScorerKind::kExternal) {
    throw ConfigError("external scorer has no backward pass");
  }
  if (upstream.size() != cache.features.size()) {
    throw std::invalid_argument("upstream gradient does not match cache");
  }
  const std::size_t d = model.features.hash_dim;
  std::vector<double> grad(model.params.size(), 0.0);
  if (model.kind == ScorerKind::kLinear) {
    for (std::size_t j = 0; j < upstream.size(); ++j) {
      cache.features[j].add_scaled({grad.data(), d}, upstream[j]);
      grad[d] += upstream[j];
    }
    return grad;
  }
  if (cache.hidden_pre.size() != cache.features.size()) {
    throw std::invalid_argument("cache is missing mlp activations");
  }
  const std::size_t h = model.hidden_dim;
  const double* w2 = model.params.data() + h * d + h;
  double* g_w1 = grad.data();
  double* g_b1 = grad.data() + h * d;
  double* g_w2 = g_b1 + h;
  double& g_b2 = g_w2[h];
  for (std::size_t j = 0; j < upstream.size(); ++j) {
    const double u = upstream[j];
    if (u == 0.0) continue;
    const std::vector<double>& pre = cache.hidden_pre[j];
    g_b2 += u;
    for (std::size_t r = 0; r < h; ++r) {
      if (pre[r] <= 0.0) continue;  // relu subgradient 0 at 0
      g_w2[r] += u * pre[r];
      const double da = u * w2[r];
      g_b1[r] += da;
      cache.features[j].add_scaled({g_w1 + r * d, d}, da);
    }
  }
  return grad;
}

ScoreTable ScoreTable::read(std::istream& in) {
  ScoreTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank(line)) continue;
    json row;
    try {
      row = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError("score table line " + std::to_string(lineno) + ": " +
                      e.what());
    }
    if (!row.is_object() || !row.contains("story_id") ||
        !row.contains("scores") || !row["story_id"].is_string() ||
        !row["scores"].is_array()) {
      throw DataError("score table line " + std::to_string(lineno) +
                      ": expected {story_id, scores}");
    }
    std::vector<double> scores;
    for (const auto& v : row["scores"]) {
      if (!v.is_number()) {
        throw DataError("score table line " + std::to_string(lineno) +
                        ": scores must be numbers");
      }
      const double s = v.get<double>();
      if (!std::isfinite(s)) {
        throw DataError("score table line " + std::to_string(lineno) +
                        ": non-finite score");
      }
      scores.push_back(s);
    }
    const std::string id = row["story_id"].get<std::string>();
    if (!table.rows_.emplace(id, std::move(scores)).second) {
      throw DataError("score table line " + std::to_string(lineno) +
                      ": duplicate story_id '" + id + "'");
    }
  }
  return table;
}

ScoreTable ScoreTable::read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open score table: " + path);
  return read(in);
}

void ScoreTable::insert(std::string story_id, std::vector<double> scores) {
  rows_[std::move(story_id)] = std::move(scores);
}

const std::vector<double>& ScoreTable::row(const std::string& story_id) const {
  const auto it = rows_.find(story_id);
  if (it == rows_.end()) {
    throw DataError("score table has no entry for story_id '" + story_id +
                    "'");
  }
  return it->second;
}

void ScoreTable::check_coverage(
    const std::vector<RankingInstance>& dataset) const {
  for (const RankingInstance& instance : dataset) {
    const std::vector<double>& scores = row(instance.story_id);
    if (scores.size() != instance.size()) {
      throw DataError("score table row '" + instance.story_id + "' has " +
                      std::to_string(scores.size()) + " scores for " +
                      std::to_string(instance.size()) + " hypotheses");
    }
  }
}

void ScoreTable::check_coverage(
    const std::vector<BinaryChoiceInstance>& pairs) const {
  for (const BinaryChoiceInstance& pair : pairs) {
    if (row(pair.story_id).size() < 2) {
      throw DataError("score table row '" + pair.story_id +
                      "' needs at least 2 scores");
    }
  }
}

Scorer Scorer::from_model(ScorerModel model) {
  if (model.kind == ScorerKind::kExternal) {
    throw ConfigError("external scorer must be backed by a score table");
  }
  if (model.params.size() != model.expected_param_count()) {
    throw DataError("parameter vector does not match model architecture");
  }
  return Scorer(std::variant<ScorerModel, ScoreTable>(std::move(model)));
}

Scorer Scorer::from_table(ScoreTable table) {
  return Scorer(std::variant<ScorerModel, ScoreTable>(std::move(table)));
}

std::vector<double> Scorer::score(const RankingInstance& instance) const {
  if (const auto* model = std::get_if<ScorerModel>(&impl_)) {
    return score_forward(*model, instance);
  }
  const auto& table = std::get<ScoreTable>(impl_);
  const std::vector<double>& scores = table.row(instance.story_id);
  if (scores.size() != instance.size()) {
    throw DataError("score table row '" + instance.story_id +
                    "' does not match hypothesis count");
  }
  return scores;
}

std::pair<double, double> Scorer::score_pair(
    const BinaryChoiceInstance& pair) const {
  if (const auto* model = std::get_if<ScorerModel>(&impl_)) {
    const std::vector<FeatureVector> features = {
        featurize(pair.obs1, pair.hyp1, pair.obs2, model->features),
        featurize(pair.obs1, pair.hyp2, pair.obs2, model->features),
    };
    const std::vector<double> scores = score_forward(*model, features);
    return {scores[0], scores[1]};
  }
  const auto& table = std::get<ScoreTable>(impl_);
  const std::vector<double>& scores = table.row(pair.story_id);
  if (scores.size() < 2) {
    throw DataError("score table row '" + pair.story_id +
                    "' needs at least 2 scores");
  }
  return {scores[0], scores[1]};
}

void save_model(std::ostream& out, const ScorerModel& model) {
  json doc;
  doc["kind"] = scorer_kind_name(model.kind);
  doc["feature_config"] = {
      {"max_ngram_order", model.features.max_ngram_order},
      {"hash_dim", model.features.hash_dim},
      {"hash_seed", model.features.hash_seed},
  };
  doc["hidden_dim"] = model.hidden_dim;
  doc["params"] = model.params;
  out << doc.dump() << '\n';
}

void save_model_file(const std::string& path, const ScorerModel& model) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file: " + path);
  save_model(out, model);
}

ScorerModel load_model(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
  try {
    ScorerModel model;
    model.kind = scorer_kind_from_name(doc.at("kind").get<std::string>());
    const json& fc = doc.at("feature_config");
    model.features.max_ngram_order = fc.at("max_ngram_order").get<int>();
    model.features.hash_dim = fc.at("hash_dim").get<std::size_t>();
    model.features.hash_seed = fc.at("hash_seed").get<std::uint64_t>();
    model.hidden_dim = doc.at("hidden_dim").get<std::size_t>();
    model.params = doc.at("params").get<std::vector<double>>();
    if (model.params.size() != model.expected_param_count()) {
      throw DataError("parameter vector does not match model architecture");
    }
    return model;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model file: ") + e.what());
  }
}

ScorerModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  return load_model(in);
}

}  // namespace abrank
