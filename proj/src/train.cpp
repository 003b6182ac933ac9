#include "abrank/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "abrank/ranking.hpp"
#include "abrank/rng.hpp"

namespace abrank {

namespace {

using nlohmann::json;

void check_finite(std::span<const double> values, const std::string& what) {
  for (const double v : values) {
    if (!std::isfinite(v)) throw NumericError("non-finite " + what);
  }
}

double pair_accuracy_cached(
    const ScorerModel& model,
    const std::vector<std::vector<FeatureVector>>& pair_features,
    const std::vector<BinaryChoiceInstance>& pairs) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::vector<double> scores =
        score_forward(model, pair_features[i]);
    const double gold = pairs[i].correct == 1 ? scores[0] : scores[1];
    const double other = pairs[i].correct == 1 ? scores[1] : scores[0];
    if (gold > other) ++correct;  // exact ties count as incorrect
  }
  return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (batch_size < 1) throw ConfigError("batch size must be at least 1");
  if (max_epochs < 1) throw ConfigError("max epochs must be at least 1");
  if (patience < 1) throw ConfigError("patience must be at least 1");
  if (!(adam.beta1 > 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 > 0.0 && adam.beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in (0, 1)");
  }
  if (!(adam.epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
}

double empirical_risk(const ScorerModel& model,
                      const std::vector<RankingInstance>& dataset,
                      const LossSpec& spec) {
  double total = 0.0;
  std::size_t count = 0;
  for (const RankingInstance& instance : dataset) {
    if (!is_trainable(instance)) continue;
    const std::vector<double> scores = score_forward(model, instance);
    total += evaluate_loss(spec, instance.labels, scores).value;
    ++count;
  }
  if (count == 0) {
    throw UntrainableError("dataset has no trainable query");
  }
  return total / static_cast<double>(count);
}

void adam_step(std::vector<double>& params, std::span<const double> grads,
               AdamState& state, const AdamParams& hyper,
               double learning_rate) {
  if (grads.size() != params.size()) {
    throw std::invalid_argument("gradient does not match parameter length");
  }
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("optimizer state does not match parameters");
  }
  state.step += 1;
  const double bias1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = state.m[i] / bias1;
    const double v_hat = state.v[i] / bias2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

std::pair<ScorerModel, TrainReport> train(
    ScorerModel model, const std::vector<RankingInstance>& train_set,
    const std::vector<BinaryChoiceInstance>& dev_pairs,
    const TrainConfig& config, AdamState* best_state) {
  config.validate();
  if (model.kind == ScorerKind::kExternal) {
    throw ConfigError("external scorers are fixed and cannot be trained");
  }
  if (dev_pairs.empty()) {
    throw ConfigError("training needs a non-empty dev pair set");
  }

  std::vector<std::size_t> trainable;
  for (std::size_t i = 0; i < train_set.size(); ++i) {
    if (is_trainable(train_set[i])) trainable.push_back(i);
  }
  if (trainable.empty()) {
    throw UntrainableError("dataset has no trainable query");
  }
  if (config.loss.kind == LossKind::kBinaryClassification) {
    for (const std::size_t i : trainable) {
      if (train_set[i].size() != 2) {
        throw ConfigError("binary_classification requires N=2 lists; query '" +
                          train_set[i].story_id + "' has " +
                          std::to_string(train_set[i].size()));
      }
    }
  }

  // featurization is pure, so features are computed once and reused
  std::vector<std::vector<FeatureVector>> query_features(train_set.size());
  for (const std::size_t i : trainable) {
    const RankingInstance& q = train_set[i];
    query_features[i].reserve(q.size());
    for (const std::string& hyp : q.hypotheses) {
      query_features[i].push_back(
          featurize(q.obs1, hyp, q.obs2, model.features));
    }
  }
  std::vector<std::vector<FeatureVector>> dev_features(dev_pairs.size());
  for (std::size_t i = 0; i < dev_pairs.size(); ++i) {
    const BinaryChoiceInstance& p = dev_pairs[i];
    dev_features[i] = {featurize(p.obs1, p.hyp1, p.obs2, model.features),
                       featurize(p.obs1, p.hyp2, p.obs2, model.features)};
  }

  Rng shuffle_rng(config.seed);
  TrainReport report;
  ScorerModel best = model;
  AdamState state;
  AdamState best_adam;
  std::size_t epochs_without_improvement = 0;
  report.stopping_reason = "max_epochs";

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(trainable);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < trainable.size();
         begin += config.batch_size) {
      const std::size_t end =
          std::min(begin + config.batch_size, trainable.size());
      std::vector<double> batch_grad(model.params.size(), 0.0);
      for (std::size_t b = begin; b < end; ++b) {
        const std::size_t i = trainable[b];
        ForwardCache cache;
        const std::vector<double> scores =
            score_forward(model, query_features[i], &cache);
        LossResult loss;
        try {
          loss = evaluate_loss(config.loss, train_set[i].labels, scores);
        } catch (const NumericError& e) {
          throw NumericError(std::string(e.what()) + " (query '" +
                             train_set[i].story_id + "', loss " +
                             loss_name(config.loss.kind) + ")");
        }
        if (!std::isfinite(loss.value)) {
          throw NumericError("non-finite loss value (query '" +
                             train_set[i].story_id + "', loss " +
                             loss_name(config.loss.kind) + ")");
        }
        epoch_loss += loss.value;
        const std::vector<double> param_grad =
            score_backward(model, cache, loss.grad);
        const double scale = 1.0 / static_cast<double>(end - begin);
        for (std::size_t p = 0; p < batch_grad.size(); ++p) {
          batch_grad[p] += scale * param_grad[p];
        }
      }
      try {
        check_finite(batch_grad, "gradient");
      } catch (const NumericError&) {
        throw NumericError("non-finite gradient in batch starting at query '" +
                           train_set[trainable[begin]].story_id + "', loss " +
                           loss_name(config.loss.kind));
      }
      adam_step(model.params, batch_grad, state, config.adam,
                config.learning_rate);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_risk = epoch_loss / static_cast<double>(trainable.size());
    stats.dev_accuracy = pair_accuracy_cached(model, dev_features, dev_pairs);
    report.epochs.push_back(stats);

    if (report.best_epoch == 0 ||
        stats.dev_accuracy > report.best_dev_accuracy) {
      report.best_epoch = epoch;
      report.best_dev_accuracy = stats.dev_accuracy;
      best = model;
      best_adam = state;
      epochs_without_improvement = 0;
    } else {
      ++epochs_without_improvement;
      if (epochs_without_improvement >= config.patience) {
        report.stopping_reason = "early_stopping";
        break;
      }
    }
  }
  if (best_state) *best_state = std::move(best_adam);
  return {std::move(best), std::move(report)};
}

void write_report(std::ostream& out, const TrainReport& report,
                  const TrainConfig& config, const ScorerModel& model) {
  for (const EpochStats& stats : report.epochs) {
    json line;
    line["epoch"] = stats.epoch;
    line["train_risk"] = stats.train_risk;
    line["dev_accuracy"] = stats.dev_accuracy;
    out << line.dump() << '\n';
  }
  json summary;
  summary["best_epoch"] = report.best_epoch;
  summary["best_dev_accuracy"] = report.best_dev_accuracy;
  summary["stopping_reason"] = report.stopping_reason;
  json cfg;
  cfg["loss"] = loss_name(config.loss.kind);
  if (!config.loss.options.empty()) cfg["loss_options"] = config.loss.options;
  cfg["learning_rate"] = config.learning_rate;
  cfg["batch_size"] = config.batch_size;
  cfg["max_epochs"] = config.max_epochs;
  cfg["patience"] = config.patience;
  cfg["seed"] = config.seed;
  cfg["adam"] = {{"beta1", config.adam.beta1},
                 {"beta2", config.adam.beta2},
                 {"epsilon", config.adam.epsilon}};
  cfg["scorer"] = scorer_kind_name(model.kind);
  cfg["feature_config"] = {{"max_ngram_order", model.features.max_ngram_order},
                           {"hash_dim", model.features.hash_dim},
                           {"hash_seed", model.features.hash_seed}};
  if (model.kind == ScorerKind::kMlp) cfg["hidden_dim"] = model.hidden_dim;
  summary["config"] = cfg;
  out << json{{"summary", summary}}.dump() << '\n';
}

void save_adam_state_file(const std::string& path, const AdamState& state) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write optimizer state: " + path);
  json doc;
  doc["step"] = state.step;
  doc["m"] = state.m;
  doc["v"] = state.v;
  out << doc.dump() << '\n';
}

AdamState load_adam_state_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open optimizer state: " + path);
  json doc;
  try {
    doc = json::parse(in);
    AdamState state;
    state.step = doc.at("step").get<std::uint64_t>();
    state.m = doc.at("m").get<std::vector<double>>();
    state.v = doc.at("v").get<std::vector<double>>();
    return state;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed optimizer state: ") + e.what());
  }
}

}  // namespace abrank
