#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "abrank/losses.hpp"
#include "abrank/scorer.hpp"
#include "abrank/types.hpp"

namespace abrank {

struct AdamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;
};

struct TrainConfig {
  LossSpec loss;
  double learning_rate = 4e-4;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 64;
  std::size_t patience = 8;
  std::uint64_t seed = 0;
  AdamParams adam;

  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_risk = 0.0;
  double dev_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  std::size_t best_epoch = 0;
  double best_dev_accuracy = 0.0;
  std::string stopping_reason;  // "early_stopping" or "max_epochs"
};

// Mean per-query loss over the trainable queries; the untrainable ones are
// excluded from both the sum and the count.
double empirical_risk(const ScorerModel& model,
                      const std::vector<RankingInstance>& dataset,
                      const LossSpec& spec);

// One Adam update with bias correction. Moments in `state` must match the
// parameter length; state.step counts completed updates.
void adam_step(std::vector<double>& params, std::span<const double> grads,
               AdamState& state, const AdamParams& hyper, double learning_rate);

// Epochs iterate seeded-shuffled batches of trainable queries; after each
// epoch dev accuracy is measured on the binary pairs and the best snapshot
// retained. Returns the snapshot, not the final state. When best_state is
// given it receives the optimizer state as of the best epoch.
std::pair<ScorerModel, TrainReport> train(
    ScorerModel model, const std::vector<RankingInstance>& train_set,
    const std::vector<BinaryChoiceInstance>& dev_pairs,
    const TrainConfig& config, AdamState* best_state = nullptr);

void write_report(std::ostream& out, const TrainReport& report,
                  const TrainConfig& config, const ScorerModel& model);
void save_adam_state_file(const std::string& path, const AdamState& state);
AdamState load_adam_state_file(const std::string& path);

}  // namespace abrank
