// Command-line front end: convert, stats, train, eval, analyze, gradcheck.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "abrank/eval.hpp"
#include "abrank/gradcheck.hpp"
#include "abrank/ingest.hpp"
#include "abrank/losses.hpp"
#include "abrank/scorer.hpp"
#include "abrank/train.hpp"

namespace {

using nlohmann::json;

// Exit-status classes, sysexits style.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 64;
constexpr int kExitData = 65;
constexpr int kExitNumeric = 70;

// Output files appear whole or not at all.
void write_file_atomic(const std::string& path,
                       const std::function<void(std::ostream&)>& writer) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw abrank::DataError("cannot write file: " + tmp);
    writer(out);
    out.flush();
    if (!out) throw abrank::DataError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

struct TrainOptions {
  std::string train_path;
  std::string dev_path;
  std::string model_out;
  std::string state_out;
  std::string report_out;
  std::string loss_name = "logistic";
  double temperature = 0.0;  // 0 = not set
  std::string scorer_name = "linear";
  std::size_t hash_dim = 1u << 18;
  int ngram_order = 2;
  std::uint64_t hash_seed = 0;  // 0 = library default
  std::size_t hidden_dim = 32;
  abrank::TrainConfig config;
};

int run_convert(const std::string& input, const std::string& output) {
  const auto instances = abrank::read_binary_file(input);
  const auto dataset = abrank::merge_to_ranking(instances);
  write_file_atomic(output, [&dataset](std::ostream& out) {
    abrank::write_ranking(out, dataset);
  });
  std::size_t untrainable = 0;
  for (const auto& q : dataset) {
    if (!abrank::is_trainable(q)) ++untrainable;
  }
  if (dataset.empty()) {
    std::cout << "queries: 0\n";
    return kExitOk;
  }
  const auto stats = abrank::corpus_stats(dataset);
  std::cout << "queries: " << stats.num_queries << '\n'
            << "mean_hypotheses_per_query: " << stats.mean_hypotheses_per_query
            << '\n'
            << "mean_plausible_per_query: " << stats.mean_plausible_per_query
            << '\n'
            << "untrainable_queries: " << untrainable << '\n';
  return kExitOk;
}

int run_stats(const std::string& input, double threshold) {
  const auto dataset = abrank::read_ranking_file(input);
  const auto stats = abrank::corpus_stats(dataset, threshold);
  std::size_t untrainable = 0;
  for (const auto& q : dataset) {
    if (!abrank::is_trainable(q)) ++untrainable;
  }
  std::cout << "queries: " << stats.num_queries << '\n'
            << "mean_hypotheses_per_query: " << stats.mean_hypotheses_per_query
            << '\n'
            << "mean_plausible_per_query: " << stats.mean_plausible_per_query
            << '\n'
            << "untrainable_queries: " << untrainable << '\n';
  return kExitOk;
}

int run_train(TrainOptions& opt) {
  std::map<std::string, double> loss_options;
  if (opt.temperature != 0.0) loss_options["temperature"] = opt.temperature;
  opt.config.loss = abrank::LossSpec::parse(opt.loss_name, loss_options);
  opt.config.validate();

  abrank::FeatureConfig features;
  features.max_ngram_order = opt.ngram_order;
  features.hash_dim = opt.hash_dim;
  if (opt.hash_seed != 0) features.hash_seed = opt.hash_seed;

  abrank::ScorerModel model;
  const abrank::ScorerKind kind = abrank::scorer_kind_from_name(opt.scorer_name);
  // model init draws from the same seed that drives epoch shuffling
  if (kind == abrank::ScorerKind::kLinear) {
    model = abrank::ScorerModel::make_linear(features, opt.config.seed);
  } else if (kind == abrank::ScorerKind::kMlp) {
    model = abrank::ScorerModel::make_mlp(features, opt.hidden_dim,
                                          opt.config.seed);
  } else {
    throw abrank::ConfigError("cannot train an external scorer");
  }

  const auto train_set = abrank::read_ranking_file(opt.train_path);
  const auto dev_pairs = abrank::read_binary_file(opt.dev_path);

  abrank::AdamState best_state;
  auto [best, report] =
      abrank::train(std::move(model), train_set, dev_pairs, opt.config,
                    &best_state);

  if (opt.state_out.empty()) opt.state_out = opt.model_out + ".opt.json";
  if (opt.report_out.empty()) opt.report_out = opt.model_out + ".report.jsonl";
  write_file_atomic(opt.model_out, [&best](std::ostream& out) {
    abrank::save_model(out, best);
  });
  write_file_atomic(opt.state_out, [&best_state](std::ostream& out) {
    json doc;
    doc["step"] = best_state.step;
    doc["m"] = best_state.m;
    doc["v"] = best_state.v;
    out << doc.dump() << '\n';
  });
  write_file_atomic(opt.report_out, [&](std::ostream& out) {
    abrank::write_report(out, report, opt.config, best);
  });

  std::cout << "best_epoch: " << report.best_epoch << '\n'
            << "best_dev_accuracy: " << report.best_dev_accuracy << '\n'
            << "stopping_reason: " << report.stopping_reason << '\n'
            << "model: " << opt.model_out << '\n'
            << "report: " << opt.report_out << '\n';
  return kExitOk;
}

abrank::Scorer make_scorer(const std::string& model_path,
                           const std::string& scores_path) {
  if (!model_path.empty() && !scores_path.empty()) {
    throw abrank::ConfigError("give either --model or --scores, not both");
  }
  if (!model_path.empty()) {
    return abrank::Scorer::from_model(abrank::load_model_file(model_path));
  }
  if (!scores_path.empty()) {
    return abrank::Scorer::from_table(abrank::ScoreTable::read_file(scores_path));
  }
  throw abrank::ConfigError("one of --model or --scores is required");
}

int run_eval(const std::string& model_path, const std::string& scores_path,
             const std::string& pairs_path, const std::string& ranking_path,
             std::size_t k) {
  if (pairs_path.empty() && ranking_path.empty()) {
    throw abrank::ConfigError("give --pairs and/or --ranking to evaluate");
  }
  const abrank::Scorer scorer = make_scorer(model_path, scores_path);
  if (!pairs_path.empty()) {
    const auto pairs = abrank::read_binary_file(pairs_path);
    if (!scores_path.empty()) {
      abrank::ScoreTable::read_file(scores_path).check_coverage(pairs);
    }
    const double accuracy = abrank::binary_accuracy(scorer, pairs);
    std::cout << json{{"metric", "accuracy"},
                      {"value", accuracy},
                      {"n", pairs.size()}}
                     .dump()
              << '\n';
  }
  if (!ranking_path.empty()) {
    const auto dataset = abrank::read_ranking_file(ranking_path);
    if (!scores_path.empty()) {
      abrank::ScoreTable::read_file(scores_path).check_coverage(dataset);
    }
    const abrank::NdcgResult result = abrank::ndcg_at_k(scorer, dataset, k);
    const std::string metric =
        k == 0 ? std::string("ndcg") : "ndcg@" + std::to_string(k);
    if (result.skipped > 0) {
      std::cerr << "note: skipped " << result.skipped
                << " all-zero-label queries\n";
    }
    std::cout << json{{"metric", metric},
                      {"value", result.mean},
                      {"n", result.evaluated}}
                     .dump()
              << '\n';
  }
  return kExitOk;
}

int run_analyze(const std::string& model_path, const std::string& scores_path,
                const std::string& pairs_path, std::size_t bins,
                const std::string& output) {
  const abrank::Scorer scorer = make_scorer(model_path, scores_path);
  const auto pairs = abrank::read_binary_file(pairs_path);
  if (!scores_path.empty()) {
    abrank::ScoreTable::read_file(scores_path).check_coverage(pairs);
  }
  const abrank::Histogram hist = abrank::margin_histogram(scorer, pairs, bins);
  const auto emit = [&hist](std::ostream& out) {
    out << std::setprecision(12);
    for (std::size_t b = 0; b < hist.frequencies.size(); ++b) {
      out << hist.edges[b] << '\t' << hist.edges[b + 1] << '\t'
          << hist.frequencies[b] << '\n';
    }
  };
  if (output.empty()) {
    emit(std::cout);
  } else {
    write_file_atomic(output, emit);
  }
  return kExitOk;
}

int run_gradcheck(std::size_t cases, std::uint64_t seed) {
  const auto cells = abrank::run_loss_gradcheck(cases, seed);
  bool all_passed = true;
  std::printf("%-22s %3s %6s %12s  %s\n", "loss", "N", "cases", "max_rel_err",
              "status");
  for (const auto& cell : cells) {
    all_passed = all_passed && cell.passed;
    std::printf("%-22s %3zu %6zu %12.3e  %s\n", abrank::loss_name(cell.kind),
                cell.n, cell.cases, cell.max_error,
                cell.passed ? "PASS" : "FAIL");
  }
  if (!all_passed) {
    std::cerr << "gradient check failed\n";
    return kExitNumeric;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning-to-rank toolkit for abductive binary-choice data"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Read options from a key=value file");
  app.allow_config_extras(false);

  auto* convert = app.add_subcommand(
      "convert", "Merge binary-choice pairs into labeled ranking lists");
  std::string conv_in, conv_out;
  convert->add_option("-i,--input", conv_in, "Binary-choice JSONL file")
      ->required()
      ->check(CLI::ExistingFile);
  convert->add_option("-o,--output", conv_out, "Ranking-form JSONL file")
      ->required();

  auto* stats = app.add_subcommand("stats", "Corpus statistics of a ranking file");
  std::string stats_in;
  double stats_threshold = 0.5;
  stats->add_option("-i,--input", stats_in, "Ranking-form JSONL file")
      ->required()
      ->check(CLI::ExistingFile);
  stats->add_option("--threshold", stats_threshold,
                    "Plausibility threshold (strict)");

  auto* train = app.add_subcommand("train", "Train a scoring model");
  TrainOptions topt;
  train->add_option("--train", topt.train_path, "Ranking-form training file")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--dev", topt.dev_path, "Binary-choice dev file")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_option("--model-out", topt.model_out, "Checkpoint path")
      ->required();
  train->add_option("--state-out", topt.state_out,
                    "Optimizer state path (default <model-out>.opt.json)");
  train->add_option("--report-out", topt.report_out,
                    "Report path (default <model-out>.report.jsonl)");
  train->add_option("--loss", topt.loss_name,
                    "hinge|logistic|lambdarank|listnet_kld|listmle|"
                    "approx_ndcg|binary_classification");
  train->add_option("--temperature", topt.temperature,
                    "approx_ndcg temperature (default 1)");
  train->add_option("--scorer", topt.scorer_name, "linear|mlp");
  train->add_option("--dim", topt.hash_dim, "Feature hash dimension");
  train->add_option("--ngram", topt.ngram_order, "Max n-gram order");
  train->add_option("--hash-seed", topt.hash_seed, "Feature hash seed");
  train->add_option("--hidden", topt.hidden_dim, "MLP hidden width");
  train->add_option("--lr", topt.config.learning_rate, "Learning rate");
  train->add_option("--batch", topt.config.batch_size, "Queries per step");
  train->add_option("--epochs", topt.config.max_epochs, "Max epochs");
  train->add_option("--patience", topt.config.patience,
                    "Early-stop patience in epochs");
  train->add_option("--seed", topt.config.seed, "Seed for init and shuffling");

  auto* eval = app.add_subcommand("eval", "Accuracy and NDCG of a model");
  std::string eval_model, eval_scores, eval_pairs, eval_ranking;
  std::size_t eval_k = 0;
  eval->add_option("--model", eval_model, "Model checkpoint")
      ->check(CLI::ExistingFile);
  eval->add_option("--scores", eval_scores, "External score table (JSONL)")
      ->check(CLI::ExistingFile);
  eval->add_option("--pairs", eval_pairs, "Binary-choice file")
      ->check(CLI::ExistingFile);
  eval->add_option("--ranking", eval_ranking, "Ranking-form file")
      ->check(CLI::ExistingFile);
  eval->add_option("-k,--k", eval_k, "NDCG cutoff (0 = full list)");

  auto* analyze = app.add_subcommand(
      "analyze", "Histogram of gold-hypothesis probabilities over pairs");
  std::string ana_model, ana_scores, ana_pairs, ana_out;
  std::size_t ana_bins = 20;
  analyze->add_option("--model", ana_model, "Model checkpoint")
      ->check(CLI::ExistingFile);
  analyze->add_option("--scores", ana_scores, "External score table (JSONL)")
      ->check(CLI::ExistingFile);
  analyze->add_option("--pairs", ana_pairs, "Binary-choice file")
      ->required()
      ->check(CLI::ExistingFile);
  analyze->add_option("--bins", ana_bins, "Histogram bins");
  analyze->add_option("-o,--output", ana_out, "TSV output (default stdout)");

  auto* gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference check of every loss gradient");
  std::size_t gc_cases = 100;
  std::uint64_t gc_seed = 7;
  gradcheck->add_option("--cases", gc_cases, "Cases per (loss, N) cell");
  gradcheck->add_option("--seed", gc_seed, "Case generator seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*convert) return run_convert(conv_in, conv_out);
    if (*stats) return run_stats(stats_in, stats_threshold);
    if (*train) return run_train(topt);
    if (*eval) return run_eval(eval_model, eval_scores, eval_pairs,
                               eval_ranking, eval_k);
    if (*analyze)
      return run_analyze(ana_model, ana_scores, ana_pairs, ana_bins, ana_out);
    if (*gradcheck) return run_gradcheck(gc_cases, gc_seed);
  } catch (const abrank::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const abrank::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const abrank::UntrainableError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const abrank::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
  return kExitUsage;
}
