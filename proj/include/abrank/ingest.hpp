#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "abrank/types.hpp"

namespace abrank {

// Canonical form used for grouping and deduplication: leading/trailing
// whitespace trimmed, internal runs collapsed to one space. Case-sensitive.
std::string normalize_text(std::string_view text);

// Binary-choice input: one JSON object per line with keys story_id, obs1,
// obs2, hyp1, hyp2, label (1 or 2). Errors carry the line number.
std::vector<BinaryChoiceInstance> parse_binary_instances(std::istream& in);
std::vector<BinaryChoiceInstance> read_binary_file(const std::string& path);
void write_binary(std::ostream& out,
                  const std::vector<BinaryChoiceInstance>& instances);

// Groups instances by normalized observation pair; each group's distinct
// hypotheses (first-appearance order) get label
//   y_j = #(occurs as the plausible choice) / #(occurs).
// Degenerate groups (all labels equal) are kept; training skips them.
std::vector<RankingInstance> merge_to_ranking(
    const std::vector<BinaryChoiceInstance>& instances);

// One N=2 list per binary instance, labels (1, 0) toward the gold
// hypothesis. This is the classification-baseline view of the same data; no
// grouping is applied.
std::vector<RankingInstance> binary_as_lists(
    const std::vector<BinaryChoiceInstance>& instances);

struct CorpusStats {
  std::size_t num_queries = 0;
  double mean_hypotheses_per_query = 0.0;
  double mean_plausible_per_query = 0.0;
};

// A hypothesis counts as plausible when its label is strictly above the
// threshold.
CorpusStats corpus_stats(const std::vector<RankingInstance>& dataset,
                         double plausible_threshold = 0.5);

// Ranking-form file: one JSON object per line with keys story_id, obs1,
// obs2, hypotheses, labels, trainable. Round-trips are lossless.
void write_ranking(std::ostream& out,
                   const std::vector<RankingInstance>& dataset);
void write_ranking_file(const std::string& path,
                        const std::vector<RankingInstance>& dataset);
std::vector<RankingInstance> read_ranking(std::istream& in);
std::vector<RankingInstance> read_ranking_file(const std::string& path);

// Full invariant check for a single instance; throws DataError with the
// given context on violation.
void validate_ranking_instance(const RankingInstance& instance,
                               const std::string& context);

}  // namespace abrank
