#include "abrank/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "abrank/ranking.hpp"

namespace abrank {

namespace {

using nlohmann::json;

std::string line_tag(std::size_t lineno) {
  return "line " + std::to_string(lineno) + ": ";
}

json parse_line(const std::string& line, std::size_t lineno) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) {
      throw DataError(line_tag(lineno) + "expected a JSON object");
    }
    return j;
  } catch (const json::parse_error& e) {
    throw DataError(line_tag(lineno) + e.what());
  }
}

std::string get_string(const json& j, const char* key, std::size_t lineno) {
  if (!j.contains(key)) {
    throw DataError(line_tag(lineno) + "missing field '" + key + "'");
  }
  if (!j[key].is_string()) {
    throw DataError(line_tag(lineno) + "field '" + key + "' must be a string");
  }
  return j[key].get<std::string>();
}

void validate_binary_instance(const BinaryChoiceInstance& inst,
                              std::size_t lineno) {
  const char* names[] = {"obs1", "obs2", "hyp1", "hyp2"};
  const std::string* texts[] = {&inst.obs1, &inst.obs2, &inst.hyp1,
                                &inst.hyp2};
  for (int i = 0; i < 4; ++i) {
    if (normalize_text(*texts[i]).empty()) {
      throw DataError(line_tag(lineno) + "field '" + names[i] +
                      "' is empty after trimming");
    }
  }
  if (normalize_text(inst.hyp1) == normalize_text(inst.hyp2)) {
    throw DataError(line_tag(lineno) +
                    "hyp1 and hyp2 are identical after normalization");
  }
  if (inst.correct != 1 && inst.correct != 2) {
    throw DataError(line_tag(lineno) + "label must be 1 or 2");
  }
}

bool is_blank_line(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char c) {
    return std::isspace(c);
  });
}

}  // namespace

std::string normalize_text(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (const char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  return out;
}

std::vector<BinaryChoiceInstance> parse_binary_instances(std::istream& in) {
  std::vector<BinaryChoiceInstance> instances;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank_line(line)) continue;
    const json j = parse_line(line, lineno);
    BinaryChoiceInstance inst;
    inst.story_id = get_string(j, "story_id", lineno);
    inst.obs1 = get_string(j, "obs1", lineno);
    inst.obs2 = get_string(j, "obs2", lineno);
    inst.hyp1 = get_string(j, "hyp1", lineno);
    inst.hyp2 = get_string(j, "hyp2", lineno);
    if (!j.contains("label")) {
      throw DataError(line_tag(lineno) + "missing field 'label'");
    }
    if (!j["label"].is_number_integer()) {
      throw DataError(line_tag(lineno) + "label must be 1 or 2");
    }
    inst.correct = j["label"].get<int>();
    validate_binary_instance(inst, lineno);
    instances.push_back(std::move(inst));
  }
  return instances;
}

std::vector<BinaryChoiceInstance> read_binary_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  try {
    return parse_binary_instances(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

void write_binary(std::ostream& out,
                  const std::vector<BinaryChoiceInstance>& instances) {
  for (const BinaryChoiceInstance& inst : instances) {
    json j;
    j["story_id"] = inst.story_id;
    j["obs1"] = inst.obs1;
    j["obs2"] = inst.obs2;
    j["hyp1"] = inst.hyp1;
    j["hyp2"] = inst.hyp2;
    j["label"] = inst.correct;
    out << j.dump() << '\n';
  }
}

std::vector<RankingInstance> merge_to_ranking(
    const std::vector<BinaryChoiceInstance>& instances) {
  struct Group {
    RankingInstance inst;
    std::map<std::string, std::size_t> index_by_hyp;  // key: normalized text
    std::vector<std::size_t> occurrences;
    std::vector<std::size_t> plausible;
  };
  std::map<std::pair<std::string, std::string>, std::size_t> group_index;
  std::vector<Group> groups;

  for (const BinaryChoiceInstance& inst : instances) {
    const std::pair<std::string, std::string> key = {
        normalize_text(inst.obs1), normalize_text(inst.obs2)};
    const auto [it, inserted] = group_index.emplace(key, groups.size());
    if (inserted) {
      Group group;
      group.inst.story_id = inst.story_id;
      group.inst.obs1 = inst.obs1;
      group.inst.obs2 = inst.obs2;
      groups.push_back(std::move(group));
    }
    Group& group = groups[it->second];

    const std::string* hyps[] = {&inst.hyp1, &inst.hyp2};
    std::size_t indices[2];
    for (int i = 0; i < 2; ++i) {
      const std::string norm = normalize_text(*hyps[i]);
      const auto [hit, fresh] =
          group.index_by_hyp.emplace(norm, group.inst.hypotheses.size());
      if (fresh) {
        // first-seen raw text is the one stored
        group.inst.hypotheses.push_back(*hyps[i]);
        group.occurrences.push_back(0);
        group.plausible.push_back(0);
      }
      indices[i] = hit->second;
      group.occurrences[hit->second] += 1;
    }
    group.plausible[indices[inst.correct - 1]] += 1;
  }

  std::vector<RankingInstance> dataset;
  dataset.reserve(groups.size());
  for (Group& group : groups) {
    group.inst.labels.resize(group.inst.hypotheses.size());
    for (std::size_t j = 0; j < group.inst.labels.size(); ++j) {
      group.inst.labels[j] = static_cast<double>(group.plausible[j]) /
                             static_cast<double>(group.occurrences[j]);
    }
    dataset.push_back(std::move(group.inst));
  }
  return dataset;
}

std::vector<RankingInstance> binary_as_lists(
    const std::vector<BinaryChoiceInstance>& instances) {
  std::vector<RankingInstance> dataset;
  dataset.reserve(instances.size());
  for (const BinaryChoiceInstance& inst : instances) {
    RankingInstance q;
    q.story_id = inst.story_id;
    q.obs1 = inst.obs1;
    q.obs2 = inst.obs2;
    q.hypotheses = {inst.hyp1, inst.hyp2};
    q.labels = inst.correct == 1 ? std::vector<double>{1.0, 0.0}
                                 : std::vector<double>{0.0, 1.0};
    dataset.push_back(std::move(q));
  }
  return dataset;
}

CorpusStats corpus_stats(const std::vector<RankingInstance>& dataset,
                         double plausible_threshold) {
  if (dataset.empty()) {
    throw std::invalid_argument("corpus_stats needs a non-empty dataset");
  }
  CorpusStats stats;
  stats.num_queries = dataset.size();
  std::size_t hypotheses = 0;
  std::size_t plausible = 0;
  for (const RankingInstance& inst : dataset) {
    hypotheses += inst.size();
    for (const double y : inst.labels) {
      if (y > plausible_threshold) ++plausible;
    }
  }
  stats.mean_hypotheses_per_query =
      static_cast<double>(hypotheses) / static_cast<double>(dataset.size());
  stats.mean_plausible_per_query =
      static_cast<double>(plausible) / static_cast<double>(dataset.size());
  return stats;
}

void validate_ranking_instance(const RankingInstance& instance,
                               const std::string& context) {
  if (instance.size() < 2) {
    throw DataError(context + "a query needs at least two hypotheses");
  }
  if (instance.labels.size() != instance.hypotheses.size()) {
    throw DataError(context + "hypotheses and labels must be aligned");
  }
  for (const double y : instance.labels) {
    if (!std::isfinite(y) || y < 0.0 || y > 1.0) {
      throw DataError(context + "labels must lie in [0, 1]");
    }
  }
  if (normalize_text(instance.obs1).empty() ||
      normalize_text(instance.obs2).empty()) {
    throw DataError(context + "observations must be non-empty");
  }
  std::set<std::string> seen;
  for (const std::string& hyp : instance.hypotheses) {
    const std::string norm = normalize_text(hyp);
    if (norm.empty()) {
      throw DataError(context + "hypothesis is empty after trimming");
    }
    if (!seen.insert(norm).second) {
      throw DataError(context + "duplicated hypothesis '" + norm + "'");
    }
  }
}

void write_ranking(std::ostream& out,
                   const std::vector<RankingInstance>& dataset) {
  for (const RankingInstance& inst : dataset) {
    json j;
    j["story_id"] = inst.story_id;
    j["obs1"] = inst.obs1;
    j["obs2"] = inst.obs2;
    j["hypotheses"] = inst.hypotheses;
    j["labels"] = inst.labels;  // shortest round-trip representation
    j["trainable"] = is_trainable(inst);
    out << j.dump() << '\n';
  }
}

void write_ranking_file(const std::string& path,
                        const std::vector<RankingInstance>& dataset) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  write_ranking(out, dataset);
}

std::vector<RankingInstance> read_ranking(std::istream& in) {
  std::vector<RankingInstance> dataset;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (is_blank_line(line)) continue;
    const json j = parse_line(line, lineno);
    RankingInstance inst;
    inst.story_id = get_string(j, "story_id", lineno);
    inst.obs1 = get_string(j, "obs1", lineno);
    inst.obs2 = get_string(j, "obs2", lineno);
    for (const char* key : {"hypotheses", "labels", "trainable"}) {
      if (!j.contains(key)) {
        throw DataError(line_tag(lineno) + "missing field '" + key + "'");
      }
    }
    if (!j["hypotheses"].is_array() || !j["labels"].is_array() ||
        !j["trainable"].is_boolean()) {
      throw DataError(line_tag(lineno) + "malformed ranking record");
    }
    for (const auto& h : j["hypotheses"]) {
      if (!h.is_string()) {
        throw DataError(line_tag(lineno) + "hypotheses must be strings");
      }
      inst.hypotheses.push_back(h.get<std::string>());
    }
    for (const auto& y : j["labels"]) {
      if (!y.is_number()) {
        throw DataError(line_tag(lineno) + "labels must be numbers");
      }
      inst.labels.push_back(y.get<double>());
    }
    validate_ranking_instance(inst, line_tag(lineno));
    if (j["trainable"].get<bool>() != is_trainable(inst)) {
      throw DataError(line_tag(lineno) +
                      "trainable flag does not match the labels");
    }
    dataset.push_back(std::move(inst));
  }
  return dataset;
}

std::vector<RankingInstance> read_ranking_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  try {
    return read_ranking(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

}  // namespace abrank
