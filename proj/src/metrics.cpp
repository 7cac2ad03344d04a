#include "ciex/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "ciex/errors.hpp"

namespace ciex {

std::string canonicalize_text(const std::string& s) {
  std::string out;
  bool in_space = true;  // leading spaces dropped
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(static_cast<char>(c));
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::string head_word(const std::string& span) {
  std::string s = canonicalize_text(span);
  while (!s.empty() && std::ispunct(static_cast<unsigned char>(s.back())))
    s.pop_back();
  while (!s.empty() && s.back() == ' ') s.pop_back();
  size_t pos = s.find_last_of(' ');
  return pos == std::string::npos ? s : s.substr(pos + 1);
}

MetricCounts f1_from_counts(long long correct, long long predicted,
                            long long gold) {
  if (correct < 0 || predicted < 0 || gold < 0 ||
      correct > std::min(predicted, gold))
    throw InputError("inconsistent counts: correct=" + std::to_string(correct) +
                     " predicted=" + std::to_string(predicted) +
                     " gold=" + std::to_string(gold));
  MetricCounts m;
  m.correct = correct;
  m.predicted = predicted;
  m.gold = gold;
  auto round4 = [](double x) { return std::round(x * 10000.0) / 10000.0; };
  m.precision =
      predicted == 0 ? 0.0 : round4(static_cast<double>(correct) / predicted);
  m.recall = gold == 0 ? 0.0 : round4(static_cast<double>(correct) / gold);
  // 2PR/(P+R) reduces to 2c/(p+g); computing it that way stays exact
  // until the final rounding.
  m.f1 = (predicted + gold) == 0
             ? 0.0
             : round4(2.0 * static_cast<double>(correct) / (predicted + gold));
  return m;
}

std::vector<std::string> match_keys(const ExtractionSet& s, Task task,
                                    bool head_mode) {
  std::vector<std::string> keys;
  auto arg_text = [&](const EventArgument& a) {
    if (!head_mode) return canonicalize_text(a.text);
    return a.head_text ? canonicalize_text(*a.head_text) : head_word(a.text);
  };
  switch (task) {
    case Task::NER:
      for (const auto& e : s.entities)
        keys.push_back(e.type + "\t" + canonicalize_text(e.text));
      break;
    case Task::RE:
      for (const auto& r : s.relations)
        keys.push_back(r.type + "\t" + r.head.type + "\t" +
                       canonicalize_text(r.head.text) + "\t" + r.tail.type +
                       "\t" + canonicalize_text(r.tail.text));
      break;
    case Task::ED:
      for (const auto& ev : s.events)
        keys.push_back(ev.type + "\t" + canonicalize_text(ev.trigger));
      break;
    case Task::EAE:
    case Task::EE:
      for (const auto& ev : s.events)
        for (const auto& a : ev.args)
          keys.push_back(ev.type + "\t" + a.role + "\t" + arg_text(a));
      break;
  }
  return keys;
}

MetricsReport score(
    const std::vector<std::pair<std::string, ExtractionSet>>& predictions,
    const std::vector<std::pair<std::string, ExtractionSet>>& golds,
    Task task, bool head_mode) {
  if (head_mode && task != Task::EAE)
    throw InputError("head mode applies to EAE only");

  std::map<std::string, const ExtractionSet*> gold_by_id;
  for (const auto& [id, set] : golds) gold_by_id[id] = &set;
  std::map<std::string, const ExtractionSet*> pred_by_id;
  for (const auto& [id, set] : predictions) {
    if (!gold_by_id.count(id))
      throw InputError("prediction for unknown example id " + id);
    pred_by_id[id] = &set;
  }

  struct Tally {
    long long correct = 0, predicted = 0, gold = 0;
  };
  Tally overall;
  std::map<std::string, Tally> per_type;
  auto type_of = [](const std::string& key) {
    return key.substr(0, key.find('\t'));
  };

  for (const auto& [id, gold_set] : golds) {
    std::map<std::string, long long> gold_counts, pred_counts;
    for (const auto& k : match_keys(gold_set, task, head_mode))
      ++gold_counts[k];
    auto pit = pred_by_id.find(id);
    if (pit != pred_by_id.end())
      for (const auto& k : match_keys(*pit->second, task, head_mode))
        ++pred_counts[k];

    for (const auto& [k, n] : gold_counts) {
      overall.gold += n;
      per_type[type_of(k)].gold += n;
    }
    for (const auto& [k, n] : pred_counts) {
      overall.predicted += n;
      per_type[type_of(k)].predicted += n;
      auto git = gold_counts.find(k);
      if (git != gold_counts.end()) {
        long long c = std::min(n, git->second);
        overall.correct += c;
        per_type[type_of(k)].correct += c;
      }
    }
  }

  MetricsReport report;
  report.task = task;
  report.overall =
      f1_from_counts(overall.correct, overall.predicted, overall.gold);
  for (const auto& [type, t] : per_type)
    report.per_type[type] = f1_from_counts(t.correct, t.predicted, t.gold);
  return report;
}

namespace {

nlohmann::json counts_to_json(const MetricCounts& m) {
  return {{"correct", m.correct},   {"predicted", m.predicted},
          {"gold", m.gold},         {"precision", m.precision},
          {"recall", m.recall},     {"f1", m.f1}};
}

}  // namespace

std::string MetricsReport::to_json() const {
  nlohmann::json j;
  j["task"] = ciex::to_string(task);
  j["overall"] = counts_to_json(overall);
  j["per_type"] = nlohmann::json::object();
  for (const auto& [type, m] : per_type) j["per_type"][type] = counts_to_json(m);
  return j.dump(2);
}

std::string MetricsReport::to_table() const {
  std::ostringstream out;
  out << std::left << std::setw(24) << "type" << std::right << std::setw(8)
      << "corr" << std::setw(8) << "pred" << std::setw(8) << "gold"
      << std::setw(10) << "P" << std::setw(10) << "R" << std::setw(10) << "F1"
      << "\n";
  auto row = [&](const std::string& name, const MetricCounts& m) {
    out << std::left << std::setw(24) << name << std::right << std::setw(8)
        << m.correct << std::setw(8) << m.predicted << std::setw(8) << m.gold
        << std::fixed << std::setprecision(4) << std::setw(10) << m.precision
        << std::setw(10) << m.recall << std::setw(10) << m.f1 << "\n";
  };
  for (const auto& [type, m] : per_type) row(type, m);
  row("ALL (" + ciex::to_string(task) + ")", overall);
  return out.str();
}

}  // namespace ciex
