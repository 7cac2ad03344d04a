#include "ciex/extraction.hpp"

#include <algorithm>

namespace ciex {

namespace {

std::string entity_key(const EntityMention& e) {
  return e.type + "\x1f" + e.text;
}

std::vector<std::string> sorted_keys(const ExtractionSet& s) {
  std::vector<std::string> keys;
  for (const auto& e : s.entities) keys.push_back("E\x1f" + entity_key(e));
  for (const auto& r : s.relations)
    keys.push_back("R\x1f" + r.type + "\x1f" + entity_key(r.head) + "\x1f" +
                   entity_key(r.tail));
  for (const auto& ev : s.events) {
    std::string key = "V\x1f" + ev.type + "\x1f" + ev.trigger;
    std::vector<std::string> args;
    for (const auto& a : ev.args) args.push_back(a.role + "\x1e" + a.text);
    std::sort(args.begin(), args.end());
    for (const auto& a : args) key += "\x1f" + a;
    keys.push_back(std::move(key));
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

}  // namespace

bool same_extractions(const ExtractionSet& a, const ExtractionSet& b) {
  return sorted_keys(a) == sorted_keys(b);
}

}  // namespace ciex
