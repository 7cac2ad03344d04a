#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ciex {

struct EntityMention {
  std::string type;
  std::string text;
  std::optional<std::string> head_text;
  std::optional<int> start;
  std::optional<int> end;
};

struct RelationMention {
  std::string type;
  EntityMention head;
  EntityMention tail;
};

struct EventArgument {
  std::string role;
  std::string text;
  std::optional<std::string> head_text;
};

struct EventMention {
  std::string type;
  std::string trigger;
  std::optional<int> trigger_start;
  std::vector<EventArgument> args;
};

// Typed extraction results for one sentence.
struct ExtractionSet {
  std::vector<EntityMention> entities;
  std::vector<RelationMention> relations;
  std::vector<EventMention> events;

  bool empty() const {
    return entities.empty() && relations.empty() && events.empty();
  }
};

// Equality on the fields the code dialect can carry: types, surface
// strings, roles. Offsets and head words are dataset metadata that the
// rendered code never round-trips.
bool same_extractions(const ExtractionSet& a, const ExtractionSet& b);

// A training/test sentence with its gold extractions.
struct Example {
  std::string id;
  std::string text;
  ExtractionSet gold;
  std::map<std::string, std::string> meta;
};

}  // namespace ciex
