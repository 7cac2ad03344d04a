#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ciex/task.hpp"

namespace ciex {

struct EntityTypeDef {
  std::string name;
  std::string description;
  std::vector<std::string> aliases;
};

struct RelationTypeDef {
  std::string name;
  std::string description;
  std::vector<std::string> head_types;
  std::vector<std::string> tail_types;
  std::vector<std::string> aliases;
};

struct RoleDef {
  std::string name;
  std::string description;
  std::vector<std::string> allowed_entity_types;  // empty = unconstrained
};

struct EventTypeDef {
  std::string name;
  std::string description;
  std::vector<RoleDef> roles;  // order fixes constructor-argument order
  std::vector<std::string> aliases;
};

enum class TypeFamily { Entity, Relation, Event };

struct TypeRef {
  TypeFamily family;
  std::string name;  // canonical class name
};

// The task-specific type system. Immutable after load; safe to share.
struct Schema {
  std::string dataset_name;
  std::vector<EntityTypeDef> entity_types;
  std::vector<RelationTypeDef> relation_types;
  std::vector<EventTypeDef> event_types;

  const EntityTypeDef* find_entity(const std::string& name) const;
  const RelationTypeDef* find_relation(const std::string& name) const;
  const EventTypeDef* find_event(const std::string& name) const;
};

// Replaces non-identifier characters with underscore; errors on
// strings that cannot become identifiers.
std::string normalize_identifier(const std::string& label);

// Parses and validates a schema-file JSON document.
Schema load_schema_from_json(const std::string& json_text);
Schema load_schema_file(const std::string& path);

// Canonical serializer; load(save(S)) == S.
std::string save_schema_to_json(const Schema& schema);

// Checks every invariant; throws ValidationError naming the offender.
void validate_schema(const Schema& schema);

// NER -> entities only; RE -> entities + relations; ED/EAE/EE ->
// entities + events. Declaration order preserved.
Schema subset_for_task(const Schema& schema, Task task);

// Restricts to the named types plus every entity type referenced by a
// retained relation/event definition.
Schema subset_for_types(const Schema& schema,
                        const std::vector<std::string>& names);

// Maps a dataset label or class name (case-insensitive) to its type.
TypeRef resolve_alias(const Schema& schema, const std::string& label);

// Non-throwing variant for noisy LLM output.
std::optional<TypeRef> try_resolve_alias(const Schema& schema,
                                         const std::string& label);

std::vector<std::string> all_type_names(const Schema& schema);

}  // namespace ciex
