#include "ciex/schema.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ciex/errors.hpp"

namespace ciex {

using nlohmann::json;

namespace {

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool is_identifier(const std::string& s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0]))) return false;
  return std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_';
  });
}

}  // namespace

const EntityTypeDef* Schema::find_entity(const std::string& name) const {
  const std::string key = lower(name);
  for (const auto& e : entity_types)
    if (lower(e.name) == key) return &e;
  return nullptr;
}

const RelationTypeDef* Schema::find_relation(const std::string& name) const {
  const std::string key = lower(name);
  for (const auto& r : relation_types)
    if (lower(r.name) == key) return &r;
  return nullptr;
}

const EventTypeDef* Schema::find_event(const std::string& name) const {
  const std::string key = lower(name);
  for (const auto& e : event_types)
    if (lower(e.name) == key) return &e;
  return nullptr;
}

std::string normalize_identifier(const std::string& label) {
  std::string out;
  out.reserve(label.size());
  for (unsigned char c : label) {
    out.push_back(std::isalnum(c) ? static_cast<char>(c) : '_');
  }
  if (out.empty() || !std::isalpha(static_cast<unsigned char>(out[0]))) {
    throw ValidationError("label cannot be normalized to an identifier: \"" +
                          label + "\"");
  }
  return out;
}

namespace {

std::vector<std::string> read_string_array(const json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  if (!j.at(key).is_array())
    throw FormatError(std::string("field \"") + key + "\" must be an array");
  for (const auto& v : j.at(key)) {
    if (!v.is_string())
      throw FormatError(std::string("field \"") + key +
                        "\" must contain strings");
    out.push_back(v.get<std::string>());
  }
  return out;
}

// Normalizes the declared name; if normalization changed it, the
// original label is preserved as an alias.
void set_name(const std::string& raw, std::string& name,
              std::vector<std::string>& aliases) {
  name = normalize_identifier(raw);
  if (name != raw &&
      std::find(aliases.begin(), aliases.end(), raw) == aliases.end()) {
    aliases.push_back(raw);
  }
}

}  // namespace

Schema load_schema_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("schema file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw FormatError("schema file must be a JSON object");

  Schema schema;
  schema.dataset_name = doc.value("dataset", "");

  for (const auto& ej : doc.value("entities", json::array())) {
    EntityTypeDef def;
    if (!ej.contains("name") || !ej.at("name").is_string())
      throw FormatError("entity entry missing string field \"name\"");
    def.description = ej.value("description", "");
    def.aliases = read_string_array(ej, "aliases");
    set_name(ej.at("name").get<std::string>(), def.name, def.aliases);
    schema.entity_types.push_back(std::move(def));
  }
  for (const auto& rj : doc.value("relations", json::array())) {
    RelationTypeDef def;
    if (!rj.contains("name") || !rj.at("name").is_string())
      throw FormatError("relation entry missing string field \"name\"");
    def.description = rj.value("description", "");
    def.aliases = read_string_array(rj, "aliases");
    set_name(rj.at("name").get<std::string>(), def.name, def.aliases);
    def.head_types = read_string_array(rj, "head_types");
    def.tail_types = read_string_array(rj, "tail_types");
    schema.relation_types.push_back(std::move(def));
  }
  for (const auto& vj : doc.value("events", json::array())) {
    EventTypeDef def;
    if (!vj.contains("name") || !vj.at("name").is_string())
      throw FormatError("event entry missing string field \"name\"");
    def.description = vj.value("description", "");
    def.aliases = read_string_array(vj, "aliases");
    set_name(vj.at("name").get<std::string>(), def.name, def.aliases);
    for (const auto& rj : vj.value("roles", json::array())) {
      RoleDef role;
      if (!rj.contains("name") || !rj.at("name").is_string())
        throw FormatError("role entry missing string field \"name\" in event " +
                          def.name);
      role.name = normalize_identifier(rj.at("name").get<std::string>());
      role.description = rj.value("description", "");
      role.allowed_entity_types = read_string_array(rj, "entity_types");
      def.roles.push_back(std::move(role));
    }
    schema.event_types.push_back(std::move(def));
  }

  validate_schema(schema);
  return schema;
}

Schema load_schema_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open schema file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return load_schema_from_json(ss.str());
}

std::string save_schema_to_json(const Schema& schema) {
  json doc;
  doc["dataset"] = schema.dataset_name;
  doc["entities"] = json::array();
  doc["relations"] = json::array();
  doc["events"] = json::array();
  for (const auto& e : schema.entity_types) {
    doc["entities"].push_back(
        {{"name", e.name}, {"description", e.description}, {"aliases", e.aliases}});
  }
  for (const auto& r : schema.relation_types) {
    doc["relations"].push_back({{"name", r.name},
                                {"description", r.description},
                                {"aliases", r.aliases},
                                {"head_types", r.head_types},
                                {"tail_types", r.tail_types}});
  }
  for (const auto& v : schema.event_types) {
    json roles = json::array();
    for (const auto& role : v.roles) {
      roles.push_back({{"name", role.name},
                       {"description", role.description},
                       {"entity_types", role.allowed_entity_types}});
    }
    doc["events"].push_back({{"name", v.name},
                             {"description", v.description},
                             {"aliases", v.aliases},
                             {"roles", roles}});
  }
  return doc.dump(2) + "\n";
}

void validate_schema(const Schema& schema) {
  if (schema.entity_types.empty() && schema.relation_types.empty() &&
      schema.event_types.empty()) {
    throw ValidationError("schema declares no types");
  }

  // Names and aliases must be globally unambiguous so label resolution
  // is deterministic.
  std::set<std::string> seen_names;
  std::set<std::string> seen_aliases;
  auto check_name = [&](const std::string& name, const std::string& where) {
    if (!is_identifier(name))
      throw ValidationError("invalid identifier \"" + name + "\" in " + where);
    if (!seen_names.insert(lower(name)).second)
      throw ValidationError("duplicate type name " + name);
  };
  auto check_aliases = [&](const std::vector<std::string>& aliases,
                           const std::string& owner) {
    for (const auto& a : aliases) {
      const std::string key = lower(a);
      if (key == lower(owner)) continue;
      if (!seen_aliases.insert(key).second || seen_names.count(key))
        throw ValidationError("duplicate alias \"" + a + "\" on " + owner);
    }
  };

  for (const auto& e : schema.entity_types) check_name(e.name, "entities");
  for (const auto& r : schema.relation_types) check_name(r.name, "relations");
  for (const auto& v : schema.event_types) check_name(v.name, "events");
  for (const auto& e : schema.entity_types) check_aliases(e.aliases, e.name);
  for (const auto& r : schema.relation_types) check_aliases(r.aliases, r.name);
  for (const auto& v : schema.event_types) check_aliases(v.aliases, v.name);

  auto require_entity = [&](const std::string& name, const std::string& where) {
    if (!schema.find_entity(name))
      throw ValidationError("unresolved entity type " + name + " in " + where);
  };
  for (const auto& r : schema.relation_types) {
    if (r.head_types.empty() || r.tail_types.empty())
      throw ValidationError("relation " + r.name +
                            " must declare head_types and tail_types");
    for (const auto& h : r.head_types) require_entity(h, "relation " + r.name);
    for (const auto& t : r.tail_types) require_entity(t, "relation " + r.name);
  }
  for (const auto& v : schema.event_types) {
    std::set<std::string> role_names;
    for (const auto& role : v.roles) {
      if (!role_names.insert(lower(role.name)).second)
        throw ValidationError("duplicate role " + role.name + " in event " +
                              v.name);
      for (const auto& t : role.allowed_entity_types)
        require_entity(t, "event " + v.name + " role " + role.name);
    }
  }
}

Schema subset_for_task(const Schema& schema, Task task) {
  Schema out;
  out.dataset_name = schema.dataset_name;
  out.entity_types = schema.entity_types;
  if (task_uses_relations(task)) out.relation_types = schema.relation_types;
  if (task_uses_events(task)) out.event_types = schema.event_types;

  if (task == Task::NER && out.entity_types.empty())
    throw ValidationError("schema has no entity types for task NER");
  if (task == Task::RE && out.relation_types.empty())
    throw ValidationError("schema has no relation types for task RE");
  if (task_uses_events(task) && out.event_types.empty())
    throw ValidationError("schema has no event types for task " +
                          to_string(task));
  return out;
}

Schema subset_for_types(const Schema& schema,
                        const std::vector<std::string>& names) {
  std::set<std::string> keep;
  for (const auto& name : names) {
    const std::string key = lower(name);
    if (!schema.find_entity(key) && !schema.find_relation(key) &&
        !schema.find_event(key)) {
      throw ValidationError("unresolved type " + name);
    }
    keep.insert(key);
  }

  Schema out;
  out.dataset_name = schema.dataset_name;
  for (const auto& r : schema.relation_types) {
    if (!keep.count(lower(r.name))) continue;
    out.relation_types.push_back(r);
    for (const auto& h : r.head_types) keep.insert(lower(h));
    for (const auto& t : r.tail_types) keep.insert(lower(t));
  }
  for (const auto& v : schema.event_types) {
    if (!keep.count(lower(v.name))) continue;
    out.event_types.push_back(v);
    for (const auto& role : v.roles)
      for (const auto& t : role.allowed_entity_types) keep.insert(lower(t));
  }
  for (const auto& e : schema.entity_types) {
    if (keep.count(lower(e.name))) out.entity_types.push_back(e);
  }
  return out;
}

std::optional<TypeRef> try_resolve_alias(const Schema& schema,
                                         const std::string& label) {
  const std::string key = lower(label);
  auto matches = [&](const std::string& name,
                     const std::vector<std::string>& aliases) {
    if (lower(name) == key) return true;
    return std::any_of(aliases.begin(), aliases.end(),
                       [&](const std::string& a) { return lower(a) == key; });
  };
  for (const auto& e : schema.entity_types)
    if (matches(e.name, e.aliases)) return TypeRef{TypeFamily::Entity, e.name};
  for (const auto& r : schema.relation_types)
    if (matches(r.name, r.aliases)) return TypeRef{TypeFamily::Relation, r.name};
  for (const auto& v : schema.event_types)
    if (matches(v.name, v.aliases)) return TypeRef{TypeFamily::Event, v.name};
  return std::nullopt;
}

TypeRef resolve_alias(const Schema& schema, const std::string& label) {
  auto ref = try_resolve_alias(schema, label);
  if (!ref) throw ValidationError("unknown label \"" + label + "\"");
  return *ref;
}

std::vector<std::string> all_type_names(const Schema& schema) {
  std::vector<std::string> out;
  for (const auto& e : schema.entity_types) out.push_back(e.name);
  for (const auto& r : schema.relation_types) out.push_back(r.name);
  for (const auto& v : schema.event_types) out.push_back(v.name);
  return out;
}

}  // namespace ciex
