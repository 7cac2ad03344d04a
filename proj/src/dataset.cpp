#include "ciex/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ciex/errors.hpp"

namespace ciex {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

EntityMention entity_from_json(const json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("type") || !j.contains("text"))
    throw FormatError("entity needs \"type\" and \"text\" in " + where);
  EntityMention e;
  e.type = j.at("type").get<std::string>();
  e.text = j.at("text").get<std::string>();
  if (j.contains("head") && j.at("head").is_string())
    e.head_text = j.at("head").get<std::string>();
  if (j.contains("start") && j.at("start").is_number_integer())
    e.start = j.at("start").get<int>();
  if (j.contains("end") && j.at("end").is_number_integer())
    e.end = j.at("end").get<int>();
  return e;
}

json entity_to_json(const EntityMention& e) {
  json j = {{"type", e.type}, {"text", e.text}};
  if (e.head_text) j["head"] = *e.head_text;
  if (e.start) j["start"] = *e.start;
  if (e.end) j["end"] = *e.end;
  return j;
}

void check_offsets(const EntityMention& e, const std::string& text,
                   const std::string& id) {
  if (!e.start || !e.end) return;
  const int start = *e.start, end = *e.end;
  if (start < 0 || end < start || end > static_cast<int>(text.size()) ||
      text.substr(start, end - start) != e.text)
    throw ValidationError("offsets do not select the stated text in example " +
                          id);
}

}  // namespace

std::vector<Example> parse_split(const std::string& jsonl_text,
                                 const Schema& schema) {
  std::vector<Example> out;
  std::set<std::string> ids;
  std::istringstream in(jsonl_text);
  std::string line;
  int line_no = 0;

  auto resolve = [&](const std::string& label, const std::string& id,
                     TypeFamily family) -> std::string {
    auto ref = try_resolve_alias(schema, label);
    if (!ref || ref->family != family)
      throw ValidationError("label \"" + label +
                            "\" does not resolve in schema (example " + id +
                            ")");
    return ref->name;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw FormatError("invalid JSON at line " + std::to_string(line_no));
    Example ex;
    ex.id = j.value("id", "");
    ex.text = j.value("text", "");
    if (ex.id.empty())
      throw ValidationError("missing id at line " + std::to_string(line_no));
    if (!ids.insert(ex.id).second)
      throw ValidationError("duplicate example id " + ex.id);
    if (ex.text.empty())
      throw ValidationError("empty text in example " + ex.id);

    for (const auto& ej : j.value("entities", json::array())) {
      EntityMention e = entity_from_json(ej, "example " + ex.id);
      e.type = resolve(e.type, ex.id, TypeFamily::Entity);
      check_offsets(e, ex.text, ex.id);
      ex.gold.entities.push_back(std::move(e));
    }
    for (const auto& rj : j.value("relations", json::array())) {
      if (!rj.contains("type") || !rj.contains("head") || !rj.contains("tail"))
        throw FormatError("relation needs type/head/tail in example " + ex.id);
      RelationMention r;
      r.type = resolve(rj.at("type").get<std::string>(), ex.id,
                       TypeFamily::Relation);
      r.head = entity_from_json(rj.at("head"), "example " + ex.id);
      r.tail = entity_from_json(rj.at("tail"), "example " + ex.id);
      r.head.type = resolve(r.head.type, ex.id, TypeFamily::Entity);
      r.tail.type = resolve(r.tail.type, ex.id, TypeFamily::Entity);
      ex.gold.relations.push_back(std::move(r));
    }
    for (const auto& vj : j.value("events", json::array())) {
      if (!vj.contains("type") || !vj.contains("trigger"))
        throw FormatError("event needs type/trigger in example " + ex.id);
      EventMention ev;
      ev.type =
          resolve(vj.at("type").get<std::string>(), ex.id, TypeFamily::Event);
      ev.trigger = vj.at("trigger").get<std::string>();
      if (vj.contains("trigger_start") &&
          vj.at("trigger_start").is_number_integer())
        ev.trigger_start = vj.at("trigger_start").get<int>();
      const EventTypeDef* def = schema.find_event(ev.type);
      for (const auto& aj : vj.value("args", json::array())) {
        if (!aj.contains("role") || !aj.contains("text"))
          throw FormatError("event arg needs role/text in example " + ex.id);
        EventArgument arg;
        arg.role = aj.at("role").get<std::string>();
        arg.text = aj.at("text").get<std::string>();
        if (aj.contains("head") && aj.at("head").is_string())
          arg.head_text = aj.at("head").get<std::string>();
        bool known = false;
        if (def)
          for (const auto& role : def->roles)
            if (role.name == arg.role) known = true;
        if (!known)
          throw ValidationError("role \"" + arg.role +
                                "\" not declared for event " + ev.type +
                                " (example " + ex.id + ")");
        ev.args.push_back(std::move(arg));
      }
      ex.gold.events.push_back(std::move(ev));
    }
    if (j.contains("meta") && j.at("meta").is_object())
      for (const auto& [k, v] : j.at("meta").items())
        if (v.is_string()) ex.meta[k] = v.get<std::string>();
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<Example> load_split(const std::string& path, const Schema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open dataset file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_split(ss.str(), schema);
}

std::string example_to_json_line(const Example& ex) {
  json j;
  j["id"] = ex.id;
  j["text"] = ex.text;
  j["entities"] = json::array();
  for (const auto& e : ex.gold.entities) j["entities"].push_back(entity_to_json(e));
  j["relations"] = json::array();
  for (const auto& r : ex.gold.relations)
    j["relations"].push_back({{"type", r.type},
                              {"head", entity_to_json(r.head)},
                              {"tail", entity_to_json(r.tail)}});
  j["events"] = json::array();
  for (const auto& ev : ex.gold.events) {
    json vj = {{"type", ev.type}, {"trigger", ev.trigger}, {"args", json::array()}};
    if (ev.trigger_start) vj["trigger_start"] = *ev.trigger_start;
    for (const auto& a : ev.args) {
      json aj = {{"role", a.role}, {"text", a.text}};
      if (a.head_text) aj["head"] = *a.head_text;
      vj["args"].push_back(aj);
    }
    j["events"].push_back(vj);
  }
  if (!ex.meta.empty()) j["meta"] = ex.meta;
  return j.dump();
}

void save_split(const std::vector<Example>& examples, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write dataset file: " + path);
  for (const auto& ex : examples) out << example_to_json_line(ex) << "\n";
}

namespace {

json extraction_set_to_json(const ExtractionSet& s) {
  json j;
  j["entities"] = json::array();
  for (const auto& e : s.entities) j["entities"].push_back(entity_to_json(e));
  j["relations"] = json::array();
  for (const auto& r : s.relations)
    j["relations"].push_back({{"type", r.type},
                              {"head", entity_to_json(r.head)},
                              {"tail", entity_to_json(r.tail)}});
  j["events"] = json::array();
  for (const auto& ev : s.events) {
    json vj = {{"type", ev.type}, {"trigger", ev.trigger}, {"args", json::array()}};
    for (const auto& a : ev.args)
      vj["args"].push_back({{"role", a.role}, {"text", a.text}});
    j["events"].push_back(vj);
  }
  return j;
}

}  // namespace

std::string RunManifest::to_json(bool include_volatile) const {
  json j;
  j["run_id"] = run_id;
  j["config"] = json::parse(config_snapshot_json.empty() ? "{}"
                                                         : config_snapshot_json);
  j["records"] = json::array();
  for (const auto& r : records) {
    j["records"].push_back({{"example_id", r.example_id},
                            {"prompt_hashes", r.prompt_hashes},
                            {"retrieved_ids", r.retrieved_ids},
                            {"response_hashes", r.response_hashes},
                            {"predicted", extraction_set_to_json(r.predicted)},
                            {"diagnostics", r.diagnostics}});
  }
  j["metrics"] = json::parse(report.to_json());
  if (include_volatile) j["total_latency_ms"] = total_latency_ms;
  return j.dump(2) + "\n";
}

std::string save_run(const RunManifest& manifest,
                     const std::map<std::string, std::string>& responses,
                     const std::string& root) {
  const fs::path dir = fs::path(root) / manifest.run_id;
  std::error_code ec;
  fs::create_directories(dir / "responses", ec);
  if (ec) throw IoError("cannot create run directory: " + dir.string());

  auto write_if_changed = [](const fs::path& path, const std::string& content) {
    // Idempotent re-save: skip identical content.
    {
      std::ifstream in(path, std::ios::binary);
      if (in) {
        std::stringstream ss;
        ss << in.rdbuf();
        if (ss.str() == content) return;
      }
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
  };

  write_if_changed(dir / "manifest.json", manifest.to_json());
  for (const auto& [hash, text] : responses)
    write_if_changed(dir / "responses" / (hash + ".txt"), text);
  return dir.string();
}

}  // namespace ciex
