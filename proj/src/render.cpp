#include "ciex/render.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "ciex/errors.hpp"
#include "ciex/parser.hpp"

namespace ciex {

namespace {

std::string lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string trim_copy(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void append_comment(std::string& out, const std::string& description) {
  if (description.empty()) return;
  std::istringstream in(description);
  std::string line;
  while (std::getline(in, line)) out += "# " + line + "\n";
}

}  // namespace

void PromptSpec::validate() const {
  if (k < 0) throw ConfigError("k must be >= 0");
  if (max_tokens <= 0) throw ConfigError("max_tokens must be > 0");
  if (!mode_valid_for_task(mode, task))
    throw ConfigError("task " + to_string(task) + " has no 2-stage prompt");
  if ((task == Task::EAE) != given_event_type.has_value())
    throw ConfigError("given_event_type must be present exactly for EAE");
}

int estimate_tokens(const std::string& text) {
  return static_cast<int>((text.size() + 3) / 4);
}

SchemaCode render_class_defs(const Schema& schema, Task task) {
  Schema sub = subset_for_task(schema, task);
  SchemaCode code;
  std::string& out = code.text;

  if (!sub.entity_types.empty()) {
    out += "class Entity:\n";
    out += "    def __init__(self, name: str):\n";
    out += "        self.name = name\n";
    for (const auto& e : sub.entity_types) {
      out += "\n";
      append_comment(out, e.description);
      out += "class " + e.name + "(Entity):\n";
      out += "    pass\n";
      code.covered_types.push_back(e.name);
    }
    out += "\n";
  }

  if (!sub.relation_types.empty()) {
    out += "class Relation:\n";
    out += "    def __init__(self, head: Entity, tail: Entity):\n";
    out += "        self.head = head\n";
    out += "        self.tail = tail\n";
    for (const auto& r : sub.relation_types) {
      out += "\n";
      append_comment(out, r.description);
      out += "class " + r.name + "(Relation):\n";
      out += "    pass\n";
      code.covered_types.push_back(r.name);
    }
    out += "\n";
  }

  if (!sub.event_types.empty()) {
    out += "class Event:\n";
    out += "    def __init__(self, trigger: str):\n";
    out += "        self.trigger = trigger\n";
    for (const auto& v : sub.event_types) {
      out += "\n";
      append_comment(out, v.description);
      out += "class " + v.name + "(Event):\n";
      out += "    def __init__(self, trigger: str";
      for (const auto& role : v.roles) out += ", " + role.name + ": list = []";
      out += "):\n";
      out += "        self.trigger = trigger\n";
      for (const auto& role : v.roles) {
        if (!role.description.empty())
          out += "        # " + role.description + "\n";
        out += "        self." + role.name + " = " + role.name + "\n";
      }
      code.covered_types.push_back(v.name);
    }
    out += "\n";
  }
  return code;
}

namespace {

std::string render_entity_call(const EntityMention& e, const Schema& schema) {
  TypeRef ref = resolve_alias(schema, e.type);
  return ref.name + "(name=" + quote_dialect_string(e.text) + ")";
}

}  // namespace

std::string render_instances(const ExtractionSet& extractions,
                             const Schema& schema, Task task) {
  std::string out;
  int next_var = 1;
  auto emit = [&](const std::string& expr) {
    out += "v" + std::to_string(next_var++) + " = " + expr + "\n";
  };

  for (const auto& e : extractions.entities)
    emit(render_entity_call(e, schema));
  for (const auto& r : extractions.relations) {
    TypeRef ref = resolve_alias(schema, r.type);
    emit(ref.name + "(head=" + render_entity_call(r.head, schema) +
         ", tail=" + render_entity_call(r.tail, schema) + ")");
  }
  for (const auto& ev : extractions.events) {
    TypeRef ref = resolve_alias(schema, ev.type);
    const EventTypeDef* def = schema.find_event(ref.name);
    if (!def) throw ValidationError("unresolved event type " + ev.type);
    std::string expr =
        ref.name + "(trigger=" + quote_dialect_string(ev.trigger);
    // One keyword list per non-empty role, in declared role order.
    for (const auto& role : def->roles) {
      std::vector<const EventArgument*> args;
      for (const auto& a : ev.args)
        if (lower(a.role) == lower(role.name)) args.push_back(&a);
      if (args.empty()) continue;
      expr += ", " + role.name + "=[";
      for (size_t i = 0; i < args.size(); ++i) {
        if (i) expr += ", ";
        expr += quote_dialect_string(args[i]->text);
      }
      expr += "]";
    }
    expr += ")";
    emit(expr);
  }
  return out;
}

namespace {

std::string instruction_goal(Task task, PromptMode mode,
                             const std::optional<std::string>& given_event_type) {
  if (mode == PromptMode::TwoStageS1) {
    switch (task) {
      case Task::NER:
        return "identify the types of entities mentioned in the sentence "
               "below, and complete the import statement.";
      case Task::RE:
        return "identify the types of relations expressed in the sentence "
               "below, and complete the import statement.";
      case Task::EE:
        return "identify the types of events mentioned in the sentence "
               "below, and complete the import statement.";
      default:
        break;
    }
  }
  switch (task) {
    case Task::NER:
      return "extract the entities from the sentence below, and instantiate "
             "the extracted entities using the classes defined above.";
    case Task::RE:
      return "extract the relations from the sentence below, and instantiate "
             "the extracted relations using the classes defined above.";
    case Task::ED:
      return "extract the events from the sentence below, and instantiate "
             "the extracted events using the classes defined above.";
    case Task::EAE:
      return "extract the arguments of the given " +
             (given_event_type ? *given_event_type : std::string("event")) +
             " event from the sentence below, and instantiate the event "
             "using the classes defined above.";
    case Task::EE:
      return "extract the events and their arguments from the sentence "
             "below, and instantiate the extracted events using the classes "
             "defined above.";
  }
  return "";
}

}  // namespace

std::string render_instruction(const std::string& sentence, Task task,
                               PromptMode mode,
                               const std::optional<std::string>& given_event_type) {
  if (sentence.empty()) throw ValidationError("sentence must be non-empty");
  std::string out = "\"\"\"\n";
  out += "The " + to_string(task) + " task: " +
         instruction_goal(task, mode, given_event_type) + "\n";
  out += "sentence: " + quote_dialect_string(sentence) + "\n";
  out += "\"\"\"\n";
  return out;
}

namespace {

// Types of the family stage 1 identifies, in gold order.
std::vector<std::string> stage1_family_types(const Example& ex, Task task,
                                             const Schema& schema) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  auto add = [&](const std::string& label) {
    auto ref = try_resolve_alias(schema, label);
    const std::string name = ref ? ref->name : label;
    if (seen.insert(lower(name)).second) out.push_back(name);
  };
  switch (task) {
    case Task::NER:
      for (const auto& e : ex.gold.entities) add(e.type);
      break;
    case Task::RE:
      for (const auto& r : ex.gold.relations) add(r.type);
      break;
    default:
      for (const auto& ev : ex.gold.events) add(ev.type);
      break;
  }
  return out;
}

std::string stage1_base(Task task) {
  switch (task) {
    case Task::NER: return "Entity";
    case Task::RE: return "Relation";
    default: return "Event";
  }
}

bool example_mentions_type(const Example& ex, const Schema& schema,
                           const std::set<std::string>& wanted) {
  auto hit = [&](const std::string& label) {
    auto ref = try_resolve_alias(schema, label);
    return ref && wanted.count(lower(ref->name)) > 0;
  };
  for (const auto& e : ex.gold.entities)
    if (hit(e.type)) return true;
  for (const auto& r : ex.gold.relations)
    if (hit(r.type)) return true;
  for (const auto& ev : ex.gold.events)
    if (hit(ev.type)) return true;
  return false;
}

RenderedPrompt enforce_budget(
    const PromptSpec& spec, const std::vector<const Example*>& ranked,
    const std::function<std::string(const std::vector<const Example*>&)>& build) {
  size_t n = std::min<size_t>(spec.k, ranked.size());
  while (true) {
    std::vector<const Example*> used(ranked.begin(), ranked.begin() + n);
    std::string text = build(used);
    int estimate = estimate_tokens(text);
    if (estimate <= spec.max_tokens) {
      RenderedPrompt out;
      out.text = std::move(text);
      out.token_estimate = estimate;
      out.mode = spec.mode;
      for (const Example* ex : used) out.example_ids.push_back(ex->id);
      return out;
    }
    if (n == 0)
      throw OverlengthError("prompt exceeds token budget (" +
                            std::to_string(estimate) + " > " +
                            std::to_string(spec.max_tokens) +
                            ") even with zero examples");
    --n;
  }
}

}  // namespace

RenderedPrompt render_prompt(
    const PromptSpec& spec, const Schema& schema,
    const std::vector<Example>& examples, const std::string& target,
    const std::optional<std::vector<std::string>>& stage1_types) {
  spec.validate();
  if ((spec.mode == PromptMode::TwoStageS2) != stage1_types.has_value())
    throw ConfigError("stage1_types must be present exactly for two_stage_s2");

  // EAE restricts the schema to the given event type; stage 2 restricts
  // to the types identified in stage 1.
  Schema working = schema;
  if (spec.task == Task::EAE) {
    working = subset_for_types(schema, {*spec.given_event_type});
  } else if (spec.mode == PromptMode::TwoStageS2) {
    working = subset_for_types(schema, *stage1_types);
  }
  const SchemaCode defs = render_class_defs(working, spec.task);

  std::vector<const Example*> ranked;
  if (spec.mode == PromptMode::TwoStageS2) {
    std::set<std::string> wanted;
    for (const auto& name : *stage1_types)
      wanted.insert(lower(resolve_alias(schema, name).name));
    for (const auto& ex : examples)
      if (example_mentions_type(ex, schema, wanted)) ranked.push_back(&ex);
    if (ranked.empty())
      for (const auto& ex : examples) ranked.push_back(&ex);
  } else {
    for (const auto& ex : examples) ranked.push_back(&ex);
  }

  auto build = [&](const std::vector<const Example*>& used) {
    std::string out = defs.text;
    if (spec.mode == PromptMode::TwoStageS1) {
      const std::string base = stage1_base(spec.task);
      for (const Example* ex : used) {
        out += render_instruction(ex->text, spec.task, spec.mode);
        out += "from " + base + " import ";
        auto types = stage1_family_types(*ex, spec.task, schema);
        for (size_t i = 0; i < types.size(); ++i) {
          if (i) out += ", ";
          out += types[i];
        }
        out += "\n\n";
      }
      out += render_instruction(target, spec.task, spec.mode);
      out += "from " + base + " import ";  // the unfinished stub
      return out;
    }
    for (const Example* ex : used) {
      out += render_instruction(ex->text, spec.task, spec.mode,
                                spec.given_event_type);
      out += render_instances(ex->gold, schema, spec.task);
      out += "\n";
    }
    out += render_instruction(target, spec.task, spec.mode,
                              spec.given_event_type);
    return out;
  };
  return enforce_budget(spec, ranked, build);
}

std::string render_text_baseline_answer(const ExtractionSet& gold, Task task) {
  std::string out;
  if (task == Task::NER)
    for (const auto& e : gold.entities) out += e.type + ": " + e.text + "\n";
  if (task == Task::RE)
    for (const auto& r : gold.relations)
      out += r.type + ": " + r.head.text + " | " + r.tail.text + "\n";
  if (task_uses_events(task)) {
    for (const auto& ev : gold.events) {
      out += ev.type + ": " + ev.trigger + "\n";
      if (task == Task::EAE || task == Task::EE)
        for (const auto& a : ev.args)
          out += ev.type + "." + a.role + ": " + a.text + "\n";
    }
  }
  if (out.empty()) out = "None\n";
  return out;
}

RenderedPrompt render_text_baseline_prompt(const PromptSpec& spec,
                                           const Schema& schema,
                                           const std::vector<Example>& examples,
                                           const std::string& target) {
  spec.validate();
  if (spec.mode != PromptMode::OneStage)
    throw ConfigError("text baseline supports one_stage only");
  Schema sub = spec.task == Task::EAE
                   ? subset_for_types(schema, {*spec.given_event_type})
                   : subset_for_task(schema, spec.task);

  std::string header = "Task: " + to_string(spec.task) + "\n";
  header += "Option: ";
  auto names = all_type_names(subset_for_task(sub, spec.task));
  for (size_t i = 0; i < names.size(); ++i) {
    if (i) header += ", ";
    header += names[i];
  }
  header += "\n";
  header +=
      "Please answer with one line per extraction in the form "
      "\"Type: mention\" (relations as \"Type: head | tail\", event "
      "arguments as \"Type.role: argument\"). Answer \"None\" if there is "
      "nothing to extract.\n\n";

  std::vector<const Example*> ranked;
  for (const auto& ex : examples) ranked.push_back(&ex);

  auto build = [&](const std::vector<const Example*>& used) {
    std::string out = header;
    for (const Example* ex : used) {
      out += "Sentence: " + quote_dialect_string(ex->text) + "\nAnswer:\n";
      out += render_text_baseline_answer(ex->gold, spec.task);
      out += "\n";
    }
    out += "Sentence: " + quote_dialect_string(target) + "\nAnswer:\n";
    return out;
  };
  return enforce_budget(spec, ranked, build);
}

ExtractionSet parse_text_baseline_response(const std::string& response,
                                           const Schema& schema, Task task) {
  ExtractionSet out;
  std::istringstream in(response);
  std::string line;
  while (std::getline(in, line)) {
    size_t colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string label = trim_copy(line.substr(0, colon));
    std::string value = trim_copy(line.substr(colon + 1));
    if (label.empty() || value.empty()) continue;

    // "Type.role: argument" attaches to the most recent event of Type.
    size_t dot = label.find('.');
    if (dot != std::string::npos) {
      auto ref = try_resolve_alias(schema, label.substr(0, dot));
      if (!ref || ref->family != TypeFamily::Event) continue;
      for (auto it = out.events.rbegin(); it != out.events.rend(); ++it) {
        if (it->type == ref->name) {
          it->args.push_back({label.substr(dot + 1), value, {}});
          break;
        }
      }
      continue;
    }
    auto ref = try_resolve_alias(schema, label);
    if (!ref) continue;
    switch (ref->family) {
      case TypeFamily::Entity:
        if (task_uses_entities(task))
          out.entities.push_back({ref->name, value, {}, {}, {}});
        break;
      case TypeFamily::Relation: {
        if (!task_uses_relations(task)) break;
        size_t bar = value.find('|');
        if (bar == std::string::npos) break;
        const RelationTypeDef* def = schema.find_relation(ref->name);
        if (!def) break;
        // Surface strings only; entity types default to the first
        // declared head/tail type.
        EntityMention head{def->head_types.front(),
                           trim_copy(value.substr(0, bar)), {}, {}, {}};
        EntityMention tail{def->tail_types.front(),
                           trim_copy(value.substr(bar + 1)), {}, {}, {}};
        out.relations.push_back({ref->name, head, tail});
        break;
      }
      case TypeFamily::Event:
        if (task_uses_events(task))
          out.events.push_back({ref->name, value, {}, {}});
        break;
    }
  }
  return out;
}

}  // namespace ciex
