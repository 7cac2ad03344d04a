#include <doctest.h>

#include <random>
#include <set>

#include "ciex/parser.hpp"
#include "ciex/render.hpp"
#include "helpers.hpp"

using namespace ciex;

TEST_CASE("extract_code_region") {
  CHECK(extract_code_region("v1 = Person(name=\"John\")") ==
        "v1 = Person(name=\"John\")");
  CHECK(extract_code_region(
            "Here is the code:\n```\nv1 = Person(name=\"John\")\n```\nDone.") ==
        "v1 = Person(name=\"John\")\n");
  CHECK(extract_code_region("```python\na = B()\n```\ntext\n```\nc = D()\n```") ==
        "a = B()\n\nc = D()\n");
  CHECK(extract_code_region("") == "");
}

TEST_CASE("parse simple assignment") {
  auto [ast, diags] = parse_program("v1 = Person(name=\"John\")");
  CHECK(diags.clean());
  REQUIRE(ast.statements.size() == 1);
  const auto& s = ast.statements[0];
  CHECK(s.kind == DialectStatement::Kind::Assignment);
  CHECK(s.var_name == "v1");
  CHECK(s.call->class_name == "Person");
  REQUIRE(s.call->args.size() == 1);
  CHECK(s.call->args[0].keyword == "name");
  CHECK(s.call->args[0].value.string_value == "John");
}

TEST_CASE("recovery keeps parsing after garbage") {
  auto [ast, diags] = parse_program(
      "v1 = Person(name=\"John\")\ngarbage line !!\nv2 = Location(name=\"Paris\")");
  CHECK(ast.statements.size() == 2);
  REQUIRE(diags.skipped_lines.size() == 1);
  CHECK(diags.skipped_lines[0].first == 2);
}

TEST_CASE("import statement") {
  auto [ast, diags] = parse_program("from Entity import Person, Location");
  CHECK(diags.clean());
  REQUIRE(ast.statements.size() == 1);
  CHECK(ast.statements[0].kind == DialectStatement::Kind::Import);
  CHECK(ast.statements[0].import_base == "Entity");
  CHECK(ast.statements[0].import_names ==
        std::vector<std::string>{"Person", "Location"});
}

TEST_CASE("multi-line call via bracket balancing") {
  auto [ast, diags] = parse_program(
      "v1 = Work_For(\n    head=Person(name=\"John\"),\n    tail=Organization(name=\"ACME\")\n)");
  CHECK(diags.clean());
  REQUIRE(ast.statements.size() == 1);
  CHECK(ast.statements[0].call->class_name == "Work_For");
  CHECK(ast.statements[0].call->args.size() == 2);
}

TEST_CASE("comments, blanks, and string escapes") {
  auto [ast, diags] = parse_program(
      "# leading comment\n\nv1 = Person(name=\"Jo\\\"hn\")  # trailing\n");
  CHECK(diags.clean());
  REQUIRE(ast.statements.size() == 1);
  CHECK(ast.statements[0].call->args[0].value.string_value == "Jo\"hn");
}

TEST_CASE("single-quoted strings and lists") {
  auto [ast, diags] =
      parse_program("v1 = Databreach(trigger='hit', purpose=['a', \"b\"])");
  CHECK(diags.clean());
  const auto& args = ast.statements[0].call->args;
  REQUIRE(args.size() == 2);
  CHECK(args[1].value.kind == DialectValue::Kind::List);
  CHECK(args[1].value.list_items.size() == 2);
}

TEST_CASE("class definitions parse without diagnostics") {
  Schema s = ciex::testing::toy_schema();
  for (Task t : {Task::NER, Task::RE, Task::ED, Task::EE}) {
    SchemaCode code = render_class_defs(s, t);
    auto [ast, diags] = parse_program(code.text);
    CHECK(diags.clean());
    // every covered type appears as a class definition
    size_t classes = 0;
    for (const auto& st : ast.statements)
      if (st.kind == DialectStatement::Kind::ClassDef) ++classes;
    CHECK(classes >= code.covered_types.size());
  }
}

TEST_CASE("bind entities, relations, events") {
  Schema s = ciex::testing::toy_schema();

  SUBCASE("bare entity call") {
    auto [ast, pd] = parse_program("Person(name=\"John\")");
    auto [set, bd] = bind(ast, s, Task::NER);
    CHECK(pd.clean());
    CHECK(bd.clean());
    REQUIRE(set.entities.size() == 1);
    CHECK(set.entities[0].type == "Person");
    CHECK(set.entities[0].text == "John");
  }

  SUBCASE("relation via variable reference surfaces entities") {
    auto [ast, pd] = parse_program(
        "e1 = Person(name=\"John\")\n"
        "r1 = Work_For(head=e1, tail=Organization(name=\"ACME\"))");
    auto [set, bd] = bind(ast, s, Task::RE);
    CHECK(bd.clean());
    REQUIRE(set.relations.size() == 1);
    CHECK(set.relations[0].head.text == "John");
    CHECK(set.relations[0].tail.type == "Organization");
    CHECK(set.entities.size() == 2);
  }

  SUBCASE("unknown class is a bind error") {
    auto [ast, pd] = parse_program("Unicorn(name=\"x\")");
    auto [set, bd] = bind(ast, s, Task::NER);
    CHECK(set.empty());
    REQUIRE(bd.bind_errors.size() == 1);
    CHECK(bd.bind_errors[0].second == "unknown class Unicorn");
  }

  SUBCASE("positional relation arguments map to head, tail") {
    auto [ast, pd] = parse_program(
        "Work_For(Person(name=\"John\"), Organization(name=\"ACME\"))");
    auto [set, bd] = bind(ast, s, Task::RE);
    CHECK(bd.clean());
    REQUIRE(set.relations.size() == 1);
    CHECK(set.relations[0].head.text == "John");
    CHECK(set.relations[0].tail.text == "ACME");
  }

  SUBCASE("unknown role keeps the event") {
    auto [ast, pd] =
        parse_program("Databreach(trigger=\"hit\", wizardry=[\"x\"])");
    auto [set, bd] = bind(ast, s, Task::ED);
    REQUIRE(set.events.size() == 1);
    CHECK(set.events[0].args.empty());
    CHECK(bd.bind_errors.size() == 1);
  }

  SUBCASE("duplicates collapse (set semantics)") {
    auto [ast, pd] = parse_program(
        "v1 = Person(name=\"John\")\nv2 = Person(name=\"John\")");
    auto [set, bd] = bind(ast, s, Task::NER);
    CHECK(set.entities.size() == 1);
  }

  SUBCASE("family outside task is dropped with a diagnostic") {
    auto [ast, pd] = parse_program(
        "v1 = Person(name=\"John\")\nv2 = Databreach(trigger=\"hit\")");
    auto [set, bd] = bind(ast, s, Task::NER);
    CHECK(set.entities.size() == 1);
    CHECK(set.events.empty());
    CHECK(bd.bind_errors.size() == 1);
  }

  SUBCASE("alias resolution in generated code") {
    auto [ast, pd] = parse_program("PER(name=\"John\")");
    auto [set, bd] = bind(ast, s, Task::NER);
    REQUIRE(set.entities.size() == 1);
    CHECK(set.entities[0].type == "Person");
  }
}

TEST_CASE("parse_import_completion") {
  Schema s = ciex::testing::toy_schema();

  auto [names1, d1] = parse_import_completion("Person, Location", s);
  CHECK(names1 == std::vector<std::string>{"Person", "Location"});
  CHECK(d1.clean());

  auto [names2, d2] = parse_import_completion("from Entity import Person", s);
  CHECK(names2 == std::vector<std::string>{"Person"});

  auto [names3, d3] = parse_import_completion("from Entity import Dragon", s);
  CHECK(names3.empty());
  CHECK(d3.bind_errors.size() == 1);

  auto [names4, d4] =
      parse_import_completion("from Entity import Person, PER, person", s);
  CHECK(names4 == std::vector<std::string>{"Person"});  // dedup via aliases
}

namespace {

// Randomized small extraction sets over the toy schema. Relation
// participants are included as entities so the set is closed under the
// binder's surfacing rule; all extractions are distinct.
ExtractionSet random_set(std::mt19937_64& rng, const Schema& schema, Task task) {
  std::uniform_int_distribution<int> count(0, 3);
  std::uniform_int_distribution<int> coin(0, 1);
  auto pick = [&](const std::vector<std::string>& v) {
    std::uniform_int_distribution<size_t> d(0, v.size() - 1);
    return v[d(rng)];
  };
  const std::vector<std::string> words = {"John",  "ACME",  "Paris", "Bob",
                                          "Globex", "London", "x y",  "O'Neill",
                                          "a \"quoted\" name"};
  ExtractionSet set;
  std::set<std::string> used;
  auto fresh_entity = [&](const std::string& type) {
    for (int tries = 0; tries < 20; ++tries) {
      EntityMention e{type, pick(words), {}, {}, {}};
      if (used.insert(e.type + "\x1f" + e.text).second) return e;
    }
    return EntityMention{type, "fallback", {}, {}, {}};
  };

  int n_entities = count(rng);
  for (int i = 0; i < n_entities; ++i)
    set.entities.push_back(
        fresh_entity(pick({"Person", "Organization", "Location"})));

  if (task == Task::RE) {
    int n_rel = count(rng);
    std::set<std::string> rel_used;
    for (int i = 0; i < n_rel; ++i) {
      const std::string type = coin(rng) ? "Work_For" : "Located_In";
      const RelationTypeDef* def = schema.find_relation(type);
      EntityMention head{def->head_types[0], pick(words), {}, {}, {}};
      EntityMention tail{def->tail_types[0], pick(words), {}, {}, {}};
      std::string key = type + head.type + head.text + tail.type + tail.text;
      if (!rel_used.insert(key).second) continue;
      // close the set under entity surfacing
      for (const auto& e : {head, tail})
        if (used.insert(e.type + "\x1f" + e.text).second)
          set.entities.push_back(e);
      set.relations.push_back({type, head, tail});
    }
  }

  if (task_uses_events(task)) {
    int n_events = task == Task::EAE ? 1 : count(rng);
    std::set<std::string> ev_used;
    for (int i = 0; i < n_events; ++i) {
      const std::string type = coin(rng) ? "Databreach" : "Attack";
      const EventTypeDef* def = schema.find_event(type);
      EventMention ev;
      ev.type = type;
      ev.trigger = pick(words);
      for (const auto& role : def->roles) {
        int n_args = std::uniform_int_distribution<int>(0, 2)(rng);
        std::set<std::string> arg_used;
        for (int a = 0; a < n_args; ++a) {
          std::string text = pick(words);
          if (arg_used.insert(text).second)
            ev.args.push_back({role.name, text, {}});
        }
      }
      std::string key = type + ev.trigger;
      if (ev_used.insert(key).second) set.events.push_back(std::move(ev));
    }
  }
  return set;
}

}  // namespace

TEST_CASE("round trip: bind(parse(render_instances(E))) == E") {
  Schema s = ciex::testing::toy_schema();
  std::mt19937_64 rng(20240817);
  const Task tasks[] = {Task::NER, Task::RE, Task::ED, Task::EAE, Task::EE};
  for (int i = 0; i < 250; ++i) {
    Task task = tasks[i % 5];
    ExtractionSet original = random_set(rng, s, task);
    std::string code = render_instances(original, s, task);
    auto [ast, pd] = parse_program(code);
    auto [rebound, bd] = bind(ast, s, task);
    CHECK(pd.clean());
    CHECK(bd.clean());
    CHECK(same_extractions(original, rebound));
  }
}
