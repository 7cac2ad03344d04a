#include <doctest.h>

#include "ciex/errors.hpp"
#include "ciex/schema.hpp"
#include "helpers.hpp"

using namespace ciex;

TEST_CASE("minimal schema loads") {
  Schema s = load_schema_from_json(R"({
    "dataset": "mini",
    "entities": [{"name": "Person", "aliases": ["PER"]}]
  })");
  CHECK(s.entity_types.size() == 1);
  CHECK(s.relation_types.empty());
  CHECK(s.event_types.empty());
  CHECK(s.entity_types[0].name == "Person");
}

TEST_CASE("unresolved head type is a validation error") {
  CHECK_THROWS_WITH_AS(
      load_schema_from_json(R"({
        "entities": [{"name": "Organization"}],
        "relations": [{"name": "Work_For",
                       "head_types": ["Person"],
                       "tail_types": ["Organization"]}]
      })"),
      doctest::Contains("unresolved entity type Person"), ValidationError);
}

TEST_CASE("duplicate alias rejected") {
  CHECK_THROWS_WITH_AS(
      load_schema_from_json(R"({
        "entities": [{"name": "Person", "aliases": ["PER"]},
                     {"name": "Human", "aliases": ["PER"]}]
      })"),
      doctest::Contains("duplicate alias"), ValidationError);
}

TEST_CASE("case-insensitive duplicate names rejected") {
  CHECK_THROWS_AS(load_schema_from_json(R"({
                    "entities": [{"name": "Person"}, {"name": "person"}]
                  })"),
                  ValidationError);
}

TEST_CASE("labels with non-identifier characters are normalized") {
  Schema s = load_schema_from_json(R"({
    "events": [{"name": "Transfer-Ownership", "roles": []}]
  })");
  CHECK(s.event_types[0].name == "Transfer_Ownership");
  // the original label stays resolvable
  CHECK(resolve_alias(s, "Transfer-Ownership").name == "Transfer_Ownership");
}

TEST_CASE("subset_for_task filters families") {
  Schema s = ciex::testing::toy_schema();
  Schema ner = subset_for_task(s, Task::NER);
  CHECK(ner.entity_types.size() == 3);
  CHECK(ner.relation_types.empty());
  CHECK(ner.event_types.empty());

  Schema re = subset_for_task(s, Task::RE);
  CHECK(re.entity_types.size() == 3);
  CHECK(re.relation_types.size() == 2);
  CHECK(re.event_types.empty());

  Schema ed = subset_for_task(s, Task::ED);
  CHECK(ed.entity_types.size() == 3);
  CHECK(ed.event_types.size() == 2);
  CHECK(ed.relation_types.empty());
}

TEST_CASE("subset_for_task is idempotent") {
  Schema s = ciex::testing::toy_schema();
  for (Task t : {Task::NER, Task::RE, Task::ED, Task::EAE, Task::EE}) {
    Schema once = subset_for_task(s, t);
    Schema twice = subset_for_task(once, t);
    CHECK(save_schema_to_json(once) == save_schema_to_json(twice));
  }
}

TEST_CASE("subset_for_task errors on a missing family") {
  Schema s = load_schema_from_json(R"({"entities": [{"name": "Person"}]})");
  CHECK_THROWS_AS(subset_for_task(s, Task::ED), ValidationError);
  CHECK_THROWS_AS(subset_for_task(s, Task::RE), ValidationError);
}

TEST_CASE("subset_for_types pulls referenced entity types") {
  Schema s = ciex::testing::toy_schema();
  Schema sub = subset_for_types(s, {"Work_For"});
  CHECK(sub.relation_types.size() == 1);
  CHECK(sub.relation_types[0].name == "Work_For");
  REQUIRE(sub.entity_types.size() == 2);
  CHECK(sub.entity_types[0].name == "Person");
  CHECK(sub.entity_types[1].name == "Organization");
  CHECK(sub.event_types.empty());
}

TEST_CASE("subset_for_types single entity") {
  Schema s = ciex::testing::toy_schema();
  Schema sub = subset_for_types(s, {"Person"});
  CHECK(sub.entity_types.size() == 1);
  CHECK(sub.relation_types.empty());
  CHECK(sub.event_types.empty());
}

TEST_CASE("subset_for_types with all names preserves everything") {
  Schema s = ciex::testing::toy_schema();
  Schema sub = subset_for_types(s, all_type_names(s));
  CHECK(save_schema_to_json(sub) == save_schema_to_json(s));
}

TEST_CASE("subset_for_types unknown name") {
  Schema s = ciex::testing::toy_schema();
  CHECK_THROWS_WITH_AS(subset_for_types(s, {"Nonexistent"}),
                       doctest::Contains("Nonexistent"), ValidationError);
}

TEST_CASE("resolve_alias") {
  Schema s = ciex::testing::toy_schema();
  CHECK(resolve_alias(s, "PER").name == "Person");
  CHECK(resolve_alias(s, "person").name == "Person");
  CHECK(resolve_alias(s, "work for").name == "Work_For");
  CHECK(resolve_alias(s, "data breach").name == "Databreach");
  CHECK_THROWS_AS(resolve_alias(s, "XYZ"), ValidationError);
  CHECK_FALSE(try_resolve_alias(s, "XYZ").has_value());
}

TEST_CASE("schema round-trips through the canonical serializer") {
  Schema s = ciex::testing::toy_schema();
  Schema reloaded = load_schema_from_json(save_schema_to_json(s));
  CHECK(save_schema_to_json(reloaded) == save_schema_to_json(s));
}

TEST_CASE("empty schema rejected") {
  CHECK_THROWS_AS(load_schema_from_json(R"({"dataset": "x"})"), ValidationError);
}
