#include <doctest.h>

#include <map>
#include <random>

#include "ciex/errors.hpp"
#include "ciex/metrics.hpp"

using namespace ciex;

namespace {

EntityMention ent(const std::string& type, const std::string& text) {
  return {type, text, {}, {}, {}};
}

// Independent matcher: enumerate key counts on both sides, sum mins.
MetricCounts oracle_counts(const std::vector<std::string>& pred,
                           const std::vector<std::string>& gold) {
  std::map<std::string, long long> pc, gc;
  for (const auto& k : pred) ++pc[k];
  for (const auto& k : gold) ++gc[k];
  long long correct = 0;
  for (const auto& [k, n] : pc) {
    auto it = gc.find(k);
    if (it != gc.end()) correct += std::min(n, it->second);
  }
  return f1_from_counts(correct, static_cast<long long>(pred.size()),
                        static_cast<long long>(gold.size()));
}

}  // namespace

TEST_CASE("f1_from_counts fixed cases") {
  MetricCounts m = f1_from_counts(1, 1, 2);
  CHECK(m.precision == doctest::Approx(1.0));
  CHECK(m.recall == doctest::Approx(0.5));
  CHECK(m.f1 == doctest::Approx(0.6667).epsilon(1e-9));

  m = f1_from_counts(0, 0, 5);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);

  m = f1_from_counts(3, 4, 5);
  CHECK(m.precision == doctest::Approx(0.75));
  CHECK(m.recall == doctest::Approx(0.6));
  CHECK(m.f1 == doctest::Approx(0.6667).epsilon(1e-9));

  CHECK_THROWS_AS(f1_from_counts(3, 2, 5), InputError);
  CHECK_THROWS_AS(f1_from_counts(-1, 2, 5), InputError);
}

TEST_CASE("canonicalization and head heuristic") {
  CHECK(canonicalize_text("  a   b \t c ") == "a b c");
  CHECK(canonicalize_text("John") == "John");  // case preserved
  CHECK(head_word("the data center.") == "center");
  CHECK(head_word("server") == "server");
}

TEST_CASE("score basic NER case") {
  std::vector<std::pair<std::string, ExtractionSet>> pred, gold;
  ExtractionSet p, g;
  p.entities = {ent("Person", "John")};
  g.entities = {ent("Person", "John"), ent("Location", "Paris")};
  pred.emplace_back("e1", p);
  gold.emplace_back("e1", g);
  MetricsReport r = score(pred, gold, Task::NER);
  CHECK(r.overall.precision == doctest::Approx(1.0));
  CHECK(r.overall.recall == doctest::Approx(0.5));
  CHECK(r.overall.f1 == doctest::Approx(0.6667).epsilon(1e-9));
  CHECK(r.per_type.at("Person").f1 == doctest::Approx(1.0));
  CHECK(r.per_type.at("Location").recall == 0.0);
}

TEST_CASE("perfect prediction scores 1.0 on every task") {
  ExtractionSet g;
  g.entities = {ent("Person", "John")};
  g.relations = {{"Work_For", ent("Person", "John"), ent("Org", "ACME")}};
  g.events = {{"Attack", "hit", {}, {{"target", "base", {}}}}};
  for (Task t : {Task::NER, Task::RE, Task::ED, Task::EAE, Task::EE}) {
    MetricsReport r = score({{"e1", g}}, {{"e1", g}}, t);
    CHECK(r.overall.f1 == doctest::Approx(1.0));
  }
}

TEST_CASE("duplicate predictions get min-count credit") {
  ExtractionSet p, g;
  p.entities = {ent("Person", "John"), ent("Person", "John")};
  g.entities = {ent("Person", "John")};
  MetricsReport r = score({{"e1", p}}, {{"e1", g}}, Task::NER);
  CHECK(r.overall.correct == 1);
  CHECK(r.overall.predicted == 2);
  CHECK(r.overall.precision == doctest::Approx(0.5));
}

TEST_CASE("unknown prediction id is an input error") {
  ExtractionSet p;
  CHECK_THROWS_AS(score({{"mystery", p}}, {{"e1", p}}, Task::NER), InputError);
}

TEST_CASE("head_mode restricted to EAE") {
  ExtractionSet g;
  CHECK_THROWS_AS(score({}, {{"e1", g}}, Task::NER, true), InputError);
}

TEST_CASE("head_mode matches on argument heads") {
  ExtractionSet p, g;
  p.events = {{"Attack", "hit", {}, {{"target", "military base", {}}}}};
  g.events = {{"Attack", "hit", {}, {{"target", "the base", {}}}}};
  CHECK(score({{"e1", p}}, {{"e1", g}}, Task::EAE).overall.f1 == 0.0);
  CHECK(score({{"e1", p}}, {{"e1", g}}, Task::EAE, true).overall.f1 ==
        doctest::Approx(1.0));

  // a gold head field takes precedence over the heuristic
  g.events[0].args[0].head_text = "stronghold";
  CHECK(score({{"e1", p}}, {{"e1", g}}, Task::EAE, true).overall.f1 == 0.0);
}

TEST_CASE("relation strictness includes entity types") {
  ExtractionSet p, g;
  p.relations = {{"Work_For", ent("Person", "John"), ent("Org", "ACME")}};
  g.relations = {{"Work_For", ent("Human", "John"), ent("Org", "ACME")}};
  CHECK(score({{"e1", p}}, {{"e1", g}}, Task::RE).overall.f1 == 0.0);
}

TEST_CASE("randomized oracle equivalence and swap symmetry") {
  std::mt19937_64 rng(99);
  const std::vector<std::string> types = {"A", "B", "C"};
  const std::vector<std::string> texts = {"x", "y", "z", "w"};
  auto random_entities = [&](int n) {
    std::vector<EntityMention> out;
    std::uniform_int_distribution<size_t> t(0, types.size() - 1);
    std::uniform_int_distribution<size_t> s(0, texts.size() - 1);
    for (int i = 0; i < n; ++i)
      out.push_back(ent(types[t(rng)], texts[s(rng)]));
    return out;
  };
  // schema-free: only NER keys exercised, which suffices for the
  // matcher since all tasks share one key-multiset pipeline
  std::uniform_int_distribution<int> count(0, 6);
  for (int trial = 0; trial < 1000; ++trial) {
    ExtractionSet p, g;
    p.entities = random_entities(count(rng));
    g.entities = random_entities(count(rng));
    MetricsReport r = score({{"e", p}}, {{"e", g}}, Task::NER);
    MetricCounts expected = oracle_counts(match_keys(p, Task::NER, false),
                                          match_keys(g, Task::NER, false));
    CHECK(r.overall.correct == expected.correct);
    CHECK(r.overall.precision == expected.precision);
    CHECK(r.overall.recall == expected.recall);
    CHECK(r.overall.f1 == expected.f1);

    // swapping prediction and gold swaps P and R, F1 unchanged
    MetricsReport swapped = score({{"e", g}}, {{"e", p}}, Task::NER);
    CHECK(swapped.overall.precision == r.overall.recall);
    CHECK(swapped.overall.recall == r.overall.precision);
    CHECK(swapped.overall.f1 == r.overall.f1);

    CHECK(r.overall.f1 >= 0.0);
    CHECK(r.overall.f1 <= 1.0);
  }
}

TEST_CASE("adding predictions moves precision/recall the right way") {
  std::mt19937_64 rng(7);
  ExtractionSet g;
  g.entities = {ent("A", "x"), ent("B", "y")};
  ExtractionSet p;
  MetricsReport before = score({{"e", p}}, {{"e", g}}, Task::NER);
  // wrong prediction never raises precision
  p.entities.push_back(ent("C", "zzz"));
  MetricsReport wrong = score({{"e", p}}, {{"e", g}}, Task::NER);
  CHECK(wrong.overall.precision <= 1.0);
  // correct prediction never lowers recall
  p.entities.push_back(ent("A", "x"));
  MetricsReport right = score({{"e", p}}, {{"e", g}}, Task::NER);
  CHECK(right.overall.recall >= wrong.overall.recall);
  (void)before;
  (void)rng;
}
