#include "ciex/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "ciex/errors.hpp"

namespace ciex {

using nlohmann::json;

EmbeddingVector EmbeddingProvider::embed(const std::string& text) {
  return embed_batch({text}).front();
}

namespace {

uint64_t fnv1a64(const std::string& s) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::vector<std::string> tokenize_lower(const std::string& text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  return tokens;
}

}  // namespace

std::vector<EmbeddingVector> HashingEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    if (text.empty()) throw InputError("cannot embed empty text");
    EmbeddingVector v(kDimension, 0.0);
    for (const auto& tok : tokenize_lower(text))
      v[fnv1a64(tok) % kDimension] += 1.0;
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0)
      for (double& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string base_url,
                                             std::string model_id, int dimension,
                                             std::string credential_env_var)
    : base_url_(std::move(base_url)),
      model_id_(std::move(model_id)),
      dimension_(dimension),
      credential_env_var_(std::move(credential_env_var)) {}

std::vector<EmbeddingVector> HttpEmbeddingProvider::embed_batch(
    const std::vector<std::string>& texts) {
  for (const auto& t : texts)
    if (t.empty()) throw InputError("cannot embed empty text");
  httplib::Client client(base_url_);
  httplib::Headers headers;
  if (!credential_env_var_.empty()) {
    const char* cred = std::getenv(credential_env_var_.c_str());
    if (cred) headers.emplace("Authorization", std::string("Bearer ") + cred);
  }
  json body = {{"model", model_id_}, {"texts", texts}};
  auto res = client.Post("/embed", headers, body.dump(), "application/json");
  if (!res) throw ProviderError("embedding endpoint unreachable", true);
  if (res->status != 200)
    throw ProviderError("embedding endpoint returned status " +
                            std::to_string(res->status),
                        res->status >= 500 || res->status == 429);
  json parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded() || !parsed.contains("vectors"))
    throw ProviderError("malformed embedding response", false);
  std::vector<EmbeddingVector> out;
  for (const auto& vec : parsed["vectors"]) {
    EmbeddingVector v = vec.get<EmbeddingVector>();
    if (static_cast<int>(v.size()) != dimension_)
      throw ProviderError("embedding dimension mismatch", false);
    out.push_back(std::move(v));
  }
  if (out.size() != texts.size())
    throw ProviderError("embedding count mismatch", false);
  return out;
}

GazetteerAnnotator::GazetteerAnnotator(std::map<std::string, std::string> entries)
    : entries_(std::move(entries)) {}

GazetteerAnnotator GazetteerAnnotator::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open gazetteer file: " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded() || !doc.is_object())
    throw FormatError("gazetteer file must be a JSON object: " + path);
  std::map<std::string, std::string> entries;
  for (const auto& [k, v] : doc.items()) {
    if (!v.is_string())
      throw FormatError("gazetteer values must be strings: " + path);
    entries[k] = v.get<std::string>();
  }
  return GazetteerAnnotator(std::move(entries));
}

std::vector<EntitySpan> GazetteerAnnotator::annotate(const std::string& text) {
  std::vector<EntitySpan> spans;
  for (const auto& [surface, tag] : entries_) {
    if (surface.empty()) continue;
    size_t pos = 0;
    while ((pos = text.find(surface, pos)) != std::string::npos) {
      spans.push_back({pos, surface.size(), tag});
      ++pos;
    }
  }
  return spans;
}

std::string anonymize(const std::string& text, Annotator& annotator) {
  std::vector<EntitySpan> spans = annotator.annotate(text);
  // Longest span wins; ties go to the earliest.
  std::sort(spans.begin(), spans.end(), [](const EntitySpan& a,
                                           const EntitySpan& b) {
    if (a.length != b.length) return a.length > b.length;
    return a.start < b.start;
  });
  std::vector<EntitySpan> selected;
  for (const auto& s : spans) {
    bool overlaps = std::any_of(
        selected.begin(), selected.end(), [&](const EntitySpan& t) {
          return s.start < t.start + t.length && t.start < s.start + s.length;
        });
    if (!overlaps) selected.push_back(s);
  }
  std::sort(selected.begin(), selected.end(),
            [](const EntitySpan& a, const EntitySpan& b) {
              return a.start > b.start;
            });
  std::string out = text;
  for (const auto& s : selected) {
    std::string tag = s.type_tag;
    std::transform(tag.begin(), tag.end(), tag.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    out.replace(s.start, s.length, tag);
  }
  return out;
}

ExampleIndex build_index(const std::vector<Example>& examples,
                         EmbeddingProvider& provider, Annotator* annotator) {
  if (examples.empty()) throw InputError("cannot build index from no examples");
  ExampleIndex index;
  index.anonymized = annotator != nullptr;
  index.embedder_id = provider.id();
  index.dimension = provider.dimension();
  std::vector<std::string> texts;
  texts.reserve(examples.size());
  for (const auto& ex : examples) {
    try {
      texts.push_back(annotator ? anonymize(ex.text, *annotator) : ex.text);
    } catch (const std::exception& e) {
      throw ProviderError("annotator failed on example " + ex.id + ": " +
                              e.what(),
                          false);
    }
  }
  std::vector<EmbeddingVector> vectors;
  try {
    vectors = provider.embed_batch(texts);
  } catch (const ProviderError&) {
    throw;
  } catch (const std::exception& e) {
    throw ProviderError(std::string("embedding failed: ") + e.what(), false);
  }
  for (size_t i = 0; i < examples.size(); ++i)
    index.entries.push_back({examples[i].id, std::move(vectors[i])});
  return index;
}

void save_index(const ExampleIndex& index, const std::string& path) {
  json doc;
  doc["dimension"] = index.dimension;
  doc["embedder_id"] = index.embedder_id;
  doc["anonymized"] = index.anonymized;
  doc["entries"] = json::array();
  for (const auto& e : index.entries)
    doc["entries"].push_back({{"id", e.example_id}, {"vector", e.vector}});
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write index file: " + path);
  out << doc.dump();
}

ExampleIndex load_index(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open index file: " + path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw FormatError("index file is not valid JSON");
  ExampleIndex index;
  index.dimension = doc.value("dimension", 0);
  index.embedder_id = doc.value("embedder_id", "");
  index.anonymized = doc.value("anonymized", false);
  for (const auto& e : doc.value("entries", json::array()))
    index.entries.push_back(
        {e.at("id").get<std::string>(), e.at("vector").get<EmbeddingVector>()});
  return index;
}

void RetrievalStrategy::validate() const {
  const bool seeded =
      kind == StrategyKind::Random || kind == StrategyKind::SemiRandom;
  if (seeded != seed.has_value())
    throw ConfigError("seed must be present exactly for random strategies");
  if ((kind == StrategyKind::Fixed) != fixed_ids.has_value())
    throw ConfigError("fixed_ids must be present exactly for fixed strategy");
}

StrategyKind strategy_kind_from_string(const std::string& s) {
  if (s == "sent_embed") return StrategyKind::SentEmbed;
  if (s == "anony_sent_embed") return StrategyKind::AnonySentEmbed;
  if (s == "random") return StrategyKind::Random;
  if (s == "fixed") return StrategyKind::Fixed;
  if (s == "semi_random") return StrategyKind::SemiRandom;
  throw ConfigError("unknown retrieval strategy: " + s);
}

std::string to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::SentEmbed: return "sent_embed";
    case StrategyKind::AnonySentEmbed: return "anony_sent_embed";
    case StrategyKind::Random: return "random";
    case StrategyKind::Fixed: return "fixed";
    case StrategyKind::SemiRandom: return "semi_random";
  }
  return "?";
}

std::vector<std::string> nearest_ids(
    const ExampleIndex& index, const EmbeddingVector& query, int k,
    const std::optional<std::string>& exclude_id) {
  std::vector<std::pair<double, std::string>> scored;
  for (const auto& e : index.entries) {
    if (exclude_id && e.example_id == *exclude_id) continue;
    if (e.vector.size() != query.size())
      throw ConfigError("query dimension does not match index");
    double d2 = 0.0;
    for (size_t i = 0; i < e.vector.size(); ++i) {
      double diff = e.vector[i] - query[i];
      d2 += diff * diff;
    }
    scored.emplace_back(d2, e.example_id);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<std::string> out;
  for (size_t i = 0; i < scored.size() && static_cast<int>(i) < k; ++i)
    out.push_back(scored[i].second);
  return out;
}

std::vector<std::string> retrieve(
    const ExampleIndex& index, const std::string& query, int k,
    const RetrievalStrategy& strategy, EmbeddingProvider& provider,
    Annotator* annotator, const std::optional<std::string>& exclude_id,
    const std::map<std::string, std::vector<std::string>>* type_pools) {
  strategy.validate();
  if (k < 0) throw ConfigError("k must be >= 0");
  if (k == 0) return {};

  switch (strategy.kind) {
    case StrategyKind::SentEmbed: {
      if (index.anonymized)
        throw ConfigError("sent_embed requires a non-anonymized index");
      return nearest_ids(index, provider.embed(query), k, exclude_id);
    }
    case StrategyKind::AnonySentEmbed: {
      if (!index.anonymized)
        throw ConfigError("anony_sent_embed requires an anonymized index");
      if (!annotator)
        throw ConfigError("anony_sent_embed requires an annotator");
      return nearest_ids(index, provider.embed(anonymize(query, *annotator)), k,
                         exclude_id);
    }
    case StrategyKind::Random: {
      std::vector<std::string> ids;
      for (const auto& e : index.entries)
        if (!exclude_id || e.example_id != *exclude_id)
          ids.push_back(e.example_id);
      std::sort(ids.begin(), ids.end());
      std::mt19937_64 rng(*strategy.seed);
      std::shuffle(ids.begin(), ids.end(), rng);
      if (static_cast<int>(ids.size()) > k) ids.resize(k);
      return ids;
    }
    case StrategyKind::Fixed: {
      std::vector<std::string> ids;
      for (const auto& id : *strategy.fixed_ids)
        if (!exclude_id || id != *exclude_id) ids.push_back(id);
      if (static_cast<int>(ids.size()) < k)
        throw ConfigError("fixed strategy has fewer ids than k");
      ids.resize(k);
      return ids;
    }
    case StrategyKind::SemiRandom: {
      if (!type_pools)
        throw ConfigError("semi_random requires per-type example pools");
      std::mt19937_64 rng(*strategy.seed);
      std::vector<std::string> out;
      std::set<std::string> taken;
      if (exclude_id) taken.insert(*exclude_id);
      bool progressed = true;
      // One example per type per pass, round-robin, until k collected.
      while (static_cast<int>(out.size()) < k && progressed) {
        progressed = false;
        for (const auto& [type, pool] : *type_pools) {
          if (static_cast<int>(out.size()) >= k) break;
          std::vector<std::string> avail;
          for (const auto& id : pool)
            if (!taken.count(id)) avail.push_back(id);
          if (avail.empty()) continue;
          std::uniform_int_distribution<size_t> pick(0, avail.size() - 1);
          const std::string& id = avail[pick(rng)];
          taken.insert(id);
          out.push_back(id);
          progressed = true;
        }
      }
      return out;
    }
  }
  throw ConfigError("unreachable strategy kind");
}

}  // namespace ciex
