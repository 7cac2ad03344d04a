#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ciex/extraction.hpp"

namespace ciex {

using EmbeddingVector = std::vector<double>;

// Provider contract for sentence embedders; the real MPNet-class model
// lives behind an HTTP endpoint, tests use the hashing fallback.
class EmbeddingProvider {
public:
  virtual ~EmbeddingProvider() = default;
  virtual std::string id() const = 0;
  virtual int dimension() const = 0;
  virtual std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) = 0;

  EmbeddingVector embed(const std::string& text);
};

// Deterministic offline embedder: lowercase tokens, feature hashing
// into 256 buckets, L2 normalized. Order-insensitive by construction.
class HashingEmbedder : public EmbeddingProvider {
public:
  static constexpr int kDimension = 256;
  std::string id() const override { return "hashing-256"; }
  int dimension() const override { return kDimension; }
  std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) override;
};

// POSTs {"texts": [...]} to <base_url>/embed, expects {"vectors": [[...]]}.
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
  HttpEmbeddingProvider(std::string base_url, std::string model_id,
                        int dimension, std::string credential_env_var);
  std::string id() const override { return model_id_; }
  int dimension() const override { return dimension_; }
  std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) override;

private:
  std::string base_url_;
  std::string model_id_;
  int dimension_;
  std::string credential_env_var_;
};

struct EntitySpan {
  size_t start = 0;
  size_t length = 0;
  std::string type_tag;
};

// NER annotator contract (FLERT-class models are providers).
class Annotator {
public:
  virtual ~Annotator() = default;
  virtual std::vector<EntitySpan> annotate(const std::string& text) = 0;
};

// Longest-match gazetteer over a surface-string -> type-tag map.
class GazetteerAnnotator : public Annotator {
public:
  explicit GazetteerAnnotator(std::map<std::string, std::string> entries);
  static GazetteerAnnotator from_json_file(const std::string& path);
  std::vector<EntitySpan> annotate(const std::string& text) override;

private:
  std::map<std::string, std::string> entries_;
};

// Replaces annotated spans by their upper-case type tags. Overlaps keep
// the longest span, ties the earliest.
std::string anonymize(const std::string& text, Annotator& annotator);

struct ExampleIndex {
  struct Entry {
    std::string example_id;
    EmbeddingVector vector;
  };
  std::vector<Entry> entries;
  bool anonymized = false;
  std::string embedder_id;
  int dimension = 0;
};

ExampleIndex build_index(const std::vector<Example>& examples,
                         EmbeddingProvider& provider,
                         Annotator* annotator = nullptr);

void save_index(const ExampleIndex& index, const std::string& path);
ExampleIndex load_index(const std::string& path);

enum class StrategyKind { SentEmbed, AnonySentEmbed, Random, Fixed, SemiRandom };

struct RetrievalStrategy {
  StrategyKind kind = StrategyKind::SentEmbed;
  std::optional<uint64_t> seed;                     // random / semi_random
  std::optional<std::vector<std::string>> fixed_ids;  // fixed

  void validate() const;
};

StrategyKind strategy_kind_from_string(const std::string& s);
std::string to_string(StrategyKind k);

// k nearest entries to the query vector by Euclidean distance, ties
// broken by ascending example id; exclude_id never returned.
std::vector<std::string> nearest_ids(const ExampleIndex& index,
                                     const EmbeddingVector& query, int k,
                                     const std::optional<std::string>& exclude_id);

// Full strategy dispatch. type_pools (type name -> example ids that
// contain it) is required for semi_random.
std::vector<std::string> retrieve(
    const ExampleIndex& index, const std::string& query, int k,
    const RetrievalStrategy& strategy, EmbeddingProvider& provider,
    Annotator* annotator = nullptr,
    const std::optional<std::string>& exclude_id = std::nullopt,
    const std::map<std::string, std::vector<std::string>>* type_pools = nullptr);

}  // namespace ciex
