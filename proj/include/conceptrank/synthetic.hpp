#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "conceptrank/corpus.hpp"
#include "conceptrank/embedding.hpp"
#include "conceptrank/llm.hpp"
#include "conceptrank/semantic_index.hpp"

namespace conceptrank {

/// Shape of a generated world. Every count must be >= 1 (n_queries 0 means
/// one query per topic).
struct SyntheticSpec {
  std::size_t n_docs = 200;
  std::size_t n_topics = 10;
  std::size_t n_phrases_per_doc = 3;
  std::size_t phrases_per_topic = 8;
  std::size_t embedding_dim = 32;
  std::size_t n_queries = 0;
  double noise_scale = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SyntheticSpec&) const = default;
};

/// A seeded corpus with planted topic structure. Paper i belongs to topic
/// i mod n_topics; its embedding is the topic centroid plus isotropic noise of
/// expected norm `noise_scale`. Query j targets topic j mod n_topics and its
/// relevant set is every paper of that topic.
struct SyntheticWorld {
  SyntheticSpec spec;
  Corpus corpus;
  LabelSpace labels;
  std::map<std::string, std::vector<std::string>> doc_topics;
  SemanticIndex gold_index;
  EmbeddingMatrix doc_embeddings;
  EmbeddingMatrix topic_embeddings;    // encoder-style initial topic vectors, keyed by name
  EmbeddingMatrix concept_embeddings;  // every topic name and phrase
  EmbeddingMatrix query_embeddings;    // keyed by query id
  EmbeddingMatrix centroids;           // keyed by topic name
  std::vector<Query> queries;
  Qrels qrels;
  /// Query text -> the concepts an ideal identifier would pick.
  std::map<std::string, std::set<std::string>> query_concepts;

  bool operator==(const SyntheticWorld& o) const;
};

SyntheticWorld generate(const SyntheticSpec& spec);

/// Writes every standard file format into `dir`:
/// corpus.jsonl, labels.tsv, doc_topics.tsv, queries.jsonl, qrels.tsv,
/// gold_index.jsonl, query_concepts.jsonl, world.json and the embedding
/// manifests doc_embeddings.json, topic_embeddings.json,
/// concept_embeddings.json, query_embeddings.json.
void write_world(const SyntheticWorld& world, const std::filesystem::path& dir);

/// Deterministic stand-in for an ideal LLM on a synthetic world. Index prompts
/// get the planted topic (when offered) and the planted phrases; core-concept
/// prompts get exactly the planted concepts present among the candidates;
/// candidate-free prompts get the planted concepts outright.
class ScriptedWorldLlm {
 public:
  explicit ScriptedWorldLlm(const SyntheticWorld& world);
  static ScriptedWorldLlm from_dir(const std::filesystem::path& dir);

  std::string operator()(const std::string& prompt) const;
  std::shared_ptr<MockLlmProvider> provider() const;

 private:
  ScriptedWorldLlm() = default;
  std::unordered_map<std::string, IndexEntry> by_paper_text_;
  std::map<std::string, std::set<std::string>> query_concepts_;
};

}  // namespace conceptrank
