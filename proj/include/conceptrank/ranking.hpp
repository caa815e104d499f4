#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "conceptrank/corpus.hpp"
#include "conceptrank/embedding.hpp"
#include "conceptrank/llm.hpp"
#include "conceptrank/retrieval.hpp"
#include "conceptrank/semantic_index.hpp"

namespace conceptrank {

enum class Ablation { none, no_topic, no_phrase, no_corpus, no_llm_class, no_llm_freq };
Ablation parse_ablation(const std::string& name);
std::string to_string(Ablation ablation);

struct PipelineConfig {
  /// Candidate topics and candidate phrases offered to the LLM (each).
  std::size_t k = 50;
  /// Top-ranked papers used as pseudo-relevance feedback.
  std::size_t n_prf_docs = 20;
  /// Base-ranking prefix that gets re-scored.
  std::size_t rerank_pool = 1000;
  Ablation ablation = Ablation::none;
  /// Size of the frequency fallback (and of the no_llm_freq selection).
  std::size_t frequent_fallback = 20;
  /// Topics taken from the classifier under no_llm_class.
  std::size_t classifier_topics = 20;

  void validate() const;
};

struct ConceptCount {
  std::string name;
  std::size_t count = 0;
  bool operator==(const ConceptCount&) const = default;
};

struct PrfPaper {
  std::string id;
  std::string title;
  bool operator==(const PrfPaper&) const = default;
};

/// Pseudo-relevance feedback drawn from the top of a base ranking.
struct CandidateContext {
  std::vector<PrfPaper> papers;
  /// Sorted by count desc, then name asc.
  std::vector<ConceptCount> topics;
  std::vector<ConceptCount> phrases;
  /// Feedback papers with no index entry.
  std::size_t unindexed = 0;
};

CandidateContext collect_candidates(const ScoredList& base_ranking, const SemanticIndex& index,
                                    const Corpus& corpus, const PipelineConfig& config);

enum class ConceptOrigin { topic, phrase, generated };

struct CoreConcept {
  std::string text;
  ConceptOrigin origin = ConceptOrigin::topic;
  bool operator==(const CoreConcept&) const = default;
};

struct CoreConcepts {
  std::vector<CoreConcept> concepts;
  std::size_t violations = 0;
  bool fallback = false;
  bool parse_failure = false;
  /// The rendered prompt, when an LLM was asked.
  std::optional<std::string> prompt;

  std::vector<std::string> texts() const;
};

/// Classifier-predicted topics for a query (used by no_llm_class).
using QueryTopicSource = std::function<std::vector<std::string>(const Query&, std::size_t)>;

/// Top `limit` candidates over topics and phrases merged by frequency.
std::vector<CoreConcept> frequent_candidates(const CandidateContext& context, std::size_t limit);

/// Prompt bindings for the core-concept template.
std::string render_feedback_papers(const std::vector<PrfPaper>& papers);
std::string render_concept_counts(const std::vector<ConceptCount>& counts);

CoreConcepts identify_core_concepts(const Query& query, const CandidateContext& context,
                                    LlmProvider* provider, CallLedger& ledger,
                                    const PipelineConfig& config,
                                    const QueryTopicSource& classifier_topics = {});

/// Mean over distinct query concepts of the best cosine against the entry's concepts.
/// Zero when the entry has no concepts. Throws MissingConcepts on a cache
/// miss. `query_concepts` must be non-empty.
double semantic_score(std::span<const std::string> query_concepts, const IndexEntry& entry,
                      const ConceptEmbeddingCache& cache);
double semantic_score(const CoreConcepts& core, const IndexEntry& entry,
                      const ConceptEmbeddingCache& cache);

/// Re-scores the first `rerank_pool` base entries with z(s_base) + z(s_sem).
/// Entries past the pool keep their base order below it. An empty concept set
/// returns the base ranking unchanged.
ScoredList rank_with_concepts(const ScoredList& base_ranking, const CoreConcepts& core,
                              const SemanticIndex& index, const ConceptEmbeddingCache& cache,
                              const PipelineConfig& config);

struct QueryResult {
  ScoredList base;
  ScoredList ranking;
  CandidateContext context;
  CoreConcepts core;
};

/// The online re-ranking pipeline over shared read-only resources.
class Pipeline {
 public:
  struct Resources {
    std::shared_ptr<Retriever> retriever;
    std::shared_ptr<const Corpus> corpus;
    std::shared_ptr<const SemanticIndex> index;
    ConceptEmbeddingCache cache;
    /// Embeds concepts missing from the cache (free-form or classifier
    /// concepts); optional.
    std::shared_ptr<EmbeddingProvider> concept_provider;
    std::shared_ptr<LlmProvider> llm;
    QueryTopicSource classifier_topics;
  };

  Pipeline(Resources resources, PipelineConfig config);

  const PipelineConfig& config() const noexcept { return config_; }
  void set_config(const PipelineConfig& config);

  /// One base retrieval and (in default mode) one LLM call, both on `ledger`.
  QueryResult run(const Query& query, CallLedger& ledger);

 private:
  void ensure_embedded(const CoreConcepts& core);

  Resources res_;
  PipelineConfig config_;
  std::shared_mutex cache_mutex_;
};

}  // namespace conceptrank
