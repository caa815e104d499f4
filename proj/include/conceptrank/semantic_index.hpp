#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "conceptrank/classifier.hpp"
#include "conceptrank/corpus.hpp"
#include "conceptrank/embedding.hpp"
#include "conceptrank/llm.hpp"

namespace conceptrank {

/// Core concepts of one paper: label-space topics plus extracted key phrases.
struct IndexEntry {
  std::string paper_id;
  std::vector<std::string> topics;
  std::vector<std::string> phrases;

  /// Topics then phrases, deduplicated.
  std::vector<std::string> concepts() const;
  bool operator==(const IndexEntry&) const = default;
};

class SemanticIndex {
 public:
  /// Replaces any previous entry for the same paper.
  void add(IndexEntry entry);
  const IndexEntry* find(std::string_view paper_id) const;
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::map<std::string, IndexEntry, std::less<>>& entries() const noexcept {
    return entries_;
  }
  /// Concept -> number of entries whose concept set contains it.
  const std::map<std::string, std::size_t, std::less<>>& document_frequencies() const noexcept {
    return df_;
  }
  std::vector<std::string> vocabulary() const;

  /// Throws UnknownId naming the first topic that is not in `labels`.
  void validate(const LabelSpace& labels) const;

  bool operator==(const SemanticIndex& o) const { return entries_ == o.entries_; }

 private:
  std::map<std::string, IndexEntry, std::less<>> entries_;
  std::map<std::string, std::size_t, std::less<>> df_;
};

/// JSON lines: {"paper_id", "topics": [...], "phrases": [...]}.
void save_index(const SemanticIndex& index, const std::filesystem::path& path);
/// With `tolerate_torn_tail`, an unparsable final line (an interrupted
/// append) is ignored.
SemanticIndex load_index(const std::filesystem::path& path, bool tolerate_torn_tail = false);
void append_index_entry(std::ostream& out, const IndexEntry& entry);

enum class PhraseCheck {
  strict,   // canonical phrase is a substring of the canonical paper text
  lenient,  // every phrase token matches a paper token, allowing inflection
};

struct EntryOptions {
  PhraseCheck phrase_check = PhraseCheck::lenient;
  std::size_t max_topics = 10;
  std::size_t max_phrases = 20;
  std::size_t fallback_topics = 3;
};

struct EntryBuild {
  IndexEntry entry;
  std::size_t topic_violations = 0;
  std::size_t phrases_dropped = 0;
  bool fallback = false;
  bool parse_failure = false;
};

bool phrase_supported(std::string_view phrase, std::string_view paper_text, PhraseCheck check);

/// The `{d}` binding: paper text followed by the candidate topic names.
std::string index_prompt_paper(const Paper& paper, const std::vector<TopicScore>& candidates);

/// One LLM call: select topics among `candidates` and extract key phrases.
EntryBuild build_entry(const Paper& paper, const std::vector<TopicScore>& candidates,
                       LlmProvider& provider, CallLedger& ledger, const EntryOptions& options = {});

struct BuildReport {
  std::size_t papers = 0;
  std::size_t built = 0;
  std::size_t resumed = 0;
  std::size_t llm_calls = 0;
  std::size_t topic_violations = 0;
  std::size_t phrases_dropped = 0;
  std::size_t fallbacks = 0;
  std::size_t parse_failures = 0;

  bool operator==(const BuildReport&) const = default;
};
void save_build_report(const BuildReport& report, const std::filesystem::path& path);

/// Top-`m` candidate topics for a paper.
using CandidateSource = std::function<std::vector<TopicScore>(const Paper&, std::size_t m)>;

/// Candidates from a classifier over precomputed paper embeddings.
/// Both arguments must outlive the returned source.
CandidateSource classifier_candidates(const TopicClassifier& classifier,
                                      const EmbeddingMatrix& paper_embeddings);

struct BuildOptions {
  std::size_t m = 15;
  EntryOptions entry;
  std::size_t max_in_flight = 8;
  /// When set, entries are appended here as they complete and papers already
  /// present are skipped.
  std::optional<std::filesystem::path> index_path;
};

struct BuildResult {
  SemanticIndex index;
  BuildReport report;
};

/// Builds entries for every paper, `max_in_flight` at a time; each chunk is
/// appended in corpus order.
BuildResult build_index(const Corpus& corpus, const CandidateSource& candidates,
                        LlmProvider& provider, const BuildOptions& options = {});

/// Embeds the index vocabulary once per distinct concept.
ConceptEmbeddingCache concept_vectors(const SemanticIndex& index, EmbeddingProvider& provider);

}  // namespace conceptrank
