#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace conceptrank {

struct Paper {
  std::string id;
  std::string title;
  std::string abstract;

  /// "title. abstract", the text every downstream stage sees.
  std::string text() const;

  bool operator==(const Paper&) const = default;
};

/// Papers in file order with an id lookup.
class Corpus {
 public:
  Corpus() = default;
  /// Throws DuplicateId or ConfigError on an invalid paper.
  explicit Corpus(std::vector<Paper> papers);

  const std::vector<Paper>& papers() const noexcept { return papers_; }
  std::size_t size() const noexcept { return papers_.size(); }
  bool empty() const noexcept { return papers_.empty(); }
  const Paper* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

 private:
  std::vector<Paper> papers_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

struct Topic {
  std::string id;
  std::string name;

  bool operator==(const Topic&) const = default;
};

class LabelSpace {
 public:
  LabelSpace() = default;
  /// Canonicalizes names; throws DuplicateTopic on a collision.
  explicit LabelSpace(std::vector<Topic> topics);

  const std::vector<Topic>& topics() const noexcept { return topics_; }
  std::size_t size() const noexcept { return topics_.size(); }
  const Topic& at(std::size_t index) const { return topics_.at(index); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  bool contains(std::string_view name) const { return index_of(name).has_value(); }

 private:
  std::vector<Topic> topics_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

struct Query {
  std::string id;
  std::string text;

  bool operator==(const Query&) const = default;
};

struct Qrels {
  std::map<std::string, std::set<std::string>> relevant;
  /// Rows dropped because their paper id is not in the corpus (lenient mode).
  std::size_t dropped_unknown = 0;

  const std::set<std::string>* find(std::string_view query_id) const;
};

struct ScoredEntry {
  std::string paper_id;
  double s_base = 0.0;
  std::optional<double> s_sem;
  double s_final = 0.0;

  bool operator==(const ScoredEntry&) const = default;
};

/// Ranked documents for one query, sorted by s_final descending with ties
/// broken by ascending paper id.
class ScoredList {
 public:
  ScoredList() = default;
  /// Sorts `entries`; throws DuplicateId if a paper id repeats.
  ScoredList(std::string query_id, std::vector<ScoredEntry> entries);

  const std::string& query_id() const noexcept { return query_id_; }
  const std::vector<ScoredEntry>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const ScoredEntry& operator[](std::size_t i) const { return entries_[i]; }
  std::vector<std::string> ids() const;
  /// Keeps the first `n` entries.
  void truncate(std::size_t n);

  bool operator==(const ScoredList&) const = default;

 private:
  std::string query_id_;
  std::vector<ScoredEntry> entries_;
};

/// Strict weak order used by every ranking: score desc, paper id asc.
inline bool ranks_before(double score_a, std::string_view id_a, double score_b,
                         std::string_view id_b) {
  if (score_a != score_b) return score_a > score_b;
  return id_a < id_b;
}

// On-disk formats. Corpus and queries are JSON lines; labels and qrels are TSV.

Corpus load_corpus(const std::filesystem::path& path);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Rows are `id<TAB>name`; an empty file is an error.
LabelSpace load_label_space(const std::filesystem::path& path);
void save_label_space(const LabelSpace& labels, const std::filesystem::path& path);

std::vector<Query> load_queries(const std::filesystem::path& path);
void save_queries(const std::vector<Query>& queries, const std::filesystem::path& path);

/// Rows are `qid<TAB>docid<TAB>rel`; only rel > 0 is kept. When `corpus` is
/// given, unknown doc ids raise UnknownId unless `lenient`, in which case they
/// are dropped and counted.
Qrels load_qrels(const std::filesystem::path& path, const Corpus* corpus = nullptr,
                 bool lenient = false);
void save_qrels(const Qrels& qrels, const std::filesystem::path& path);

void save_scored_lists(const std::vector<ScoredList>& lists, const std::filesystem::path& path);
std::vector<ScoredList> load_scored_lists(const std::filesystem::path& path);

}  // namespace conceptrank
