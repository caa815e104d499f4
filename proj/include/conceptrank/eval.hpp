#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "conceptrank/corpus.hpp"
#include "conceptrank/llm.hpp"
#include "conceptrank/ranking.hpp"
#include "json.hpp"

namespace conceptrank {

/// |top-K ∩ relevant| / |relevant|. K must be >= 1 and `relevant` non-empty.
double recall_at_k(const std::vector<std::string>& ranking, const std::set<std::string>& relevant,
                   std::size_t K);
double recall_at_k(const ScoredList& ranking, const std::set<std::string>& relevant,
                   std::size_t K);

struct QueryRecord {
  std::string query_id;
  std::map<std::size_t, double> recall;
  /// Recall of the first-stage ranking, when the searcher exposes it.
  std::map<std::size_t, double> base_recall;
  LedgerSnapshot ledger;
  double wall_ms = 0.0;
};

struct EvalReport {
  std::vector<std::size_t> Ks;
  /// Sorted by query id.
  std::vector<QueryRecord> queries;
  std::map<std::size_t, double> mean_recall;
  std::map<std::size_t, double> mean_base_recall;
  double mean_retriever_calls = 0.0;
  double mean_llm_calls = 0.0;
  double mean_completion_tokens = 0.0;
  double mean_wall_ms = 0.0;
  double median_wall_ms = 0.0;
  std::size_t skipped_missing_qrels = 0;
  nlohmann::json config;

  /// Timing fields are the only nondeterministic content; leave them out for
  /// byte-comparable reports.
  nlohmann::json to_json(bool include_timing = true) const;
  /// Aligned columns: R@K..., #RET, #LLM, LLM Output Len, Running Time.
  std::string to_table(const std::string& label = "run") const;
};

/// Recomputes every aggregate from the per-query records.
void aggregate(EvalReport& report);

struct SearchOutcome {
  ScoredList ranking;
  std::optional<ScoredList> base;
};
using SearchFn = std::function<SearchOutcome(const Query&, CallLedger&)>;

SearchFn pipeline_search(Pipeline& pipeline);

struct EvalOptions {
  std::vector<std::size_t> Ks{10, 20, 50};
  std::size_t concurrency = 1;
};

/// Evaluates every query that has relevance judgments; the rest are counted
/// and skipped. Ledgers are per query.
EvalReport run_eval(const std::vector<Query>& queries, const Qrels& qrels, const SearchFn& search,
                    const EvalOptions& options = {}, nlohmann::json config = {});

/// The candidate-size grid used by default for parameter sweeps.
inline const std::vector<std::size_t> kDefaultSweepGrid{5, 10, 25, 50, 75, 100};

struct SweepPoint {
  std::size_t k = 0;
  EvalReport report;
};

/// One full evaluation per distinct k, ascending.
std::vector<SweepPoint> sweep_k(const std::vector<Query>& queries, const Qrels& qrels,
                                Pipeline& pipeline, std::vector<std::size_t> k_values,
                                const EvalOptions& options = {}, nlohmann::json config = {});
std::string sweep_table(const std::vector<SweepPoint>& points);

void save_report(const EvalReport& report, const std::filesystem::path& path,
                 bool include_timing = true);

}  // namespace conceptrank
