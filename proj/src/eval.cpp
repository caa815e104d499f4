#include "conceptrank/eval.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <fmt/format.h>
#include <thread>

#include "conceptrank/errors.hpp"
#include "conceptrank/io.hpp"

namespace conceptrank {

using nlohmann::json;

double recall_at_k(const std::vector<std::string>& ranking, const std::set<std::string>& relevant,
                   std::size_t K) {
  if (K < 1) throw ConfigError("K must be >= 1");
  if (relevant.empty()) throw ConfigError("recall is undefined for an empty relevant set");
  std::size_t hits = 0;
  const auto n = std::min(K, ranking.size());
  for (std::size_t i = 0; i < n; ++i) hits += relevant.count(ranking[i]);
  return static_cast<double>(hits) / static_cast<double>(relevant.size());
}

double recall_at_k(const ScoredList& ranking, const std::set<std::string>& relevant,
                   std::size_t K) {
  return recall_at_k(ranking.ids(), relevant, K);
}

void aggregate(EvalReport& report) {
  report.mean_recall.clear();
  report.mean_base_recall.clear();
  const double n = static_cast<double>(report.queries.size());
  double ret = 0, llm = 0, tokens = 0, wall = 0;
  std::vector<double> walls;
  std::map<std::size_t, std::size_t> base_counts;
  for (const auto& q : report.queries) {
    for (const auto& [k, r] : q.recall) report.mean_recall[k] += r;
    for (const auto& [k, r] : q.base_recall) {
      report.mean_base_recall[k] += r;
      ++base_counts[k];
    }
    ret += static_cast<double>(q.ledger.retriever_calls);
    llm += static_cast<double>(q.ledger.llm_calls);
    tokens += static_cast<double>(q.ledger.completion_tokens);
    wall += q.wall_ms;
    walls.push_back(q.wall_ms);
  }
  if (n == 0) return;
  for (auto& [k, r] : report.mean_recall) r /= n;
  for (auto& [k, r] : report.mean_base_recall) r /= static_cast<double>(base_counts[k]);
  report.mean_retriever_calls = ret / n;
  report.mean_llm_calls = llm / n;
  report.mean_completion_tokens = tokens / n;
  report.mean_wall_ms = wall / n;
  std::sort(walls.begin(), walls.end());
  const auto mid = walls.size() / 2;
  report.median_wall_ms = walls.size() % 2 ? walls[mid] : (walls[mid - 1] + walls[mid]) / 2.0;
}

namespace {

json recall_json(const std::map<std::size_t, double>& recall) {
  json j = json::object();
  for (const auto& [k, r] : recall) j["R@" + std::to_string(k)] = r;
  return j;
}

}  // namespace

json EvalReport::to_json(bool include_timing) const {
  json per_query = json::array();
  for (const auto& q : queries) {
    json jq{{"query_id", q.query_id},
            {"recall", recall_json(q.recall)},
            {"retriever_calls", q.ledger.retriever_calls},
            {"llm_calls", q.ledger.llm_calls},
            {"completion_tokens", q.ledger.completion_tokens}};
    if (!q.base_recall.empty()) jq["base_recall"] = recall_json(q.base_recall);
    if (include_timing) jq["wall_ms"] = q.wall_ms;
    per_query.push_back(std::move(jq));
  }
  json summary{{"recall", recall_json(mean_recall)},
               {"mean_retriever_calls", mean_retriever_calls},
               {"mean_llm_calls", mean_llm_calls},
               {"mean_completion_tokens", mean_completion_tokens},
               {"evaluated", queries.size()},
               {"skipped_missing_qrels", skipped_missing_qrels}};
  if (!mean_base_recall.empty()) summary["base_recall"] = recall_json(mean_base_recall);
  if (include_timing) {
    summary["mean_wall_ms"] = mean_wall_ms;
    summary["median_wall_ms"] = median_wall_ms;
  }
  return json{{"Ks", Ks}, {"config", config}, {"summary", summary}, {"queries", per_query}};
}

std::string EvalReport::to_table(const std::string& label) const {
  std::string header = fmt::format("{:<16}", "method");
  std::string row = fmt::format("{:<16}", label);
  for (auto k : Ks) {
    header += fmt::format(" {:>8}", "R@" + std::to_string(k));
    auto it = mean_recall.find(k);
    row += fmt::format(" {:>8.4f}", it == mean_recall.end() ? 0.0 : it->second);
  }
  header += fmt::format(" {:>6} {:>6} {:>14} {:>16}", "#RET", "#LLM", "LLM Output Len",
                        "Running Time(ms)");
  row += fmt::format(" {:>6.2f} {:>6.2f} {:>14.1f} {:>16.3f}", mean_retriever_calls,
                     mean_llm_calls, mean_completion_tokens, mean_wall_ms);
  std::string out = header + "\n" + row + "\n";
  if (!mean_base_recall.empty()) {
    std::string base = fmt::format("{:<16}", "base");
    for (auto k : Ks) {
      auto it = mean_base_recall.find(k);
      base += fmt::format(" {:>8.4f}", it == mean_base_recall.end() ? 0.0 : it->second);
    }
    out += base + "\n";
  }
  return out;
}

SearchFn pipeline_search(Pipeline& pipeline) {
  return [&pipeline](const Query& q, CallLedger& ledger) {
    auto result = pipeline.run(q, ledger);
    return SearchOutcome{std::move(result.ranking), std::move(result.base)};
  };
}

EvalReport run_eval(const std::vector<Query>& queries, const Qrels& qrels, const SearchFn& search,
                    const EvalOptions& options, json config) {
  if (options.Ks.empty()) throw ConfigError("at least one K is required");
  for (auto k : options.Ks) {
    if (k < 1) throw ConfigError("K must be >= 1");
  }
  EvalReport report;
  report.Ks = options.Ks;
  std::sort(report.Ks.begin(), report.Ks.end());
  report.Ks.erase(std::unique(report.Ks.begin(), report.Ks.end()), report.Ks.end());
  report.config = std::move(config);

  std::vector<const Query*> todo;
  for (const auto& q : queries) {
    const auto* rel = qrels.find(q.id);
    if (!rel || rel->empty()) {
      ++report.skipped_missing_qrels;
      continue;
    }
    todo.push_back(&q);
  }

  std::vector<QueryRecord> records(todo.size());
  std::vector<std::exception_ptr> failures(todo.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (auto i = next++; i < todo.size(); i = next++) {
      try {
        const Query& q = *todo[i];
        const auto& relevant = *qrels.find(q.id);
        CallLedger ledger;
        const auto start = std::chrono::steady_clock::now();
        auto outcome = search(q, ledger);
        const auto elapsed = std::chrono::steady_clock::now() - start;
        ledger.add_wall_time(std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed));
        QueryRecord rec;
        rec.query_id = q.id;
        const auto ids = outcome.ranking.ids();
        for (auto k : report.Ks) rec.recall[k] = recall_at_k(ids, relevant, k);
        if (outcome.base) {
          const auto base_ids = outcome.base->ids();
          for (auto k : report.Ks) rec.base_recall[k] = recall_at_k(base_ids, relevant, k);
        }
        rec.ledger = ledger.snapshot();
        rec.wall_ms = std::chrono::duration<double, std::milli>(elapsed).count();
        records[i] = std::move(rec);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::clamp<std::size_t>(options.concurrency, 1, std::max<std::size_t>(1, todo.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  std::sort(records.begin(), records.end(),
            [](const QueryRecord& a, const QueryRecord& b) { return a.query_id < b.query_id; });
  report.queries = std::move(records);
  aggregate(report);
  return report;
}

std::vector<SweepPoint> sweep_k(const std::vector<Query>& queries, const Qrels& qrels,
                                Pipeline& pipeline, std::vector<std::size_t> k_values,
                                const EvalOptions& options, json config) {
  if (k_values.empty()) throw ConfigError("sweep needs at least one k");
  std::sort(k_values.begin(), k_values.end());
  k_values.erase(std::unique(k_values.begin(), k_values.end()), k_values.end());
  const auto original = pipeline.config();
  std::vector<SweepPoint> points;
  try {
    for (auto k : k_values) {
      auto cfg = original;
      cfg.k = k;
      pipeline.set_config(cfg);
      json snapshot = config;
      snapshot["pipeline"]["k"] = k;
      points.push_back({k, run_eval(queries, qrels, pipeline_search(pipeline), options, snapshot)});
    }
  } catch (...) {
    pipeline.set_config(original);
    throw;
  }
  pipeline.set_config(original);
  return points;
}

std::string sweep_table(const std::vector<SweepPoint>& points) {
  if (points.empty()) return {};
  std::string out = fmt::format("{:>5}", "k");
  for (auto K : points.front().report.Ks) out += fmt::format(" {:>8}", "R@" + std::to_string(K));
  out += fmt::format(" {:>6}\n", "#LLM");
  for (const auto& p : points) {
    out += fmt::format("{:>5}", p.k);
    for (auto K : p.report.Ks) out += fmt::format(" {:>8.4f}", p.report.mean_recall.at(K));
    out += fmt::format(" {:>6.2f}\n", p.report.mean_llm_calls);
  }
  return out;
}

void save_report(const EvalReport& report, const std::filesystem::path& path,
                 bool include_timing) {
  io::open_out(path) << report.to_json(include_timing).dump(1) << '\n';
}

}  // namespace conceptrank
