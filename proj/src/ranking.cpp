#include "conceptrank/ranking.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <set>

#include "conceptrank/errors.hpp"

namespace conceptrank {

Ablation parse_ablation(const std::string& name) {
  static const std::map<std::string, Ablation> kinds{
      {"none", Ablation::none},           {"no_topic", Ablation::no_topic},
      {"no_phrase", Ablation::no_phrase}, {"no_corpus", Ablation::no_corpus},
      {"no_llm_class", Ablation::no_llm_class}, {"no_llm_freq", Ablation::no_llm_freq}};
  auto it = kinds.find(name);
  if (it == kinds.end()) throw ConfigError("unknown ablation: " + name);
  return it->second;
}

std::string to_string(Ablation ablation) {
  switch (ablation) {
    case Ablation::none: return "none";
    case Ablation::no_topic: return "no_topic";
    case Ablation::no_phrase: return "no_phrase";
    case Ablation::no_corpus: return "no_corpus";
    case Ablation::no_llm_class: return "no_llm_class";
    case Ablation::no_llm_freq: return "no_llm_freq";
  }
  return "?";
}

void PipelineConfig::validate() const {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (n_prf_docs < 1) throw ConfigError("n_prf_docs must be >= 1");
  if (rerank_pool < n_prf_docs) throw ConfigError("rerank_pool must be >= n_prf_docs");
}

namespace {

std::vector<ConceptCount> top_counts(const std::map<std::string, std::size_t>& counts,
                                     std::size_t k) {
  std::vector<ConceptCount> out;
  out.reserve(counts.size());
  for (const auto& [name, n] : counts) out.push_back({name, n});
  auto before = [](const ConceptCount& a, const ConceptCount& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.name < b.name;
  };
  const auto keep = std::min(k, out.size());
  std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(keep), out.end(),
                    before);
  out.resize(keep);
  return out;
}

}  // namespace

CandidateContext collect_candidates(const ScoredList& base_ranking, const SemanticIndex& index,
                                    const Corpus& corpus, const PipelineConfig& config) {
  CandidateContext ctx;
  std::map<std::string, std::size_t> topic_counts;
  std::map<std::string, std::size_t> phrase_counts;
  const auto n = std::min(config.n_prf_docs, base_ranking.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = base_ranking[i].paper_id;
    const Paper* paper = corpus.find(id);
    ctx.papers.push_back({id, paper ? paper->title : std::string()});
    const IndexEntry* entry = index.find(id);
    if (!entry) {
      ++ctx.unindexed;
      continue;
    }
    // Entries are deduplicated, so each paper counts a concept at most once.
    for (const auto& t : std::set<std::string>(entry->topics.begin(), entry->topics.end())) {
      ++topic_counts[t];
    }
    for (const auto& p : std::set<std::string>(entry->phrases.begin(), entry->phrases.end())) {
      ++phrase_counts[p];
    }
  }
  if (config.ablation != Ablation::no_topic) ctx.topics = top_counts(topic_counts, config.k);
  if (config.ablation != Ablation::no_phrase) ctx.phrases = top_counts(phrase_counts, config.k);
  return ctx;
}

std::vector<std::string> CoreConcepts::texts() const {
  std::vector<std::string> out;
  out.reserve(concepts.size());
  for (const auto& c : concepts) out.push_back(c.text);
  return out;
}

std::vector<CoreConcept> frequent_candidates(const CandidateContext& context, std::size_t limit) {
  struct Item {
    const ConceptCount* count;
    ConceptOrigin origin;
  };
  std::vector<Item> items;
  for (const auto& t : context.topics) items.push_back({&t, ConceptOrigin::topic});
  for (const auto& p : context.phrases) items.push_back({&p, ConceptOrigin::phrase});
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    if (a.count->count != b.count->count) return a.count->count > b.count->count;
    return a.count->name < b.count->name;
  });
  std::vector<CoreConcept> out;
  std::set<std::string_view> seen;
  for (const auto& item : items) {
    if (out.size() >= limit) break;
    if (!seen.insert(item.count->name).second) continue;
    out.push_back({item.count->name, item.origin});
  }
  return out;
}

std::string render_feedback_papers(const std::vector<PrfPaper>& papers) {
  std::string out;
  for (std::size_t i = 0; i < papers.size(); ++i) {
    out += "\n" + std::to_string(i + 1) + ". " + papers[i].title;
  }
  return out;
}

std::string render_concept_counts(const std::vector<ConceptCount>& counts) {
  std::string out;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (i) out += ", ";
    out += counts[i].name + " (" + std::to_string(counts[i].count) + ")";
  }
  return out;
}

CoreConcepts identify_core_concepts(const Query& query, const CandidateContext& context,
                                    LlmProvider* provider, CallLedger& ledger,
                                    const PipelineConfig& config,
                                    const QueryTopicSource& classifier_topics) {
  CoreConcepts core;
  switch (config.ablation) {
    case Ablation::no_llm_freq:
      core.concepts = frequent_candidates(context, config.frequent_fallback);
      return core;
    case Ablation::no_llm_class: {
      if (!classifier_topics) throw ConfigError("no_llm_class requires a topic classifier");
      std::set<std::string> seen;
      for (auto& t : classifier_topics(query, config.classifier_topics)) {
        if (seen.insert(t).second) core.concepts.push_back({std::move(t), ConceptOrigin::topic});
      }
      return core;
    }
    default:
      break;
  }
  if (!provider) throw ConfigError("an LLM provider is required in mode " + to_string(config.ablation));

  const bool free_form = config.ablation == Ablation::no_corpus;
  if (free_form) {
    core.prompt = render_prompt(core_concepts_no_corpus_template(), {{"q", query.text}});
  } else {
    core.prompt = render_prompt(core_concepts_template(),
                                {{"D0", render_feedback_papers(context.papers)},
                                 {"T0", render_concept_counts(context.topics)},
                                 {"P0", render_concept_counts(context.phrases)},
                                 {"q", query.text}});
  }

  std::vector<std::string> selected;
  try {
    selected = parse_tagged_list(complete(*provider, *core.prompt, ledger).text, "ans");
  } catch (const ParseFailure&) {
    core.parse_failure = true;
  }

  if (free_form) {
    for (auto& s : selected) core.concepts.push_back({std::move(s), ConceptOrigin::generated});
  } else {
    std::set<std::string_view> topics, phrases;
    for (const auto& t : context.topics) topics.insert(t.name);
    for (const auto& p : context.phrases) phrases.insert(p.name);
    for (auto& s : selected) {
      if (topics.count(s)) {
        core.concepts.push_back({std::move(s), ConceptOrigin::topic});
      } else if (phrases.count(s)) {
        core.concepts.push_back({std::move(s), ConceptOrigin::phrase});
      } else {
        ++core.violations;
      }
    }
  }
  if (core.concepts.empty()) {
    core.fallback = true;
    core.concepts = frequent_candidates(context, config.frequent_fallback);
  }
  return core;
}

double semantic_score(std::span<const std::string> query_concepts, const IndexEntry& entry,
                      const ConceptEmbeddingCache& cache) {
  if (query_concepts.empty()) throw ConfigError("semantic_score needs at least one query concept");
  const auto doc_concepts = entry.concepts();
  if (doc_concepts.empty()) return 0.0;
  std::vector<std::span<const float>> doc_vectors;
  doc_vectors.reserve(doc_concepts.size());
  for (const auto& c : doc_concepts) doc_vectors.push_back(cache.at(c));
  // C(q) is a set: a repeated query concept must not gain weight.
  std::set<std::string_view> seen;
  double total = 0.0;
  for (const auto& q : query_concepts) {
    if (!seen.insert(q).second) continue;
    const auto qv = cache.at(q);
    double best = -1.0;
    for (const auto& dv : doc_vectors) best = std::max(best, cosine(qv, dv));
    total += best;
  }
  return total / static_cast<double>(seen.size());
}

double semantic_score(const CoreConcepts& core, const IndexEntry& entry,
                      const ConceptEmbeddingCache& cache) {
  const auto texts = core.texts();
  return semantic_score(texts, entry, cache);
}

ScoredList rank_with_concepts(const ScoredList& base_ranking, const CoreConcepts& core,
                              const SemanticIndex& index, const ConceptEmbeddingCache& cache,
                              const PipelineConfig& config) {
  if (core.concepts.empty() || base_ranking.empty()) return base_ranking;
  const auto texts = core.texts();
  const auto pool = std::min(config.rerank_pool, base_ranking.size());

  std::vector<double> base(pool), sem(pool);
  for (std::size_t i = 0; i < pool; ++i) {
    const auto& e = base_ranking[i];
    base[i] = e.s_final;
    const IndexEntry* entry = index.find(e.paper_id);
    sem[i] = entry ? semantic_score(texts, *entry, cache) : 0.0;
  }
  const auto z_base = z_scores(base);
  const auto z_sem = z_scores(sem);

  std::vector<ScoredEntry> entries;
  entries.reserve(base_ranking.size());
  double floor = 0.0;
  for (std::size_t i = 0; i < pool; ++i) {
    const double s = quantize_fused(z_base[i] + z_sem[i]);
    floor = i == 0 ? s : std::min(floor, s);
    entries.push_back({base_ranking[i].paper_id, base_ranking[i].s_final, sem[i], s});
  }
  // Past the pool: strictly decreasing scores below the pool keep base order.
  for (std::size_t i = pool; i < base_ranking.size(); ++i) {
    const auto& e = base_ranking[i];
    entries.push_back(
        {e.paper_id, e.s_final, std::nullopt, floor - 1.0 - static_cast<double>(i - pool)});
  }
  return ScoredList(base_ranking.query_id(), std::move(entries));
}

Pipeline::Pipeline(Resources resources, PipelineConfig config)
    : res_(std::move(resources)), config_(config) {
  config_.validate();
  if (!res_.retriever || !res_.corpus || !res_.index) {
    throw ConfigError("pipeline needs a retriever, corpus, and semantic index");
  }
}

void Pipeline::set_config(const PipelineConfig& config) {
  config.validate();
  config_ = config;
}

void Pipeline::ensure_embedded(const CoreConcepts& core) {
  std::vector<std::string> missing;
  {
    std::shared_lock lock(cache_mutex_);
    for (const auto& c : core.concepts) {
      if (!res_.cache.contains(c.text)) missing.push_back(c.text);
    }
  }
  if (missing.empty()) return;
  if (!res_.concept_provider) throw MissingConcepts(std::move(missing));
  std::unique_lock lock(cache_mutex_);
  embed_concepts(missing, *res_.concept_provider, res_.cache);
}

QueryResult Pipeline::run(const Query& query, CallLedger& ledger) {
  QueryResult result;
  ledger.add_retriever_call();
  result.base = res_.retriever->search(query, config_.rerank_pool);
  result.context = collect_candidates(result.base, *res_.index, *res_.corpus, config_);
  result.core = identify_core_concepts(query, result.context, res_.llm.get(), ledger, config_,
                                       res_.classifier_topics);
  ensure_embedded(result.core);
  std::shared_lock lock(cache_mutex_);
  result.ranking = rank_with_concepts(result.base, result.core, *res_.index, res_.cache, config_);
  return result;
}

}  // namespace conceptrank
