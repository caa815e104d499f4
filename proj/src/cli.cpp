#include "conceptrank/cli.hpp"

#include <cstdlib>
#include <functional>
#include <memory>

#include "CLI11.hpp"
#include "conceptrank/classifier.hpp"
#include "conceptrank/config.hpp"
#include "conceptrank/errors.hpp"
#include "conceptrank/eval.hpp"
#include "conceptrank/io.hpp"
#include "conceptrank/ranking.hpp"
#include "conceptrank/retrieval.hpp"
#include "conceptrank/semantic_index.hpp"
#include "conceptrank/synthetic.hpp"
#include "json.hpp"

namespace conceptrank::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// A flag that overrides one config field when given on the command line.
struct Override {
  CLI::Option* option;
  std::function<void(RunConfig&)> apply;
};

class Overrides {
 public:
  explicit Overrides(CLI::App* app) : app_(app) {}

  template <typename T>
  void add(const std::string& names, const std::string& help,
           std::function<void(RunConfig&, const T&)> set) {
    auto value = std::make_shared<T>();
    auto* opt = app_->add_option(names, *value, help);
    list_.push_back({opt, [value, set](RunConfig& c) { set(c, *value); }});
  }
  void add_flag(const std::string& names, const std::string& help,
                std::function<void(RunConfig&)> set) {
    auto* opt = app_->add_flag(names, help);
    list_.push_back({opt, std::move(set)});
  }
  void apply(RunConfig& c) const {
    for (const auto& o : list_) {
      if (o.option->count() > 0) o.apply(c);
    }
  }

 private:
  CLI::App* app_;
  std::vector<Override> list_;
};

using Path = std::string;

void add_common_flags(Overrides& o) {
  auto path = [&](const char* names, const char* help, std::string RunConfig::Paths::*field) {
    o.add<Path>(names, help, [field](RunConfig& c, const Path& v) { c.paths.*field = v; });
  };
  path("--corpus", "corpus JSON lines", &RunConfig::Paths::corpus);
  path("--labels", "label space TSV (id<TAB>name)", &RunConfig::Paths::labels);
  path("--doc-topics", "paper topic assignments TSV", &RunConfig::Paths::doc_topics);
  path("--embeddings", "paper embedding manifest", &RunConfig::Paths::embeddings);
  path("--topic-embeddings", "initial topic embedding manifest",
       &RunConfig::Paths::topic_embeddings);
  path("--concept-embeddings", "concept embedding manifest (file embedder)",
       &RunConfig::Paths::concept_embeddings);
  path("--query-embeddings", "precomputed query embedding manifest",
       &RunConfig::Paths::query_embeddings);
  path("--queries,--query-file", "queries JSON lines", &RunConfig::Paths::queries);
  path("--index", "semantic index JSON lines", &RunConfig::Paths::index);
  path("--cache", "concept embedding cache manifest", &RunConfig::Paths::cache);
  path("--qrels", "relevance judgments TSV", &RunConfig::Paths::qrels);
  path("--replay-store", "recorded LLM responses", &RunConfig::Paths::replay_store);
  path("--classifier", "classifier checkpoint directory", &RunConfig::Paths::classifier);

  o.add<std::string>("--retriever", "bm25 | dense | hybrid",
                     [](RunConfig& c, const std::string& v) { c.retriever.kind = v; });
  o.add<double>("--k1", "BM25 k1", [](RunConfig& c, const double& v) { c.retriever.k1 = v; });
  o.add<double>("--b", "BM25 b", [](RunConfig& c, const double& v) { c.retriever.b = v; });
  o.add<std::size_t>("--top-n", "results kept per query",
                     [](RunConfig& c, const std::size_t& v) { c.retriever.top_n = v; });
  o.add<std::string>("--query-prefix", "prefix for provider-embedded queries",
                     [](RunConfig& c, const std::string& v) { c.retriever.query_prefix = v; });

  o.add<int>("--epochs", "training epochs",
             [](RunConfig& c, const int& v) { c.classifier.epochs = v; });
  o.add<double>("--lr", "learning rate", [](RunConfig& c, const double& v) { c.classifier.lr = v; });
  o.add<double>("--alpha", "negative-label weight",
                [](RunConfig& c, const double& v) { c.classifier.alpha = v; });
  o.add<std::size_t>("--batch-size", "mini-batch size",
                     [](RunConfig& c, const std::size_t& v) { c.classifier.batch_size = v; });
  o.add<std::string>("--link", "sigmoid_exp | sigmoid",
                     [](RunConfig& c, const std::string& v) { c.classifier.link = v; });
  o.add<std::size_t>("--m", "candidate topics per paper",
                     [](RunConfig& c, const std::size_t& v) { c.classifier.m = v; });

  o.add<std::size_t>("--k", "candidate concepts per list",
                     [](RunConfig& c, const std::size_t& v) { c.pipeline.k = v; });
  o.add<std::size_t>("--n-prf-docs", "feedback papers",
                     [](RunConfig& c, const std::size_t& v) { c.pipeline.n_prf_docs = v; });
  o.add<std::size_t>("--rerank-pool", "re-scored prefix of the base ranking",
                     [](RunConfig& c, const std::size_t& v) { c.pipeline.rerank_pool = v; });
  o.add<std::string>("--ablation",
                     "none | no_topic | no_phrase | no_corpus | no_llm_class | no_llm_freq",
                     [](RunConfig& c, const std::string& v) { c.pipeline.ablation = v; });
  o.add<std::string>("--phrase-check", "strict | lenient",
                     [](RunConfig& c, const std::string& v) { c.pipeline.phrase_check = v; });

  o.add<std::string>("--provider", "http | replay | record | scripted",
                     [](RunConfig& c, const std::string& v) { c.provider.kind = v; });
  o.add<std::string>("--model", "LLM model name",
                     [](RunConfig& c, const std::string& v) { c.provider.model = v; });
  o.add<std::string>("--base-url", "LLM endpoint base URL",
                     [](RunConfig& c, const std::string& v) { c.provider.base_url = v; });
  o.add<Path>("--world", "synthetic world directory (scripted provider)",
              [](RunConfig& c, const Path& v) { c.provider.world = v; });
  o.add<std::size_t>("--max-in-flight", "concurrent LLM calls while indexing",
                     [](RunConfig& c, const std::size_t& v) { c.provider.max_in_flight = v; });
  o.add<std::string>("--embedder", "file | http",
                     [](RunConfig& c, const std::string& v) { c.embedder.kind = v; });

  o.add<std::vector<std::size_t>>("--ks", "recall cutoffs",
                                  [](RunConfig& c, const std::vector<std::size_t>& v) {
                                    c.eval.ks = v;
                                  })
      ;
  o.add<std::size_t>("--concurrency", "queries evaluated in parallel",
                     [](RunConfig& c, const std::size_t& v) { c.eval.concurrency = v; });
  o.add_flag("--no-timing", "omit wall-clock fields from reports",
             [](RunConfig& c) { c.eval.timing = false; });
}

const std::string& require(const std::string& value, const std::string& flag) {
  if (value.empty()) throw ConfigError("missing required flag " + flag);
  if (!fs::exists(value)) throw ConfigError(flag + ": no such file: " + value);
  return value;
}

std::shared_ptr<LlmProvider> make_llm(const RunConfig& c) {
  const auto& kind = c.provider.kind;
  if (kind == "scripted") {
    return ScriptedWorldLlm::from_dir(require(c.provider.world, "--world")).provider();
  }
  if (kind == "replay") {
    return std::make_shared<ReplayLlmProvider>(require(c.paths.replay_store, "--replay-store"));
  }
  if (kind == "record" && !c.provider.world.empty()) {
    // Offline recording: capture the scripted world's answers.
    if (c.paths.replay_store.empty()) throw ConfigError("missing required flag --replay-store");
    return std::make_shared<RecordingLlmProvider>(
        ScriptedWorldLlm::from_dir(require(c.provider.world, "--world")).provider(),
        c.paths.replay_store);
  }
  if (kind == "http" || kind == "record") {
    HttpLlmProvider::Options opts;
    opts.base_url = c.provider.base_url;
    opts.model = c.provider.model;
    opts.timeout_seconds = c.provider.timeout_seconds;
    if (const char* key = std::getenv("LLM_API_KEY")) opts.api_key = key;
    auto http = std::make_shared<HttpLlmProvider>(opts);
    if (kind == "http") return http;
    if (c.paths.replay_store.empty()) throw ConfigError("missing required flag --replay-store");
    return std::make_shared<RecordingLlmProvider>(http, c.paths.replay_store);
  }
  throw ConfigError("unknown provider kind: " + kind);
}

std::shared_ptr<EmbeddingProvider> make_embedder(const RunConfig& c) {
  if (c.embedder.kind == "file") {
    return std::make_shared<FileEmbeddingProvider>(
        load_matrix(require(c.paths.concept_embeddings, "--concept-embeddings")));
  }
  if (c.embedder.kind == "http") {
    HttpEmbeddingProvider::Options opts;
    opts.base_url = c.embedder.base_url;
    opts.model = c.embedder.model;
    opts.dim = c.embedder.dim;
    if (const char* key = std::getenv("LLM_API_KEY")) opts.api_key = key;
    return std::make_shared<HttpEmbeddingProvider>(opts);
  }
  throw ConfigError("unknown embedder kind: " + c.embedder.kind);
}

PhraseCheck parse_phrase_check(const std::string& name) {
  if (name == "strict") return PhraseCheck::strict;
  if (name == "lenient") return PhraseCheck::lenient;
  throw ConfigError("unknown phrase check: " + name);
}

PipelineConfig pipeline_config(const RunConfig& c) {
  PipelineConfig p;
  p.k = c.pipeline.k;
  p.n_prf_docs = c.pipeline.n_prf_docs;
  p.rerank_pool = c.pipeline.rerank_pool;
  p.ablation = parse_ablation(c.pipeline.ablation);
  p.validate();
  return p;
}

/// Loaded resources for search/eval/sweep.
struct Engine {
  std::shared_ptr<Corpus> corpus;
  std::vector<Query> queries;
  std::unique_ptr<Pipeline> pipeline;
};

Engine make_engine(const RunConfig& c, bool need_queries) {
  // Validate every referenced input before loading anything heavy.
  require(c.paths.corpus, "--corpus");
  require(c.paths.index, "--index");
  if (need_queries) require(c.paths.queries, "--queries");
  const auto kind = parse_retriever_kind(c.retriever.kind);
  const auto pcfg = pipeline_config(c);
  if (kind != RetrieverKind::bm25) {
    require(c.paths.embeddings, "--embeddings");
    if (c.paths.query_embeddings.empty() && c.embedder.kind == "file") {
      throw ConfigError("missing required flag --query-embeddings");
    }
  }
  if (pcfg.ablation == Ablation::no_llm_class) require(c.paths.classifier, "--classifier");

  Engine e;
  e.corpus = std::make_shared<Corpus>(load_corpus(c.paths.corpus));
  if (need_queries) e.queries = load_queries(c.paths.queries);
  auto index = std::make_shared<SemanticIndex>(load_index(c.paths.index));

  std::shared_ptr<EmbeddingProvider> embedder;
  auto get_embedder = [&] {
    if (!embedder) embedder = make_embedder(c);
    return embedder;
  };

  std::shared_ptr<QueryEncoder> encoder;
  if (!c.paths.query_embeddings.empty()) {
    encoder = std::make_shared<MatrixQueryEncoder>(load_matrix(c.paths.query_embeddings));
  } else if (kind != RetrieverKind::bm25) {
    encoder = std::make_shared<ProviderQueryEncoder>(get_embedder(), c.retriever.query_prefix);
  }

  std::shared_ptr<Retriever> retriever;
  std::shared_ptr<Bm25Retriever> bm25;
  std::shared_ptr<DenseRetriever> dense;
  if (kind != RetrieverKind::dense) {
    bm25 = std::make_shared<Bm25Retriever>(
        std::make_shared<Bm25Index>(*e.corpus, Bm25Params{c.retriever.k1, c.retriever.b}));
  }
  if (kind != RetrieverKind::bm25) {
    auto docs = std::make_shared<EmbeddingMatrix>(load_matrix(c.paths.embeddings));
    dense = std::make_shared<DenseRetriever>(*e.corpus, docs, encoder);
  }
  if (kind == RetrieverKind::bm25) retriever = bm25;
  if (kind == RetrieverKind::dense) retriever = dense;
  if (kind == RetrieverKind::hybrid) retriever = std::make_shared<HybridRetriever>(bm25, dense);

  Pipeline::Resources res;
  res.retriever = retriever;
  res.corpus = e.corpus;
  res.index = index;
  if (!c.paths.cache.empty() && fs::exists(c.paths.cache)) {
    res.cache = load_cache(c.paths.cache);
  } else {
    res.cache = concept_vectors(*index, *get_embedder());
  }
  if (c.embedder.kind == "http" || !c.paths.concept_embeddings.empty()) {
    res.concept_provider = get_embedder();
  }
  const auto needs_llm = pcfg.ablation != Ablation::no_llm_freq &&
                         pcfg.ablation != Ablation::no_llm_class;
  if (needs_llm) res.llm = make_llm(c);
  if (pcfg.ablation == Ablation::no_llm_class) {
    if (!encoder) throw ConfigError("no_llm_class needs query embeddings");
    auto classifier = std::make_shared<TopicClassifier>(load_classifier(c.paths.classifier));
    res.classifier_topics = [classifier, encoder](const Query& q, std::size_t n) {
      std::vector<std::string> names;
      for (auto& s : classifier->candidates(encoder->encode(q), n)) names.push_back(s.topic);
      return names;
    };
  }
  e.pipeline = std::make_unique<Pipeline>(std::move(res), pcfg);
  return e;
}

Qrels load_run_qrels(const RunConfig& c, const Corpus& corpus, std::ostream& err) {
  auto qrels = load_qrels(require(c.paths.qrels, "--qrels"), &corpus, /*lenient=*/true);
  if (qrels.dropped_unknown > 0) {
    err << "warning: dropped " << qrels.dropped_unknown << " qrels rows with unknown paper ids\n";
  }
  return qrels;
}

EvalOptions eval_options(const RunConfig& c) {
  EvalOptions o;
  o.Ks = c.eval.ks;
  o.concurrency = c.eval.concurrency;
  return o;
}

int run_synth(const RunConfig&, const SyntheticSpec& spec, const fs::path& out_dir,
              std::ostream& out) {
  const auto world = generate(spec);
  write_world(world, out_dir);
  RunConfig c;
  c.paths.corpus = "corpus.jsonl";
  c.paths.labels = "labels.tsv";
  c.paths.doc_topics = "doc_topics.tsv";
  c.paths.embeddings = "doc_embeddings.json";
  c.paths.topic_embeddings = "topic_embeddings.json";
  c.paths.concept_embeddings = "concept_embeddings.json";
  c.paths.query_embeddings = "query_embeddings.json";
  c.paths.queries = "queries.jsonl";
  c.paths.index = "gold_index.jsonl";
  c.paths.qrels = "qrels.tsv";
  c.paths.classifier = "classifier";
  c.provider.kind = "scripted";
  c.provider.world = ".";
  auto j = to_json(c);
  // Keep only the fields that differ from a blank path so the file stays readable.
  for (auto it = j["paths"].begin(); it != j["paths"].end();) {
    it = it->get<std::string>().empty() ? j["paths"].erase(it) : std::next(it);
  }
  io::open_out(out_dir / "config.json") << j.dump(1) << '\n';
  out << "wrote synthetic world (" << world.corpus.size() << " papers, " << world.labels.size()
      << " topics, " << world.queries.size() << " queries) to " << out_dir.string() << '\n';
  return kSuccess;
}

int run_train(const RunConfig& c, const std::string& out_dir, std::ostream& out) {
  require(c.paths.labels, "--labels");
  require(c.paths.doc_topics, "--doc-topics");
  require(c.paths.embeddings, "--embeddings");
  require(c.paths.topic_embeddings, "--topic-embeddings");
  const std::string dest = out_dir.empty() ? c.paths.classifier : out_dir;
  if (dest.empty()) throw ConfigError("missing required flag --out");
  TrainingConfig tc;
  tc.learning_rate = c.classifier.lr;
  tc.epochs = c.classifier.epochs;
  tc.alpha = c.classifier.alpha;
  tc.batch_size = c.classifier.batch_size;
  tc.seed = c.classifier.seed;
  tc.logit_clamp = c.classifier.logit_clamp;
  tc.link = parse_link(c.classifier.link);
  tc.validate();

  auto labels = load_label_space(c.paths.labels);
  const auto docs = load_matrix(c.paths.embeddings);
  const auto corpus = make_labeled_corpus(docs, load_doc_topics(c.paths.doc_topics), labels);
  auto init = init_params(topic_matrix(load_matrix(c.paths.topic_embeddings), labels));
  auto result = train(corpus, std::move(init), tc);
  out << "epoch\tloss\n0\t" << result.initial_loss << '\n';
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
    out << e + 1 << '\t' << result.epoch_losses[e] << '\n';
  }
  save_classifier({std::move(labels), std::move(result.params), tc.link, tc.logit_clamp}, dest);
  return kSuccess;
}

int run_index(const RunConfig& c, const std::string& out_path, const std::string& report_path,
              std::ostream& out) {
  const auto corpus = load_corpus(require(c.paths.corpus, "--corpus"));
  require(c.paths.classifier, "--classifier");
  require(c.paths.embeddings, "--embeddings");
  const std::string dest = out_path.empty() ? c.paths.index : out_path;
  if (dest.empty()) throw ConfigError("missing required flag --out");
  auto llm = make_llm(c);
  const auto classifier = load_classifier(c.paths.classifier);
  const auto docs = load_matrix(c.paths.embeddings);
  BuildOptions opts;
  opts.m = c.classifier.m;
  opts.max_in_flight = c.provider.max_in_flight;
  opts.entry.phrase_check = parse_phrase_check(c.pipeline.phrase_check);
  opts.index_path = dest;
  auto result = build_index(corpus, classifier_candidates(classifier, docs), *llm, opts);
  result.index.validate(classifier.labels);
  save_index(result.index, dest);
  save_build_report(result.report, report_path.empty() ? dest + ".report.json" : report_path);
  const auto& r = result.report;
  out << "indexed " << r.built << " papers (" << r.resumed << " resumed), " << r.llm_calls
      << " LLM calls, " << r.fallbacks << " fallbacks, " << r.parse_failures
      << " parse failures, " << r.topic_violations << " topic violations\n";
  return kSuccess;
}

int run_embed_concepts(const RunConfig& c, const std::string& out_path, std::ostream& out) {
  const auto index = load_index(require(c.paths.index, "--index"));
  const std::string dest = out_path.empty() ? c.paths.cache : out_path;
  if (dest.empty()) throw ConfigError("missing required flag --out");
  auto embedder = make_embedder(c);
  const auto cache = concept_vectors(index, *embedder);
  save_cache(cache, dest);
  out << "embedded " << cache.size() << " concepts to " << dest << '\n';
  return kSuccess;
}

json origin_json(ConceptOrigin o) {
  switch (o) {
    case ConceptOrigin::topic: return "topic";
    case ConceptOrigin::phrase: return "phrase";
    case ConceptOrigin::generated: return "generated";
  }
  return nullptr;
}

int run_search(const RunConfig& c, const std::string& out_path, std::ostream& out) {
  auto engine = make_engine(c, /*need_queries=*/true);
  std::optional<std::ofstream> file;
  if (!out_path.empty()) file = io::open_out(out_path);
  std::ostream& sink = file ? *file : out;
  for (const auto& q : engine.queries) {
    CallLedger ledger;
    auto result = engine.pipeline->run(q, ledger);
    json ranking = json::array();
    const auto n = std::min(c.retriever.top_n, result.ranking.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto& e = result.ranking[i];
      ranking.push_back({{"id", e.paper_id},
                         {"s_base", e.s_base},
                         {"s_sem", e.s_sem ? json(*e.s_sem) : json(nullptr)},
                         {"s_final", e.s_final}});
    }
    json core = json::array();
    for (const auto& cc : result.core.concepts) {
      core.push_back({{"concept", cc.text}, {"origin", origin_json(cc.origin)}});
    }
    const auto l = ledger.snapshot();
    sink << json{{"query_id", q.id},
                 {"ranking", ranking},
                 {"core_concepts", core},
                 {"fallback", result.core.fallback},
                 {"ledger",
                  {{"retriever_calls", l.retriever_calls},
                   {"llm_calls", l.llm_calls},
                   {"completion_tokens", l.completion_tokens}}}}
                .dump()
         << '\n';
  }
  return kSuccess;
}

int run_eval_cmd(const RunConfig& c, const std::string& out_path, std::ostream& out,
                 std::ostream& err) {
  auto engine = make_engine(c, /*need_queries=*/true);
  const auto qrels = load_run_qrels(c, *engine.corpus, err);
  auto report = run_eval(engine.queries, qrels, pipeline_search(*engine.pipeline),
                         eval_options(c), to_json(c));
  if (report.skipped_missing_qrels) {
    err << "warning: skipped " << report.skipped_missing_qrels << " queries without qrels\n";
  }
  if (!out_path.empty()) save_report(report, out_path, c.eval.timing);
  out << report.to_table(c.retriever.kind + "+" + c.pipeline.ablation);
  return kSuccess;
}

int run_sweep(const RunConfig& c, const std::string& out_dir, std::ostream& out,
              std::ostream& err) {
  auto engine = make_engine(c, /*need_queries=*/true);
  const auto qrels = load_run_qrels(c, *engine.corpus, err);
  auto points = sweep_k(engine.queries, qrels, *engine.pipeline, c.eval.k_values,
                        eval_options(c), to_json(c));
  if (!out_dir.empty()) {
    json all = json::array();
    for (const auto& p : points) {
      save_report(p.report, fs::path(out_dir) / ("report_k" + std::to_string(p.k) + ".json"),
                  c.eval.timing);
      all.push_back({{"k", p.k}, {"report", p.report.to_json(c.eval.timing)}});
    }
    io::open_out(fs::path(out_dir) / "sweep.json") << all.dump(1) << '\n';
  }
  out << sweep_table(points);
  return kSuccess;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Concept-guided re-ranking for scientific paper retrieval", "conceptrank"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string report_path;
  std::vector<std::pair<CLI::App*, std::unique_ptr<Overrides>>> subs;

  auto make_sub = [&](const std::string& name, const std::string& help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON run configuration");
    auto ov = std::make_unique<Overrides>(sub);
    add_common_flags(*ov);
    subs.emplace_back(sub, std::move(ov));
    return sub;
  };

  auto* train_cmd = make_sub("train", "train the topic classifier");
  train_cmd->add_option("--out", out_path, "classifier checkpoint directory");
  std::uint64_t train_seed = 0;
  auto* train_seed_opt = train_cmd->add_option("--seed", train_seed, "shuffle seed");

  auto* index_cmd = make_sub("index", "build the semantic index with the LLM");
  index_cmd->add_option("--out", out_path, "index output path");
  index_cmd->add_option("--report", report_path, "build report path");

  auto* embed_cmd = make_sub("embed-concepts", "embed the index vocabulary");
  embed_cmd->add_option("--out", out_path, "cache manifest output path");

  auto* search_cmd = make_sub("search", "re-rank queries and print per-query records");
  search_cmd->add_option("--out", out_path, "write records here instead of stdout");

  auto* eval_cmd = make_sub("eval", "evaluate Recall@K and efficiency");
  eval_cmd->add_option("--out", out_path, "report JSON path");

  auto* sweep_cmd = make_sub("sweep", "evaluate across candidate sizes k");
  sweep_cmd->add_option("--out", out_path, "directory for per-k reports");
  std::vector<std::size_t> k_values;
  auto* k_values_opt =
      sweep_cmd->add_option("--k-values", k_values, "grid of k (default 5,10,25,50,75,100)")
          ->delimiter(',');

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic world");
  SyntheticSpec spec;
  std::string synth_out;
  synth_cmd->add_option("--out", synth_out, "output directory")->required();
  synth_cmd->add_option("--seed", spec.seed, "generator seed");
  synth_cmd->add_option("--docs", spec.n_docs, "papers");
  synth_cmd->add_option("--topics", spec.n_topics, "planted topics");
  synth_cmd->add_option("--queries", spec.n_queries, "queries (0: one per topic)");
  synth_cmd->add_option("--dim", spec.embedding_dim, "embedding dimension");
  synth_cmd->add_option("--noise", spec.noise_scale, "embedding noise scale");
  synth_cmd->add_option("--phrases-per-doc", spec.n_phrases_per_doc, "planted phrases per paper");
  synth_cmd->add_option("--phrases-per-topic", spec.phrases_per_topic, "phrase pool per topic");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    auto selected = app.get_subcommands();
    err << (selected.empty() ? app.help() : selected.front()->help());
    return kUsage;
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    if (chosen == synth_cmd) return run_synth({}, spec, synth_out, out);

    RunConfig config;
    if (!config_path.empty()) config = load_config(config_path);
    for (const auto& [sub, ov] : subs) {
      if (sub == chosen) ov->apply(config);
    }
    if (chosen == train_cmd && train_seed_opt->count()) config.classifier.seed = train_seed;
    if (chosen == sweep_cmd && k_values_opt->count()) config.eval.k_values = k_values;

    if (chosen == train_cmd) return run_train(config, out_path, out);
    if (chosen == index_cmd) return run_index(config, out_path, report_path, out);
    if (chosen == embed_cmd) return run_embed_concepts(config, out_path, out);
    if (chosen == search_cmd) return run_search(config, out_path, out);
    if (chosen == eval_cmd) return run_eval_cmd(config, out_path, out, err);
    if (chosen == sweep_cmd) return run_sweep(config, out_path, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}

}  // namespace conceptrank::cli
