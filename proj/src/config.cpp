#include "conceptrank/config.hpp"

#include <functional>
#include <map>

#include "conceptrank/errors.hpp"
#include "conceptrank/io.hpp"

namespace conceptrank {

using nlohmann::json;

namespace {

using Setter = std::function<void(const json&)>;

template <typename T>
Setter bind(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

Setter bind_path(std::string& field, const std::filesystem::path& base) {
  return [&field, base](const json& v) {
    std::filesystem::path p = v.get<std::string>();
    field = (p.is_relative() && !base.empty() ? base / p : p).string();
  };
}

void apply_section(const std::string& section, const json& values,
                   const std::map<std::string, Setter>& setters) {
  if (!values.is_object()) throw ConfigError("config section \"" + section + "\" must be an object");
  for (const auto& [key, value] : values.items()) {
    auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("unknown config key \"" + section + "." + key + "\"");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError("bad value for \"" + section + "." + key + "\": " + e.what());
    }
  }
}

}  // namespace

RunConfig parse_config(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  RunConfig c;
  auto& p = c.paths;
  const std::map<std::string, std::map<std::string, Setter>> sections{
      {"paths",
       {{"corpus", bind_path(p.corpus, base_dir)},
        {"labels", bind_path(p.labels, base_dir)},
        {"doc_topics", bind_path(p.doc_topics, base_dir)},
        {"embeddings", bind_path(p.embeddings, base_dir)},
        {"topic_embeddings", bind_path(p.topic_embeddings, base_dir)},
        {"concept_embeddings", bind_path(p.concept_embeddings, base_dir)},
        {"query_embeddings", bind_path(p.query_embeddings, base_dir)},
        {"queries", bind_path(p.queries, base_dir)},
        {"index", bind_path(p.index, base_dir)},
        {"cache", bind_path(p.cache, base_dir)},
        {"qrels", bind_path(p.qrels, base_dir)},
        {"replay_store", bind_path(p.replay_store, base_dir)},
        {"classifier", bind_path(p.classifier, base_dir)}}},
      {"retriever",
       {{"kind", bind(c.retriever.kind)},
        {"k1", bind(c.retriever.k1)},
        {"b", bind(c.retriever.b)},
        {"top_n", bind(c.retriever.top_n)},
        {"query_prefix", bind(c.retriever.query_prefix)}}},
      {"classifier",
       {{"epochs", bind(c.classifier.epochs)},
        {"lr", bind(c.classifier.lr)},
        {"alpha", bind(c.classifier.alpha)},
        {"batch_size", bind(c.classifier.batch_size)},
        {"seed", bind(c.classifier.seed)},
        {"logit_clamp", bind(c.classifier.logit_clamp)},
        {"link", bind(c.classifier.link)},
        {"m", bind(c.classifier.m)}}},
      {"pipeline",
       {{"k", bind(c.pipeline.k)},
        {"n_prf_docs", bind(c.pipeline.n_prf_docs)},
        {"rerank_pool", bind(c.pipeline.rerank_pool)},
        {"ablation", bind(c.pipeline.ablation)},
        {"phrase_check", bind(c.pipeline.phrase_check)}}},
      {"provider",
       {{"kind", bind(c.provider.kind)},
        {"base_url", bind(c.provider.base_url)},
        {"model", bind(c.provider.model)},
        {"timeout_seconds", bind(c.provider.timeout_seconds)},
        {"max_in_flight", bind(c.provider.max_in_flight)},
        {"world", bind_path(c.provider.world, base_dir)}}},
      {"embedder",
       {{"kind", bind(c.embedder.kind)},
        {"base_url", bind(c.embedder.base_url)},
        {"model", bind(c.embedder.model)},
        {"dim", bind(c.embedder.dim)}}},
      {"eval",
       {{"ks", bind(c.eval.ks)},
        {"k_values", bind(c.eval.k_values)},
        {"concurrency", bind(c.eval.concurrency)},
        {"timing", bind(c.eval.timing)}}},
  };
  for (const auto& [section, values] : j.items()) {
    auto it = sections.find(section);
    if (it == sections.end()) throw ConfigError("unknown config key \"" + section + "\"");
    apply_section(section, values, it->second);
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path());
}

json to_json(const RunConfig& c) {
  const auto& p = c.paths;
  return json{
      {"paths",
       {{"corpus", p.corpus}, {"labels", p.labels}, {"doc_topics", p.doc_topics},
        {"embeddings", p.embeddings}, {"topic_embeddings", p.topic_embeddings},
        {"concept_embeddings", p.concept_embeddings}, {"query_embeddings", p.query_embeddings},
        {"queries", p.queries}, {"index", p.index}, {"cache", p.cache}, {"qrels", p.qrels},
        {"replay_store", p.replay_store}, {"classifier", p.classifier}}},
      {"retriever",
       {{"kind", c.retriever.kind}, {"k1", c.retriever.k1}, {"b", c.retriever.b},
        {"top_n", c.retriever.top_n}, {"query_prefix", c.retriever.query_prefix}}},
      {"classifier",
       {{"epochs", c.classifier.epochs}, {"lr", c.classifier.lr}, {"alpha", c.classifier.alpha},
        {"batch_size", c.classifier.batch_size}, {"seed", c.classifier.seed},
        {"logit_clamp", c.classifier.logit_clamp}, {"link", c.classifier.link},
        {"m", c.classifier.m}}},
      {"pipeline",
       {{"k", c.pipeline.k}, {"n_prf_docs", c.pipeline.n_prf_docs},
        {"rerank_pool", c.pipeline.rerank_pool}, {"ablation", c.pipeline.ablation},
        {"phrase_check", c.pipeline.phrase_check}}},
      {"provider",
       {{"kind", c.provider.kind}, {"base_url", c.provider.base_url}, {"model", c.provider.model},
        {"timeout_seconds", c.provider.timeout_seconds},
        {"max_in_flight", c.provider.max_in_flight}, {"world", c.provider.world}}},
      {"embedder",
       {{"kind", c.embedder.kind}, {"base_url", c.embedder.base_url},
        {"model", c.embedder.model}, {"dim", c.embedder.dim}}},
      {"eval",
       {{"ks", c.eval.ks}, {"k_values", c.eval.k_values}, {"concurrency", c.eval.concurrency},
        {"timing", c.eval.timing}}}};
}

}  // namespace conceptrank
