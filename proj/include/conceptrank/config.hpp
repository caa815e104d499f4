#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

namespace conceptrank {

/// Everything a CLI run can be configured with. Sections mirror the config
/// file: {"paths": {...}, "retriever": {...}, "classifier": {...},
/// "pipeline": {...}, "provider": {...}, "embedder": {...}, "eval": {...}}.
struct RunConfig {
  struct Paths {
    std::string corpus, labels, doc_topics, embeddings, topic_embeddings, concept_embeddings,
        query_embeddings, queries, index, cache, qrels, replay_store, classifier;
  } paths;
  struct Retriever {
    std::string kind = "dense";
    double k1 = 1.2;
    double b = 0.75;
    std::size_t top_n = 100;
    std::string query_prefix;
  } retriever;
  struct Classifier {
    int epochs = 10;
    double lr = 5e-5;
    double alpha = 1e-2;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    double logit_clamp = 30.0;
    std::string link = "sigmoid_exp";
    std::size_t m = 15;
  } classifier;
  struct Pipeline {
    std::size_t k = 50;
    std::size_t n_prf_docs = 20;
    std::size_t rerank_pool = 1000;
    std::string ablation = "none";
    std::string phrase_check = "lenient";
  } pipeline;
  struct Provider {
    std::string kind = "replay";  // http | replay | record | scripted
    std::string base_url = "https://api.openai.com/v1";
    std::string model = "gpt-4.1-mini";
    int timeout_seconds = 120;
    std::size_t max_in_flight = 8;
    std::string world;  // synthetic world directory for the scripted provider
  } provider;
  struct Embedder {
    std::string kind = "file";  // file | http
    std::string base_url;
    std::string model;
    std::size_t dim = 0;
  } embedder;
  struct Eval {
    std::vector<std::size_t> ks{10, 20, 50};
    std::vector<std::size_t> k_values{5, 10, 25, 50, 75, 100};
    std::size_t concurrency = 1;
    bool timing = true;
  } eval;
};

/// Strict: unknown sections or keys raise ConfigError naming the key. Relative
/// paths are resolved against the config file's directory.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

}  // namespace conceptrank
