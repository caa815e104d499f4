#include "conceptrank/classifier.hpp"
#include "conceptrank/errors.hpp"
#include "conceptrank/eval.hpp"
#include "conceptrank/llm.hpp"
#include "conceptrank/retrieval.hpp"
#include "conceptrank/synthetic.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace conceptrank;
using testing_support::TempDir;

TEST_SUITE("synthetic_world") {
  TEST_CASE("same spec gives identical worlds; a new seed does not") {
    SyntheticSpec spec;
    const auto a = generate(spec);
    CHECK(a == generate(spec));
    spec.seed = 1;
    CHECK_FALSE(a == generate(spec));
  }

  TEST_CASE("world shape") {
    SyntheticSpec spec;
    const auto w = generate(spec);
    CHECK(w.corpus.size() == 200);
    CHECK(w.labels.size() == 10);
    CHECK(w.queries.size() == 10);
    CHECK(w.doc_embeddings.rows() == 200);
    CHECK(w.doc_embeddings.dim() == 32);
    CHECK(w.gold_index.size() == 200);
    for (const auto& q : w.queries) CHECK(w.qrels.find(q.id)->size() == 20);
    CHECK_NOTHROW(w.gold_index.validate(w.labels));
  }

  TEST_CASE("invalid specs are rejected") {
    SyntheticSpec spec;
    spec.n_docs = 0;
    CHECK_THROWS_AS(generate(spec), ConfigError);
    spec = {};
    spec.noise_scale = -1;
    CHECK_THROWS_AS(generate(spec), ConfigError);
  }

  TEST_CASE("zero noise is separable for dense retrieval") {
    SyntheticSpec spec;
    spec.noise_scale = 0;
    const auto w = generate(spec);
    for (const auto& q : w.queries) {
      const auto hits = dense_search(w.doc_embeddings, w.query_embeddings.find(q.id), q.id, 20);
      CHECK(recall_at_k(hits, *w.qrels.find(q.id), 20) == 1.0);
    }
  }

  TEST_CASE("planted topic document frequency equals docs per topic") {
    const auto w = generate(SyntheticSpec{});
    for (const auto& t : w.labels.topics()) CHECK(w.gold_index.document_frequencies().at(t.name) == 20);
  }

  TEST_CASE("planted topic is the nearest centroid for at least 95% of docs") {
    SyntheticSpec spec;
    spec.noise_scale = 0.5;
    const auto w = generate(spec);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < w.corpus.size(); ++i) {
      const auto& id = w.corpus.papers()[i].id;
      const auto doc = w.doc_embeddings.find(id);
      std::size_t best = 0;
      double best_cos = -2;
      for (std::size_t t = 0; t < w.centroids.rows(); ++t) {
        const double c = cosine(doc, w.centroids.row(t));
        if (c > best_cos) best_cos = c, best = t;
      }
      hits += w.doc_topics.at(id).front() == w.centroids.ids()[best];
    }
    CHECK(static_cast<double>(hits) / w.corpus.size() >= 0.95);
  }

  TEST_CASE("written worlds load through the standard loaders") {
    TempDir dir;
    const auto w = generate(SyntheticSpec{});
    write_world(w, dir.path());
    CHECK(load_corpus(dir / "corpus.jsonl").papers() == w.corpus.papers());
    CHECK(load_label_space(dir / "labels.tsv").topics() == w.labels.topics());
    CHECK(load_queries(dir / "queries.jsonl") == w.queries);
    CHECK(load_qrels(dir / "qrels.tsv").relevant == w.qrels.relevant);
    CHECK(load_index(dir / "gold_index.jsonl") == w.gold_index);
    CHECK(load_doc_topics(dir / "doc_topics.tsv") == w.doc_topics);
    CHECK(load_matrix(dir / "doc_embeddings.json").data() == w.doc_embeddings.data());
    CHECK(load_matrix(dir / "concept_embeddings.json").ids() == w.concept_embeddings.ids());
    const auto scripted = ScriptedWorldLlm::from_dir(dir.path());
    const auto& q = w.queries.front();
    const std::string prompt = render_prompt(core_concepts_no_corpus_template(), {{"q", q.text}});
    CHECK(scripted(prompt) == ScriptedWorldLlm(w)(prompt));
  }

  TEST_CASE("scripted rule answers with planted concepts only") {
    const auto w = generate(SyntheticSpec{});
    const ScriptedWorldLlm rule(w);
    const auto& q = w.queries.front();
    const auto& planted = w.query_concepts.at(q.text);

    const auto free = parse_tagged_list(
        rule(render_prompt(core_concepts_no_corpus_template(), {{"q", q.text}})), "ans");
    CHECK(std::set<std::string>(free.begin(), free.end()) == planted);

    const std::string topic = *planted.begin();
    const auto chosen = parse_tagged_list(
        rule(render_prompt(core_concepts_template(), {{"D0", "\n1. x"},
                                                      {"T0", topic + " (3), decoy topic (9)"},
                                                      {"P0", "other phrase (2)"},
                                                      {"q", q.text}})),
        "ans");
    CHECK(chosen == std::vector<std::string>{topic});

    const auto& paper = w.corpus.papers().front();
    const auto& gold = *w.gold_index.find(paper.id);
    std::vector<TopicScore> cands{{"decoy", 1}, {gold.topics.front(), 0}};
    const auto reply = rule(render_prompt(index_build_template(),
                                          {{"d", index_prompt_paper(paper, cands)}}));
    CHECK(parse_tagged_list(reply, "top") == gold.topics);
    CHECK(parse_tagged_list(reply, "kp") == gold.phrases);
  }
}
