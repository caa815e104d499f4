#include <algorithm>
#include <numeric>

#include "conceptrank/errors.hpp"
#include "conceptrank/retrieval.hpp"
#include "conceptrank/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace conceptrank;

namespace {

Corpus toy_corpus() {
  return Corpus(std::vector<Paper>{{"a", "Neural retrieval", "dense neural models"},
                 {"b", "Sparse retrieval", "bm25 term weighting"},
                 {"c", "Topic models", "neural topic classification neural"}});
}

double score_of(const ScoredList& list, const std::string& id) {
  for (const auto& e : list.entries())
    if (e.paper_id == id) return e.s_final;
  FAIL("missing id " << id);
  return 0;
}

ScoredList list_of(const std::map<std::string, double>& scores) {
  std::vector<ScoredEntry> entries;
  for (const auto& [id, s] : scores) entries.push_back({id, s, std::nullopt, s});
  return ScoredList("q", entries);
}

std::vector<std::string> random_words(Rng& rng, std::size_t n) {
  static const std::vector<std::string> vocab{"graph", "neural", "retrieval", "sparse", "dense",
                                              "topic", "model", "learning", "query", "index",
                                              "ranking", "bm25"};
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(vocab[rng.below(vocab.size())]);
  return out;
}

std::string join(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) s += (s.empty() ? "" : " ") + w;
  return s;
}

}  // namespace

TEST_SUITE("base_retrieval") {
  TEST_CASE("bm25 single-term query matches frozen hand-computed scores") {
    const Bm25Index index(toy_corpus());
    const auto hits = bm25_search(index, {"q", "neural"}, 10);
    REQUIRE(hits.size() == 2);  // b has no overlap and is excluded
    CHECK(hits[0].paper_id == "a");
    CHECK(std::abs(score_of(hits, "a") - 0.6578182007733557) < 1e-9);
    CHECK(std::abs(score_of(hits, "c") - 0.6243067075264112) < 1e-9);
  }

  TEST_CASE("bm25 duplicate query term counts twice") {
    const Bm25Index index(toy_corpus());
    const auto hits = bm25_search(index, {"q", "neural neural"}, 10);
    CHECK(std::abs(score_of(hits, "a") - 1.3156364015467115) < 1e-9);
    CHECK(std::abs(score_of(hits, "c") - 1.2486134150528223) < 1e-9);
  }

  TEST_CASE("bm25 query without overlap returns nothing") {
    const Bm25Index index(toy_corpus());
    CHECK(bm25_search(index, {"q", "quantum chemistry"}, 10).empty());
  }

  TEST_CASE("bm25 matches the brute-force oracle on random corpora") {
    Rng rng(20);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Paper> papers;
      std::vector<std::string> texts;
      for (int i = 0; i < 12; ++i) {
        papers.push_back({"d" + std::to_string(i), join(random_words(rng, 1 + rng.below(3))),
                          join(random_words(rng, 1 + rng.below(15)))});
        texts.push_back(papers.back().text());
      }
      const Bm25Params params{0.5 + rng.uniform() * 1.5, rng.uniform()};
      const Bm25Index index(Corpus(papers), params);
      const auto query = join(random_words(rng, 1 + rng.below(4)));
      const auto expected = oracle::bm25(texts, query, params.k1, params.b);
      const auto hits = bm25_search(index, {"q", query}, 100);
      std::size_t nonzero = 0;
      for (std::size_t i = 0; i < texts.size(); ++i) {
        if (expected[i] > 0) {
          ++nonzero;
          CHECK(std::abs(score_of(hits, papers[i].id) - expected[i]) < 1e-9);
        }
      }
      CHECK(hits.size() == nonzero);
    }
  }

  TEST_CASE("bm25 output does not depend on ingestion order") {
    Rng rng(21);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Paper> papers;
      for (int i = 0; i < 10; ++i)
        papers.push_back({"d" + std::to_string(i), "t", join(random_words(rng, 8))});
      const auto query = join(random_words(rng, 2));
      const auto first = bm25_search(Bm25Index(Corpus(papers)), {"q", query}, 100);
      rng.shuffle(std::span<Paper>(papers));
      const auto second = bm25_search(Bm25Index(Corpus(papers)), {"q", query}, 100);
      CHECK(first == second);
    }
  }

  TEST_CASE("dense search: identical row ranks first with score 1") {
    const EmbeddingMatrix docs(2, {"x", "y", "z"}, {1, 0, 0.6f, 0.8f, 0, 1});
    const std::vector<float> q{0.6f, 0.8f};
    const auto hits = dense_search(docs, q, "q", 3);
    CHECK(hits[0].paper_id == "y");
    CHECK(hits[0].s_final == doctest::Approx(1.0).epsilon(1e-7));
  }

  TEST_CASE("dense search: orthogonal query falls back to id order") {
    const EmbeddingMatrix docs(3, {"c", "a", "b"}, {1, 0, 0, 0, 1, 0, 1, 1, 0});
    const std::vector<float> q{0, 0, 1};
    const auto hits = dense_search(docs, q, "q", 3);
    CHECK(hits.ids() == std::vector<std::string>{"a", "b", "c"});
    for (const auto& e : hits.entries()) CHECK(e.s_final == 0.0);
  }

  TEST_CASE("dense search top-10 equals a full argsort and is scale invariant") {
    Rng rng(100);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t dim = 8;
      std::vector<std::string> ids;
      std::vector<float> data;
      std::vector<oracle::Vec> rows;
      for (int i = 0; i < 100; ++i) {
        ids.push_back("d" + std::to_string(1000 + i));
        oracle::Vec row;
        for (std::size_t k = 0; k < dim; ++k) {
          data.push_back(static_cast<float>(rng.normal()));
          row.push_back(data.back());
        }
        rows.push_back(row);
      }
      const EmbeddingMatrix docs(dim, ids, data);
      std::vector<float> q(dim);
      for (auto& x : q) x = static_cast<float>(rng.normal());
      const oracle::Vec qd(q.begin(), q.end());

      std::vector<std::size_t> order(ids.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double sa = oracle::cos(rows[a], qd), sb = oracle::cos(rows[b], qd);
        return sa != sb ? sa > sb : ids[a] < ids[b];
      });
      const auto hits = dense_search(docs, q, "q", 10);
      for (std::size_t i = 0; i < 10; ++i) CHECK(hits[i].paper_id == ids[order[i]]);

      std::vector<float> scaled(q);
      const float lambda = static_cast<float>(0.1 + 10 * rng.uniform());
      for (auto& x : scaled) x *= lambda;
      CHECK(dense_search(docs, scaled, "q", 10).ids() == hits.ids());
    }
  }

  TEST_CASE("z-scores use the population deviation and map constants to zero") {
    const std::vector<double> x{1, 2, 3};
    const auto z = z_scores(x);
    CHECK(z[0] == doctest::Approx(-1.224744871391589));
    CHECK(z[1] == 0.0);
    const std::vector<double> flat{5, 5, 5};
    for (double v : z_scores(flat)) CHECK(v == 0.0);
    const std::vector<double> single{7};
    CHECK(z_scores(single)[0] == 0.0);
  }

  TEST_CASE("hybrid fusion of the five-document example matches the hand-computed order") {
    const auto bm25 = list_of({{"d1", 3}, {"d2", 2}, {"d3", 1}});
    const auto dense = list_of({{"d2", 0.9}, {"d4", 0.5}, {"d5", 0.1}});
    const auto fused = hybrid_search(bm25, dense, 10);
    CHECK(fused.ids() == std::vector<std::string>{"d2", "d1", "d4", "d3", "d5"});
    CHECK(fused[0].s_final == doctest::Approx(2.25));
    CHECK(fused[1].s_final == doctest::Approx(1.0));
    CHECK(fused[2].s_final == doctest::Approx(-0.25));
    CHECK(fused[3].s_final == doctest::Approx(-1.5));
    CHECK(fused[4].s_final == doctest::Approx(-1.5));
  }

  TEST_CASE("hybrid of identical lists keeps their order") {
    const auto a = list_of({{"x", 3}, {"y", 2}, {"z", 1}});
    CHECK(hybrid_search(a, a, 10).ids() == a.ids());
  }

  TEST_CASE("hybrid fusion agrees with the z-sum oracle and absorbs affine maps") {
    Rng rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      std::map<std::string, double> a, b;
      for (int i = 0; i < 8; ++i) {
        const std::string id = "d" + std::to_string(i);
        if (rng.uniform() < 0.7) a[id] = rng.normal();
        if (rng.uniform() < 0.7) b[id] = rng.normal();
      }
      if (a.empty() || b.empty()) continue;
      const auto fused = hybrid_search(list_of(a), list_of(b), 100);
      CHECK(fused.ids() == oracle::zsum_order(a, b));

      // Positive affine map on one input; fixed-point friendly constants so
      // the transformed z-scores stay bit-comparable in ordering.
      std::map<std::string, double> a2;
      for (const auto& [id, s] : a) a2[id] = 4.0 * s + 2.0;
      auto affine = hybrid_search(list_of(a2), list_of(b), 100);
      for (std::size_t i = 0; i < fused.size(); ++i)
        CHECK(affine[i].s_final == doctest::Approx(fused[i].s_final).epsilon(1e-9));
    }
  }

  TEST_CASE("dense retriever requires a row for every paper") {
    const Corpus corpus(std::vector<Paper>{{"a", "T", "x"}, {"b", "T", "y"}});
    auto docs = std::make_shared<const EmbeddingMatrix>(1, std::vector<std::string>{"a"},
                                                        std::vector<float>{1});
    auto enc = std::make_shared<MatrixQueryEncoder>(EmbeddingMatrix(1, {"q"}, {1}));
    CHECK_THROWS_AS(DenseRetriever(corpus, docs, enc), UnknownId);
  }

  TEST_CASE("retriever kind names round trip") {
    for (auto k : {RetrieverKind::bm25, RetrieverKind::dense, RetrieverKind::hybrid})
      CHECK(parse_retriever_kind(to_string(k)) == k);
    CHECK_THROWS_AS(parse_retriever_kind("splade"), ConfigError);
  }
}
