#include <fstream>

#include "conceptrank/corpus.hpp"
#include "conceptrank/errors.hpp"
#include "conceptrank/rng.hpp"
#include "conceptrank/text.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace conceptrank;
using testing_support::TempDir;

namespace {
void write(const std::filesystem::path& p, const std::string& s) { std::ofstream(p) << s; }
}  // namespace

TEST_SUITE("text") {
  TEST_CASE("tokenize splits on non-alphanumerics and drops short terms") {
    CHECK(tokenize("Multi-dimensional Evaluation!") ==
          std::vector<std::string>{"multi", "dimensional", "evaluation"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("a I x").empty());
    CHECK(tokenize("BM25 k1") == std::vector<std::string>{"bm25", "k1"});
  }

  TEST_CASE("canonicalize lowercases, trims and collapses whitespace") {
    CHECK(canonicalize("Natural  Language Generation") == "natural language generation");
    CHECK(canonicalize("  \tA\n B  ") == "a b");
    CHECK(canonicalize("") == "");
  }

  TEST_CASE("canonicalize is idempotent on random byte strings") {
    Rng rng(7);
    const std::string alphabet = "aB  \t\nxY-_.9";
    for (int i = 0; i < 200; ++i) {
      std::string s;
      const auto len = rng.below(20);
      for (std::size_t j = 0; j < len; ++j) s += alphabet[rng.below(alphabet.size())];
      const auto once = canonicalize(s);
      CHECK(canonicalize(once) == once);
    }
  }

  TEST_CASE("tokenize agrees with the reference tokenizer") {
    Rng rng(11);
    const std::string alphabet = "abcXYZ09 ,.-'!";
    for (int i = 0; i < 200; ++i) {
      std::string s;
      for (std::size_t j = 0; j < 30; ++j) s += alphabet[rng.below(alphabet.size())];
      CHECK(tokenize(s) == oracle::tokens(s));
    }
  }

  TEST_CASE("split keeps empty fields") {
    CHECK(split("a\t\tb", '\t') == std::vector<std::string>{"a", "", "b"});
    CHECK(split("", ',') == std::vector<std::string>{""});
  }
}

TEST_SUITE("rng") {
  TEST_CASE("engine matches the published MT19937-64 test vector") {
    Rng rng(5489);
    std::uint64_t x = 0;
    for (int i = 0; i < 10000; ++i) x = rng.next();
    CHECK(x == 9981545732273789042ULL);
  }

  TEST_CASE("uniform stays in [0,1) and below stays under n") {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
      const double u = rng.uniform();
      CHECK(u >= 0.0);
      CHECK(u < 1.0);
      CHECK(rng.below(7) < 7);
    }
  }

  TEST_CASE("same seed gives the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());
  }
}

TEST_SUITE("corpus") {
  TEST_CASE("paper text joins title and abstract") {
    CHECK(Paper{"a", "Title", "Body text"}.text() == "Title. Body text");
  }

  TEST_CASE("load keeps file order") {
    TempDir dir;
    write(dir / "c.jsonl",
          R"({"id":"a","title":"A","abstract":"x"}
{"id":"b","title":"B","abstract":"y"}
{"id":"c","title":"C","abstract":"z"}
)");
    const auto corpus = load_corpus(dir / "c.jsonl");
    REQUIRE(corpus.size() == 3);
    CHECK(corpus.papers()[0].id == "a");
    CHECK(corpus.papers()[2].id == "c");
    CHECK(corpus.find("b")->title == "B");
    CHECK(corpus.find("zz") == nullptr);
  }

  TEST_CASE("duplicate paper id is rejected") {
    TempDir dir;
    write(dir / "c.jsonl",
          R"({"id":"a","title":"A","abstract":"x"}
{"id":"a","title":"B","abstract":"y"}
)");
    try {
      load_corpus(dir / "c.jsonl");
      FAIL("expected DuplicateId");
    } catch (const DuplicateId& e) {
      CHECK(e.id() == "a");
    }
  }

  TEST_CASE("malformed record names its line") {
    TempDir dir;
    write(dir / "c.jsonl", "{\"id\":\"a\",\"title\":\"A\",\"abstract\":\"x\"}\n{oops\n");
    try {
      load_corpus(dir / "c.jsonl");
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.line() == 2);
    }
  }

  TEST_CASE("label space canonicalizes names and rejects collisions") {
    LabelSpace labels(std::vector<Topic>{{"t1", "Natural  Language Generation"}});
    CHECK(labels.at(0).name == "natural language generation");
    CHECK(labels.index_of("natural language generation") == 0);
    CHECK_THROWS_AS(LabelSpace(std::vector<Topic>{{"t1", "Deep Learning"}, {"t2", "deep  learning"}}),
                    DuplicateTopic);
  }

  TEST_CASE("empty label file is an error") {
    TempDir dir;
    write(dir / "l.tsv", "");
    CHECK_THROWS_AS(load_label_space(dir / "l.tsv"), FormatError);
  }

  TEST_CASE("qrels keep only positive relevance") {
    TempDir dir;
    write(dir / "q.tsv", "q1\td1\t1\nq1\td2\t0\n");
    const auto qrels = load_qrels(dir / "q.tsv");
    REQUIRE(qrels.find("q1") != nullptr);
    CHECK(*qrels.find("q1") == std::set<std::string>{"d1"});
  }

  TEST_CASE("qrels unknown document: strict raises, lenient drops and counts") {
    TempDir dir;
    write(dir / "q.tsv", "q1\td1\t1\nq1\tghost\t1\n");
    const Corpus corpus(std::vector<Paper>{{"d1", "T", "A"}});
    CHECK_THROWS_AS(load_qrels(dir / "q.tsv", &corpus), UnknownId);
    const auto qrels = load_qrels(dir / "q.tsv", &corpus, true);
    CHECK(qrels.dropped_unknown == 1);
    CHECK(*qrels.find("q1") == std::set<std::string>{"d1"});
  }

  TEST_CASE("round trips are field-for-field identity") {
    TempDir dir;
    const Corpus corpus(std::vector<Paper>{{"p1", "Title \"quoted\"", "Abstract\twith tab"}, {"p2", "T2", "A2"}});
    save_corpus(corpus, dir / "c.jsonl");
    CHECK(load_corpus(dir / "c.jsonl").papers() == corpus.papers());

    const LabelSpace labels(std::vector<Topic>{{"t1", "alpha"}, {"t2", "beta gamma"}});
    save_label_space(labels, dir / "l.tsv");
    CHECK(load_label_space(dir / "l.tsv").topics() == labels.topics());

    const std::vector<Query> queries{{"q1", "what is x"}, {"q2", "and y"}};
    save_queries(queries, dir / "q.jsonl");
    CHECK(load_queries(dir / "q.jsonl") == queries);

    Qrels qrels;
    qrels.relevant["q1"] = {"p1", "p2"};
    save_qrels(qrels, dir / "qrels.tsv");
    CHECK(load_qrels(dir / "qrels.tsv").relevant == qrels.relevant);

    const ScoredList list("q1", {{"p1", 0.1, 0.30000000000000004, 1.0 / 3.0},
                                 {"p2", -2.5, std::nullopt, -1e-300}});
    save_scored_lists({list}, dir / "s.jsonl");
    const auto back = load_scored_lists(dir / "s.jsonl");
    REQUIRE(back.size() == 1);
    CHECK(back[0] == list);
  }

  TEST_CASE("scored list is strictly sorted for random unsorted inputs") {
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<ScoredEntry> entries;
      const auto n = 1 + rng.below(30);
      for (std::size_t i = 0; i < n; ++i) {
        // Few distinct values so ties are common.
        const double s = static_cast<double>(rng.below(4));
        entries.push_back({"p" + std::to_string(rng.next() % 100000) + "_" + std::to_string(i),
                           s, std::nullopt, s});
      }
      const ScoredList list("q", entries);
      for (std::size_t i = 1; i < list.size(); ++i) {
        CHECK(ranks_before(list[i - 1].s_final, list[i - 1].paper_id, list[i].s_final,
                           list[i].paper_id));
      }
    }
  }

  TEST_CASE("scored list rejects repeated ids") {
    CHECK_THROWS_AS(ScoredList("q", {{"a", 1, {}, 1}, {"a", 2, {}, 2}}), DuplicateId);
  }
}
