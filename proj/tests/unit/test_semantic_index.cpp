#include <fstream>

#include "conceptrank/errors.hpp"
#include "conceptrank/rng.hpp"
#include "conceptrank/semantic_index.hpp"
#include "conceptrank/synthetic.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace conceptrank;
using testing_support::TempDir;

namespace {

std::vector<TopicScore> cands(std::initializer_list<const char*> names) {
  std::vector<TopicScore> out;
  double s = 10;
  for (const char* n : names) out.push_back({n, s--});
  return out;
}

MockLlmProvider answer(std::string text) {
  return MockLlmProvider([text](const std::string&) { return text; });
}

Corpus small_corpus(std::size_t n) {
  std::vector<Paper> papers;
  for (std::size_t i = 0; i < n; ++i)
    papers.push_back({"p" + std::to_string(i), "Paper " + std::to_string(i),
                      "graph neural retrieval study"});
  return Corpus(papers);
}

CandidateSource fixed_candidates() {
  return [](const Paper&, std::size_t) { return cands({"graphs", "retrieval"}); };
}

}  // namespace

TEST_SUITE("semantic_index") {
  const Paper paper{"p1", "Hallucinated citations", "We study graph neural retrieval."};

  TEST_CASE("happy path keeps supported topics and phrases") {
    auto llm = answer("<top>c1</top><kp>graph neural retrieval</kp>");
    CallLedger ledger;
    const auto r = build_entry(paper, cands({"c1", "c2"}), llm, ledger);
    CHECK(r.entry.topics == std::vector<std::string>{"c1"});
    CHECK(r.entry.phrases == std::vector<std::string>{"graph neural retrieval"});
    CHECK(r.topic_violations == 0);
    CHECK_FALSE(r.fallback);
    CHECK(ledger.snapshot().llm_calls == 1);
  }

  TEST_CASE("out-of-candidate topic is dropped and counted") {
    auto llm = answer("<top>c1, x</top><kp></kp>");
    CallLedger ledger;
    const auto r = build_entry(paper, cands({"c1", "c2"}), llm, ledger);
    CHECK(r.entry.topics == std::vector<std::string>{"c1"});
    CHECK(r.topic_violations == 1);
  }

  TEST_CASE("unsupported phrase is dropped in strict mode") {
    auto llm = answer("<top>c1</top><kp>quantum chemistry, graph neural</kp>");
    CallLedger ledger;
    EntryOptions opt;
    opt.phrase_check = PhraseCheck::strict;
    const auto r = build_entry(paper, cands({"c1"}), llm, ledger, opt);
    CHECK(r.entry.phrases == std::vector<std::string>{"graph neural"});
    CHECK(r.phrases_dropped == 1);
  }

  TEST_CASE("phrase checks") {
    const auto text = paper.text();
    CHECK(phrase_supported("graph neural", text, PhraseCheck::strict));
    CHECK_FALSE(phrase_supported("neural graph", text, PhraseCheck::strict));
    CHECK(phrase_supported("neural graph", text, PhraseCheck::lenient));
    CHECK(phrase_supported("hallucination", text, PhraseCheck::lenient));
    CHECK_FALSE(phrase_supported("hallucination", text, PhraseCheck::strict));
    CHECK_FALSE(phrase_supported("halloween", text, PhraseCheck::lenient));
    CHECK_FALSE(phrase_supported("grapefruit", text, PhraseCheck::lenient));
  }

  TEST_CASE("unparsable response falls back to the leading candidates") {
    auto llm = answer("I cannot answer that.");
    CallLedger ledger;
    const auto r = build_entry(paper, cands({"a", "b", "c", "d"}), llm, ledger);
    CHECK(r.parse_failure);
    CHECK(r.fallback);
    CHECK(r.entry.topics == std::vector<std::string>{"a", "b", "c"});
    CHECK(r.entry.phrases.empty());
  }

  TEST_CASE("entry caps truncate in response order") {
    std::string topics, phrases;
    std::vector<TopicScore> cs;
    for (int i = 0; i < 15; ++i) {
      topics += (i ? "," : "") + std::string("t") + std::to_string(i);
      cs.push_back({"t" + std::to_string(i), 0});
    }
    for (int i = 0; i < 25; ++i) phrases += (i ? "," : "") + std::string("graph");
    auto llm = answer("<top>" + topics + "</top><kp>" + phrases + "</kp>");
    CallLedger ledger;
    const auto r = build_entry(paper, cs, llm, ledger);
    CHECK(r.entry.topics.size() == 10);
    CHECK(r.entry.topics.front() == "t0");
    CHECK(r.entry.phrases.size() == 1);  // duplicates collapse while parsing
  }

  TEST_CASE("index prompt carries the paper and its candidate topics") {
    const auto d = index_prompt_paper(paper, cands({"alpha", "beta"}));
    CHECK(d.find(paper.text()) == 0);
    CHECK(d.find("alpha, beta") != std::string::npos);
  }

  TEST_CASE("cold build makes one call per paper; resume only does the rest") {
    TempDir dir;
    const auto corpus = small_corpus(10);
    auto llm = answer("<top>graphs</top><kp>graph neural</kp>");
    BuildOptions opt;
    opt.index_path = dir / "index.jsonl";
    opt.max_in_flight = 3;

    const Corpus first_six(std::vector<Paper>(corpus.papers().begin(), corpus.papers().begin() + 6));
    const auto partial = build_index(first_six, fixed_candidates(), llm, opt);
    CHECK(llm.calls() == 6);
    CHECK(partial.report.built == 6);

    const auto full = build_index(corpus, fixed_candidates(), llm, opt);
    CHECK(llm.calls() == 10);
    CHECK(full.report.resumed == 6);
    CHECK(full.report.built == 4);
    CHECK(full.report.llm_calls == 4);
    CHECK(full.index.size() == 10);
    CHECK(load_index(dir / "index.jsonl") == full.index);

    auto fresh_llm = answer("<top>graphs</top><kp>graph neural</kp>");
    const auto cold = build_index(corpus, fixed_candidates(), fresh_llm, {});
    CHECK(fresh_llm.calls() == 10);
    CHECK(cold.index == full.index);
  }

  TEST_CASE("torn final line is tolerated only when asked") {
    TempDir dir;
    SemanticIndex index;
    index.add({"p1", {"a"}, {"b"}});
    save_index(index, dir / "i.jsonl");
    std::ofstream(dir / "i.jsonl", std::ios::app) << "{\"paper_id\":\"p2\",\"top";
    CHECK_THROWS_AS(load_index(dir / "i.jsonl"), FormatError);
    CHECK(load_index(dir / "i.jsonl", true) == index);
  }

  TEST_CASE("document frequencies equal a recount over entries") {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
      SemanticIndex index;
      const auto n = 1 + rng.below(20);
      for (std::size_t i = 0; i < n; ++i) {
        IndexEntry e{"p" + std::to_string(rng.below(15)), {}, {}};
        for (int k = 0; k < 3; ++k) e.topics.push_back("t" + std::to_string(rng.below(5)));
        for (int k = 0; k < 3; ++k) e.phrases.push_back("t" + std::to_string(rng.below(8)));
        index.add(e);  // repeated ids replace earlier entries
      }
      std::map<std::string, std::size_t, std::less<>> recount;
      for (const auto& [id, e] : index.entries()) {
        const auto cs = e.concepts();
        const std::set<std::string> unique(cs.begin(), cs.end());
        for (const auto& c : unique) ++recount[c];
      }
      CHECK(index.document_frequencies() == recount);
    }
  }

  TEST_CASE("validation resolves every topic in the label space") {
    SemanticIndex index;
    index.add({"p1", {"alpha"}, {}});
    CHECK_NOTHROW(index.validate(LabelSpace(std::vector<Topic>{{"1", "alpha"}})));
    index.add({"p2", {"ghost"}, {}});
    CHECK_THROWS_AS(index.validate(LabelSpace(std::vector<Topic>{{"1", "alpha"}})), UnknownId);
  }

  TEST_CASE("concept vectors embed each distinct concept once") {
    class Counting : public EmbeddingProvider {
     public:
      std::size_t dim() const override { return 2; }
      std::vector<std::vector<float>> embed(std::span<const std::string> t) override {
        ++calls;
        count(t.size());
        return std::vector<std::vector<float>>(t.size(), {1.0f, 2.0f});
      }
      int calls = 0;
    };
    SemanticIndex index;
    const std::vector<std::string> vocab{"a", "b", "c", "d", "e"};
    for (int i = 0; i < 40; ++i)
      index.add({"p" + std::to_string(i), {vocab[i % 5]}, {vocab[(i + 1) % 5]}});
    Counting provider;
    const auto cache = concept_vectors(index, provider);
    CHECK(cache.size() == 5);
    CHECK(provider.strings_embedded() == 5);
    Counting empty_provider;
    CHECK(concept_vectors(SemanticIndex{}, empty_provider).size() == 0);
  }

  TEST_CASE("rebuilding through replay reproduces the index exactly") {
    TempDir dir;
    SyntheticSpec spec;
    spec.n_docs = 30;
    spec.n_topics = 3;
    const auto world = generate(spec);
    auto scripted = ScriptedWorldLlm(world).provider();
    RecordingLlmProvider rec(scripted, dir / "store.jsonl");
    CandidateSource src = [&](const Paper&, std::size_t m) {
      std::vector<TopicScore> out;
      for (std::size_t i = 0; i < world.labels.size() && i < m; ++i)
        out.push_back({world.labels.at(i).name, 0});
      return out;
    };
    const auto first = build_index(world.corpus, src, rec);
    ReplayLlmProvider replay(dir / "store.jsonl");
    const auto second = build_index(world.corpus, src, replay);
    CHECK(first.index == second.index);
    CHECK(first.index == world.gold_index);
  }
}
