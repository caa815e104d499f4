#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "conceptrank/classifier.hpp"
#include "conceptrank/cli.hpp"
#include "conceptrank/embedding.hpp"
#include "conceptrank/errors.hpp"
#include "conceptrank/eval.hpp"
#include "conceptrank/llm.hpp"
#include "conceptrank/ranking.hpp"
#include "conceptrank/retrieval.hpp"
#include "conceptrank/text.hpp"

namespace py = pybind11;
using namespace conceptrank;

namespace {

using Hits = std::vector<std::pair<std::string, double>>;

Hits to_hits(const ScoredList& list) {
  Hits out;
  for (const auto& e : list.entries()) out.emplace_back(e.paper_id, e.s_final);
  return out;
}

ScoredList from_hits(const Hits& hits) {
  std::vector<ScoredEntry> entries;
  for (const auto& [id, s] : hits) entries.push_back({id, s, std::nullopt, s});
  return ScoredList("q", std::move(entries));
}

const PromptTemplate& template_named(const std::string& name) {
  if (name == "index_build") return index_build_template();
  if (name == "core_concepts") return core_concepts_template();
  if (name == "core_concepts_no_corpus") return core_concepts_no_corpus_template();
  throw ConfigError("unknown template: " + name);
}

}  // namespace

PYBIND11_MODULE(_conceptrank, m) {
  m.doc() = "Concept-based re-ranking of scientific papers";

  py::register_exception<Error>(m, "ConceptrankError", PyExc_RuntimeError);

  m.def("tokenize", [](const std::string& s) { return tokenize(s); });
  m.def("canonicalize", [](const std::string& s) { return canonicalize(s); });
  m.def("cosine", [](const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) throw py::value_error("vectors differ in length");
    return cosine(a, b);
  });

  m.def(
      "bm25_search",
      [](const std::vector<std::tuple<std::string, std::string, std::string>>& papers,
         const std::string& query, std::size_t top_n) {
        std::vector<Paper> ps;
        for (const auto& [id, title, abstract] : papers) ps.push_back({id, title, abstract});
        const Bm25Index index{Corpus(std::move(ps))};
        return to_hits(bm25_search(index, {"q", query}, top_n));
      },
      py::arg("papers"), py::arg("query"), py::arg("top_n") = 100,
      "Papers are (id, title, abstract) triples; returns (id, score) pairs.");
  m.def(
      "hybrid_fuse",
      [](const Hits& bm25, const Hits& dense, std::size_t top_n) {
        return to_hits(hybrid_search(from_hits(bm25), from_hits(dense), top_n));
      },
      py::arg("bm25"), py::arg("dense"), py::arg("top_n") = 100);

  m.def("recall_at_k",
        [](const std::vector<std::string>& ranking, const std::set<std::string>& relevant,
           std::size_t K) { return recall_at_k(ranking, relevant, K); });

  m.def("parse_tagged_list", [](const std::string& text, const std::string& tag) {
    return parse_tagged_list(text, tag);
  });
  m.def("render_prompt",
        [](const std::string& name, const std::map<std::string, std::string>& bindings) {
          return render_prompt(template_named(name), bindings);
        });
  m.def("prompt_hash", [](const std::string& s) { return prompt_hash(s); });

  m.def(
      "predict_proba",
      [](const Eigen::MatrixXd& W, const Eigen::MatrixXd& topics, const Eigen::VectorXd& doc,
         std::size_t topic, const std::string& link) {
        if (W.rows() != W.cols() || topics.cols() != W.rows() || doc.size() != W.rows())
          throw py::value_error("shape mismatch");
        if (topic >= static_cast<std::size_t>(topics.rows()))
          throw py::index_error("topic out of range");
        return predict_proba({W, topics}, doc, topic, parse_link(link));
      },
      py::arg("W"), py::arg("topics"), py::arg("doc"), py::arg("topic"),
      py::arg("link") = "sigmoid_exp");

  m.def(
      "semantic_score",
      [](const std::vector<std::string>& query_concepts, const std::vector<std::string>& topics,
         const std::vector<std::string>& phrases,
         const std::map<std::string, std::vector<float>>& vectors) {
        if (query_concepts.empty()) throw py::value_error("query concepts must be non-empty");
        ConceptEmbeddingCache cache(vectors.empty() ? 0 : vectors.begin()->second.size());
        for (const auto& [name, v] : vectors) cache.insert(name, v);
        return semantic_score(query_concepts, IndexEntry{"d", topics, phrases}, cache);
      },
      py::arg("query_concepts"), py::arg("topics"), py::arg("phrases"), py::arg("vectors"));

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::dispatch(args, out, err);
        }
        return std::make_tuple(code, out.str(), err.str());
      },
      "Runs one CLI subcommand; returns (exit_code, stdout, stderr).");
}
