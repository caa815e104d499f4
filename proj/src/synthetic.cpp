#include "conceptrank/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "conceptrank/classifier.hpp"
#include "conceptrank/errors.hpp"
#include "conceptrank/io.hpp"
#include "conceptrank/rng.hpp"
#include "conceptrank/text.hpp"
#include "json.hpp"

namespace conceptrank {

using nlohmann::json;

void SyntheticSpec::validate() const {
  if (n_docs < 1 || n_topics < 1 || n_phrases_per_doc < 1 || phrases_per_topic < 1 ||
      embedding_dim < 1) {
    throw ConfigError("synthetic counts must be >= 1");
  }
  if (n_phrases_per_doc > phrases_per_topic) {
    throw ConfigError("n_phrases_per_doc cannot exceed phrases_per_topic");
  }
  if (!(noise_scale >= 0.0)) throw ConfigError("noise_scale must be >= 0");
}

bool SyntheticWorld::operator==(const SyntheticWorld& o) const {
  auto same = [](const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
    return a.dim() == b.dim() && a.ids() == b.ids() && a.data() == b.data();
  };
  return spec == o.spec && corpus.papers() == o.corpus.papers() &&
         labels.topics() == o.labels.topics() && doc_topics == o.doc_topics &&
         gold_index == o.gold_index && same(doc_embeddings, o.doc_embeddings) &&
         same(topic_embeddings, o.topic_embeddings) &&
         same(concept_embeddings, o.concept_embeddings) &&
         same(query_embeddings, o.query_embeddings) && same(centroids, o.centroids) &&
         queries == o.queries && qrels.relevant == o.qrels.relevant &&
         query_concepts == o.query_concepts;
}

namespace {

constexpr const char* kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t",
                                   "v", "z", "br", "tr", "st", "gl"};
constexpr const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "ou"};

class WordMaker {
 public:
  explicit WordMaker(Rng& rng) : rng_(rng) {}
  std::string fresh(std::size_t syllables) {
    while (true) {
      std::string w;
      for (std::size_t s = 0; s < syllables; ++s) {
        w += kOnsets[rng_.below(std::size(kOnsets))];
        w += kVowels[rng_.below(std::size(kVowels))];
      }
      if (used_.insert(w).second) return w;
    }
  }

 private:
  Rng& rng_;
  std::set<std::string> used_;
};

std::vector<float> gaussian(Rng& rng, std::size_t dim, double scale) {
  std::vector<float> v(dim);
  for (auto& x : v) x = static_cast<float>(rng.normal() * scale);
  return v;
}

std::vector<float> unit_gaussian(Rng& rng, std::size_t dim) {
  return normalized(gaussian(rng, dim, 1.0));
}

/// center + isotropic noise whose expected norm is `noise`.
std::vector<float> jitter(Rng& rng, std::span<const float> center, double noise) {
  const double per_dim = noise / std::sqrt(static_cast<double>(center.size()));
  std::vector<float> v(center.begin(), center.end());
  for (auto& x : v) x = static_cast<float>(double(x) + rng.normal() * per_dim);
  return v;
}

void append_row(std::vector<float>& data, std::span<const float> row) {
  data.insert(data.end(), row.begin(), row.end());
}

constexpr const char* kGenericPhrases[] = {"experimental results", "baseline comparison",
                                           "ablation analysis", "benchmark evaluation",
                                           "open source release", "error analysis"};
constexpr const char* kFiller[] = {"we", "propose", "novel", "approach", "study", "show",
                                   "method", "results", "model", "framework", "data", "task"};

}  // namespace

SyntheticWorld generate(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  WordMaker words(rng);
  const std::size_t dim = spec.embedding_dim;

  SyntheticWorld w;
  w.spec = spec;

  // Topics: two pseudo-words each; phrases: topic stem + a fresh word.
  std::vector<Topic> topics;
  std::vector<std::string> stems;
  std::vector<std::vector<std::string>> topic_phrases(spec.n_topics);
  for (std::size_t t = 0; t < spec.n_topics; ++t) {
    stems.push_back(words.fresh(2));
    topics.push_back({"T" + std::to_string(t), stems.back() + " " + words.fresh(3)});
    for (std::size_t p = 0; p < spec.phrases_per_topic; ++p) {
      topic_phrases[t].push_back(stems[t] + " " + words.fresh(2));
    }
  }
  w.labels = LabelSpace(topics);

  std::vector<std::vector<float>> centroids;
  for (std::size_t t = 0; t < spec.n_topics; ++t) centroids.push_back(unit_gaussian(rng, dim));

  // Concept vectors: topic name at its centroid, topic phrases near it,
  // generic phrases anywhere.
  std::vector<std::string> concept_ids;
  std::vector<float> concept_data;
  std::vector<std::string> topic_ids;
  std::vector<float> topic_data;
  std::vector<std::string> centroid_ids;
  std::vector<float> centroid_data;
  for (std::size_t t = 0; t < spec.n_topics; ++t) {
    const auto& name = w.labels.at(t).name;
    concept_ids.push_back(name);
    append_row(concept_data, centroids[t]);
    centroid_ids.push_back(name);
    append_row(centroid_data, centroids[t]);
    topic_ids.push_back(name);
    append_row(topic_data, jitter(rng, centroids[t], 0.3));
    for (const auto& p : topic_phrases[t]) {
      concept_ids.push_back(p);
      append_row(concept_data, normalized(jitter(rng, centroids[t], 0.5)));
    }
  }
  for (const char* g : kGenericPhrases) {
    concept_ids.push_back(g);
    append_row(concept_data, unit_gaussian(rng, dim));
  }

  // Papers.
  std::vector<Paper> papers;
  std::vector<std::string> doc_ids;
  std::vector<float> doc_data;
  const int id_width = static_cast<int>(std::to_string(spec.n_docs).size());
  for (std::size_t i = 0; i < spec.n_docs; ++i) {
    const std::size_t t = i % spec.n_topics;
    std::string id = std::to_string(i);
    id = "D" + std::string(static_cast<std::size_t>(id_width) - id.size(), '0') + id;

    std::vector<std::size_t> pick(spec.phrases_per_topic);
    std::iota(pick.begin(), pick.end(), 0);
    rng.shuffle(std::span(pick));
    IndexEntry entry{id, {w.labels.at(t).name}, {}};
    for (std::size_t p = 0; p < spec.n_phrases_per_doc; ++p) {
      entry.phrases.push_back(topic_phrases[t][pick[p]]);
    }
    const std::string generic = kGenericPhrases[rng.below(std::size(kGenericPhrases))];
    entry.phrases.push_back(generic);

    std::string title = "On " + entry.phrases[0];
    if (entry.phrases.size() > 2) title += " and " + entry.phrases[1];
    std::string abstract;
    for (std::size_t p = 0; p < entry.phrases.size(); ++p) {
      abstract += std::string(kFiller[rng.below(std::size(kFiller))]) + " " +
                  kFiller[rng.below(std::size(kFiller))] + " " + entry.phrases[p] + ". ";
    }
    abstract.pop_back();
    papers.push_back({id, title, abstract});
    w.doc_topics[id] = {w.labels.at(t).name};
    w.gold_index.add(entry);
    doc_ids.push_back(id);
    append_row(doc_data, jitter(rng, centroids[t], spec.noise_scale));
  }
  w.corpus = Corpus(std::move(papers));

  // Queries.
  const std::size_t n_queries = spec.n_queries == 0 ? spec.n_topics : spec.n_queries;
  std::vector<std::string> query_ids;
  std::vector<float> query_data;
  for (std::size_t j = 0; j < n_queries; ++j) {
    const std::size_t t = j % spec.n_topics;
    std::string id = "Q" + std::to_string(j);
    const auto& phrase = topic_phrases[t][rng.below(spec.phrases_per_topic)];
    std::string text = "query " + std::to_string(j) + ": papers about " + phrase;
    w.queries.push_back({id, text});
    auto& planted = w.query_concepts[text];
    planted.insert(w.labels.at(t).name);
    planted.insert(topic_phrases[t].begin(), topic_phrases[t].end());
    for (std::size_t i = t; i < spec.n_docs; i += spec.n_topics) {
      w.qrels.relevant[id].insert(doc_ids[i]);
    }
    query_ids.push_back(id);
    append_row(query_data, jitter(rng, centroids[t], spec.noise_scale));
  }

  w.doc_embeddings = EmbeddingMatrix(dim, std::move(doc_ids), std::move(doc_data));
  w.topic_embeddings = EmbeddingMatrix(dim, std::move(topic_ids), std::move(topic_data));
  w.concept_embeddings = EmbeddingMatrix(dim, std::move(concept_ids), std::move(concept_data));
  w.query_embeddings = EmbeddingMatrix(dim, std::move(query_ids), std::move(query_data));
  w.centroids = EmbeddingMatrix(dim, std::move(centroid_ids), std::move(centroid_data));
  return w;
}

void write_world(const SyntheticWorld& w, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_corpus(w.corpus, dir / "corpus.jsonl");
  save_label_space(w.labels, dir / "labels.tsv");
  save_doc_topics(w.doc_topics, dir / "doc_topics.tsv");
  save_queries(w.queries, dir / "queries.jsonl");
  save_qrels(w.qrels, dir / "qrels.tsv");
  save_index(w.gold_index, dir / "gold_index.jsonl");
  save_matrix(w.doc_embeddings, dir / "doc_embeddings.json");
  save_matrix(w.topic_embeddings, dir / "topic_embeddings.json");
  save_matrix(w.concept_embeddings, dir / "concept_embeddings.json");
  save_matrix(w.query_embeddings, dir / "query_embeddings.json");
  {
    auto out = io::open_out(dir / "query_concepts.jsonl");
    for (const auto& [text, concepts] : w.query_concepts) {
      out << json{{"query", text}, {"concepts", concepts}}.dump() << '\n';
    }
  }
  json spec{{"n_docs", w.spec.n_docs},
            {"n_topics", w.spec.n_topics},
            {"n_phrases_per_doc", w.spec.n_phrases_per_doc},
            {"phrases_per_topic", w.spec.phrases_per_topic},
            {"embedding_dim", w.spec.embedding_dim},
            {"n_queries", w.spec.n_queries},
            {"noise_scale", w.spec.noise_scale},
            {"seed", w.spec.seed},
            {"rng", "mt19937_64"}};
  io::open_out(dir / "world.json") << spec.dump(1) << '\n';
}

ScriptedWorldLlm::ScriptedWorldLlm(const SyntheticWorld& world)
    : query_concepts_(world.query_concepts) {
  for (const auto& p : world.corpus.papers()) {
    if (const auto* e = world.gold_index.find(p.id)) by_paper_text_[p.text()] = *e;
  }
}

ScriptedWorldLlm ScriptedWorldLlm::from_dir(const std::filesystem::path& dir) {
  ScriptedWorldLlm s;
  const auto corpus = load_corpus(dir / "corpus.jsonl");
  const auto gold = load_index(dir / "gold_index.jsonl");
  for (const auto& p : corpus.papers()) {
    if (const auto* e = gold.find(p.id)) s.by_paper_text_[p.text()] = *e;
  }
  io::for_each_line(dir / "query_concepts.jsonl", [&](std::string_view line, std::size_t n) {
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw FormatError((dir / "query_concepts.jsonl").string(), n, "bad JSON");
    s.query_concepts_[j.at("query").get<std::string>()] =
        j.at("concepts").get<std::set<std::string>>();
  });
  return s;
}

namespace {

/// Text after `marker` up to the end of its line.
std::string line_after(const std::string& text, const std::string& marker) {
  auto pos = text.rfind(marker);
  if (pos == std::string::npos) return {};
  pos += marker.size();
  auto end = text.find('\n', pos);
  return text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
}

/// "a (3), b (1)" or "a, b" -> {"a", "b"}.
std::vector<std::string> candidate_names(const std::string& line) {
  std::vector<std::string> out;
  for (auto item : split(line, ',')) {
    auto trimmed = std::string(trim(item));
    if (!trimmed.empty() && trimmed.back() == ')') {
      auto open = trimmed.rfind(" (");
      if (open != std::string::npos) trimmed.resize(open);
    }
    trimmed = canonicalize(trimmed);
    if (!trimmed.empty()) out.push_back(trimmed);
  }
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? ", " : "") + items[i];
  return out;
}

}  // namespace

std::string ScriptedWorldLlm::operator()(const std::string& prompt) const {
  static const std::string kQuery = "Original Query: ";
  static const std::string kPaper = "Paper: ";
  static const std::string kCandidates = "\n\nCandidate topics: ";

  if (prompt.find(kQuery) != std::string::npos) {
    const auto query = line_after(prompt, kQuery);
    auto it = query_concepts_.find(query);
    if (it == query_concepts_.end()) return "<ans></ans>";
    const auto& planted = it->second;
    const bool has_candidates = prompt.find("Candidate topics: ") != std::string::npos;
    if (!has_candidates) {
      return "<ans>" + join({planted.begin(), planted.end()}) + "</ans>";
    }
    std::vector<std::string> picked;
    for (const auto& c : candidate_names(line_after(prompt, "Candidate topics: "))) {
      if (planted.count(c)) picked.push_back(c);
    }
    for (const auto& c : candidate_names(line_after(prompt, "Candidate key terms: "))) {
      if (planted.count(c)) picked.push_back(c);
    }
    return "<ans>" + join(picked) + "</ans>";
  }

  const auto paper_pos = prompt.rfind(kPaper);
  if (paper_pos == std::string::npos) return "I cannot help with that.";
  const auto body = prompt.substr(paper_pos + kPaper.size());
  const auto cand_pos = body.rfind(kCandidates);
  const auto paper_text = body.substr(0, cand_pos);
  const auto offered =
      cand_pos == std::string::npos ? std::vector<std::string>{}
                                    : candidate_names(line_after(body, "Candidate topics: "));
  auto it = by_paper_text_.find(paper_text);
  if (it == by_paper_text_.end()) return "<top></top>\n<kp></kp>";
  std::vector<std::string> topics;
  for (const auto& t : it->second.topics) {
    if (std::find(offered.begin(), offered.end(), t) != offered.end()) topics.push_back(t);
  }
  return "Rationale: planted concepts.\n<top>" + join(topics) + "</top>\n<kp>" +
         join(it->second.phrases) + "</kp>";
}

std::shared_ptr<MockLlmProvider> ScriptedWorldLlm::provider() const {
  return std::make_shared<MockLlmProvider>(
      [script = *this](const std::string& prompt) { return script(prompt); });
}

}  // namespace conceptrank
