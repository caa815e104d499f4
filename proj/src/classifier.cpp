#include "conceptrank/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "conceptrank/errors.hpp"
#include "conceptrank/io.hpp"
#include "conceptrank/rng.hpp"
#include "conceptrank/text.hpp"
#include "json.hpp"

namespace conceptrank {

using nlohmann::json;

namespace {

const double kLogFloor = std::log(1e-12);

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log p, log(1 - p) and their derivatives with respect to the raw logit.
struct LinkTerms {
  double log_p;
  double log_1mp;
  double dlog_p;
  double dlog_1mp;
};

LinkTerms link_terms(double z, Link link, double clamp) {
  const bool clamped = z < -clamp || z > clamp;
  const double zc = std::clamp(z, -clamp, clamp);
  // a is the argument of the final sigmoid; da is d a / d z.
  double a = zc;
  double da = clamped ? 0.0 : 1.0;
  if (link == Link::sigmoid_exp) {
    a = std::exp(zc);
    da = clamped ? 0.0 : a;
  }
  const double p = sigmoid(a);
  LinkTerms t{-softplus(-a), -softplus(a), (1.0 - p) * da, -p * da};
  if (t.log_p < kLogFloor) {
    t.log_p = kLogFloor;
    t.dlog_p = 0.0;
  }
  if (t.log_1mp < kLogFloor) {
    t.log_1mp = kLogFloor;
    t.dlog_1mp = 0.0;
  }
  return t;
}

}  // namespace

Link parse_link(const std::string& name) {
  if (name == "sigmoid_exp") return Link::sigmoid_exp;
  if (name == "sigmoid") return Link::sigmoid;
  throw ConfigError("unknown link: " + name);
}

std::string to_string(Link link) { return link == Link::sigmoid ? "sigmoid" : "sigmoid_exp"; }

ClassifierParams init_params(const Eigen::MatrixXd& topic_embeddings) {
  const auto dim = topic_embeddings.cols();
  return {Eigen::MatrixXd::Identity(dim, dim), topic_embeddings};
}

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(alpha > 0.0) || alpha > 1.0) throw ConfigError("alpha must be in (0, 1]");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(logit_clamp > 0.0)) throw ConfigError("logit_clamp must be > 0");
}

std::map<std::string, std::vector<std::string>> load_doc_topics(const std::filesystem::path& path) {
  std::map<std::string, std::vector<std::string>> out;
  io::for_each_line(path, [&](std::string_view line, std::size_t n) {
    auto tab = line.find('\t');
    if (tab == std::string_view::npos) {
      throw FormatError(path.string(), n, "expected paper_id<TAB>topic|topic...");
    }
    std::string id(trim(line.substr(0, tab)));
    auto& topics = out[id];
    for (const auto& name : split(line.substr(tab + 1), '|')) {
      auto canon = canonicalize(name);
      if (!canon.empty()) topics.push_back(std::move(canon));
    }
  });
  return out;
}

void save_doc_topics(const std::map<std::string, std::vector<std::string>>& doc_topics,
                     const std::filesystem::path& path) {
  auto out = io::open_out(path);
  for (const auto& [id, topics] : doc_topics) {
    out << id << '\t';
    for (std::size_t i = 0; i < topics.size(); ++i) out << (i ? "|" : "") << topics[i];
    out << '\n';
  }
}

Eigen::VectorXd to_vector(std::span<const float> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

LabeledCorpus make_labeled_corpus(const EmbeddingMatrix& doc_embeddings,
                                  const std::map<std::string, std::vector<std::string>>& doc_topics,
                                  const LabelSpace& labels) {
  LabeledCorpus corpus;
  std::vector<std::span<const float>> rows;
  for (const auto& [id, names] : doc_topics) {
    auto row = doc_embeddings.find(id);
    if (row.empty()) continue;
    std::vector<std::size_t> positives;
    for (const auto& name : names) {
      auto idx = labels.index_of(name);
      if (!idx) throw UnknownId(name);
      positives.push_back(*idx);
    }
    std::sort(positives.begin(), positives.end());
    positives.erase(std::unique(positives.begin(), positives.end()), positives.end());
    rows.push_back(row);
    corpus.positives.push_back(std::move(positives));
  }
  const auto dim = static_cast<Eigen::Index>(doc_embeddings.dim());
  corpus.docs.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    corpus.docs.row(static_cast<Eigen::Index>(i)) = to_vector(rows[i]).transpose();
  }
  return corpus;
}

Eigen::MatrixXd topic_matrix(const EmbeddingMatrix& topic_embeddings, const LabelSpace& labels) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(labels.size()),
                      static_cast<Eigen::Index>(topic_embeddings.dim()));
  for (std::size_t j = 0; j < labels.size(); ++j) {
    const auto& topic = labels.at(j);
    auto row = topic_embeddings.find(topic.name);
    if (row.empty()) row = topic_embeddings.find(topic.id);
    if (row.empty()) throw MissingConcepts({topic.name});
    out.row(static_cast<Eigen::Index>(j)) = to_vector(row).transpose();
  }
  return out;
}

double logit(const ClassifierParams& params, const Eigen::VectorXd& doc, std::size_t topic) {
  return params.topics.row(static_cast<Eigen::Index>(topic)).dot(params.W * doc);
}

double link_probability(double z, Link link, double logit_clamp) {
  const double zc = std::clamp(z, -logit_clamp, logit_clamp);
  return sigmoid(link == Link::sigmoid_exp ? std::exp(zc) : zc);
}

double predict_proba(const ClassifierParams& params, const Eigen::VectorXd& doc,
                     std::size_t topic, Link link, double logit_clamp) {
  return link_probability(logit(params, doc, topic), link, logit_clamp);
}

LossAndGradients loss_and_gradients(const ClassifierParams& params, const LabeledCorpus& corpus,
                                    std::span<const std::size_t> rows,
                                    const TrainingConfig& config) {
  if (rows.empty()) throw ConfigError("empty batch");
  const auto batch = static_cast<Eigen::Index>(rows.size());
  const auto dim = params.W.rows();
  const auto n_topics = params.topics.rows();

  Eigen::MatrixXd docs(batch, dim);
  for (Eigen::Index b = 0; b < batch; ++b) {
    docs.row(b) = corpus.docs.row(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(b)]));
  }
  // Row b of projected is (W d_b)^T; logits(b, j) = t_j^T W d_b.
  const Eigen::MatrixXd projected = docs * params.W.transpose();
  const Eigen::MatrixXd logits = projected * params.topics.transpose();

  Eigen::MatrixXd dloss(batch, n_topics);
  double loss = 0.0;
  std::vector<char> positive(static_cast<std::size_t>(n_topics));
  for (Eigen::Index b = 0; b < batch; ++b) {
    std::fill(positive.begin(), positive.end(), 0);
    for (auto j : corpus.positives[rows[static_cast<std::size_t>(b)]]) positive[j] = 1;
    for (Eigen::Index j = 0; j < n_topics; ++j) {
      const auto t = link_terms(logits(b, j), config.link, config.logit_clamp);
      if (positive[static_cast<std::size_t>(j)]) {
        loss -= t.log_p;
        dloss(b, j) = -t.dlog_p;
      } else {
        loss -= config.alpha * t.log_1mp;
        dloss(b, j) = -config.alpha * t.dlog_1mp;
      }
    }
  }

  LossAndGradients out;
  out.loss = loss;
  // dL/dW = sum_{b,j} dloss(b,j) t_j d_b^T ; dL/dt_j = sum_b dloss(b,j) W d_b.
  out.grad_W = (dloss * params.topics).transpose() * docs;
  out.grad_topics = dloss.transpose() * projected;
  return out;
}

double total_loss(const ClassifierParams& params, const LabeledCorpus& corpus,
                  const TrainingConfig& config) {
  std::vector<std::size_t> rows(corpus.size());
  std::iota(rows.begin(), rows.end(), 0);
  return loss_and_gradients(params, corpus, rows, config).loss;
}

TrainResult train(const LabeledCorpus& corpus, ClassifierParams initial,
                  const TrainingConfig& config) {
  config.validate();
  if (corpus.size() == 0) throw ConfigError("training corpus is empty");
  TrainResult result{std::move(initial), {}, 0.0};
  result.initial_loss = total_loss(result.params, corpus, config);

  Rng rng(config.seed);
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span(order));
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const auto len = std::min(config.batch_size, order.size() - start);
      auto step = loss_and_gradients(result.params, corpus,
                                     std::span(order).subspan(start, len), config);
      if (!std::isfinite(step.loss) || !step.grad_W.allFinite() || !step.grad_topics.allFinite()) {
        throw TrainingDiverged(epoch, batch_index);
      }
      result.params.W -= config.learning_rate * step.grad_W;
      result.params.topics -= config.learning_rate * step.grad_topics;
    }
    const double loss = total_loss(result.params, corpus, config);
    if (!std::isfinite(loss)) throw TrainingDiverged(epoch, batch_index);
    result.epoch_losses.push_back(loss);
  }
  return result;
}

std::vector<TopicScore> predict_candidates(const ClassifierParams& params,
                                           const LabelSpace& labels, const Eigen::VectorXd& doc,
                                           std::size_t m) {
  if (m < 1) throw ConfigError("candidate count m must be >= 1");
  const Eigen::VectorXd logits = params.topics * (params.W * doc);
  std::vector<TopicScore> scores;
  scores.reserve(labels.size());
  for (std::size_t j = 0; j < labels.size(); ++j) {
    scores.push_back({labels.at(j).name, logits[static_cast<Eigen::Index>(j)]});
  }
  auto before = [](const TopicScore& a, const TopicScore& b) {
    return ranks_before(a.logit, a.topic, b.logit, b.topic);
  };
  const auto keep = std::min(m, scores.size());
  std::partial_sort(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(keep),
                    scores.end(), before);
  scores.resize(keep);
  return scores;
}

namespace {

EmbeddingMatrix to_matrix(const Eigen::MatrixXd& m, std::vector<std::string> ids) {
  std::vector<float> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(static_cast<float>(m(r, c)));
  }
  return EmbeddingMatrix(static_cast<std::size_t>(m.cols()), std::move(ids), std::move(data));
}

Eigen::MatrixXd from_matrix(const EmbeddingMatrix& m) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.dim()));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = to_vector(m.row(r)).transpose();
  }
  return out;
}

}  // namespace

void save_classifier(const TopicClassifier& classifier, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> w_ids;
  for (std::size_t i = 0; i < classifier.params.dim(); ++i) w_ids.push_back(std::to_string(i));
  std::vector<std::string> topic_ids;
  for (const auto& t : classifier.labels.topics()) topic_ids.push_back(t.name);
  save_matrix(to_matrix(classifier.params.W, std::move(w_ids)), dir / "W.json");
  save_matrix(to_matrix(classifier.params.topics, std::move(topic_ids)), dir / "topics.json");
  save_label_space(classifier.labels, dir / "labels.tsv");
  json manifest{{"link", to_string(classifier.link)},
                {"logit_clamp", classifier.logit_clamp},
                {"W", "W.json"},
                {"topics", "topics.json"},
                {"labels", "labels.tsv"}};
  io::open_out(dir / "classifier.json") << manifest.dump(1) << '\n';
}

TopicClassifier load_classifier(const std::filesystem::path& dir) {
  json manifest;
  try {
    manifest = json::parse(io::read_file(dir / "classifier.json"));
  } catch (const json::exception& e) {
    throw FormatError((dir / "classifier.json").string(), 0, e.what());
  }
  TopicClassifier c;
  c.labels = load_label_space(dir / manifest.value("labels", "labels.tsv"));
  c.link = parse_link(manifest.value("link", "sigmoid_exp"));
  c.logit_clamp = manifest.value("logit_clamp", 30.0);
  c.params.W = from_matrix(load_matrix(dir / manifest.value("W", "W.json")));
  auto topics = load_matrix(dir / manifest.value("topics", "topics.json"));
  c.params.topics = topic_matrix(topics, c.labels);
  if (c.params.W.rows() != c.params.W.cols() || c.params.topics.cols() != c.params.W.rows()) {
    throw FormatError(dir.string(), 0, "inconsistent classifier dimensions");
  }
  return c;
}

}  // namespace conceptrank
