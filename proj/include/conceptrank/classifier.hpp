#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "conceptrank/corpus.hpp"
#include "conceptrank/embedding.hpp"

namespace conceptrank {

/// How the bilinear logit z = t^T W d becomes a membership probability.
enum class Link {
  sigmoid_exp,  // sigma(exp(z)); always > 0.5
  sigmoid,      // sigma(z)
};
Link parse_link(const std::string& name);
std::string to_string(Link link);

struct ClassifierParams {
  Eigen::MatrixXd W;       // dim x dim interaction matrix
  Eigen::MatrixXd topics;  // |labels| x dim, one row per topic

  std::size_t dim() const { return static_cast<std::size_t>(W.rows()); }
  std::size_t topic_count() const { return static_cast<std::size_t>(topics.rows()); }
  bool operator==(const ClassifierParams& o) const { return W == o.W && topics == o.topics; }
};

/// W starts at the identity; topic rows copy the encoder's topic-name vectors.
ClassifierParams init_params(const Eigen::MatrixXd& topic_embeddings);

struct TrainingConfig {
  double learning_rate = 5e-5;
  int epochs = 10;
  double alpha = 1e-2;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double logit_clamp = 30.0;
  Link link = Link::sigmoid_exp;

  /// Throws ConfigError on an invalid field.
  void validate() const;
};

/// Frozen document vectors with their positive topic indices.
struct LabeledCorpus {
  Eigen::MatrixXd docs;                            // n x dim
  std::vector<std::vector<std::size_t>> positives;  // per row, indices into the label space

  std::size_t size() const { return positives.size(); }
};

/// Rows are `paper_id<TAB>topic name|topic name|...`.
std::map<std::string, std::vector<std::string>> load_doc_topics(const std::filesystem::path& path);
void save_doc_topics(const std::map<std::string, std::vector<std::string>>& doc_topics,
                     const std::filesystem::path& path);

/// Joins per-paper topic names with their embedding rows. Papers without a
/// row are skipped; unknown topic names raise UnknownId.
LabeledCorpus make_labeled_corpus(const EmbeddingMatrix& doc_embeddings,
                                  const std::map<std::string, std::vector<std::string>>& doc_topics,
                                  const LabelSpace& labels);

/// Looks each label-space topic up by name, then by id.
Eigen::MatrixXd topic_matrix(const EmbeddingMatrix& topic_embeddings, const LabelSpace& labels);

Eigen::VectorXd to_vector(std::span<const float> v);

double logit(const ClassifierParams& params, const Eigen::VectorXd& doc, std::size_t topic);

/// Stable evaluation of the link applied to the clamped logit.
double predict_proba(const ClassifierParams& params, const Eigen::VectorXd& doc,
                     std::size_t topic, Link link = Link::sigmoid_exp, double logit_clamp = 30.0);
double link_probability(double z, Link link, double logit_clamp);

struct LossAndGradients {
  double loss = 0.0;
  Eigen::MatrixXd grad_W;
  Eigen::MatrixXd grad_topics;
};

/// Down-weighted BCE summed over `rows` of `corpus`:
///   -sum_i [ sum_{t in T_i} log p + alpha sum_{t not in T_i} log(1 - p) ]
/// Both log terms are floored at log(1e-12). Document vectors get no gradient.
LossAndGradients loss_and_gradients(const ClassifierParams& params, const LabeledCorpus& corpus,
                                    std::span<const std::size_t> rows,
                                    const TrainingConfig& config);
double total_loss(const ClassifierParams& params, const LabeledCorpus& corpus,
                  const TrainingConfig& config);

struct TrainResult {
  ClassifierParams params;
  /// Full-corpus loss after each epoch.
  std::vector<double> epoch_losses;
  double initial_loss = 0.0;
};

/// Plain mini-batch gradient descent, batch order reshuffled each epoch from
/// `config.seed`.
TrainResult train(const LabeledCorpus& corpus, ClassifierParams initial,
                  const TrainingConfig& config);

struct TopicScore {
  std::string topic;
  double logit = 0.0;
};

/// Top `m` topics by raw logit, ties by topic name.
std::vector<TopicScore> predict_candidates(const ClassifierParams& params,
                                           const LabelSpace& labels, const Eigen::VectorXd& doc,
                                           std::size_t m);

/// A trained classifier bundled with its label space and link settings.
struct TopicClassifier {
  LabelSpace labels;
  ClassifierParams params;
  Link link = Link::sigmoid_exp;
  double logit_clamp = 30.0;

  std::vector<TopicScore> candidates(std::span<const float> doc, std::size_t m) const {
    return predict_candidates(params, labels, to_vector(doc), m);
  }
};

/// Writes `<dir>/classifier.json` plus W and topic matrices in the embedding
/// matrix format.
void save_classifier(const TopicClassifier& classifier, const std::filesystem::path& dir);
TopicClassifier load_classifier(const std::filesystem::path& dir);

}  // namespace conceptrank
