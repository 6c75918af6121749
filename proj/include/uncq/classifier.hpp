#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "uncq/corpus.hpp"

namespace uncq {

using TokenView = std::span<const std::string>;
using TokenBatch = std::vector<std::vector<std::string>>;

struct Logits {
  std::vector<double> values;  // length C, pre-softmax
};

struct Prediction {
  Logits logits;
  std::vector<double> probs;
  int predicted_class = 0;  // argmax of probs, ties to the lowest index
  double confidence = 0.0;  // probs[predicted_class]
};

// The black-box probabilistic classifier every explanation method queries.
// Implementations must be total on every token subsequence, including the
// empty one (perturbations can delete everything), and safe for concurrent
// read queries.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual const LabelSpace& label_space() const = 0;
  virtual Logits raw_logits(TokenView tokens) const = 0;

  // Element-wise raw_logits; adapters may override to batch transport.
  virtual std::vector<Logits> raw_logits_batch(const TokenBatch& inputs) const;
};

// softmax(values / temperature), stabilized by subtracting the max logit.
std::vector<double> softmax(const Logits& logits, double temperature);

Prediction prediction_from_logits(Logits logits, double temperature);
Prediction predict(const Classifier& model, TokenView tokens, double temperature = 1.0);
std::vector<Prediction> predict_batch(const Classifier& model, const TokenBatch& inputs,
                                      double temperature = 1.0);

// Multinomial Naive Bayes over the training vocabulary. Desk-scale stand-in
// for the heavyweight models the explanation machinery is meant to probe.
//
// logit_c = log_prior_c + sum over tokens of weight_c(token); tokens outside
// the vocabulary contribute nothing, so the empty input yields the priors.
// Token contributions are accumulated in sorted vocabulary-id order, which
// makes predictions exactly order-invariant.
class BagOfWordsModel : public Classifier {
 public:
  BagOfWordsModel() = default;
  BagOfWordsModel(LabelSpace label_space, std::vector<double> log_priors,
                  std::vector<std::string> vocab_tokens,
                  std::vector<std::vector<double>> token_weights, double alpha);

  const LabelSpace& label_space() const override { return label_space_; }
  Logits raw_logits(TokenView tokens) const override;

  double alpha() const { return alpha_; }
  const std::vector<double>& log_priors() const { return log_priors_; }
  std::size_t vocab_size() const { return vocab_tokens_.size(); }
  // Per-class log-likelihood weights for a token; zeros when out of vocabulary.
  std::vector<double> token_weights(const std::string& token) const;

  void save(const std::filesystem::path& path) const;
  static BagOfWordsModel load(const std::filesystem::path& path);

 private:
  LabelSpace label_space_;
  std::vector<double> log_priors_;                 // length C
  std::vector<std::string> vocab_tokens_;          // token by dense id
  std::vector<std::vector<double>> token_weights_; // [token id][class]
  std::unordered_map<std::string, int> token_ids_;
  double alpha_ = 1.0;
};

// Naive Bayes fit: log_prior_c = log(count(c)/n), weight_c(t) =
// log((count(t,c)+alpha) / sum_t'(count(t',c)+alpha)) with t' over the
// training vocabulary. Requires gold labels on every example and at least
// one example per class.
BagOfWordsModel train_bow(const Corpus& train, double alpha);

}  // namespace uncq
