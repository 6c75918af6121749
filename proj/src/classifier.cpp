#include "uncq/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "uncq/errors.hpp"
#include "uncq/io_util.hpp"

namespace uncq {

std::vector<Logits> Classifier::raw_logits_batch(const TokenBatch& inputs) const {
  std::vector<Logits> out;
  out.reserve(inputs.size());
  for (const auto& tokens : inputs) out.push_back(raw_logits(tokens));
  return out;
}

std::vector<double> softmax(const Logits& logits, double temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("softmax: temperature must be > 0");
  }
  if (logits.values.empty()) throw std::invalid_argument("softmax: empty logits");
  for (double v : logits.values) {
    if (!std::isfinite(v)) throw std::invalid_argument("softmax: non-finite logit");
  }
  double max_scaled = logits.values[0] / temperature;
  for (double v : logits.values) max_scaled = std::max(max_scaled, v / temperature);
  std::vector<double> probs(logits.values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    probs[i] = std::exp(logits.values[i] / temperature - max_scaled);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

Prediction prediction_from_logits(Logits logits, double temperature) {
  Prediction pred;
  pred.probs = softmax(logits, temperature);
  pred.logits = std::move(logits);
  pred.predicted_class = 0;
  for (std::size_t i = 1; i < pred.probs.size(); ++i) {
    if (pred.probs[i] > pred.probs[pred.predicted_class]) {
      pred.predicted_class = static_cast<int>(i);
    }
  }
  pred.confidence = pred.probs[static_cast<std::size_t>(pred.predicted_class)];
  return pred;
}

Prediction predict(const Classifier& model, TokenView tokens, double temperature) {
  return prediction_from_logits(model.raw_logits(tokens), temperature);
}

std::vector<Prediction> predict_batch(const Classifier& model, const TokenBatch& inputs,
                                      double temperature) {
  std::vector<Logits> logits = model.raw_logits_batch(inputs);
  std::vector<Prediction> out;
  out.reserve(logits.size());
  for (auto& l : logits) out.push_back(prediction_from_logits(std::move(l), temperature));
  return out;
}

BagOfWordsModel::BagOfWordsModel(LabelSpace label_space, std::vector<double> log_priors,
                                 std::vector<std::string> vocab_tokens,
                                 std::vector<std::vector<double>> token_weights, double alpha)
    : label_space_(std::move(label_space)),
      log_priors_(std::move(log_priors)),
      vocab_tokens_(std::move(vocab_tokens)),
      token_weights_(std::move(token_weights)),
      alpha_(alpha) {
  if (!(alpha_ > 0.0)) throw std::invalid_argument("BagOfWordsModel: alpha must be > 0");
  auto c = static_cast<std::size_t>(label_space_.size());
  if (log_priors_.size() != c) {
    throw std::invalid_argument("BagOfWordsModel: log_priors length mismatch");
  }
  if (token_weights_.size() != vocab_tokens_.size()) {
    throw std::invalid_argument("BagOfWordsModel: weight table shape mismatch");
  }
  for (const auto& row : token_weights_) {
    if (row.size() != c) {
      throw std::invalid_argument("BagOfWordsModel: weight table shape mismatch");
    }
  }

  // Canonicalize internal ids to lexicographic token order. Logit
  // accumulation follows id order, so a model reloaded from disk produces
  // bit-identical logits to the one it was saved from.
  std::vector<std::size_t> order(vocab_tokens_.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return vocab_tokens_[a] < vocab_tokens_[b]; });
  std::vector<std::string> sorted_tokens(vocab_tokens_.size());
  std::vector<std::vector<double>> sorted_weights(vocab_tokens_.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted_tokens[i] = std::move(vocab_tokens_[order[i]]);
    sorted_weights[i] = std::move(token_weights_[order[i]]);
  }
  vocab_tokens_ = std::move(sorted_tokens);
  token_weights_ = std::move(sorted_weights);

  token_ids_.reserve(vocab_tokens_.size());
  for (std::size_t i = 0; i < vocab_tokens_.size(); ++i) {
    if (!token_ids_.emplace(vocab_tokens_[i], static_cast<int>(i)).second) {
      throw std::invalid_argument("BagOfWordsModel: duplicate vocabulary token " + vocab_tokens_[i]);
    }
  }
}

Logits BagOfWordsModel::raw_logits(TokenView tokens) const {
  // Resolve tokens to ids, then accumulate in sorted id order: the logits of
  // a permuted input are bit-identical, not merely close.
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& token : tokens) {
    auto it = token_ids_.find(token);
    if (it != token_ids_.end()) ids.push_back(it->second);
  }
  std::sort(ids.begin(), ids.end());

  Logits logits;
  logits.values = log_priors_;
  for (int id : ids) {
    const auto& row = token_weights_[static_cast<std::size_t>(id)];
    for (std::size_t c = 0; c < logits.values.size(); ++c) logits.values[c] += row[c];
  }
  return logits;
}

std::vector<double> BagOfWordsModel::token_weights(const std::string& token) const {
  auto it = token_ids_.find(token);
  if (it == token_ids_.end()) return std::vector<double>(log_priors_.size(), 0.0);
  return token_weights_[static_cast<std::size_t>(it->second)];
}

BagOfWordsModel train_bow(const Corpus& train, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("train_bow: alpha must be > 0");
  if (train.examples.empty()) throw std::invalid_argument("train_bow: empty training corpus");
  int num_classes = train.label_space.size();
  if (num_classes < 2) {
    throw std::invalid_argument("train_bow: need at least 2 classes, got " +
                                std::to_string(num_classes));
  }

  // Vocabulary = every distinct training token, ordered by the frequency/tie
  // rule so the fitted model is independent of example order.
  Vocabulary vocab = build_vocab(train, 1);
  auto v = vocab.size();
  auto c = static_cast<std::size_t>(num_classes);

  std::vector<std::int64_t> class_counts(c, 0);
  std::vector<std::vector<std::int64_t>> token_counts(v, std::vector<std::int64_t>(c, 0));
  for (const auto& example : train.examples) {
    if (!example.gold_label.has_value()) {
      throw std::invalid_argument("train_bow: example \"" + example.id + "\" has no gold label");
    }
    auto label = static_cast<std::size_t>(*example.gold_label);
    ++class_counts[label];
    for (const auto& token : example.tokens) {
      token_counts[static_cast<std::size_t>(*vocab.id_of(token))][label] += 1;
    }
  }
  for (std::size_t y = 0; y < c; ++y) {
    if (class_counts[y] == 0) {
      throw std::invalid_argument("train_bow: class \"" + train.label_space.name(static_cast<int>(y)) +
                                  "\" has no training examples");
    }
  }

  std::vector<double> log_priors(c);
  auto n = static_cast<double>(train.examples.size());
  for (std::size_t y = 0; y < c; ++y) {
    log_priors[y] = std::log(static_cast<double>(class_counts[y]) / n);
  }

  std::vector<double> class_totals(c, 0.0);
  for (std::size_t y = 0; y < c; ++y) {
    std::int64_t total = 0;
    for (std::size_t t = 0; t < v; ++t) total += token_counts[t][y];
    class_totals[y] = static_cast<double>(total) + alpha * static_cast<double>(v);
  }

  std::vector<std::string> vocab_tokens(v);
  std::vector<std::vector<double>> weights(v, std::vector<double>(c));
  for (std::size_t t = 0; t < v; ++t) {
    vocab_tokens[t] = vocab.token(static_cast<int>(t));
    for (std::size_t y = 0; y < c; ++y) {
      weights[t][y] = std::log((static_cast<double>(token_counts[t][y]) + alpha) / class_totals[y]);
    }
  }

  return BagOfWordsModel(train.label_space, std::move(log_priors), std::move(vocab_tokens),
                         std::move(weights), alpha);
}

void BagOfWordsModel::save(const std::filesystem::path& path) const {
  nlohmann::json weights = nlohmann::json::object();
  for (std::size_t t = 0; t < vocab_tokens_.size(); ++t) {
    weights[vocab_tokens_[t]] = token_weights_[t];
  }
  nlohmann::json doc{
      {"label_space", label_space_.names()},
      {"log_priors", log_priors_},
      {"weights", weights},
      {"alpha", alpha_},
  };
  write_file(path, doc.dump(2) + "\n");
}

BagOfWordsModel BagOfWordsModel::load(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw RunError("malformed model file " + path.string() + ": " + e.what());
  }
  try {
    LabelSpace labels(doc.at("label_space").get<std::vector<std::string>>());
    auto priors = doc.at("log_priors").get<std::vector<double>>();
    double alpha = doc.at("alpha").get<double>();
    std::vector<std::string> tokens;
    std::vector<std::vector<double>> weights;
    for (const auto& [token, row] : doc.at("weights").items()) {
      tokens.push_back(token);
      weights.push_back(row.get<std::vector<double>>());
    }
    return BagOfWordsModel(std::move(labels), std::move(priors), std::move(tokens),
                           std::move(weights), alpha);
  } catch (const nlohmann::json::exception& e) {
    throw RunError("invalid model file " + path.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw RunError("invalid model file " + path.string() + ": " + e.what());
  }
}

}  // namespace uncq
