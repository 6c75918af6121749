#include "uncq/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "uncq/errors.hpp"

namespace uncq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Bin k covers (k/K, (k+1)/K]; the lowest bin is closed at 0.
std::size_t bin_of(double confidence, int num_bins) {
  double scaled = confidence * static_cast<double>(num_bins);
  auto k = static_cast<long>(std::ceil(scaled)) - 1;
  k = std::clamp<long>(k, 0, num_bins - 1);
  return static_cast<std::size_t>(k);
}

double log_sum_exp(const std::vector<double>& values, double inv_t) {
  double max_scaled = values[0] * inv_t;
  for (double v : values) max_scaled = std::max(max_scaled, v * inv_t);
  double sum = 0.0;
  for (double v : values) sum += std::exp(v * inv_t - max_scaled);
  return max_scaled + std::log(sum);
}

}  // namespace

EceResult compute_ece(std::span<const Prediction> predictions, std::span<const int> gold_labels,
                      int num_bins) {
  if (predictions.empty()) throw std::invalid_argument("compute_ece: empty prediction list");
  if (predictions.size() != gold_labels.size()) {
    throw std::invalid_argument("compute_ece: predictions/gold size mismatch");
  }
  if (num_bins < 1) throw std::invalid_argument("compute_ece: need at least one bin");

  auto k = static_cast<std::size_t>(num_bins);
  std::vector<std::int64_t> counts(k, 0);
  std::vector<double> conf_sums(k, 0.0);
  std::vector<std::int64_t> correct(k, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    std::size_t b = bin_of(predictions[i].confidence, num_bins);
    counts[b] += 1;
    conf_sums[b] += predictions[i].confidence;
    if (predictions[i].predicted_class == gold_labels[i]) correct[b] += 1;
  }

  EceResult result;
  result.bins.reserve(k);
  double n = static_cast<double>(predictions.size());
  for (std::size_t b = 0; b < k; ++b) {
    ReliabilityBin bin;
    bin.lower = static_cast<double>(b) / static_cast<double>(num_bins);
    bin.upper = static_cast<double>(b + 1) / static_cast<double>(num_bins);
    bin.count = counts[b];
    if (counts[b] == 0) {
      bin.avg_confidence = kNaN;
      bin.accuracy = kNaN;
    } else {
      bin.avg_confidence = conf_sums[b] / static_cast<double>(counts[b]);
      bin.accuracy = static_cast<double>(correct[b]) / static_cast<double>(counts[b]);
      result.ece += (static_cast<double>(counts[b]) / n) * std::abs(bin.accuracy - bin.avg_confidence);
    }
    result.bins.push_back(bin);
  }
  return result;
}

std::string objective_name(CalibrationObjective objective) {
  return objective == CalibrationObjective::dev_nll ? "dev-nll" : "dev-ece";
}

CalibrationObjective parse_objective(std::string_view name) {
  if (name == "dev-nll") return CalibrationObjective::dev_nll;
  if (name == "dev-ece") return CalibrationObjective::dev_ece;
  throw ConfigError("unknown calibration objective: " + std::string(name) +
                    " (expected dev-nll or dev-ece)");
}

CalibrationResult fit_temperature(std::span<const Logits> logits, std::span<const int> gold_labels,
                                  TemperatureGrid grid, CalibrationObjective objective,
                                  int num_bins) {
  if (logits.empty()) throw std::invalid_argument("fit_temperature: empty dev set");
  if (logits.size() != gold_labels.size()) {
    throw std::invalid_argument("fit_temperature: logits/gold size mismatch");
  }
  if (!(grid.lo > 0.0)) throw std::invalid_argument("fit_temperature: grid lo must be > 0");
  if (grid.hi < grid.lo) throw std::invalid_argument("fit_temperature: grid hi < lo");
  if (!(grid.step > 0.0)) throw std::invalid_argument("fit_temperature: grid step must be > 0");

  auto predictions_at = [&](double t) {
    std::vector<Prediction> preds;
    preds.reserve(logits.size());
    for (const auto& l : logits) preds.push_back(prediction_from_logits(l, t));
    return preds;
  };

  auto objective_at = [&](double t) {
    if (objective == CalibrationObjective::dev_nll) {
      double inv_t = 1.0 / t;
      double total = 0.0;
      for (std::size_t i = 0; i < logits.size(); ++i) {
        const auto& values = logits[i].values;
        auto gold = static_cast<std::size_t>(gold_labels[i]);
        total += log_sum_exp(values, inv_t) - values[gold] * inv_t;
      }
      return total / static_cast<double>(logits.size());
    }
    auto preds = predictions_at(t);
    return compute_ece(preds, gold_labels, num_bins).ece;
  };

  auto points = static_cast<std::size_t>(std::floor((grid.hi - grid.lo) / grid.step + 1e-9)) + 1;
  double best_value = std::numeric_limits<double>::infinity();
  double best_t = grid.lo;
  for (std::size_t i = 0; i < points; ++i) {
    double t = grid.lo + static_cast<double>(i) * grid.step;
    double value = objective_at(t);
    bool better = value < best_value;
    if (value == best_value) {
      double d_new = std::abs(t - 1.0);
      double d_best = std::abs(best_t - 1.0);
      better = d_new < d_best || (d_new == d_best && t < best_t);
    }
    if (better) {
      best_value = value;
      best_t = t;
    }
  }

  CalibrationResult result;
  result.temperature = best_t;
  result.objective = objective;
  result.grid = grid;
  result.pre_ece = compute_ece(predictions_at(1.0), gold_labels, num_bins).ece;
  auto post = compute_ece(predictions_at(best_t), gold_labels, num_bins);
  result.post_ece = post.ece;
  result.bins = std::move(post.bins);
  return result;
}

CalibrationResult fit_temperature(const Classifier& model, const Corpus& dev, TemperatureGrid grid,
                                  CalibrationObjective objective, int num_bins) {
  if (dev.examples.empty()) throw std::invalid_argument("fit_temperature: empty dev corpus");
  TokenBatch inputs;
  std::vector<int> gold;
  inputs.reserve(dev.examples.size());
  gold.reserve(dev.examples.size());
  for (const auto& example : dev.examples) {
    if (!example.gold_label.has_value()) {
      throw std::invalid_argument("fit_temperature: example \"" + example.id +
                                  "\" has no gold label");
    }
    inputs.push_back(example.tokens);
    gold.push_back(*example.gold_label);
  }
  std::vector<Logits> logits = model.raw_logits_batch(inputs);
  return fit_temperature(logits, gold, grid, objective, num_bins);
}

CalibratedClassifier::CalibratedClassifier(const Classifier& base, double temperature)
    : base_(&base), temperature_(temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("apply_temperature: temperature must be > 0");
  }
}

Prediction CalibratedClassifier::predict(TokenView tokens) const {
  return uncq::predict(*base_, tokens, temperature_);
}

std::vector<Prediction> CalibratedClassifier::predict_batch(const TokenBatch& inputs) const {
  return uncq::predict_batch(*base_, inputs, temperature_);
}

CalibratedClassifier apply_temperature(const Classifier& model, double temperature) {
  return CalibratedClassifier(model, temperature);
}

}  // namespace uncq
