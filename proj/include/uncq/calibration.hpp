#pragma once

#include <span>
#include <string>
#include <vector>

#include "uncq/classifier.hpp"
#include "uncq/corpus.hpp"

namespace uncq {

struct ReliabilityBin {
  double lower = 0.0;
  double upper = 0.0;
  std::int64_t count = 0;
  // NaN when the bin is empty; serialized as null.
  double avg_confidence = 0.0;
  double accuracy = 0.0;

  bool empty() const { return count == 0; }
};

struct EceResult {
  double ece = 0.0;
  std::vector<ReliabilityBin> bins;
};

// Expected Calibration Error over K equal-width confidence bins on (0,1],
// the lowest bin closed at 0. Empty bins contribute nothing.
EceResult compute_ece(std::span<const Prediction> predictions, std::span<const int> gold_labels,
                      int num_bins);

enum class CalibrationObjective { dev_nll, dev_ece };

std::string objective_name(CalibrationObjective objective);
CalibrationObjective parse_objective(std::string_view name);

struct TemperatureGrid {
  double lo = 0.01;
  double hi = 10.0;
  double step = 0.01;
};

struct CalibrationResult {
  double temperature = 1.0;
  CalibrationObjective objective = CalibrationObjective::dev_nll;
  TemperatureGrid grid;
  double pre_ece = 0.0;   // ECE at T = 1 on the fitting set
  double post_ece = 0.0;  // ECE at the fitted temperature, same set
  std::vector<ReliabilityBin> bins;  // reliability bins at the fitted temperature
};

// Linear grid search for the temperature minimizing the objective. Logits are
// taken once; only the softmax is re-run per grid point. Objective ties break
// toward the T nearest 1.0, then the smaller T.
CalibrationResult fit_temperature(std::span<const Logits> logits, std::span<const int> gold_labels,
                                  TemperatureGrid grid, CalibrationObjective objective,
                                  int num_bins);

// Convenience overload: evaluates `model` on `dev` once, then scans the grid.
CalibrationResult fit_temperature(const Classifier& model, const Corpus& dev, TemperatureGrid grid,
                                  CalibrationObjective objective, int num_bins);

// A classifier paired with a fixed softmax temperature. Logits pass through
// unchanged; only the probability shape differs. T = 1 reproduces the base
// model exactly.
class CalibratedClassifier {
 public:
  CalibratedClassifier(const Classifier& base, double temperature);

  Prediction predict(TokenView tokens) const;
  std::vector<Prediction> predict_batch(const TokenBatch& inputs) const;

  double temperature() const { return temperature_; }
  const Classifier& base() const { return *base_; }
  const LabelSpace& label_space() const { return base_->label_space(); }

 private:
  const Classifier* base_;
  double temperature_;
};

CalibratedClassifier apply_temperature(const Classifier& model, double temperature);

}  // namespace uncq
