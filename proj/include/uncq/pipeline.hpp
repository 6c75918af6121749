#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "uncq/calibration.hpp"
#include "uncq/classifier.hpp"
#include "uncq/config.hpp"
#include "uncq/corpus.hpp"
#include "uncq/evaluation.hpp"
#include "uncq/reporting.hpp"

namespace uncq {

// Subcommand implementations. Each call re-derives corpus splits from the
// config (cheap at this scale, and guarantees every stage sees the same
// deterministic view); stages communicate through files in output_dir.

struct TrainOutcome {
  double dev_accuracy = 0.0;
  std::filesystem::path model_path;
};
TrainOutcome run_train(const RunConfig& config);

struct CalibrateOutcome {
  CalibrationResult dev;
  double test_pre_ece = 0.0;
  double test_post_ece = 0.0;
  std::filesystem::path output_path;
};
CalibrateOutcome run_calibrate(const RunConfig& config);

struct ExplainOutcome {
  std::size_t examples = 0;
  std::filesystem::path attributions_path;
  std::filesystem::path digests_path;
  std::filesystem::path report_path;
};
// `ids` empty means every test-split example.
ExplainOutcome run_explain(const RunConfig& config, const std::vector<std::string>& ids = {});

struct EvaluateOutcome {
  ConfidenceChangeReport uncertain;
  ConfidenceChangeReport important;
};
EvaluateOutcome run_evaluate(const RunConfig& config);

struct LmiOutcome {
  std::size_t groups_written = 0;
  std::filesystem::path csv_path;
};
LmiOutcome run_lmi(const RunConfig& config);

Manifest run_report(const RunConfig& config);

// Shared helpers, also used by tests.
CorpusSplits load_splits(const RunConfig& config);
std::unique_ptr<Classifier> make_classifier(const RunConfig& config, const LabelSpace& labels);
// Temperature recorded by run_calibrate, or 1.0 (with a warning) if the
// calibration artifact is absent.
double load_temperature(const RunConfig& config);
std::vector<double> default_eval_bins(int num_classes);

}  // namespace uncq
