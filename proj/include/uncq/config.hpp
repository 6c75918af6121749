#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "uncq/attribution.hpp"
#include "uncq/calibration.hpp"
#include "uncq/corpus.hpp"
#include "uncq/lmi.hpp"

namespace uncq {

enum class ClassifierKind { builtin, remote };

// Full run configuration. Loaded from a single JSON document with strict key
// checking; every numeric bound is enforced before any compute starts.
// Defaults follow the reference experiment setup: 200 explanation samples,
// 10 calibration bins, temperature grid [0.01, 10] step 0.01, 5 features per
// digest tallied, 1000 evaluated examples.
struct RunConfig {
  // corpus
  std::string corpus_path;
  CorpusFormat corpus_format = CorpusFormat::jsonl;
  bool lowercase = true;

  // split
  SplitRatios ratios;
  std::uint64_t split_seed = 13;

  // classifier
  ClassifierKind classifier = ClassifierKind::builtin;
  double alpha = 1.0;
  std::string remote_url;
  double remote_timeout_s = 10.0;
  int remote_max_batch = 64;

  // calibration
  TemperatureGrid grid;
  CalibrationObjective objective = CalibrationObjective::dev_nll;
  int calibration_bins = 10;

  // explainer
  AttributionMethod method = AttributionMethod::loo;
  int samples = 200;
  std::uint64_t explainer_seed = 13;

  // digest; unset means the length-based default (10 when the corpus
  // averages more than 100 tokens per example, else 5)
  std::optional<int> k_imp;
  std::optional<int> k_unc;

  // evaluation
  std::int64_t sample_size = 1000;
  std::vector<double> eval_bins;  // empty means 5 equal bins over (1/C, 1]
  std::optional<std::uint64_t> eval_seed;  // defaults to explainer seed

  // lmi
  int lmi_top_n = 5;
  LabelBasis lmi_basis = LabelBasis::predicted;

  // vocab
  std::int64_t vocab_min_count = 1;

  std::filesystem::path output_dir = "out";
  std::optional<std::filesystem::path> model_path;  // default: output_dir/model.json
  int workers = 0;  // 0 = available parallelism

  std::uint64_t evaluation_seed() const { return eval_seed.value_or(explainer_seed); }
  std::filesystem::path resolved_model_path() const {
    return model_path.value_or(output_dir / "model.json");
  }
  int resolve_k(const Corpus& corpus, std::optional<int> k) const;

  // The effective configuration, echoed into run outputs for provenance.
  nlohmann::json echo() const;
};

// Command-line values that win over the config file.
struct ConfigOverrides {
  std::optional<std::string> method;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  std::optional<int> k_imp;
  std::optional<int> k_unc;
  std::optional<std::string> out_dir;
  std::optional<int> workers;
  std::optional<std::string> model;
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

// Bounds checks across all fields; throws ConfigError on the first violation.
void validate_config(const RunConfig& config);

}  // namespace uncq
