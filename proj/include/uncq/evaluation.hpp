#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uncq/attribution.hpp"
#include "uncq/calibration.hpp"
#include "uncq/corpus.hpp"

namespace uncq {

// Which attribution method drives an experiment, plus its sampling budget.
struct ExplainerSpec {
  AttributionMethod method = AttributionMethod::loo;
  int samples = 200;       // sampling-shapley only
  std::uint64_t seed = 0;  // sampling-shapley permutation stream
};

struct ConfidenceBinStat {
  double lower = 0.0;
  double upper = 0.0;
  std::int64_t count = 0;
  // NaN when the bin is empty; serialized as null / left blank in CSV.
  double mean_original = 0.0;
  double mean_post = 0.0;
  double mean_delta = 0.0;
};

struct ConfidenceChangeReport {
  std::string method;         // explainer name
  std::string removal_group;  // "uncertain" or "important"
  int k = 0;                  // max words removed per example
  std::vector<double> bin_edges;
  std::vector<ConfidenceBinStat> bins;
  double overall_mean_delta = 0.0;
  std::int64_t sample_size = 0;
  // Examples with no words in the removal group; they stay in their bin with
  // delta 0 so counts reflect the sampled population.
  std::int64_t zero_feature_examples = 0;
  // Fraction of examples whose argmax changed after removal; reported for the
  // important-word check only.
  std::optional<double> label_flip_rate;
};

// Removes each example's top-k uncertain words, re-predicts, and aggregates
// confidence deltas per bin of original confidence. Examples are drawn by a
// seeded shuffle of `sample`; deltas are measured on the class predicted for
// the full input, recomputed from scratch rather than read off attribution
// internals.
ConfidenceChangeReport confidence_change_experiment(const CalibratedClassifier& model,
                                                    const Corpus& sample,
                                                    const ExplainerSpec& explainer, int k_unc,
                                                    std::span<const double> bin_edges,
                                                    std::uint64_t seed, std::int64_t sample_size,
                                                    int workers = 0);

// Converse check: removes top-k important words instead, and additionally
// reports how often the predicted label flips.
ConfidenceChangeReport important_removal_check(const CalibratedClassifier& model,
                                               const Corpus& sample,
                                               const ExplainerSpec& explainer, int k_imp,
                                               std::span<const double> bin_edges,
                                               std::uint64_t seed, std::int64_t sample_size,
                                               int workers = 0);

}  // namespace uncq
