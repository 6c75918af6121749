#include "uncq/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "uncq/parallel.hpp"
#include "uncq/rng.hpp"

namespace uncq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Edges e_0 < ... < e_B define bins (e_j, e_{j+1}]; the lowest bin is closed
// at e_0 so the minimum possible confidence 1/C lands in bin 0.
std::size_t bin_of(double confidence, std::span<const double> edges) {
  std::size_t last = edges.size() - 2;
  for (std::size_t j = 0; j <= last; ++j) {
    if (confidence <= edges[j + 1]) return j;
  }
  return last;
}

void validate_edges(std::span<const double> edges, int num_classes) {
  if (edges.size() < 2) throw std::invalid_argument("confidence bins need at least two edges");
  for (std::size_t i = 1; i < edges.size(); ++i) {
    if (!(edges[i] > edges[i - 1])) {
      throw std::invalid_argument("confidence bin edges must be strictly increasing");
    }
  }
  double floor = 1.0 / static_cast<double>(num_classes);
  if (edges.front() > floor + 1e-9 || edges.back() < 1.0 - 1e-9) {
    throw std::invalid_argument("confidence bins must cover (1/C, 1]");
  }
}

struct ExampleOutcome {
  double original = 0.0;
  double post = 0.0;
  bool had_features = false;
  bool flipped = false;
};

enum class RemovalGroup { uncertain, important };

ConfidenceChangeReport run_experiment(const CalibratedClassifier& model, const Corpus& sample,
                                      const ExplainerSpec& explainer, int k, RemovalGroup group,
                                      std::span<const double> bin_edges, std::uint64_t seed,
                                      std::int64_t sample_size, int workers) {
  if (sample.examples.empty()) throw std::invalid_argument("confidence experiment: empty sample");
  if (sample_size < 1 || sample_size > static_cast<std::int64_t>(sample.examples.size())) {
    throw std::invalid_argument("confidence experiment: sample_size must be in [1, corpus size]");
  }
  if (k < 0) throw std::invalid_argument("confidence experiment: k must be >= 0");
  if (explainer.method == AttributionMethod::exact_shapley) {
    throw std::invalid_argument("confidence experiment: explainer must be loo or sampling-shapley");
  }
  validate_edges(bin_edges, sample.label_space.size());

  // Seeded selection, independent of corpus order downstream of the shuffle.
  SplitMix64 rng(seed);
  std::vector<std::size_t> order = random_permutation(sample.examples.size(), rng);
  order.resize(static_cast<std::size_t>(sample_size));

  std::vector<ExampleOutcome> outcomes(order.size());
  parallel_for(order.size(), workers, [&](std::size_t slot) {
    const TokenizedExample& example = sample.examples[order[slot]];
    Attribution attribution =
        explainer.method == AttributionMethod::loo
            ? loo_attribution(model, example)
            : sampling_shapley_attribution(model, example, explainer.samples, explainer.seed);

    ExplanationDigest digest = group == RemovalGroup::uncertain
                                   ? make_digest(attribution, example.tokens, 0, k)
                                   : make_digest(attribution, example.tokens, k, 0);
    const auto& entries = group == RemovalGroup::uncertain ? digest.uncertain : digest.important;

    // Delta is recomputed from two fresh predictions; the attribution only
    // chose which positions to delete.
    Prediction before = model.predict(example.tokens);
    auto target = static_cast<std::size_t>(before.predicted_class);

    ExampleOutcome outcome;
    outcome.original = before.confidence;
    outcome.had_features = !entries.empty();
    if (entries.empty()) {
      outcome.post = before.confidence;
      outcome.flipped = false;
    } else {
      std::vector<std::size_t> positions;
      positions.reserve(entries.size());
      for (const auto& entry : entries) positions.push_back(entry.position);
      Prediction after = model.predict(remove_positions(example.tokens, positions));
      outcome.post = after.probs[target];
      outcome.flipped = after.predicted_class != before.predicted_class;
    }
    outcomes[slot] = outcome;
  });

  std::size_t num_bins = bin_edges.size() - 1;
  std::vector<std::int64_t> counts(num_bins, 0);
  std::vector<double> orig_sums(num_bins, 0.0);
  std::vector<double> post_sums(num_bins, 0.0);
  double delta_total = 0.0;
  std::int64_t zero_features = 0;
  std::int64_t flips = 0;
  for (const auto& outcome : outcomes) {
    std::size_t b = bin_of(outcome.original, bin_edges);
    counts[b] += 1;
    orig_sums[b] += outcome.original;
    post_sums[b] += outcome.post;
    delta_total += outcome.post - outcome.original;
    if (!outcome.had_features) ++zero_features;
    if (outcome.flipped) ++flips;
  }

  ConfidenceChangeReport report;
  report.method = method_name(explainer.method);
  report.removal_group = group == RemovalGroup::uncertain ? "uncertain" : "important";
  report.k = k;
  report.bin_edges.assign(bin_edges.begin(), bin_edges.end());
  report.sample_size = sample_size;
  report.zero_feature_examples = zero_features;
  report.overall_mean_delta = delta_total / static_cast<double>(sample_size);
  if (group == RemovalGroup::important) {
    report.label_flip_rate = static_cast<double>(flips) / static_cast<double>(sample_size);
  }
  for (std::size_t b = 0; b < num_bins; ++b) {
    ConfidenceBinStat stat;
    stat.lower = bin_edges[b];
    stat.upper = bin_edges[b + 1];
    stat.count = counts[b];
    if (counts[b] == 0) {
      stat.mean_original = kNaN;
      stat.mean_post = kNaN;
      stat.mean_delta = kNaN;
    } else {
      auto denom = static_cast<double>(counts[b]);
      stat.mean_original = orig_sums[b] / denom;
      stat.mean_post = post_sums[b] / denom;
      stat.mean_delta = (post_sums[b] - orig_sums[b]) / denom;
    }
    report.bins.push_back(stat);
  }
  return report;
}

}  // namespace

ConfidenceChangeReport confidence_change_experiment(const CalibratedClassifier& model,
                                                    const Corpus& sample,
                                                    const ExplainerSpec& explainer, int k_unc,
                                                    std::span<const double> bin_edges,
                                                    std::uint64_t seed, std::int64_t sample_size,
                                                    int workers) {
  return run_experiment(model, sample, explainer, k_unc, RemovalGroup::uncertain, bin_edges, seed,
                        sample_size, workers);
}

ConfidenceChangeReport important_removal_check(const CalibratedClassifier& model,
                                               const Corpus& sample,
                                               const ExplainerSpec& explainer, int k_imp,
                                               std::span<const double> bin_edges,
                                               std::uint64_t seed, std::int64_t sample_size,
                                               int workers) {
  return run_experiment(model, sample, explainer, k_imp, RemovalGroup::important, bin_edges, seed,
                        sample_size, workers);
}

}  // namespace uncq
