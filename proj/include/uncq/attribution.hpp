#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "uncq/calibration.hpp"
#include "uncq/classifier.hpp"
#include "uncq/corpus.hpp"

namespace uncq {

enum class AttributionMethod { loo, sampling_shapley, exact_shapley };

std::string method_name(AttributionMethod method);
AttributionMethod parse_method(std::string_view name);

struct SamplingMeta {
  int samples = 0;
  std::uint64_t seed = 0;
  // How coalitions are drawn; fixed to permutation-prefix sampling.
  std::string scheme = "permutation-prefix";
};

// Per-token contribution scores for one example. predicted_class and
// base_confidence come from the unperturbed input and stay fixed for every
// perturbation the method evaluates.
struct Attribution {
  std::string example_id;
  AttributionMethod method = AttributionMethod::loo;
  int predicted_class = 0;
  double base_confidence = 0.0;
  std::vector<double> scores;  // aligned to token positions
  std::optional<SamplingMeta> meta;  // sampling-shapley only
};

struct DigestEntry {
  std::size_t position = 0;
  std::string token;
  double score = 0.0;
};

// The extracted explanation pair: important words carry strictly positive
// scores (descending), uncertain words strictly negative scores (most
// negative first). A zero-score token appears in neither list.
struct ExplanationDigest {
  std::vector<DigestEntry> important;
  std::vector<DigestEntry> uncertain;
};

// Order-preserving subsequence with the given positions deleted.
std::vector<std::string> remove_positions(TokenView tokens, std::span<const std::size_t> positions);

// S_i = f_yhat(x) - f_yhat(x with token i removed). Exactly N+1 model
// queries, issued as one batch.
Attribution loo_attribution(const CalibratedClassifier& model, const TokenizedExample& example);

// Monte-Carlo Shapley estimate. Each of the `samples` draws is one uniform
// permutation of the positions; every position's coalition is its prefix, so
// one permutation yields a marginal contribution for all N positions from
// N+1 evaluations. Coalition confidences are memoized per example and the
// permutation stream is seeded by (seed, example id), so results are
// bit-identical for identical arguments no matter how work is scheduled.
Attribution sampling_shapley_attribution(const CalibratedClassifier& model,
                                         const TokenizedExample& example, int samples,
                                         std::uint64_t seed);

// Exact Shapley values by full enumeration of all 2^N coalitions.
// Independent oracle for the sampled estimator; refuses N > max_n.
Attribution exact_shapley_attribution(const CalibratedClassifier& model,
                                      const TokenizedExample& example, int max_n = 12);

// Up to k_imp positive and k_unc negative entries, ordered by magnitude with
// ties broken by earlier position.
ExplanationDigest make_digest(const Attribution& attribution, TokenView tokens, int k_imp,
                              int k_unc);

}  // namespace uncq
