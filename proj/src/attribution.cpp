#include "uncq/attribution.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "uncq/errors.hpp"
#include "uncq/rng.hpp"

namespace uncq {

namespace {

// Coalitions are packed bitmasks over token positions; the packed bytes
// double as the memo key.
using Mask = std::vector<std::uint8_t>;

Mask empty_mask(std::size_t n) { return Mask((n + 7) / 8, 0); }

void set_bit(Mask& mask, std::size_t i) {
  mask[i / 8] = static_cast<std::uint8_t>(mask[i / 8] | (1u << (i % 8)));
}

bool test_bit(const Mask& mask, std::size_t i) { return (mask[i / 8] >> (i % 8)) & 1u; }

std::string mask_key(const Mask& mask) {
  return std::string(reinterpret_cast<const char*>(mask.data()), mask.size());
}

std::vector<std::string> subsequence(TokenView tokens, const Mask& mask) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (test_bit(mask, i)) out.push_back(tokens[i]);
  }
  return out;
}

// Confidence cache for one example: f_yhat over coalitions, filled through
// batched queries so transport-backed models chunk efficiently.
class CoalitionCache {
 public:
  CoalitionCache(const CalibratedClassifier& model, TokenView tokens, int target_class)
      : model_(model), tokens_(tokens), target_(static_cast<std::size_t>(target_class)) {}

  // Fetches any masks not seen before; later lookups are O(1).
  void ensure(const std::vector<Mask>& masks) {
    std::vector<const Mask*> needed;
    for (const auto& mask : masks) {
      std::string key = mask_key(mask);
      if (conf_.count(key) == 0 && pending_.insert(key).second) needed.push_back(&mask);
    }
    if (needed.empty()) return;
    TokenBatch batch;
    batch.reserve(needed.size());
    for (const Mask* mask : needed) batch.push_back(subsequence(tokens_, *mask));
    std::vector<Prediction> preds = model_.predict_batch(batch);
    for (std::size_t i = 0; i < needed.size(); ++i) {
      conf_[mask_key(*needed[i])] = preds[i].probs[target_];
    }
    pending_.clear();
  }

  double confidence(const Mask& mask) const { return conf_.at(mask_key(mask)); }

 private:
  const CalibratedClassifier& model_;
  TokenView tokens_;
  std::size_t target_;
  std::unordered_map<std::string, double> conf_;
  std::unordered_set<std::string> pending_;
};

std::uint64_t binomial(std::size_t n, std::size_t k) {
  if (k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t result = 1;
  for (std::size_t i = 1; i <= k; ++i) {
    result = result * (n - k + i) / i;
  }
  return result;
}

}  // namespace

std::string method_name(AttributionMethod method) {
  switch (method) {
    case AttributionMethod::loo: return "loo";
    case AttributionMethod::sampling_shapley: return "sampling-shapley";
    case AttributionMethod::exact_shapley: return "exact-shapley";
  }
  return "?";
}

AttributionMethod parse_method(std::string_view name) {
  if (name == "loo") return AttributionMethod::loo;
  if (name == "ss" || name == "sampling-shapley") return AttributionMethod::sampling_shapley;
  if (name == "exact-shapley") return AttributionMethod::exact_shapley;
  throw ConfigError("unknown attribution method: " + std::string(name) +
                    " (expected loo or ss)");
}

std::vector<std::string> remove_positions(TokenView tokens,
                                          std::span<const std::size_t> positions) {
  std::vector<bool> removed(tokens.size(), false);
  for (std::size_t p : positions) {
    if (p >= tokens.size()) {
      throw std::invalid_argument("remove_positions: position " + std::to_string(p) +
                                  " out of range for " + std::to_string(tokens.size()) +
                                  " tokens");
    }
    removed[p] = true;
  }
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!removed[i]) out.push_back(tokens[i]);
  }
  return out;
}

Attribution loo_attribution(const CalibratedClassifier& model, const TokenizedExample& example) {
  std::size_t n = example.tokens.size();
  if (n == 0) throw std::invalid_argument("loo_attribution: example has no tokens");

  // One batch: the full input followed by the N single-deletion inputs.
  TokenBatch batch;
  batch.reserve(n + 1);
  batch.push_back(example.tokens);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t position[] = {i};
    batch.push_back(remove_positions(example.tokens, position));
  }
  std::vector<Prediction> preds = model.predict_batch(batch);

  Attribution attribution;
  attribution.example_id = example.id;
  attribution.method = AttributionMethod::loo;
  attribution.predicted_class = preds[0].predicted_class;
  attribution.base_confidence = preds[0].confidence;
  auto target = static_cast<std::size_t>(attribution.predicted_class);
  attribution.scores.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    attribution.scores.push_back(attribution.base_confidence - preds[i + 1].probs[target]);
  }
  return attribution;
}

Attribution sampling_shapley_attribution(const CalibratedClassifier& model,
                                         const TokenizedExample& example, int samples,
                                         std::uint64_t seed) {
  std::size_t n = example.tokens.size();
  if (n == 0) throw std::invalid_argument("sampling_shapley_attribution: example has no tokens");
  if (samples < 1) throw std::invalid_argument("sampling_shapley_attribution: samples must be >= 1");

  Prediction full = model.predict(example.tokens);
  Attribution attribution;
  attribution.example_id = example.id;
  attribution.method = AttributionMethod::sampling_shapley;
  attribution.predicted_class = full.predicted_class;
  attribution.base_confidence = full.confidence;
  attribution.meta = SamplingMeta{samples, seed, "permutation-prefix"};
  attribution.scores.assign(n, 0.0);

  CoalitionCache cache(model, example.tokens, attribution.predicted_class);
  SplitMix64 rng(derive_stream_seed(seed, example.id));

  for (int m = 0; m < samples; ++m) {
    std::vector<std::size_t> perm = random_permutation(n, rng);

    std::vector<Mask> prefixes;
    prefixes.reserve(n + 1);
    Mask mask = empty_mask(n);
    prefixes.push_back(mask);
    for (std::size_t j = 0; j < n; ++j) {
      set_bit(mask, perm[j]);
      prefixes.push_back(mask);
    }
    cache.ensure(prefixes);

    double prev = cache.confidence(prefixes[0]);
    for (std::size_t j = 0; j < n; ++j) {
      double cur = cache.confidence(prefixes[j + 1]);
      attribution.scores[perm[j]] += cur - prev;
      prev = cur;
    }
  }
  for (double& s : attribution.scores) s /= static_cast<double>(samples);
  return attribution;
}

Attribution exact_shapley_attribution(const CalibratedClassifier& model,
                                      const TokenizedExample& example, int max_n) {
  std::size_t n = example.tokens.size();
  if (n == 0) throw std::invalid_argument("exact_shapley_attribution: example has no tokens");
  if (max_n < 1 || max_n > 20) {
    throw std::invalid_argument("exact_shapley_attribution: max_n must be in [1, 20]");
  }
  if (n > static_cast<std::size_t>(max_n)) {
    throw std::invalid_argument("exact_shapley_attribution: " + std::to_string(n) +
                                " tokens exceeds max_n = " + std::to_string(max_n));
  }

  Prediction full = model.predict(example.tokens);
  auto target = static_cast<std::size_t>(full.predicted_class);

  // Confidence for every coalition, indexed by bitmask over positions.
  std::size_t total = std::size_t{1} << n;
  std::vector<double> conf(total);
  constexpr std::size_t kChunk = 512;
  for (std::size_t start = 0; start < total; start += kChunk) {
    std::size_t stop = std::min(total, start + kChunk);
    TokenBatch batch;
    batch.reserve(stop - start);
    for (std::size_t mask = start; mask < stop; ++mask) {
      std::vector<std::string> subset;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (std::size_t{1} << i)) subset.push_back(example.tokens[i]);
      }
      batch.push_back(std::move(subset));
    }
    std::vector<Prediction> preds = model.predict_batch(batch);
    for (std::size_t mask = start; mask < stop; ++mask) {
      conf[mask] = preds[mask - start].probs[target];
    }
  }

  // phi_i = sum over coalitions S without i of |S|!(N-|S|-1)!/N! times the
  // marginal of adding i; the weight equals 1/(N * C(N-1, |S|)).
  std::vector<double> weight(n);
  for (std::size_t s = 0; s < n; ++s) {
    weight[s] = 1.0 / (static_cast<double>(n) * static_cast<double>(binomial(n - 1, s)));
  }

  Attribution attribution;
  attribution.example_id = example.id;
  attribution.method = AttributionMethod::exact_shapley;
  attribution.predicted_class = full.predicted_class;
  attribution.base_confidence = full.confidence;
  attribution.scores.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t bit = std::size_t{1} << i;
    double phi = 0.0;
    for (std::size_t mask = 0; mask < total; ++mask) {
      if (mask & bit) continue;
      phi += weight[static_cast<std::size_t>(std::popcount(mask))] * (conf[mask | bit] - conf[mask]);
    }
    attribution.scores[i] = phi;
  }
  return attribution;
}

ExplanationDigest make_digest(const Attribution& attribution, TokenView tokens, int k_imp,
                              int k_unc) {
  if (k_imp < 0 || k_unc < 0) throw std::invalid_argument("make_digest: k must be >= 0");
  if (attribution.scores.size() != tokens.size()) {
    throw std::invalid_argument("make_digest: scores/tokens length mismatch");
  }

  std::vector<std::size_t> positive;
  std::vector<std::size_t> negative;
  for (std::size_t i = 0; i < attribution.scores.size(); ++i) {
    if (attribution.scores[i] > 0.0) positive.push_back(i);
    else if (attribution.scores[i] < 0.0) negative.push_back(i);
  }
  std::sort(positive.begin(), positive.end(), [&](std::size_t a, std::size_t b) {
    if (attribution.scores[a] != attribution.scores[b]) {
      return attribution.scores[a] > attribution.scores[b];
    }
    return a < b;
  });
  std::sort(negative.begin(), negative.end(), [&](std::size_t a, std::size_t b) {
    if (attribution.scores[a] != attribution.scores[b]) {
      return attribution.scores[a] < attribution.scores[b];
    }
    return a < b;
  });

  ExplanationDigest digest;
  for (std::size_t r = 0; r < positive.size() && r < static_cast<std::size_t>(k_imp); ++r) {
    std::size_t i = positive[r];
    digest.important.push_back(DigestEntry{i, tokens[i], attribution.scores[i]});
  }
  for (std::size_t r = 0; r < negative.size() && r < static_cast<std::size_t>(k_unc); ++r) {
    std::size_t i = negative[r];
    digest.uncertain.push_back(DigestEntry{i, tokens[i], attribution.scores[i]});
  }
  return digest;
}

}  // namespace uncq
