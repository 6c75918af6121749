#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "uncq/attribution.hpp"
#include "uncq/corpus.hpp"

namespace uncq {

enum class FeatureGroup { important, uncertain };
enum class LabelBasis { predicted, gold };

std::string group_name(FeatureGroup group);
std::string basis_name(LabelBasis basis);
LabelBasis parse_basis(std::string_view name);

// One explained example: the digest plus the labels a tally can associate
// its features with.
struct DigestRecord {
  std::string example_id;
  int predicted_class = 0;
  std::optional<int> gold_label;
  ExplanationDigest digest;
};

// Occurrence counts of extracted features per class. Multiset semantics: a
// token contributes once per digest entry it appears in.
struct FeatureTally {
  FeatureGroup group = FeatureGroup::important;
  LabelBasis basis = LabelBasis::predicted;
  int num_classes = 0;
  std::map<std::string, std::vector<std::int64_t>> counts;  // token -> per-class
  std::vector<std::int64_t> label_counts;                   // count(y)
  std::int64_t total = 0;                                   // |E|

  std::int64_t count(const std::string& token) const;
  std::int64_t count(const std::string& token, int label) const;
};

// Tallies up to top_n entries of the chosen group from each digest under the
// chosen label basis (records without a gold label are skipped under gold).
FeatureTally tally_features(std::span<const DigestRecord> records, FeatureGroup group,
                            LabelBasis basis, int num_classes, int top_n = 5);

struct LmiCell {
  int vocab_id = 0;            // doubles as the token's frequency rank
  std::vector<double> raw;     // LMI(e,y) clamped at 0, before normalization
  std::vector<double> p;       // normalized share; sums to 1 over all cells
};

// Normalized local-mutual-information distribution over (vocabulary token,
// class). Tokens never extracted, or outside the vocabulary, carry zero and
// are not stored.
struct LmiDistribution {
  int num_classes = 0;
  std::map<std::string, LmiCell> cells;

  double value(const std::string& token, int label) const;
  double raw_value(const std::string& token, int label) const;
};

// raw(e,y) = p(e,y) * ln(p(y|e) / p(y)) with probabilities read off the
// tally; non-positive raw values clamp to 0 so the normalized result is a
// proper distribution. Requires a non-empty tally.
LmiDistribution compute_lmi(const FeatureTally& tally, const Vocabulary& vocabulary);

// Tokens with the n largest shares for `label`, descending, ties broken by
// vocabulary id. Zero-share tokens never qualify.
std::vector<std::string> top_tokens(const LmiDistribution& distribution, int label, int n = 10);

}  // namespace uncq
