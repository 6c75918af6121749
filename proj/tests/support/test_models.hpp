#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uncq/classifier.hpp"
#include "uncq/corpus.hpp"
#include "uncq/rng.hpp"

namespace uncq::testing {

// Binary stub with logits (0, 0.5*#"good" - 0.5*#"bad"); every hand-derived
// expected value in the tests comes from evaluating this closed form.
class StubLinearModel : public Classifier {
 public:
  StubLinearModel() : labels_({"neg", "pos"}) {}

  const LabelSpace& label_space() const override { return labels_; }

  Logits raw_logits(TokenView tokens) const override {
    double score = 0.0;
    for (const auto& token : tokens) {
      if (token == "good") score += 0.5;
      if (token == "bad") score -= 0.5;
    }
    return Logits{{0.0, score}};
  }

 private:
  LabelSpace labels_;
};

// Ignores its input entirely.
class ConstantModel : public Classifier {
 public:
  explicit ConstantModel(std::vector<double> logits)
      : labels_(make_labels(logits.size())), logits_{std::move(logits)} {}

  const LabelSpace& label_space() const override { return labels_; }
  Logits raw_logits(TokenView) const override { return logits_; }

 private:
  static LabelSpace make_labels(std::size_t n) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("c" + std::to_string(i));
    return LabelSpace(names);
  }
  LabelSpace labels_;
  Logits logits_;
};

inline TokenizedExample make_example(std::string id, std::vector<std::string> tokens) {
  return TokenizedExample{std::move(id), std::move(tokens), std::nullopt};
}

// Two-class synthetic corpus where every document carries markers of both
// polarities: dominant-class markers outnumber off-class ones on average, so
// the task is learnable but never certain. This is the workload for the
// confidence-change experiments.
inline Corpus make_mixed_polarity_corpus(std::size_t n, std::uint64_t seed,
                                         std::size_t min_len = 8, std::size_t max_len = 16) {
  static const std::vector<std::string> kPos = {"great",      "wonderful", "excellent",
                                                "delightful", "superb",    "charming"};
  static const std::vector<std::string> kNeg = {"awful",    "dreadful", "boring",
                                                "terrible", "wretched", "clumsy"};
  static const std::vector<std::string> kFiller = {
      "the",  "a",  "an",     "it",    "movie",   "film",    "plot",  "acting", "was",
      "is",   "and", "of",    "really", "quite",  "overall", "story", "cast",   "scene"};

  SplitMix64 rng(seed);
  Corpus corpus;
  corpus.label_space = LabelSpace({"pos", "neg"});
  corpus.examples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    int label = static_cast<int>(rng.below(2));
    const auto& dom = label == 0 ? kPos : kNeg;
    const auto& off = label == 0 ? kNeg : kPos;
    std::size_t len = min_len + rng.below(max_len - min_len + 1);

    std::vector<std::string> tokens;
    tokens.reserve(len);
    tokens.push_back(dom[rng.below(dom.size())]);
    tokens.push_back(off[rng.below(off.size())]);
    while (tokens.size() < len) {
      if (rng.unit() < 0.55) {
        tokens.push_back(kFiller[rng.below(kFiller.size())]);
      } else if (rng.unit() < 0.72) {
        tokens.push_back(dom[rng.below(dom.size())]);
      } else {
        tokens.push_back(off[rng.below(off.size())]);
      }
    }
    shuffle(tokens, rng);

    TokenizedExample example;
    example.id = "ex" + std::to_string(i);
    example.tokens = std::move(tokens);
    example.gold_label = label;
    corpus.examples.push_back(std::move(example));
  }
  return corpus;
}

}  // namespace uncq::testing
