#include <doctest.h>

#include <cmath>

#include "uncq/lmi.hpp"

using namespace uncq;

namespace {

DigestRecord record_with(std::vector<std::string> important_tokens,
                         std::vector<std::string> uncertain_tokens, int predicted,
                         std::optional<int> gold = std::nullopt) {
  DigestRecord record;
  record.example_id = "r";
  record.predicted_class = predicted;
  record.gold_label = gold;
  std::size_t pos = 0;
  for (auto& token : important_tokens) {
    record.digest.important.push_back(DigestEntry{pos++, std::move(token), 0.5});
  }
  for (auto& token : uncertain_tokens) {
    record.digest.uncertain.push_back(DigestEntry{pos++, std::move(token), -0.5});
  }
  return record;
}

Vocabulary vocab_of(std::vector<std::string> tokens) {
  std::vector<std::int64_t> counts(tokens.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    counts[i] = static_cast<std::int64_t>(counts.size() - i);
  }
  return Vocabulary(std::move(tokens), std::move(counts));
}

// count table: bad -> (pos 1, neg 3), other -> (pos 3, neg 3)
// so |E| = 10, count(bad) = 4, count(bad,neg) = 3, count(neg) = 6.
FeatureTally hand_tally() {
  std::vector<DigestRecord> records;
  records.push_back(record_with({"bad"}, {}, 1));
  records.push_back(record_with({"bad", "other"}, {}, 1));
  records.push_back(record_with({"bad", "other"}, {}, 1));
  records.push_back(record_with({"bad", "other"}, {}, 0));
  records.push_back(record_with({"other"}, {}, 0));
  records.push_back(record_with({"other"}, {}, 0));
  records.push_back(record_with({"other"}, {}, 1));
  return tally_features(records, FeatureGroup::important, LabelBasis::predicted, 2, 5);
}

}  // namespace

TEST_CASE("tally_features counting rules") {
  CHECK(tally_features({}, FeatureGroup::important, LabelBasis::predicted, 2).total == 0);

  std::vector<DigestRecord> one{record_with({"great"}, {}, 0)};
  FeatureTally tally = tally_features(one, FeatureGroup::important, LabelBasis::predicted, 2);
  CHECK(tally.count("great", 0) == 1);
  CHECK(tally.total == 1);

  std::vector<DigestRecord> records;
  records.push_back(record_with({"bad"}, {}, 1));
  records.push_back(record_with({"bad"}, {}, 1));
  records.push_back(record_with({"bad"}, {}, 0));
  tally = tally_features(records, FeatureGroup::important, LabelBasis::predicted, 2);
  CHECK(tally.count("bad", 1) == 2);
  CHECK(tally.count("bad", 0) == 1);
  CHECK(tally.count("bad") == 3);
}

TEST_CASE("tally_features respects group, top_n, and basis") {
  std::vector<DigestRecord> records;
  records.push_back(record_with({"i1", "i2", "i3"}, {"u1", "u2"}, 0, 1));

  FeatureTally important =
      tally_features(records, FeatureGroup::important, LabelBasis::predicted, 2, 2);
  CHECK(important.total == 2);  // top_n truncates i3
  CHECK(important.count("i1", 0) == 1);
  CHECK(important.count("i3") == 0);

  FeatureTally uncertain =
      tally_features(records, FeatureGroup::uncertain, LabelBasis::predicted, 2, 5);
  CHECK(uncertain.total == 2);
  CHECK(uncertain.count("u1", 0) == 1);

  FeatureTally by_gold = tally_features(records, FeatureGroup::important, LabelBasis::gold, 2, 5);
  CHECK(by_gold.count("i1", 1) == 1);  // gold label, not predicted
  CHECK(by_gold.count("i1", 0) == 0);

  // records without gold labels are skipped under the gold basis
  std::vector<DigestRecord> no_gold{record_with({"x"}, {}, 0)};
  CHECK(tally_features(no_gold, FeatureGroup::important, LabelBasis::gold, 2, 5).total == 0);
}

TEST_CASE("compute_lmi hand value") {
  FeatureTally tally = hand_tally();
  REQUIRE(tally.total == 10);
  REQUIRE(tally.count("bad") == 4);
  REQUIRE(tally.count("bad", 1) == 3);
  REQUIRE(tally.label_counts[1] == 6);

  Vocabulary vocab = vocab_of({"other", "bad"});
  LmiDistribution dist = compute_lmi(tally, vocab);

  // raw = p(e,y) * ln(p(y|e)/p(y)) = 0.3 * ln(0.75/0.6)
  double expected = 0.3 * std::log(1.25);
  CHECK(dist.raw_value("bad", 1) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.0669431).epsilon(1e-6));

  // normalized values sum to 1
  double sum = 0.0;
  for (const auto& [token, cell] : dist.cells) {
    for (double p : cell.p) sum += p;
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("compute_lmi zero and positive association cases") {
  // A feature whose label split matches the global split has zero raw LMI.
  std::vector<DigestRecord> records;
  records.push_back(record_with({"even"}, {}, 0));
  records.push_back(record_with({"even"}, {}, 1));
  records.push_back(record_with({"odd"}, {}, 0));
  records.push_back(record_with({"odd"}, {}, 1));
  FeatureTally tally = tally_features(records, FeatureGroup::important, LabelBasis::predicted, 2);
  Vocabulary vocab = vocab_of({"even", "odd"});
  LmiDistribution dist = compute_lmi(tally, vocab);
  CHECK(dist.raw_value("even", 0) == 0.0);
  CHECK(dist.value("even", 0) == 0.0);

  // A label-exclusive feature has raw = p(e,y) * ln(1/p(y)) > 0.
  records.push_back(record_with({"solo"}, {}, 0));
  tally = tally_features(records, FeatureGroup::important, LabelBasis::predicted, 2);
  dist = compute_lmi(tally, vocab_of({"even", "odd", "solo"}));
  double p_y = 3.0 / 5.0;
  CHECK(dist.raw_value("solo", 0) ==
        doctest::Approx((1.0 / 5.0) * std::log(1.0 / p_y)).epsilon(1e-12));
  CHECK(dist.raw_value("solo", 0) > 0.0);
}

TEST_CASE("compute_lmi skips tokens outside the vocabulary and rejects empty tallies") {
  FeatureTally tally = hand_tally();
  Vocabulary vocab = vocab_of({"bad"});  // "other" not in vocab
  LmiDistribution dist = compute_lmi(tally, vocab);
  CHECK(dist.cells.count("other") == 0);
  CHECK(dist.value("other", 0) == 0.0);

  FeatureTally empty;
  empty.num_classes = 2;
  empty.label_counts = {0, 0};
  CHECK_THROWS_AS(compute_lmi(empty, vocab), std::invalid_argument);
}

TEST_CASE("normalized distribution is invariant under count scaling") {
  std::vector<DigestRecord> base;
  base.push_back(record_with({"alpha", "beta"}, {}, 0));
  base.push_back(record_with({"beta"}, {}, 1));
  base.push_back(record_with({"gamma"}, {}, 1));

  std::vector<DigestRecord> tripled;
  for (int r = 0; r < 3; ++r) {
    for (const auto& record : base) tripled.push_back(record);
  }

  Vocabulary vocab = vocab_of({"alpha", "beta", "gamma"});
  auto tally1 = tally_features(base, FeatureGroup::important, LabelBasis::predicted, 2);
  auto tally3 = tally_features(tripled, FeatureGroup::important, LabelBasis::predicted, 2);
  LmiDistribution d1 = compute_lmi(tally1, vocab);
  LmiDistribution d3 = compute_lmi(tally3, vocab);

  for (const auto& token : {"alpha", "beta", "gamma"}) {
    for (int y = 0; y < 2; ++y) {
      CHECK(d1.value(token, y) == doctest::Approx(d3.value(token, y)).epsilon(1e-12));
    }
  }
}

TEST_CASE("label-exclusive features dominate split ones at equal frequency") {
  // Enumerate small count tables: feature A occurs a times, all on label 0;
  // feature B occurs a times split s/(a-s). A's raw LMI on label 0 is max.
  for (int a = 2; a <= 6; ++a) {
    for (int s = 1; s < a; ++s) {
      std::vector<DigestRecord> records;
      for (int i = 0; i < a; ++i) records.push_back(record_with({"pure"}, {}, 0));
      for (int i = 0; i < s; ++i) records.push_back(record_with({"split"}, {}, 0));
      for (int i = s; i < a; ++i) records.push_back(record_with({"split"}, {}, 1));
      auto tally = tally_features(records, FeatureGroup::important, LabelBasis::predicted, 2);
      auto dist = compute_lmi(tally, vocab_of({"pure", "split"}));
      CHECK(dist.raw_value("pure", 0) >= dist.raw_value("split", 0));
    }
  }
}

TEST_CASE("top_tokens ordering and ties") {
  LmiDistribution empty;
  empty.num_classes = 2;
  CHECK(top_tokens(empty, 0, 10).empty());

  LmiDistribution dist;
  dist.num_classes = 2;
  dist.cells["hi"] = LmiCell{3, {0.0, 0.0}, {0.4, 0.0}};
  CHECK(top_tokens(dist, 0, 10) == std::vector<std::string>{"hi"});
  CHECK(top_tokens(dist, 1, 10).empty());  // zero share never qualifies

  dist.cells["lo"] = LmiCell{5, {0.0, 0.0}, {0.2, 0.0}};
  dist.cells["tie"] = LmiCell{1, {0.0, 0.0}, {0.4, 0.0}};
  auto top = top_tokens(dist, 0, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0] == "tie");  // equal share, lower vocab id first
  CHECK(top[1] == "hi");
}
