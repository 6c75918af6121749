#include "uncq/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "uncq/errors.hpp"

namespace uncq {

std::string group_name(FeatureGroup group) {
  return group == FeatureGroup::important ? "important" : "uncertain";
}

std::string basis_name(LabelBasis basis) {
  return basis == LabelBasis::predicted ? "predicted" : "gold";
}

LabelBasis parse_basis(std::string_view name) {
  if (name == "predicted") return LabelBasis::predicted;
  if (name == "gold") return LabelBasis::gold;
  throw ConfigError("unknown label basis: " + std::string(name) + " (expected predicted or gold)");
}

std::int64_t FeatureTally::count(const std::string& token) const {
  auto it = counts.find(token);
  if (it == counts.end()) return 0;
  std::int64_t sum = 0;
  for (std::int64_t c : it->second) sum += c;
  return sum;
}

std::int64_t FeatureTally::count(const std::string& token, int label) const {
  auto it = counts.find(token);
  if (it == counts.end()) return 0;
  return it->second.at(static_cast<std::size_t>(label));
}

FeatureTally tally_features(std::span<const DigestRecord> records, FeatureGroup group,
                            LabelBasis basis, int num_classes, int top_n) {
  if (num_classes < 1) throw std::invalid_argument("tally_features: num_classes must be >= 1");
  if (top_n < 0) throw std::invalid_argument("tally_features: top_n must be >= 0");

  FeatureTally tally;
  tally.group = group;
  tally.basis = basis;
  tally.num_classes = num_classes;
  tally.label_counts.assign(static_cast<std::size_t>(num_classes), 0);

  for (const auto& record : records) {
    int label = record.predicted_class;
    if (basis == LabelBasis::gold) {
      if (!record.gold_label.has_value()) continue;
      label = *record.gold_label;
    }
    if (label < 0 || label >= num_classes) {
      throw std::invalid_argument("tally_features: label " + std::to_string(label) +
                                  " out of range");
    }
    const auto& entries =
        group == FeatureGroup::important ? record.digest.important : record.digest.uncertain;
    std::size_t take = std::min(entries.size(), static_cast<std::size_t>(top_n));
    for (std::size_t i = 0; i < take; ++i) {
      auto [it, inserted] = tally.counts.try_emplace(
          entries[i].token, std::vector<std::int64_t>(static_cast<std::size_t>(num_classes), 0));
      it->second[static_cast<std::size_t>(label)] += 1;
      tally.label_counts[static_cast<std::size_t>(label)] += 1;
      tally.total += 1;
    }
  }
  return tally;
}

double LmiDistribution::value(const std::string& token, int label) const {
  auto it = cells.find(token);
  if (it == cells.end()) return 0.0;
  return it->second.p.at(static_cast<std::size_t>(label));
}

double LmiDistribution::raw_value(const std::string& token, int label) const {
  auto it = cells.find(token);
  if (it == cells.end()) return 0.0;
  return it->second.raw.at(static_cast<std::size_t>(label));
}

LmiDistribution compute_lmi(const FeatureTally& tally, const Vocabulary& vocabulary) {
  if (tally.total == 0) throw std::invalid_argument("compute_lmi: tally has no feature occurrences");

  LmiDistribution dist;
  dist.num_classes = tally.num_classes;
  auto c = static_cast<std::size_t>(tally.num_classes);
  double total = static_cast<double>(tally.total);

  double sum = 0.0;
  for (const auto& [token, per_class] : tally.counts) {
    std::optional<int> vocab_id = vocabulary.id_of(token);
    if (!vocab_id.has_value()) continue;  // the distribution is laid out over the vocabulary

    std::int64_t count_e = 0;
    for (std::int64_t v : per_class) count_e += v;

    LmiCell cell;
    cell.vocab_id = *vocab_id;
    cell.raw.assign(c, 0.0);
    cell.p.assign(c, 0.0);
    bool any = false;
    for (std::size_t y = 0; y < c; ++y) {
      if (per_class[y] == 0 || tally.label_counts[y] == 0) continue;
      double p_ey = static_cast<double>(per_class[y]) / total;
      double p_y_given_e = static_cast<double>(per_class[y]) / static_cast<double>(count_e);
      double p_y = static_cast<double>(tally.label_counts[y]) / total;
      double raw = p_ey * std::log(p_y_given_e / p_y);
      if (raw > 0.0) {
        cell.raw[y] = raw;
        sum += raw;
        any = true;
      }
    }
    if (any) dist.cells.emplace(token, std::move(cell));
  }

  if (sum > 0.0) {
    for (auto& [token, cell] : dist.cells) {
      for (std::size_t y = 0; y < c; ++y) cell.p[y] = cell.raw[y] / sum;
    }
  }
  return dist;
}

std::vector<std::string> top_tokens(const LmiDistribution& distribution, int label, int n) {
  if (n < 0) throw std::invalid_argument("top_tokens: n must be >= 0");
  auto y = static_cast<std::size_t>(label);
  std::vector<std::pair<const std::string*, const LmiCell*>> ranked;
  for (const auto& [token, cell] : distribution.cells) {
    if (y >= cell.p.size()) {
      throw std::invalid_argument("top_tokens: label out of range");
    }
    if (cell.p[y] > 0.0) ranked.emplace_back(&token, &cell);
  }
  std::sort(ranked.begin(), ranked.end(), [y](const auto& a, const auto& b) {
    if (a.second->p[y] != b.second->p[y]) return a.second->p[y] > b.second->p[y];
    return a.second->vocab_id < b.second->vocab_id;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < ranked.size() && i < static_cast<std::size_t>(n); ++i) {
    out.push_back(*ranked[i].first);
  }
  return out;
}

}  // namespace uncq
