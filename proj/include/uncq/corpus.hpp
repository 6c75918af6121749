#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace uncq {

// One input: an ordered word sequence. Immutable after construction; every
// downstream stage consumes these.
struct TokenizedExample {
  std::string id;
  std::vector<std::string> tokens;
  std::optional<int> gold_label;
};

// Ordered, distinct class names. Class index c is the position in `names`.
class LabelSpace {
 public:
  LabelSpace() = default;
  explicit LabelSpace(std::vector<std::string> names);

  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int index) const { return names_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& names() const { return names_; }
  std::optional<int> index_of(std::string_view name) const;

  bool operator==(const LabelSpace&) const = default;

 private:
  std::vector<std::string> names_;
};

struct Corpus {
  LabelSpace label_space;
  std::vector<TokenizedExample> examples;

  std::size_t size() const { return examples.size(); }
};

// Token -> dense id map, ids assigned by descending corpus frequency with
// lexicographic tie-break, so an id doubles as a frequency rank.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> tokens_by_id, std::vector<std::int64_t> counts_by_id);

  std::size_t size() const { return tokens_.size(); }
  std::optional<int> id_of(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::int64_t frequency(int id) const { return counts_.at(static_cast<std::size_t>(id)); }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::int64_t> counts_;
  std::unordered_map<std::string, int> ids_;
};

enum class CorpusFormat { jsonl, csv };

// Splits on Unicode whitespace; leading/trailing punctuation of each chunk
// becomes standalone single-character tokens; interior punctuation
// (apostrophes, hyphens, ...) stays inside the word. Lowercasing is
// ASCII-only. Never returns empty tokens or tokens containing whitespace.
std::vector<std::string> tokenize(std::string_view text, bool lowercase);

// JSONL: one object per line with "text", "label" and optional "id"
// (defaults to the 1-based line number). CSV: header text,label[,id] with
// RFC-4180 quoting. Label space is ordered by first appearance.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, bool lowercase);

CorpusFormat parse_corpus_format(std::string_view name);

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

struct CorpusSplits {
  Corpus train;
  Corpus dev;
  Corpus test;
};

// Seeded shuffle, then floor-sized dev/test with the remainder going to
// train. The three parts are disjoint and cover the input.
CorpusSplits split_corpus(const Corpus& corpus, SplitRatios ratios, std::uint64_t seed);

Vocabulary build_vocab(const Corpus& corpus, std::int64_t min_count);

}  // namespace uncq
