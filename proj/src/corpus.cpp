#include "uncq/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "uncq/errors.hpp"
#include "uncq/rng.hpp"

namespace uncq {

namespace {

// One decoded unit of input text: a code point plus its raw bytes. Invalid
// UTF-8 bytes pass through as single opaque units (cp = -1) so tokenization
// never rewrites input bytes.
struct TextUnit {
  long cp;
  std::string_view bytes;
};

bool is_space_cp(long cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_punct_cp(long cp) {
  if (cp >= 0x21 && cp <= 0x7E) {
    return !(std::isalnum(static_cast<unsigned char>(cp)));
  }
  if (cp >= 0x2010 && cp <= 0x2027) return true;  // dashes, quotes, bullets, ellipsis
  switch (cp) {
    case 0xA1: case 0xAB: case 0xBB: case 0xBF: case 0x2039: case 0x203A:
      return true;
    default:
      return false;
  }
}

// Decodes the unit starting at `pos`; returns its byte length.
std::size_t decode_unit(std::string_view text, std::size_t pos, long& cp) {
  unsigned char lead = static_cast<unsigned char>(text[pos]);
  if (lead < 0x80) {
    cp = lead;
    return 1;
  }
  std::size_t len = 0;
  long value = 0;
  if ((lead & 0xE0) == 0xC0) { len = 2; value = lead & 0x1F; }
  else if ((lead & 0xF0) == 0xE0) { len = 3; value = lead & 0x0F; }
  else if ((lead & 0xF8) == 0xF0) { len = 4; value = lead & 0x07; }
  if (len == 0 || pos + len > text.size()) {
    cp = -1;
    return 1;
  }
  for (std::size_t i = 1; i < len; ++i) {
    unsigned char cont = static_cast<unsigned char>(text[pos + i]);
    if ((cont & 0xC0) != 0x80) {
      cp = -1;
      return 1;
    }
    value = (value << 6) | (cont & 0x3F);
  }
  cp = value;
  return len;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

void emit_chunk(const std::vector<TextUnit>& chunk, bool lowercase,
                std::vector<std::string>& out) {
  std::size_t lo = 0;
  std::size_t hi = chunk.size();
  auto emit_unit = [&](const TextUnit& u) {
    out.push_back(lowercase ? ascii_lower(u.bytes) : std::string(u.bytes));
  };

  while (lo < hi && is_punct_cp(chunk[lo].cp)) emit_unit(chunk[lo++]);
  std::size_t mid_end = hi;
  while (mid_end > lo && is_punct_cp(chunk[mid_end - 1].cp)) --mid_end;
  if (mid_end > lo) {
    std::string word;
    for (std::size_t i = lo; i < mid_end; ++i) word.append(chunk[i].bytes);
    out.push_back(lowercase ? ascii_lower(word) : std::move(word));
  }
  for (std::size_t i = mid_end; i < hi; ++i) emit_unit(chunk[i]);
}

int intern_label(LabelSpace& space, std::vector<std::string>& names,
                 std::unordered_map<std::string, int>& index, const std::string& label) {
  auto it = index.find(label);
  if (it != index.end()) return it->second;
  int id = static_cast<int>(names.size());
  names.push_back(label);
  index.emplace(label, id);
  space = LabelSpace(names);
  return id;
}

struct RawRecord {
  std::string id;
  std::string text;
  std::string label;
  std::size_t line;  // 1-based, for error messages
};

std::vector<RawRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open corpus file: " + path.string());
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": malformed JSON record: " + e.what());
    }
    if (!obj.is_object() || !obj.contains("text") || !obj["text"].is_string()) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": record missing string \"text\"");
    }
    if (!obj.contains("label") || !obj["label"].is_string()) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": record missing string \"label\"");
    }
    RawRecord rec;
    rec.text = obj["text"].get<std::string>();
    rec.label = obj["label"].get<std::string>();
    rec.line = line_no;
    if (obj.contains("id")) {
      if (!obj["id"].is_string()) {
        throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                          ": \"id\" must be a string");
      }
      rec.id = obj["id"].get<std::string>();
    } else {
      rec.id = std::to_string(line_no);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

// RFC-4180 reader. Returns one vector of fields per record; quoted fields may
// span lines. `line_starts` records the 1-based line each record began on.
std::vector<std::vector<std::string>> read_csv(const std::string& content,
                                               std::vector<std::size_t>& line_starts) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto end_field = [&] {
    fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(fields));
    fields.clear();
    line_starts.push_back(record_line);
    record_line = line;
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        ++line;
        end_record();
        break;
      default:
        field.push_back(c);
        field_started = true;
        break;
    }
  }
  if (field_started || !field.empty() || !fields.empty()) end_record();
  return records;
}

std::vector<RawRecord> read_csv_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open corpus file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  std::vector<std::size_t> line_starts;
  auto rows = read_csv(buf.str(), line_starts);
  if (rows.empty()) throw ConfigError(path.string() + ": empty CSV corpus (missing header)");

  const auto& header = rows.front();
  auto column = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  auto text_col = column("text");
  auto label_col = column("label");
  auto id_col = column("id");
  if (!text_col || !label_col) {
    throw ConfigError(path.string() + ":1: CSV header must contain columns text,label[,id]");
  }

  std::vector<RawRecord> records;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    std::size_t line_no = line_starts[r];
    if (row.size() == 1 && row[0].empty()) continue;  // trailing blank line
    std::size_t required = std::max(*text_col, *label_col);
    if (row.size() <= required) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) +
                        ": record has " + std::to_string(row.size()) + " fields, needs " +
                        std::to_string(required + 1));
    }
    RawRecord rec;
    rec.text = row[*text_col];
    rec.label = row[*label_col];
    rec.line = line_no;
    rec.id = (id_col && row.size() > *id_col && !row[*id_col].empty())
                 ? row[*id_col]
                 : std::to_string(line_no);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace

LabelSpace::LabelSpace(std::vector<std::string> names) : names_(std::move(names)) {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    for (std::size_t j = i + 1; j < names_.size(); ++j) {
      if (names_[i] == names_[j]) {
        throw std::invalid_argument("duplicate class name: " + names_[i]);
      }
    }
  }
}

std::optional<int> LabelSpace::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return static_cast<int>(i);
  }
  return std::nullopt;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens_by_id, std::vector<std::int64_t> counts_by_id)
    : tokens_(std::move(tokens_by_id)), counts_(std::move(counts_by_id)) {
  if (tokens_.size() != counts_.size()) {
    throw std::invalid_argument("vocabulary tokens/counts size mismatch");
  }
  ids_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw std::invalid_argument("duplicate vocabulary token: " + tokens_[i]);
    }
  }
}

std::optional<int> Vocabulary::id_of(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> tokenize(std::string_view text, bool lowercase) {
  std::vector<std::string> out;
  std::vector<TextUnit> chunk;
  std::size_t pos = 0;
  while (pos < text.size()) {
    long cp = 0;
    std::size_t len = decode_unit(text, pos, cp);
    if (is_space_cp(cp)) {
      if (!chunk.empty()) {
        emit_chunk(chunk, lowercase, out);
        chunk.clear();
      }
    } else {
      chunk.push_back(TextUnit{cp, text.substr(pos, len)});
    }
    pos += len;
  }
  if (!chunk.empty()) emit_chunk(chunk, lowercase, out);
  return out;
}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::jsonl;
  if (name == "csv") return CorpusFormat::csv;
  throw ConfigError("unknown corpus format: " + std::string(name) + " (expected jsonl or csv)");
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, bool lowercase) {
  std::vector<RawRecord> records =
      format == CorpusFormat::jsonl ? read_jsonl(path) : read_csv_records(path);

  Corpus corpus;
  std::vector<std::string> label_names;
  std::unordered_map<std::string, int> label_index;
  std::unordered_map<std::string, std::size_t> seen_ids;
  corpus.examples.reserve(records.size());
  for (const auto& rec : records) {
    auto [it, inserted] = seen_ids.emplace(rec.id, rec.line);
    if (!inserted) {
      throw ConfigError(path.string() + ":" + std::to_string(rec.line) + ": duplicate id \"" +
                        rec.id + "\" (first used at line " + std::to_string(it->second) + ")");
    }
    TokenizedExample example;
    example.id = rec.id;
    example.tokens = tokenize(rec.text, lowercase);
    example.gold_label = intern_label(corpus.label_space, label_names, label_index, rec.label);
    corpus.examples.push_back(std::move(example));
  }
  return corpus;
}

CorpusSplits split_corpus(const Corpus& corpus, SplitRatios ratios, std::uint64_t seed) {
  if (corpus.examples.empty()) throw std::invalid_argument("split_corpus: corpus is empty");
  if (ratios.train < 0 || ratios.dev < 0 || ratios.test < 0) {
    throw std::invalid_argument("split_corpus: ratios must be non-negative");
  }
  double sum = ratios.train + ratios.dev + ratios.test;
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split_corpus: ratios must sum to 1, got " + std::to_string(sum));
  }

  std::size_t n = corpus.examples.size();
  auto n_dev = static_cast<std::size_t>(ratios.dev * static_cast<double>(n));
  auto n_test = static_cast<std::size_t>(ratios.test * static_cast<double>(n));
  std::size_t n_train = n - n_dev - n_test;  // remainder goes to train

  SplitMix64 rng(seed);
  std::vector<std::size_t> order = random_permutation(n, rng);

  CorpusSplits splits;
  splits.train.label_space = corpus.label_space;
  splits.dev.label_space = corpus.label_space;
  splits.test.label_space = corpus.label_space;
  splits.train.examples.reserve(n_train);
  splits.dev.examples.reserve(n_dev);
  splits.test.examples.reserve(n_test);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& example = corpus.examples[order[i]];
    if (i < n_train) {
      splits.train.examples.push_back(example);
    } else if (i < n_train + n_dev) {
      splits.dev.examples.push_back(example);
    } else {
      splits.test.examples.push_back(example);
    }
  }
  return splits;
}

Vocabulary build_vocab(const Corpus& corpus, std::int64_t min_count) {
  if (min_count < 1) throw std::invalid_argument("build_vocab: min_count must be >= 1");
  std::unordered_map<std::string, std::int64_t> counts;
  for (const auto& example : corpus.examples) {
    for (const auto& token : example.tokens) ++counts[token];
  }
  std::vector<std::pair<std::string, std::int64_t>> entries;
  entries.reserve(counts.size());
  for (auto& [token, count] : counts) {
    if (count >= min_count) entries.emplace_back(token, count);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens;
  std::vector<std::int64_t> freqs;
  tokens.reserve(entries.size());
  freqs.reserve(entries.size());
  for (auto& [token, count] : entries) {
    tokens.push_back(std::move(token));
    freqs.push_back(count);
  }
  return Vocabulary(std::move(tokens), std::move(freqs));
}

}  // namespace uncq
