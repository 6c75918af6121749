#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include "uncq/corpus.hpp"
#include "uncq/errors.hpp"
#include "uncq/io_util.hpp"
#include "uncq/rng.hpp"
#include "support/temp_dir.hpp"

using namespace uncq;

namespace {

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace

TEST_CASE("tokenize basics") {
  CHECK(tokenize("", true).empty());
  CHECK(tokenize("dreadful", true) == std::vector<std::string>{"dreadful"});
  CHECK(tokenize("Not bad, really.", true) ==
        std::vector<std::string>{"not", "bad", ",", "really", "."});
  CHECK(tokenize("Not bad, really.", false) ==
        std::vector<std::string>{"Not", "bad", ",", "really", "."});
}

TEST_CASE("tokenize punctuation placement") {
  // leading and trailing peel off one character at a time, in reading order
  CHECK(tokenize("(hi!)", false) == std::vector<std::string>{"(", "hi", "!", ")"});
  CHECK(tokenize("!!!", false) == std::vector<std::string>{"!", "!", "!"});
  // interior apostrophes and hyphens stay inside the word
  CHECK(tokenize("don't stop", true) == std::vector<std::string>{"don't", "stop"});
  CHECK(tokenize("well-known.", true) == std::vector<std::string>{"well-known", "."});
  CHECK(tokenize("dogs'", true) == std::vector<std::string>{"dogs", "'"});
}

TEST_CASE("tokenize unicode whitespace and punctuation") {
  // U+00A0 no-break space separates; U+2014 em dash peels as one token
  CHECK(tokenize("a b", true) == std::vector<std::string>{"a", "b"});
  CHECK(tokenize("wait—what", true) == std::vector<std::string>{"wait—what"});
  CHECK(tokenize("wait— what", true) == std::vector<std::string>{"wait", "—", "what"});
  CHECK(tokenize("tabs\tand\nnewlines", true) ==
        std::vector<std::string>{"tabs", "and", "newlines"});
}

TEST_CASE("tokenize is idempotent on its own joined output") {
  SplitMix64 rng(99);
  const std::vector<std::string> pieces = {"Hello", "world!",  "it's", "well-done,",
                                           "(yes)", "...",     "a-b-", "'quoted'",
                                           "x",     "Mr.",     "#tag", "50%"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string text;
    std::size_t len = rng.below(8);
    for (std::size_t i = 0; i < len; ++i) {
      if (i > 0) text.push_back(' ');
      text += pieces[rng.below(pieces.size())];
    }
    auto once = tokenize(text, true);
    auto twice = tokenize(join(once), true);
    CHECK(twice == once);
    for (const auto& token : once) {
      CHECK(!token.empty());
      CHECK(token.find(' ') == std::string::npos);
    }
  }
}

TEST_CASE("load_corpus jsonl") {
  testing::TempDir dir("corpus");
  auto path = dir.path() / "data.jsonl";

  SUBCASE("single record") {
    write_file(path, R"({"id":"a","text":"good movie","label":"pos"})" "\n");
    Corpus corpus = load_corpus(path, CorpusFormat::jsonl, true);
    REQUIRE(corpus.examples.size() == 1);
    CHECK(corpus.examples[0].id == "a");
    CHECK(corpus.examples[0].tokens == std::vector<std::string>{"good", "movie"});
    CHECK(corpus.label_space.size() == 1);
  }

  SUBCASE("label space in first-appearance order, ids default to line numbers") {
    write_file(path,
               R"({"text":"x","label":"pos"})" "\n"
               R"({"text":"y","label":"neg"})" "\n"
               R"({"text":"z","label":"pos"})" "\n");
    Corpus corpus = load_corpus(path, CorpusFormat::jsonl, true);
    CHECK(corpus.label_space.names() == std::vector<std::string>{"pos", "neg"});
    CHECK(corpus.examples[0].id == "1");
    CHECK(corpus.examples[2].id == "3");
    CHECK(corpus.examples[1].gold_label == 1);
  }

  SUBCASE("missing label names the line") {
    write_file(path, R"({"text":"x","label":"pos"})" "\n" R"({"text":"y"})" "\n");
    CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::jsonl, true),
                         doctest::Contains(":2"), ConfigError);
  }

  SUBCASE("malformed json names the line") {
    write_file(path, R"({"text":"x","label":"pos"})" "\n" "{nope\n");
    CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::jsonl, true),
                         doctest::Contains(":2"), ConfigError);
  }

  SUBCASE("duplicate ids rejected") {
    write_file(path,
               R"({"id":"a","text":"x","label":"p"})" "\n"
               R"({"id":"a","text":"y","label":"q"})" "\n");
    CHECK_THROWS_AS(load_corpus(path, CorpusFormat::jsonl, true), ConfigError);
  }
}

TEST_CASE("load_corpus csv") {
  testing::TempDir dir("corpus");
  auto path = dir.path() / "data.csv";

  SUBCASE("quoting and column order") {
    write_file(path,
               "label,text,id\n"
               "pos,\"a good, quoted \"\"movie\"\"\",m1\n"
               "neg,plain text,m2\n");
    Corpus corpus = load_corpus(path, CorpusFormat::csv, true);
    REQUIRE(corpus.examples.size() == 2);
    CHECK(corpus.examples[0].id == "m1");
    CHECK(corpus.examples[0].tokens ==
          std::vector<std::string>{"a", "good", ",", "quoted", "\"", "movie", "\""});
    CHECK(corpus.label_space.names() == std::vector<std::string>{"pos", "neg"});
  }

  SUBCASE("id column optional") {
    write_file(path, "text,label\nhello,pos\n");
    Corpus corpus = load_corpus(path, CorpusFormat::csv, true);
    CHECK(corpus.examples[0].id == "2");
  }

  SUBCASE("missing column rejected") {
    write_file(path, "text,tag\nhello,pos\n");
    CHECK_THROWS_AS(load_corpus(path, CorpusFormat::csv, true), ConfigError);
  }

  SUBCASE("short record names the line") {
    write_file(path, "text,label\nhello,pos\nonlyonefield\n");
    CHECK_THROWS_WITH_AS(load_corpus(path, CorpusFormat::csv, true),
                         doctest::Contains(":3"), ConfigError);
  }
}

TEST_CASE("parse_corpus_format rejects unknown formats") {
  CHECK(parse_corpus_format("jsonl") == CorpusFormat::jsonl);
  CHECK(parse_corpus_format("csv") == CorpusFormat::csv);
  CHECK_THROWS_AS(parse_corpus_format("tsv"), ConfigError);
}

namespace {

Corpus numbered_corpus(std::size_t n) {
  Corpus corpus;
  corpus.label_space = LabelSpace({"a", "b"});
  for (std::size_t i = 0; i < n; ++i) {
    corpus.examples.push_back(
        TokenizedExample{"id" + std::to_string(i), {"tok"}, static_cast<int>(i % 2)});
  }
  return corpus;
}

}  // namespace

TEST_CASE("split_corpus sizes and determinism") {
  Corpus corpus = numbered_corpus(10);
  CorpusSplits splits = split_corpus(corpus, SplitRatios{0.8, 0.1, 0.1}, 7);
  CHECK(splits.train.size() == 8);
  CHECK(splits.dev.size() == 1);
  CHECK(splits.test.size() == 1);

  CorpusSplits again = split_corpus(corpus, SplitRatios{0.8, 0.1, 0.1}, 7);
  for (std::size_t i = 0; i < splits.train.size(); ++i) {
    CHECK(splits.train.examples[i].id == again.train.examples[i].id);
  }
  CHECK(splits.dev.examples[0].id == again.dev.examples[0].id);
  CHECK(splits.test.examples[0].id == again.test.examples[0].id);
}

TEST_CASE("split_corpus partitions the corpus") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    Corpus corpus = numbered_corpus(23);
    CorpusSplits splits = split_corpus(corpus, SplitRatios{0.6, 0.2, 0.2}, seed);
    std::set<std::string> ids;
    std::size_t total = 0;
    for (const Corpus* part : {&splits.train, &splits.dev, &splits.test}) {
      for (const auto& example : part->examples) {
        ids.insert(example.id);
        ++total;
      }
      CHECK(part->label_space == corpus.label_space);
    }
    CHECK(total == corpus.size());
    CHECK(ids.size() == corpus.size());
  }
}

TEST_CASE("split_corpus contract errors") {
  Corpus corpus = numbered_corpus(4);
  CHECK_THROWS_AS(split_corpus(corpus, SplitRatios{0.5, 0.5, 0.1}, 1), std::invalid_argument);
  Corpus empty;
  empty.label_space = corpus.label_space;
  CHECK_THROWS_AS(split_corpus(empty, SplitRatios{0.8, 0.1, 0.1}, 1), std::invalid_argument);
}

TEST_CASE("build_vocab thresholds, ordering, and bijection") {
  Corpus corpus;
  corpus.label_space = LabelSpace({"a", "b"});
  corpus.examples.push_back(TokenizedExample{"1", {"a", "a", "a", "b"}, 0});
  corpus.examples.push_back(TokenizedExample{"2", {"x", "y", "x", "y"}, 1});

  SUBCASE("min_count filters") {
    Vocabulary vocab = build_vocab(corpus, 2);
    CHECK(vocab.size() == 3);  // a:3 x:2 y:2; b dropped
    CHECK(!vocab.id_of("b").has_value());
  }

  SUBCASE("ids by descending frequency, ties lexicographic") {
    Vocabulary vocab = build_vocab(corpus, 1);
    CHECK(vocab.id_of("a") == 0);
    CHECK(vocab.id_of("x") == 1);  // x and y tie at 2 -> lexicographic
    CHECK(vocab.id_of("y") == 2);
    CHECK(vocab.id_of("b") == 3);
    // bijection onto [0, V)
    std::set<int> ids;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      auto id = vocab.id_of(vocab.token(static_cast<int>(i)));
      REQUIRE(id.has_value());
      ids.insert(*id);
    }
    CHECK(ids.size() == vocab.size());
    CHECK(*ids.begin() == 0);
    CHECK(*ids.rbegin() == static_cast<int>(vocab.size()) - 1);
  }

  SUBCASE("empty corpus gives empty vocab") {
    Corpus empty;
    empty.label_space = corpus.label_space;
    CHECK(build_vocab(empty, 1).size() == 0);
  }
}
