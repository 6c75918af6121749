#include <doctest.h>

#include <fstream>

#include "uncq/io_util.hpp"
#include "uncq/reporting.hpp"
#include "uncq/rng.hpp"
#include "uncq/sha256.hpp"
#include "support/temp_dir.hpp"
#include "support/test_models.hpp"

using namespace uncq;

namespace {

// Checks tag balance for the fixed tag set the renderer emits and that no
// unescaped markup survives outside tags.
bool html_well_formed(const std::string& html) {
  std::vector<std::string> stack;
  std::size_t i = 0;
  while (i < html.size()) {
    if (html[i] != '<') {
      ++i;
      continue;
    }
    std::size_t end = html.find('>', i);
    if (end == std::string::npos) return false;
    std::string tag = html.substr(i + 1, end - i - 1);
    i = end + 1;
    if (tag.empty()) return false;
    if (tag[0] == '!') continue;  // doctype
    bool closing = tag[0] == '/';
    if (closing) tag = tag.substr(1);
    std::string name = tag.substr(0, tag.find_first_of(" \t"));
    if (name == "meta" || name == "br") continue;
    if (closing) {
      if (stack.empty() || stack.back() != name) return false;
      stack.pop_back();
    } else {
      stack.push_back(name);
    }
  }
  return stack.empty();
}

RenderedExample sample_item() {
  RenderedExample item;
  item.example = uncq::testing::make_example("ex1", {"a", "fine", "plot", "but", "dreadful"});
  item.prediction.probs = {0.31, 0.69};
  item.prediction.predicted_class = 1;
  item.prediction.confidence = 0.69;
  item.prediction.logits = Logits{{0.0, 0.8}};
  item.digest.important.push_back(DigestEntry{1, "fine", 0.20});
  item.digest.uncertain.push_back(DigestEntry{4, "dreadful", -0.35});
  item.post_removal_confidence = 0.93;
  return item;
}

}  // namespace

TEST_CASE("escape_html neutralizes markup") {
  CHECK(escape_html("<script>alert('x')</script>") ==
        "&lt;script&gt;alert(&#39;x&#39;)&lt;/script&gt;");
  CHECK(escape_html("a & b \"q\"") == "a &amp; b &quot;q&quot;");
  CHECK(escape_html("plain") == "plain");
}

TEST_CASE("render_example_html structure") {
  LabelSpace labels({"negative", "positive"});
  RenderSpec spec;
  RenderedExample item = sample_item();

  std::string html = render_example_html(item.example, item.prediction, item.digest,
                                         item.post_removal_confidence, spec, labels);
  CHECK(html_well_formed(html));
  CHECK(html.find("positive") != std::string::npos);
  CHECK(html.find("0.69") != std::string::npos);
  CHECK(html.find("0.93") != std::string::npos);
  CHECK(html.find("&rarr;") != std::string::npos);
  CHECK(html.find("class=\"imp\"") != std::string::npos);
  CHECK(html.find("class=\"unc\"") != std::string::npos);
  // self-contained: no external references
  CHECK(html.find("href=") == std::string::npos);
  CHECK(html.find("src=") == std::string::npos);
}

TEST_CASE("render without digests or post confidence is plain") {
  LabelSpace labels({"neg", "pos"});
  RenderedExample item = sample_item();
  item.digest = ExplanationDigest{};
  item.post_removal_confidence.reset();
  std::string html =
      render_example_html(item.example, item.prediction, item.digest, std::nullopt, RenderSpec{},
                          labels);
  CHECK(html.find("<span") == std::string::npos);
  CHECK(html.find("&rarr;") == std::string::npos);
  CHECK(html_well_formed(html));
}

TEST_CASE("highlight intensity is |score| over the max highlighted |score|") {
  LabelSpace labels({"neg", "pos"});
  RenderedExample item = sample_item();
  // uncertain word has the largest |score| -> opacity 1.000
  std::string html = render_example_html(item.example, item.prediction, item.digest, std::nullopt,
                                         RenderSpec{}, labels);
  CHECK(html.find("rgba(220,38,38,1.000)") != std::string::npos);
  // the important word scales to 0.20/0.35
  CHECK(html.find("rgba(37,99,235,0.571)") != std::string::npos);
}

TEST_CASE("render rejects out-of-range digest positions") {
  LabelSpace labels({"neg", "pos"});
  RenderedExample item = sample_item();
  item.digest.important[0].position = 99;
  CHECK_THROWS_AS(render_example_html(item.example, item.prediction, item.digest, std::nullopt,
                                      RenderSpec{}, labels),
                  std::invalid_argument);
}

TEST_CASE("hostile tokens are inert in reports") {
  LabelSpace labels({"neg", "pos"});
  RenderedExample item = sample_item();
  item.example.tokens = {"<script>", "x\"onmouseover=\"evil()", "&entity;", "ok"};
  item.example.id = "<img src=x>";
  item.digest = ExplanationDigest{};
  item.digest.important.push_back(DigestEntry{0, "<script>", 0.9});
  std::string html = render_example_html(item.example, item.prediction, item.digest, std::nullopt,
                                         RenderSpec{}, labels);
  CHECK(html.find("<script>") == std::string::npos);
  CHECK(html.find("<img") == std::string::npos);
  CHECK(html_well_formed(html));
}

TEST_CASE("digest jsonl round-trip is exact") {
  testing::TempDir dir("digests");
  std::vector<DigestRecord> records;
  SplitMix64 rng(6);
  for (int r = 0; r < 25; ++r) {
    DigestRecord record;
    record.example_id = "ex" + std::to_string(r);
    record.predicted_class = static_cast<int>(rng.below(2));
    if (rng.below(2) == 0) record.gold_label = static_cast<int>(rng.below(2));
    for (int i = 0; i < 3; ++i) {
      record.digest.important.push_back(
          DigestEntry{rng.below(50), "w" + std::to_string(rng.below(9)), rng.unit()});
      record.digest.uncertain.push_back(
          DigestEntry{50 + rng.below(50), "v" + std::to_string(rng.below(9)), -rng.unit()});
    }
    records.push_back(std::move(record));
  }

  auto path = dir.path() / "digests.jsonl";
  write_file(path, digests_jsonl(records));
  std::vector<DigestRecord> loaded = read_digests_jsonl(path);
  REQUIRE(loaded.size() == records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    CHECK(loaded[r].example_id == records[r].example_id);
    CHECK(loaded[r].predicted_class == records[r].predicted_class);
    CHECK(loaded[r].gold_label == records[r].gold_label);
    REQUIRE(loaded[r].digest.important.size() == records[r].digest.important.size());
    for (std::size_t i = 0; i < records[r].digest.important.size(); ++i) {
      CHECK(loaded[r].digest.important[i].position == records[r].digest.important[i].position);
      CHECK(loaded[r].digest.important[i].token == records[r].digest.important[i].token);
      CHECK(loaded[r].digest.important[i].score == records[r].digest.important[i].score);
    }
    for (std::size_t i = 0; i < records[r].digest.uncertain.size(); ++i) {
      CHECK(loaded[r].digest.uncertain[i].score == records[r].digest.uncertain[i].score);
    }
  }
}

TEST_CASE("export_run writes what exists and manifests it") {
  testing::TempDir dir("export");

  SUBCASE("empty run yields an empty manifest") {
    RunArtifacts artifacts;
    artifacts.labels = LabelSpace({"a", "b"});
    Manifest manifest = export_run(artifacts, dir.path() / "out");
    CHECK(manifest.files.empty());
    CHECK(std::filesystem::exists(dir.path() / "out" / artifact::kManifest));
  }

  SUBCASE("rendered examples count") {
    RunArtifacts artifacts;
    artifacts.labels = LabelSpace({"neg", "pos"});
    for (int i = 0; i < 3; ++i) {
      RenderedExample item = sample_item();
      item.example.id = "ex" + std::to_string(i);
      artifacts.rendered.push_back(item);
    }
    export_run(artifacts, dir.path() / "out");
    std::string html = read_file(dir.path() / "out" / artifact::kReportHtml);
    std::size_t blocks = 0;
    for (std::size_t pos = 0; (pos = html.find("<section", pos)) != std::string::npos; ++pos) {
      ++blocks;
    }
    CHECK(blocks == 3);
  }

  SUBCASE("two identical exports produce byte-identical manifests") {
    RunArtifacts artifacts;
    artifacts.labels = LabelSpace({"neg", "pos"});
    artifacts.rendered.push_back(sample_item());
    Attribution attribution;
    attribution.example_id = "ex1";
    attribution.method = AttributionMethod::loo;
    attribution.base_confidence = 0.69;
    attribution.scores = {0.1, -0.2};
    artifacts.attributions.push_back(attribution);

    export_run(artifacts, dir.path() / "a");
    export_run(artifacts, dir.path() / "b");
    CHECK(sha256_hex(read_file(dir.path() / "a" / artifact::kManifest)) ==
          sha256_hex(read_file(dir.path() / "b" / artifact::kManifest)));
    CHECK(sha256_hex(read_file(dir.path() / "a" / artifact::kReportHtml)) ==
          sha256_hex(read_file(dir.path() / "b" / artifact::kReportHtml)));
  }
}

TEST_CASE("sha256 known vectors") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  // block-boundary lengths
  std::string s55(55, 'a');
  std::string s56(56, 'a');
  std::string s64(64, 'a');
  CHECK(sha256_hex(s55) == "9f4390f8d30c2dd92ec9f095b65e2b9ae9b0a925a5258e241c9f1e910f734318");
  CHECK(sha256_hex(s56) == "b35439a4ac6f0948b6d6f9e3c6af0f5f590ce20f1bde7090ef7970686ec6738a");
  CHECK(sha256_hex(s64) == "ffe054fe7ae0cb6dc65c3af9b61d5209f439851db43d0ba5997337df154668eb");
}

TEST_CASE("confidence change csv shape") {
  ConfidenceChangeReport report;
  report.method = "loo";
  report.removal_group = "uncertain";
  report.k = 5;
  report.bin_edges = {0.5, 0.75, 1.0};
  report.bins.push_back(ConfidenceBinStat{0.5, 0.75, 0, std::nan(""), std::nan(""), std::nan("")});
  report.bins.push_back(ConfidenceBinStat{0.75, 1.0, 2, 0.8, 0.9, 0.1});
  std::string csv = confidence_change_csv(report);
  CHECK(csv.find("lower,upper,count,mean_orig,mean_post,mean_delta\n") == 0);
  CHECK(csv.find("0.5,0.75,0,,,\n") != std::string::npos);  // empty bin leaves means blank
  CHECK(csv.find("0.75,1,2,0.8,0.9,0.1\n") != std::string::npos);
}
