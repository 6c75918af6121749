#include "uncq/reporting.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "uncq/errors.hpp"
#include "uncq/io_util.hpp"
#include "uncq/sha256.hpp"

namespace uncq {

namespace {

constexpr const char* kImportantColor = "37,99,235";  // blue family
constexpr const char* kUncertainColor = "220,38,38";  // red family

struct Highlight {
  bool important = false;
  double intensity = 0.0;
};

// Maps digest positions to highlight spans: up to max_per_group entries per
// group, opacity |score| / max highlighted |score|.
std::vector<std::pair<std::size_t, Highlight>> select_highlights(const ExplanationDigest& digest,
                                                                 std::size_t num_tokens,
                                                                 int max_per_group) {
  std::vector<std::pair<std::size_t, Highlight>> spans;
  double max_abs = 0.0;
  auto take = [&](const std::vector<DigestEntry>& entries, bool important) {
    std::size_t limit = std::min(entries.size(), static_cast<std::size_t>(std::max(max_per_group, 0)));
    for (std::size_t i = 0; i < limit; ++i) {
      if (entries[i].position >= num_tokens) {
        throw std::invalid_argument("render: digest position " +
                                    std::to_string(entries[i].position) + " out of range");
      }
      spans.emplace_back(entries[i].position, Highlight{important, std::abs(entries[i].score)});
      max_abs = std::max(max_abs, std::abs(entries[i].score));
    }
  };
  take(digest.important, true);
  take(digest.uncertain, false);
  if (max_abs > 0.0) {
    for (auto& [pos, h] : spans) h.intensity /= max_abs;
  }
  return spans;
}

std::string render_block(const RenderedExample& item, const RenderSpec& spec,
                         const LabelSpace& labels) {
  auto spans = select_highlights(item.digest, item.example.tokens.size(), spec.max_per_group);
  std::vector<const Highlight*> by_position(item.example.tokens.size(), nullptr);
  for (const auto& [pos, h] : spans) by_position[pos] = &h;

  std::string label_name = item.prediction.predicted_class < labels.size()
                               ? labels.name(item.prediction.predicted_class)
                               : ("class " + std::to_string(item.prediction.predicted_class));

  std::ostringstream out;
  out << "<section class=\"example\">\n";
  out << "<header><span class=\"id\">" << escape_html(item.example.id) << "</span> "
      << "<strong>" << escape_html(label_name) << "</strong> "
      << format_fixed(item.prediction.confidence, 2);
  if (item.post_removal_confidence.has_value()) {
    out << " (" << format_fixed(item.prediction.confidence, 2) << " &rarr; "
        << format_fixed(*item.post_removal_confidence, 2) << ")";
  }
  out << "</header>\n<p class=\"text\">";
  for (std::size_t i = 0; i < item.example.tokens.size(); ++i) {
    if (i > 0) out << ' ';
    const Highlight* h = by_position[i];
    if (h != nullptr) {
      out << "<span class=\"" << (h->important ? "imp" : "unc")
          << "\" style=\"background-color:rgba(" << (h->important ? kImportantColor : kUncertainColor)
          << "," << format_fixed(h->intensity, 3) << ")\">" << escape_html(item.example.tokens[i])
          << "</span>";
    } else {
      out << escape_html(item.example.tokens[i]);
    }
  }
  out << "</p>\n</section>\n";
  return out.str();
}

std::string html_document(const std::string& body) {
  return "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n"
         "<title>prediction explanations</title>\n"
         "<style>\n"
         "body{font-family:sans-serif;max-width:60em;margin:1em auto;padding:0 1em;}\n"
         "section.example{border-bottom:1px solid #ddd;padding:0.6em 0;}\n"
         "header .id{color:#666;font-size:0.85em;margin-right:0.6em;}\n"
         "p.text{line-height:1.7;}\n"
         "span.imp,span.unc{padding:0 0.15em;border-radius:0.2em;}\n"
         "</style>\n</head>\n<body>\n" +
         body + "</body>\n</html>\n";
}

nlohmann::json nullable(double value) {
  if (std::isnan(value)) return nullptr;
  return value;
}

std::string csv_double(double value) { return std::isnan(value) ? "" : format_double(value); }

}  // namespace

std::string escape_html(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c); break;
    }
  }
  return out;
}

std::string render_example_html(const TokenizedExample& example, const Prediction& prediction,
                                const ExplanationDigest& digest,
                                std::optional<double> post_removal_confidence,
                                const RenderSpec& spec, const LabelSpace& labels) {
  RenderedExample item{example, prediction, digest, post_removal_confidence};
  return html_document(render_block(item, spec, labels));
}

std::string render_report_html(std::span<const RenderedExample> items, const RenderSpec& spec,
                               const LabelSpace& labels) {
  std::string body;
  for (const auto& item : items) body += render_block(item, spec, labels);
  return html_document(body);
}

nlohmann::json to_json(const ReliabilityBin& bin) {
  return nlohmann::json{{"lower", bin.lower},
                        {"upper", bin.upper},
                        {"count", bin.count},
                        {"avg_confidence", nullable(bin.avg_confidence)},
                        {"accuracy", nullable(bin.accuracy)}};
}

nlohmann::json to_json(const CalibrationResult& result) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& bin : result.bins) bins.push_back(to_json(bin));
  return nlohmann::json{
      {"temperature", result.temperature},
      {"objective", objective_name(result.objective)},
      {"grid", {{"lo", result.grid.lo}, {"hi", result.grid.hi}, {"step", result.grid.step}}},
      {"pre_ece", result.pre_ece},
      {"post_ece", result.post_ece},
      {"bins", bins}};
}

nlohmann::json to_json(const Attribution& attribution) {
  nlohmann::json doc{{"example_id", attribution.example_id},
                     {"method", method_name(attribution.method)},
                     {"predicted_class", attribution.predicted_class},
                     {"base_confidence", attribution.base_confidence},
                     {"scores", attribution.scores}};
  if (attribution.meta.has_value()) {
    doc["meta"] = {{"M", attribution.meta->samples},
                   {"seed", attribution.meta->seed},
                   {"scheme", attribution.meta->scheme}};
  }
  return doc;
}

namespace {

nlohmann::json entries_to_json(const std::vector<DigestEntry>& entries) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : entries) {
    arr.push_back({{"position", e.position}, {"token", e.token}, {"score", e.score}});
  }
  return arr;
}

std::vector<DigestEntry> entries_from_json(const nlohmann::json& arr) {
  std::vector<DigestEntry> out;
  for (const auto& e : arr) {
    out.push_back(DigestEntry{e.at("position").get<std::size_t>(),
                              e.at("token").get<std::string>(), e.at("score").get<double>()});
  }
  return out;
}

}  // namespace

nlohmann::json to_json(const DigestRecord& record) {
  return nlohmann::json{
      {"example_id", record.example_id},
      {"predicted_class", record.predicted_class},
      {"gold_label", record.gold_label.has_value() ? nlohmann::json(*record.gold_label)
                                                   : nlohmann::json(nullptr)},
      {"important", entries_to_json(record.digest.important)},
      {"uncertain", entries_to_json(record.digest.uncertain)}};
}

DigestRecord digest_record_from_json(const nlohmann::json& doc) {
  DigestRecord record;
  record.example_id = doc.at("example_id").get<std::string>();
  record.predicted_class = doc.at("predicted_class").get<int>();
  if (doc.contains("gold_label") && !doc["gold_label"].is_null()) {
    record.gold_label = doc["gold_label"].get<int>();
  }
  record.digest.important = entries_from_json(doc.at("important"));
  record.digest.uncertain = entries_from_json(doc.at("uncertain"));
  return record;
}

nlohmann::json to_json(const ConfidenceChangeReport& report) {
  nlohmann::json bins = nlohmann::json::array();
  for (const auto& bin : report.bins) {
    bins.push_back({{"lower", bin.lower},
                    {"upper", bin.upper},
                    {"count", bin.count},
                    {"mean_original", nullable(bin.mean_original)},
                    {"mean_post", nullable(bin.mean_post)},
                    {"mean_delta", nullable(bin.mean_delta)}});
  }
  nlohmann::json doc{{"method", report.method},
                     {"removal_group", report.removal_group},
                     {"k", report.k},
                     {"bin_edges", report.bin_edges},
                     {"bins", bins},
                     {"overall_mean_delta", report.overall_mean_delta},
                     {"sample_size", report.sample_size},
                     {"zero_feature_examples", report.zero_feature_examples}};
  if (report.label_flip_rate.has_value()) doc["label_flip_rate"] = *report.label_flip_rate;
  return doc;
}

std::string confidence_change_csv(const ConfidenceChangeReport& report) {
  std::string out = "lower,upper,count,mean_orig,mean_post,mean_delta\n";
  for (const auto& bin : report.bins) {
    out += format_double(bin.lower) + "," + format_double(bin.upper) + "," +
           std::to_string(bin.count) + "," + csv_double(bin.mean_original) + "," +
           csv_double(bin.mean_post) + "," + csv_double(bin.mean_delta) + "\n";
  }
  return out;
}

std::string lmi_csv(std::span<const LmiExportGroup> groups, const LabelSpace& labels) {
  std::string out = "group,token,label,p_lmi,frequency_rank\n";
  for (const auto& group : groups) {
    if (group.distribution == nullptr) continue;
    struct Row {
      const std::string* token;
      int label;
      double p;
      int vocab_id;
    };
    std::vector<Row> rows;
    for (const auto& [token, cell] : group.distribution->cells) {
      for (int y = 0; y < group.distribution->num_classes; ++y) {
        double p = cell.p[static_cast<std::size_t>(y)];
        if (p > 0.0) rows.push_back(Row{&token, y, p, cell.vocab_id});
      }
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      if (a.label != b.label) return a.label < b.label;
      if (a.p != b.p) return a.p > b.p;
      return a.vocab_id < b.vocab_id;
    });
    for (const auto& row : rows) {
      out += csv_field(group.group) + "," + csv_field(*row.token) + "," +
             csv_field(labels.name(row.label)) + "," + format_double(row.p) + "," +
             std::to_string(row.vocab_id) + "\n";
    }
  }
  return out;
}

std::string digests_jsonl(std::span<const DigestRecord> records) {
  std::string out;
  for (const auto& record : records) out += to_json(record).dump() + "\n";
  return out;
}

std::vector<DigestRecord> read_digests_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RunError("cannot open digests file: " + path.string());
  std::vector<DigestRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      records.push_back(digest_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw RunError(path.string() + ":" + std::to_string(line_no) + ": malformed digest record: " +
                     e.what());
    }
  }
  return records;
}

std::string attributions_jsonl(std::span<const Attribution> attributions) {
  std::string out;
  for (const auto& attribution : attributions) out += to_json(attribution).dump() + "\n";
  return out;
}

Manifest write_manifest(const std::filesystem::path& out_dir,
                        std::span<const std::string> file_names) {
  std::vector<std::string> names(file_names.begin(), file_names.end());
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());

  Manifest manifest;
  nlohmann::json files = nlohmann::json::array();
  for (const auto& name : names) {
    auto path = out_dir / name;
    if (!std::filesystem::exists(path)) continue;
    std::string content = read_file(path);
    ManifestEntry entry{name, sha256_hex(content), content.size()};
    files.push_back({{"name", entry.name}, {"sha256", entry.sha256}, {"bytes", entry.bytes}});
    manifest.files.push_back(std::move(entry));
  }
  write_file(out_dir / artifact::kManifest, nlohmann::json{{"files", files}}.dump(2) + "\n");
  return manifest;
}

Manifest export_run(const RunArtifacts& artifacts, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw RunError("cannot create output directory " + out_dir.string() + ": " + ec.message());

  std::vector<std::string> written;
  auto emit = [&](const char* name, const std::string& content) {
    write_file(out_dir / name, content);
    written.push_back(name);
  };

  if (!artifacts.attributions.empty()) {
    emit(artifact::kAttributions, attributions_jsonl(artifacts.attributions));
  }
  if (!artifacts.digests.empty()) {
    emit(artifact::kDigests, digests_jsonl(artifacts.digests));
  }
  for (const auto& report : artifacts.reports) {
    bool uncertain = report.removal_group == "uncertain";
    emit(uncertain ? artifact::kConfidenceChangeJson : artifact::kImportantRemovalJson,
         to_json(report).dump(2) + "\n");
    emit(uncertain ? artifact::kConfidenceChangeCsv : artifact::kImportantRemovalCsv,
         confidence_change_csv(report));
  }
  bool any_lmi = std::any_of(artifacts.lmi_groups.begin(), artifacts.lmi_groups.end(),
                             [](const LmiExportGroup& g) { return g.distribution != nullptr; });
  if (any_lmi) {
    emit(artifact::kLmiCsv, lmi_csv(artifacts.lmi_groups, artifacts.labels));
  }
  if (artifacts.calibration.has_value()) {
    emit(artifact::kCalibration, artifacts.calibration->dump(2) + "\n");
  }
  if (!artifacts.rendered.empty()) {
    emit(artifact::kReportHtml,
         render_report_html(artifacts.rendered, artifacts.render_spec, artifacts.labels));
  }
  if (artifacts.config_echo.has_value()) {
    emit(artifact::kConfig, artifacts.config_echo->dump(2) + "\n");
  }
  return write_manifest(out_dir, written);
}

}  // namespace uncq
