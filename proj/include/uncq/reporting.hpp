#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "uncq/attribution.hpp"
#include "uncq/calibration.hpp"
#include "uncq/corpus.hpp"
#include "uncq/evaluation.hpp"
#include "uncq/lmi.hpp"

namespace uncq {

// Highlighting rules for rendered explanations: up to `max_per_group` words
// per group, important words in the blue family, uncertain words in the red
// family, opacity scaled by |score| relative to the largest highlighted
// |score| in the example.
struct RenderSpec {
  int max_per_group = 2;
};

std::string escape_html(std::string_view text);

// Self-contained HTML document for one explained example. The header shows
// the predicted label and confidence, plus "(c0 -> c1)" when the post-removal
// confidence is supplied.
std::string render_example_html(const TokenizedExample& example, const Prediction& prediction,
                                const ExplanationDigest& digest,
                                std::optional<double> post_removal_confidence,
                                const RenderSpec& spec, const LabelSpace& labels);

// One block per example, same markup, single document.
struct RenderedExample {
  TokenizedExample example;
  Prediction prediction;
  ExplanationDigest digest;
  std::optional<double> post_removal_confidence;
};
std::string render_report_html(std::span<const RenderedExample> items, const RenderSpec& spec,
                               const LabelSpace& labels);

// Machine-readable artifact shapes.
nlohmann::json to_json(const ReliabilityBin& bin);
nlohmann::json to_json(const CalibrationResult& result);
nlohmann::json to_json(const Attribution& attribution);
nlohmann::json to_json(const DigestRecord& record);
DigestRecord digest_record_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ConfidenceChangeReport& report);
std::string confidence_change_csv(const ConfidenceChangeReport& report);

// CSV rows token,label,p_lmi,frequency_rank (plus a leading group column),
// ordered by group, label, share descending.
struct LmiExportGroup {
  std::string group;
  const LmiDistribution* distribution;  // may be null for an empty group
};
std::string lmi_csv(std::span<const LmiExportGroup> groups, const LabelSpace& labels);

std::string digests_jsonl(std::span<const DigestRecord> records);
std::vector<DigestRecord> read_digests_jsonl(const std::filesystem::path& path);
std::string attributions_jsonl(std::span<const Attribution> attributions);

struct ManifestEntry {
  std::string name;
  std::string sha256;
  std::uint64_t bytes = 0;
};
struct Manifest {
  std::vector<ManifestEntry> files;
};

// Hashes the named files under out_dir (sorted, missing ones skipped) and
// writes manifest.json.
Manifest write_manifest(const std::filesystem::path& out_dir,
                        std::span<const std::string> file_names);

// Standard artifact file names used across the pipeline.
namespace artifact {
inline constexpr const char* kModel = "model.json";
inline constexpr const char* kCalibration = "calibration.json";
inline constexpr const char* kAttributions = "attributions.jsonl";
inline constexpr const char* kDigests = "digests.jsonl";
inline constexpr const char* kConfidenceChangeJson = "confidence_change.json";
inline constexpr const char* kConfidenceChangeCsv = "confidence_change.csv";
inline constexpr const char* kImportantRemovalJson = "important_removal.json";
inline constexpr const char* kImportantRemovalCsv = "important_removal.csv";
inline constexpr const char* kLmiCsv = "lmi.csv";
inline constexpr const char* kReportHtml = "report.html";
inline constexpr const char* kManifest = "manifest.json";
inline constexpr const char* kConfig = "run_config.json";
}  // namespace artifact

// Everything one run produced; export writes whatever is present and returns
// the manifest of written files.
struct RunArtifacts {
  std::vector<Attribution> attributions;
  std::vector<DigestRecord> digests;
  std::vector<ConfidenceChangeReport> reports;  // paired json+csv per report
  std::vector<LmiExportGroup> lmi_groups;
  std::optional<nlohmann::json> calibration;
  std::vector<RenderedExample> rendered;
  RenderSpec render_spec;
  LabelSpace labels;
  std::optional<nlohmann::json> config_echo;
};

Manifest export_run(const RunArtifacts& artifacts, const std::filesystem::path& out_dir);

}  // namespace uncq
