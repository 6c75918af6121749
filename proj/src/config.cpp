#include "uncq/config.hpp"

#include <cmath>
#include <set>

#include "uncq/attribution.hpp"
#include "uncq/errors.hpp"
#include "uncq/io_util.hpp"
#include "uncq/lmi.hpp"

namespace uncq {

namespace {

// Rejects keys outside `allowed` so typos fail fast instead of silently
// falling back to defaults.
void check_keys(const nlohmann::json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ConfigError("config: " + where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (allowed.count(key) == 0) {
      throw ConfigError("config: unknown key \"" + key + "\" in " + where);
    }
  }
}

template <typename T>
T get_or(const nlohmann::json& obj, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config: key \"") + key + "\" has the wrong type");
  }
}

}  // namespace

int RunConfig::resolve_k(const Corpus& corpus, std::optional<int> k) const {
  if (k.has_value()) return *k;
  if (corpus.examples.empty()) return 5;
  std::size_t tokens = 0;
  for (const auto& example : corpus.examples) tokens += example.tokens.size();
  double avg = static_cast<double>(tokens) / static_cast<double>(corpus.examples.size());
  return avg > 100.0 ? 10 : 5;
}

nlohmann::json RunConfig::echo() const {
  nlohmann::json doc{
      {"corpus",
       {{"path", corpus_path},
        {"format", corpus_format == CorpusFormat::jsonl ? "jsonl" : "csv"},
        {"lowercase", lowercase}}},
      {"split", {{"ratios", {ratios.train, ratios.dev, ratios.test}}, {"seed", split_seed}}},
      {"classifier",
       {{"type", classifier == ClassifierKind::builtin ? "builtin" : "remote"},
        {"alpha", alpha}}},
      {"calibration",
       {{"grid", {{"lo", grid.lo}, {"hi", grid.hi}, {"step", grid.step}}},
        {"objective", objective_name(objective)},
        {"bins", calibration_bins}}},
      {"explainer",
       {{"method", method_name(method)}, {"samples", samples}, {"seed", explainer_seed}}},
      {"evaluation", {{"sample_size", sample_size}, {"seed", evaluation_seed()}}},
      {"lmi", {{"top_n", lmi_top_n}, {"label_basis", basis_name(lmi_basis)}}},
      {"vocab", {{"min_count", vocab_min_count}}},
      {"output_dir", output_dir.string()},
      {"model_path", resolved_model_path().string()},
  };
  // workers is a scheduling knob with no effect on results; keeping it out of
  // the echo keeps artifacts byte-identical across worker counts.
  if (classifier == ClassifierKind::remote) {
    doc["classifier"]["url"] = remote_url;
    doc["classifier"]["timeout_s"] = remote_timeout_s;
    doc["classifier"]["max_batch"] = remote_max_batch;
  }
  if (k_imp.has_value()) doc["digest"]["k_imp"] = *k_imp;
  if (k_unc.has_value()) doc["digest"]["k_unc"] = *k_unc;
  if (!doc.contains("digest")) doc["digest"] = nlohmann::json::object();
  if (!eval_bins.empty()) doc["evaluation"]["bins"] = eval_bins;
  return doc;
}

RunConfig parse_config(const nlohmann::json& doc) {
  check_keys(doc, "top level",
             {"corpus", "split", "classifier", "calibration", "explainer", "digest", "evaluation",
              "lmi", "vocab", "output_dir", "model_path", "workers"});
  RunConfig config;

  if (!doc.contains("corpus")) throw ConfigError("config: missing required section \"corpus\"");
  const auto& corpus = doc.at("corpus");
  check_keys(corpus, "corpus", {"path", "format", "lowercase"});
  if (!corpus.contains("path")) throw ConfigError("config: corpus.path is required");
  config.corpus_path = corpus.at("path").get<std::string>();
  config.corpus_format = parse_corpus_format(get_or<std::string>(corpus, "format", "jsonl"));
  config.lowercase = get_or<bool>(corpus, "lowercase", true);

  if (doc.contains("split")) {
    const auto& split = doc.at("split");
    check_keys(split, "split", {"ratios", "seed"});
    if (split.contains("ratios")) {
      auto ratios = split.at("ratios").get<std::vector<double>>();
      if (ratios.size() != 3) throw ConfigError("config: split.ratios must have 3 entries");
      config.ratios = SplitRatios{ratios[0], ratios[1], ratios[2]};
    }
    config.split_seed = get_or<std::uint64_t>(split, "seed", config.split_seed);
  }

  if (doc.contains("classifier")) {
    const auto& classifier = doc.at("classifier");
    check_keys(classifier, "classifier", {"type", "alpha", "url", "timeout_s", "max_batch"});
    std::string type = get_or<std::string>(classifier, "type", "builtin");
    if (type == "builtin") {
      config.classifier = ClassifierKind::builtin;
    } else if (type == "remote") {
      config.classifier = ClassifierKind::remote;
      if (!classifier.contains("url")) throw ConfigError("config: classifier.url required for remote");
      config.remote_url = classifier.at("url").get<std::string>();
    } else {
      throw ConfigError("config: classifier.type must be builtin or remote");
    }
    config.alpha = get_or<double>(classifier, "alpha", config.alpha);
    config.remote_timeout_s = get_or<double>(classifier, "timeout_s", config.remote_timeout_s);
    config.remote_max_batch = get_or<int>(classifier, "max_batch", config.remote_max_batch);
  }

  if (doc.contains("calibration")) {
    const auto& calibration = doc.at("calibration");
    check_keys(calibration, "calibration", {"grid", "objective", "bins"});
    if (calibration.contains("grid")) {
      const auto& grid = calibration.at("grid");
      check_keys(grid, "calibration.grid", {"lo", "hi", "step"});
      config.grid.lo = get_or<double>(grid, "lo", config.grid.lo);
      config.grid.hi = get_or<double>(grid, "hi", config.grid.hi);
      config.grid.step = get_or<double>(grid, "step", config.grid.step);
    }
    config.objective =
        parse_objective(get_or<std::string>(calibration, "objective", "dev-nll"));
    config.calibration_bins = get_or<int>(calibration, "bins", config.calibration_bins);
  }

  if (doc.contains("explainer")) {
    const auto& explainer = doc.at("explainer");
    check_keys(explainer, "explainer", {"method", "samples", "seed"});
    config.method = parse_method(get_or<std::string>(explainer, "method", "loo"));
    config.samples = get_or<int>(explainer, "samples", config.samples);
    config.explainer_seed = get_or<std::uint64_t>(explainer, "seed", config.explainer_seed);
  }

  if (doc.contains("digest")) {
    const auto& digest = doc.at("digest");
    check_keys(digest, "digest", {"k_imp", "k_unc"});
    if (digest.contains("k_imp")) config.k_imp = digest.at("k_imp").get<int>();
    if (digest.contains("k_unc")) config.k_unc = digest.at("k_unc").get<int>();
  }

  if (doc.contains("evaluation")) {
    const auto& evaluation = doc.at("evaluation");
    check_keys(evaluation, "evaluation", {"sample_size", "bins", "seed"});
    config.sample_size = get_or<std::int64_t>(evaluation, "sample_size", config.sample_size);
    if (evaluation.contains("bins")) {
      config.eval_bins = evaluation.at("bins").get<std::vector<double>>();
    }
    if (evaluation.contains("seed")) {
      config.eval_seed = evaluation.at("seed").get<std::uint64_t>();
    }
  }

  if (doc.contains("lmi")) {
    const auto& lmi = doc.at("lmi");
    check_keys(lmi, "lmi", {"top_n", "label_basis"});
    config.lmi_top_n = get_or<int>(lmi, "top_n", config.lmi_top_n);
    config.lmi_basis = parse_basis(get_or<std::string>(lmi, "label_basis", "predicted"));
  }

  if (doc.contains("vocab")) {
    const auto& vocab = doc.at("vocab");
    check_keys(vocab, "vocab", {"min_count"});
    config.vocab_min_count = get_or<std::int64_t>(vocab, "min_count", config.vocab_min_count);
  }

  if (doc.contains("output_dir")) config.output_dir = doc.at("output_dir").get<std::string>();
  if (doc.contains("model_path")) config.model_path = doc.at("model_path").get<std::string>();
  config.workers = get_or<int>(doc, "workers", config.workers);

  validate_config(config);
  return config;
}

RunConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const RunError& e) {
    throw ConfigError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  RunConfig config = parse_config(doc);

  if (overrides.method.has_value()) config.method = parse_method(*overrides.method);
  if (overrides.samples.has_value()) config.samples = *overrides.samples;
  if (overrides.seed.has_value()) config.explainer_seed = *overrides.seed;
  if (overrides.k_imp.has_value()) config.k_imp = *overrides.k_imp;
  if (overrides.k_unc.has_value()) config.k_unc = *overrides.k_unc;
  if (overrides.out_dir.has_value()) config.output_dir = *overrides.out_dir;
  if (overrides.workers.has_value()) config.workers = *overrides.workers;
  if (overrides.model.has_value()) config.model_path = *overrides.model;

  validate_config(config);
  return config;
}

void validate_config(const RunConfig& config) {
  auto fail = [](const std::string& message) { throw ConfigError("config: " + message); };

  if (config.corpus_path.empty()) fail("corpus.path must not be empty");
  if (config.ratios.train < 0 || config.ratios.dev < 0 || config.ratios.test < 0) {
    fail("split.ratios must be non-negative");
  }
  double sum = config.ratios.train + config.ratios.dev + config.ratios.test;
  if (std::abs(sum - 1.0) > 1e-9) fail("split.ratios must sum to 1");
  if (!(config.alpha > 0.0)) fail("classifier.alpha must be > 0");
  if (config.classifier == ClassifierKind::remote) {
    if (config.remote_url.empty()) fail("classifier.url must not be empty");
    if (!(config.remote_timeout_s > 0.0)) fail("classifier.timeout_s must be > 0");
    if (config.remote_max_batch < 1) fail("classifier.max_batch must be >= 1");
  }
  if (!(config.grid.lo > 0.0)) fail("calibration.grid.lo must be > 0");
  if (config.grid.hi < config.grid.lo) fail("calibration.grid.hi must be >= lo");
  if (!(config.grid.step > 0.0)) fail("calibration.grid.step must be > 0");
  if (config.calibration_bins < 1) fail("calibration.bins must be >= 1");
  if (config.method == AttributionMethod::exact_shapley) {
    fail("explainer.method must be loo or ss");
  }
  if (config.samples < 1) fail("explainer.samples must be >= 1");
  if (config.k_imp.has_value() && *config.k_imp < 0) fail("digest.k_imp must be >= 0");
  if (config.k_unc.has_value() && *config.k_unc < 0) fail("digest.k_unc must be >= 0");
  if (config.sample_size < 1) fail("evaluation.sample_size must be >= 1");
  if (!config.eval_bins.empty()) {
    if (config.eval_bins.size() < 2) fail("evaluation.bins needs at least 2 edges");
    for (std::size_t i = 1; i < config.eval_bins.size(); ++i) {
      if (!(config.eval_bins[i] > config.eval_bins[i - 1])) {
        fail("evaluation.bins must be strictly increasing");
      }
    }
    if (config.eval_bins.back() < 1.0 - 1e-9) fail("evaluation.bins must reach 1.0");
  }
  if (config.lmi_top_n < 1) fail("lmi.top_n must be >= 1");
  if (config.vocab_min_count < 1) fail("vocab.min_count must be >= 1");
  if (config.workers < 0) fail("workers must be >= 0");
  if (config.output_dir.empty()) fail("output_dir must not be empty");
}

}  // namespace uncq
