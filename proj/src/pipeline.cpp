#include "uncq/pipeline.hpp"

#include <algorithm>
#include <unordered_map>

#include <json.hpp>

#include "uncq/attribution.hpp"
#include "uncq/errors.hpp"
#include "uncq/io_util.hpp"
#include "uncq/lmi.hpp"
#include "uncq/log.hpp"
#include "uncq/parallel.hpp"
#include "uncq/remote.hpp"

namespace uncq {

namespace {

void ensure_out_dir(const RunConfig& config) {
  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec) {
    throw RunError("cannot create output directory " + config.output_dir.string() + ": " +
                   ec.message());
  }
}

ExplainerSpec explainer_spec(const RunConfig& config) {
  return ExplainerSpec{config.method, config.samples, config.explainer_seed};
}

Attribution attribute(const CalibratedClassifier& model, const TokenizedExample& example,
                      const ExplainerSpec& spec) {
  return spec.method == AttributionMethod::loo
             ? loo_attribution(model, example)
             : sampling_shapley_attribution(model, example, spec.samples, spec.seed);
}

// Post-removal confidence for the rendered header: delete the uncertain
// words that will actually be highlighted and re-predict.
std::optional<double> highlighted_removal_confidence(const CalibratedClassifier& model,
                                                     const TokenizedExample& example,
                                                     const ExplanationDigest& digest,
                                                     int predicted_class, int max_highlighted) {
  std::size_t take = std::min(digest.uncertain.size(), static_cast<std::size_t>(max_highlighted));
  if (take == 0) return std::nullopt;
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < take; ++i) positions.push_back(digest.uncertain[i].position);
  Prediction after = model.predict(remove_positions(example.tokens, positions));
  return after.probs[static_cast<std::size_t>(predicted_class)];
}

}  // namespace

CorpusSplits load_splits(const RunConfig& config) {
  Corpus corpus = load_corpus(config.corpus_path, config.corpus_format, config.lowercase);
  if (corpus.label_space.size() < 2) {
    throw ConfigError("corpus " + config.corpus_path + " defines " +
                      std::to_string(corpus.label_space.size()) +
                      " label(s); classification needs at least 2");
  }
  return split_corpus(corpus, config.ratios, config.split_seed);
}

std::unique_ptr<Classifier> make_classifier(const RunConfig& config, const LabelSpace& labels) {
  if (config.classifier == ClassifierKind::remote) {
    RemoteEndpoint endpoint{config.remote_url, config.remote_timeout_s, config.remote_max_batch};
    return std::make_unique<RemoteClassifier>(endpoint, labels);
  }
  auto path = config.resolved_model_path();
  if (!std::filesystem::exists(path)) {
    throw RunError("model file " + path.string() + " not found; run the train command first");
  }
  auto model = std::make_unique<BagOfWordsModel>(BagOfWordsModel::load(path));
  if (!(model->label_space() == labels)) {
    throw RunError("model file " + path.string() + " was trained on a different label space");
  }
  return model;
}

double load_temperature(const RunConfig& config) {
  auto path = config.output_dir / artifact::kCalibration;
  if (!std::filesystem::exists(path)) {
    log::warn("no calibration artifact at " + path.string() + "; using T = 1");
    return 1.0;
  }
  try {
    auto doc = nlohmann::json::parse(read_file(path));
    return doc.at("temperature").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw RunError("malformed calibration file " + path.string() + ": " + e.what());
  }
}

std::vector<double> default_eval_bins(int num_classes) {
  double lo = 1.0 / static_cast<double>(num_classes);
  std::vector<double> edges;
  edges.reserve(6);
  for (int i = 0; i <= 5; ++i) {
    edges.push_back(lo + (1.0 - lo) * static_cast<double>(i) / 5.0);
  }
  edges.back() = 1.0;
  return edges;
}

TrainOutcome run_train(const RunConfig& config) {
  if (config.classifier == ClassifierKind::remote) {
    throw ConfigError("train unsupported for remote classifiers");
  }
  ensure_out_dir(config);
  CorpusSplits splits = load_splits(config);
  BagOfWordsModel model = train_bow(splits.train, config.alpha);

  std::int64_t correct = 0;
  for (const auto& example : splits.dev.examples) {
    Prediction pred = predict(model, example.tokens);
    if (example.gold_label.has_value() && pred.predicted_class == *example.gold_label) ++correct;
  }
  TrainOutcome outcome;
  outcome.dev_accuracy = splits.dev.examples.empty()
                             ? 0.0
                             : static_cast<double>(correct) /
                                   static_cast<double>(splits.dev.examples.size());
  outcome.model_path = config.resolved_model_path();
  model.save(outcome.model_path);
  log::info("trained model on " + std::to_string(splits.train.size()) + " examples, dev accuracy " +
            format_fixed(outcome.dev_accuracy, 4));
  return outcome;
}

CalibrateOutcome run_calibrate(const RunConfig& config) {
  ensure_out_dir(config);
  CorpusSplits splits = load_splits(config);
  auto classifier = make_classifier(config, splits.train.label_space);

  CalibrateOutcome outcome;
  outcome.dev = fit_temperature(*classifier, splits.dev, config.grid, config.objective,
                                config.calibration_bins);

  // The learned temperature is applied to the held-out test set for an
  // evaluation-only report.
  nlohmann::json doc = to_json(outcome.dev);
  if (!splits.test.examples.empty()) {
    TokenBatch inputs;
    std::vector<int> gold;
    for (const auto& example : splits.test.examples) {
      if (!example.gold_label.has_value()) continue;
      inputs.push_back(example.tokens);
      gold.push_back(*example.gold_label);
    }
    if (!inputs.empty()) {
      std::vector<Logits> logits = classifier->raw_logits_batch(inputs);
      std::vector<Prediction> at_one;
      std::vector<Prediction> at_t;
      at_one.reserve(logits.size());
      at_t.reserve(logits.size());
      for (const auto& l : logits) {
        at_one.push_back(prediction_from_logits(l, 1.0));
        at_t.push_back(prediction_from_logits(l, outcome.dev.temperature));
      }
      outcome.test_pre_ece = compute_ece(at_one, gold, config.calibration_bins).ece;
      outcome.test_post_ece = compute_ece(at_t, gold, config.calibration_bins).ece;
      doc["test"] = {{"pre_ece", outcome.test_pre_ece}, {"post_ece", outcome.test_post_ece}};
    }
  }

  outcome.output_path = config.output_dir / artifact::kCalibration;
  write_file(outcome.output_path, doc.dump(2) + "\n");
  return outcome;
}

ExplainOutcome run_explain(const RunConfig& config, const std::vector<std::string>& ids) {
  ensure_out_dir(config);
  CorpusSplits splits = load_splits(config);
  auto classifier = make_classifier(config, splits.train.label_space);
  CalibratedClassifier model = apply_temperature(*classifier, load_temperature(config));

  std::vector<const TokenizedExample*> targets;
  if (ids.empty()) {
    for (const auto& example : splits.test.examples) targets.push_back(&example);
  } else {
    std::unordered_map<std::string, const TokenizedExample*> by_id;
    for (const Corpus* part : {&splits.train, &splits.dev, &splits.test}) {
      for (const auto& example : part->examples) by_id.emplace(example.id, &example);
    }
    for (const auto& id : ids) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw RunError("no example with id \"" + id + "\" in the corpus");
      targets.push_back(it->second);
    }
  }

  // k defaults depend on average corpus length.
  Corpus full;
  full.label_space = splits.train.label_space;
  for (const Corpus* part : {&splits.train, &splits.dev, &splits.test}) {
    full.examples.insert(full.examples.end(), part->examples.begin(), part->examples.end());
  }
  int k_imp = config.resolve_k(full, config.k_imp);
  int k_unc = config.resolve_k(full, config.k_unc);
  ExplainerSpec spec = explainer_spec(config);
  RenderSpec render_spec;

  std::vector<Attribution> attributions(targets.size());
  std::vector<DigestRecord> digests(targets.size());
  std::vector<RenderedExample> rendered(targets.size());
  parallel_for(targets.size(), config.workers, [&](std::size_t i) {
    const TokenizedExample& example = *targets[i];
    if (example.tokens.empty()) {
      throw RunError("example \"" + example.id + "\" has no tokens; nothing to explain");
    }
    Attribution attribution = attribute(model, example, spec);
    ExplanationDigest digest = make_digest(attribution, example.tokens, k_imp, k_unc);
    Prediction prediction = model.predict(example.tokens);
    std::optional<double> post = highlighted_removal_confidence(
        model, example, digest, attribution.predicted_class, render_spec.max_per_group);
    digests[i] = DigestRecord{example.id, attribution.predicted_class, example.gold_label, digest};
    rendered[i] = RenderedExample{example, prediction, std::move(digest), post};
    attributions[i] = std::move(attribution);
  });

  ExplainOutcome outcome;
  outcome.examples = targets.size();
  outcome.attributions_path = config.output_dir / artifact::kAttributions;
  outcome.digests_path = config.output_dir / artifact::kDigests;
  outcome.report_path = config.output_dir / artifact::kReportHtml;
  write_file(outcome.attributions_path, attributions_jsonl(attributions));
  write_file(outcome.digests_path, digests_jsonl(digests));
  write_file(outcome.report_path,
             render_report_html(rendered, render_spec, splits.train.label_space));
  log::info("explained " + std::to_string(targets.size()) + " example(s) with " +
            method_name(config.method));
  return outcome;
}

EvaluateOutcome run_evaluate(const RunConfig& config) {
  ensure_out_dir(config);
  CorpusSplits splits = load_splits(config);
  auto classifier = make_classifier(config, splits.train.label_space);
  CalibratedClassifier model = apply_temperature(*classifier, load_temperature(config));

  const Corpus& sample = splits.test;
  if (sample.examples.empty()) throw RunError("test split is empty; nothing to evaluate");
  auto sample_size = std::min<std::int64_t>(config.sample_size,
                                            static_cast<std::int64_t>(sample.examples.size()));
  if (sample_size < config.sample_size) {
    log::warn("sample_size clamped to test split size " + std::to_string(sample_size));
  }

  std::vector<double> edges = config.eval_bins.empty()
                                  ? default_eval_bins(sample.label_space.size())
                                  : config.eval_bins;
  Corpus full;
  full.label_space = splits.train.label_space;
  for (const Corpus* part : {&splits.train, &splits.dev, &splits.test}) {
    full.examples.insert(full.examples.end(), part->examples.begin(), part->examples.end());
  }
  int k_imp = config.resolve_k(full, config.k_imp);
  int k_unc = config.resolve_k(full, config.k_unc);

  EvaluateOutcome outcome;
  outcome.uncertain =
      confidence_change_experiment(model, sample, explainer_spec(config), k_unc, edges,
                                   config.evaluation_seed(), sample_size, config.workers);
  outcome.important =
      important_removal_check(model, sample, explainer_spec(config), k_imp, edges,
                              config.evaluation_seed(), sample_size, config.workers);

  write_file(config.output_dir / artifact::kConfidenceChangeJson,
             to_json(outcome.uncertain).dump(2) + "\n");
  write_file(config.output_dir / artifact::kConfidenceChangeCsv,
             confidence_change_csv(outcome.uncertain));
  write_file(config.output_dir / artifact::kImportantRemovalJson,
             to_json(outcome.important).dump(2) + "\n");
  write_file(config.output_dir / artifact::kImportantRemovalCsv,
             confidence_change_csv(outcome.important));
  return outcome;
}

LmiOutcome run_lmi(const RunConfig& config) {
  ensure_out_dir(config);
  auto digests_path = config.output_dir / artifact::kDigests;
  if (!std::filesystem::exists(digests_path)) {
    throw RunError("digests file " + digests_path.string() + " not found; run explain first");
  }
  std::vector<DigestRecord> records = read_digests_jsonl(digests_path);

  CorpusSplits splits = load_splits(config);
  Corpus full;
  full.label_space = splits.train.label_space;
  for (const Corpus* part : {&splits.train, &splits.dev, &splits.test}) {
    full.examples.insert(full.examples.end(), part->examples.begin(), part->examples.end());
  }
  Vocabulary vocabulary = build_vocab(full, config.vocab_min_count);
  int num_classes = full.label_space.size();

  LmiOutcome outcome;
  std::vector<LmiDistribution> distributions;
  std::vector<LmiExportGroup> groups;
  distributions.reserve(2);
  for (FeatureGroup group : {FeatureGroup::important, FeatureGroup::uncertain}) {
    FeatureTally tally =
        tally_features(records, group, config.lmi_basis, num_classes, config.lmi_top_n);
    if (tally.total == 0) {
      log::warn("no " + group_name(group) + " features extracted; " + group_name(group) +
                "-group distribution is empty");
      continue;
    }
    distributions.push_back(compute_lmi(tally, vocabulary));
    groups.push_back(LmiExportGroup{group_name(group), &distributions.back()});
    ++outcome.groups_written;
  }

  outcome.csv_path = config.output_dir / artifact::kLmiCsv;
  write_file(outcome.csv_path, lmi_csv(groups, full.label_space));
  return outcome;
}

Manifest run_report(const RunConfig& config) {
  ensure_out_dir(config);

  // Re-render report.html from the stored digests when they exist.
  auto digests_path = config.output_dir / artifact::kDigests;
  if (std::filesystem::exists(digests_path)) {
    CorpusSplits splits = load_splits(config);
    auto classifier = make_classifier(config, splits.train.label_space);
    CalibratedClassifier model = apply_temperature(*classifier, load_temperature(config));

    std::unordered_map<std::string, const TokenizedExample*> by_id;
    for (const Corpus* part : {&splits.train, &splits.dev, &splits.test}) {
      for (const auto& example : part->examples) by_id.emplace(example.id, &example);
    }

    std::vector<DigestRecord> records = read_digests_jsonl(digests_path);
    RenderSpec render_spec;
    std::vector<RenderedExample> rendered(records.size());
    parallel_for(records.size(), config.workers, [&](std::size_t i) {
      const DigestRecord& record = records[i];
      auto it = by_id.find(record.example_id);
      if (it == by_id.end()) {
        throw RunError("digest references unknown example id \"" + record.example_id + "\"");
      }
      const TokenizedExample& example = *it->second;
      Prediction prediction = model.predict(example.tokens);
      std::optional<double> post = highlighted_removal_confidence(
          model, example, record.digest, record.predicted_class, render_spec.max_per_group);
      rendered[i] = RenderedExample{example, prediction, record.digest, post};
    });
    write_file(config.output_dir / artifact::kReportHtml,
               render_report_html(rendered, render_spec, splits.train.label_space));
  }

  write_file(config.output_dir / artifact::kConfig, config.echo().dump(2) + "\n");

  std::vector<std::string> names = {
      artifact::kModel,        artifact::kCalibration,          artifact::kAttributions,
      artifact::kDigests,      artifact::kConfidenceChangeJson, artifact::kConfidenceChangeCsv,
      artifact::kImportantRemovalJson, artifact::kImportantRemovalCsv, artifact::kLmiCsv,
      artifact::kReportHtml,   artifact::kConfig};
  return write_manifest(config.output_dir, names);
}

}  // namespace uncq
