#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "uncq/config.hpp"
#include "uncq/errors.hpp"
#include "uncq/io_util.hpp"
#include "uncq/pipeline.hpp"

namespace {

struct CliArgs {
  std::string config_path;
  uncq::ConfigOverrides overrides;
  std::vector<std::string> ids;
  std::string ids_file;
};

void add_common_flags(CLI::App* cmd, CliArgs& args) {
  cmd->add_option("--config", args.config_path, "Run configuration (JSON)")->required();
  cmd->add_option("--model", args.overrides.model, "Model file path");
  cmd->add_option("--method", args.overrides.method, "Explainer: loo or ss");
  cmd->add_option("--samples", args.overrides.samples, "Sampling-Shapley sample count M");
  cmd->add_option("--seed", args.overrides.seed, "Explainer seed");
  cmd->add_option("--k-imp", args.overrides.k_imp, "Important words per digest");
  cmd->add_option("--k-unc", args.overrides.k_unc, "Uncertain words per digest");
  cmd->add_option("--out", args.overrides.out_dir, "Output directory");
  cmd->add_option("--workers", args.overrides.workers, "Worker threads (0 = auto)");
}

std::vector<std::string> resolve_ids(const CliArgs& args) {
  std::vector<std::string> ids = args.ids;
  if (!args.ids_file.empty()) {
    std::string content = uncq::read_file(args.ids_file);
    std::string current;
    for (char c : content) {
      if (c == '\n' || c == '\r') {
        if (!current.empty()) ids.push_back(current);
        current.clear();
      } else {
        current.push_back(c);
      }
    }
    if (!current.empty()) ids.push_back(current);
  }
  return ids;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explains calibrated text-classifier predictions: important words for the label, "
               "uncertain words for the confidence"};
  app.require_subcommand(1);

  CliArgs args;
  CLI::App* train = app.add_subcommand("train", "Train the built-in classifier");
  CLI::App* calibrate = app.add_subcommand("calibrate", "Fit a softmax temperature on dev");
  CLI::App* explain = app.add_subcommand("explain", "Attribute examples and extract digests");
  CLI::App* evaluate = app.add_subcommand("evaluate", "Run the confidence-change experiments");
  CLI::App* lmi = app.add_subcommand("lmi", "Token-label association statistics over digests");
  CLI::App* report = app.add_subcommand("report", "Render report.html and write the manifest");
  for (CLI::App* cmd : {train, calibrate, explain, evaluate, lmi, report}) {
    add_common_flags(cmd, args);
  }
  explain->add_option("--ids", args.ids, "Explain only these example ids")->delimiter(',');
  explain->add_option("--ids-file", args.ids_file, "File with one example id per line");

  CLI11_PARSE(app, argc, argv);

  try {
    uncq::RunConfig config = uncq::load_config(args.config_path, args.overrides);

    if (train->parsed()) {
      auto outcome = uncq::run_train(config);
      std::cout << "model: " << outcome.model_path.string() << "\n";
      std::cout << "dev accuracy: " << uncq::format_fixed(outcome.dev_accuracy, 4) << "\n";
    } else if (calibrate->parsed()) {
      auto outcome = uncq::run_calibrate(config);
      std::cout << "temperature: " << uncq::format_double(outcome.dev.temperature)
                << " (objective " << uncq::objective_name(outcome.dev.objective) << ")\n";
      std::cout << "dev ECE: " << uncq::format_fixed(outcome.dev.pre_ece, 4) << " -> "
                << uncq::format_fixed(outcome.dev.post_ece, 4) << "\n";
      std::cout << "test ECE: " << uncq::format_fixed(outcome.test_pre_ece, 4) << " -> "
                << uncq::format_fixed(outcome.test_post_ece, 4) << "\n";
      std::cout << "wrote " << outcome.output_path.string() << "\n";
    } else if (explain->parsed()) {
      auto outcome = uncq::run_explain(config, resolve_ids(args));
      std::cout << "explained " << outcome.examples << " example(s)\n";
      std::cout << "wrote " << outcome.attributions_path.string() << ", "
                << outcome.digests_path.string() << ", " << outcome.report_path.string() << "\n";
    } else if (evaluate->parsed()) {
      auto outcome = uncq::run_evaluate(config);
      std::cout << "uncertain-word removal: mean confidence delta "
                << uncq::format_fixed(outcome.uncertain.overall_mean_delta, 4) << " over "
                << outcome.uncertain.sample_size << " example(s)\n";
      std::cout << "important-word removal: mean confidence delta "
                << uncq::format_fixed(outcome.important.overall_mean_delta, 4) << ", flip rate "
                << uncq::format_fixed(outcome.important.label_flip_rate.value_or(0.0), 4) << "\n";
    } else if (lmi->parsed()) {
      auto outcome = uncq::run_lmi(config);
      std::cout << "wrote " << outcome.csv_path.string() << " (" << outcome.groups_written
                << " group(s))\n";
    } else if (report->parsed()) {
      auto manifest = uncq::run_report(config);
      std::cout << "manifest: " << manifest.files.size() << " file(s)\n";
      for (const auto& entry : manifest.files) {
        std::cout << "  " << entry.name << "  " << entry.bytes << " bytes  sha256 "
                  << entry.sha256 << "\n";
      }
    }
  } catch (const uncq::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
