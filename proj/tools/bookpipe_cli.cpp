#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bookpipe/corpus_stats.hpp"
#include "bookpipe/pipeline.hpp"
#include "bookpipe/precision.hpp"
#include "bookpipe/trainer_toy.hpp"

namespace bp = bookpipe::pipe;
namespace stats = bookpipe::stats;
namespace precision = bookpipe::precision;
namespace toy = bookpipe::toy;

namespace {

int run_stage(const std::string& config_path, bp::Stage stage) {
  bp::Runner runner(bp::load_run_config(config_path));
  bp::StageReport report = runner.run_stage(stage);
  std::cout << bp::report_text(report);
  return report.ok() ? 0 : 1;
}

void write_or_print(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path);
}

int manifest_stats(const std::string& manifest, std::uint64_t bucket_width,
                   const std::string& histogram_out,
                   const std::string& envelope_out) {
  std::ifstream in(manifest);
  if (!in) {
    std::cerr << "error: cannot open manifest " << manifest << "\n";
    return 1;
  }
  auto rows = stats::load_manifest(in);
  std::cout << nlohmann::json(stats::summarize(rows)).dump(2) << "\n";
  if (!histogram_out.empty())
    write_or_print(histogram_out,
                   stats::histogram_csv(stats::histogram(rows, bucket_width)));
  if (!envelope_out.empty())
    write_or_print(envelope_out, stats::envelope_csv(stats::bucket_envelope(
                                     rows, bucket_width)));
  return 0;
}

std::string downcast_bench(float theta_value, int samples) {
  std::vector<float> theta(static_cast<std::size_t>(samples), theta_value);
  double r = precision::resolution_scale(theta_value);
  std::string csv = "alpha,mean_delta,var_delta,theory_var\n";
  for (int i = 0; i <= 10; ++i) {
    double alpha = i / 10.0;
    precision::DowncastSchedule sched;
    sched.eta_max = 1.0;
    sched.eta_t = sched.eta_floor + alpha * (sched.eta_max - sched.eta_floor);
    precision::DitherKey key;
    key.step = static_cast<std::uint64_t>(i);
    key.param_id = 7;
    auto copy = precision::dithered_downcast(theta, sched, key, {}, true);
    double mean = 0.0;
    for (float d : copy.dither) mean += d;
    mean /= samples;
    double var = 0.0;
    for (float d : copy.dither) var += (d - mean) * (d - mean);
    var /= samples;
    double a = sched.alpha();
    double theory = a * a * r * r / 12.0;
    char line[160];
    std::snprintf(line, sizeof line, "%.2f,%.9g,%.9g,%.9g\n", a, mean, var,
                  theory);
    csv += line;
  }
  return csv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Book annotation pipeline: chapter/scene/book annotation over "
               "a model gateway, prompt synthesis, training-example "
               "composition, corpus statistics, and numeric utilities"};
  app.require_subcommand(1);

  std::string config_path;
  std::string stage_name = "scenes";

  auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "run config file (JSON)")
        ->required();
  };

  auto* ingest = app.add_subcommand("ingest", "strip and split raw books");
  add_config(ingest);

  auto* annotate =
      app.add_subcommand("annotate", "run an annotation stage over the books");
  add_config(annotate);
  annotate->add_option("--stage", stage_name, "scenes, chapters, or book")
      ->required()
      ->check(CLI::IsMember({"scenes", "chapters", "book"}));

  auto* synth = app.add_subcommand(
      "synth-prompt", "sample a prompt profile and render the user prompt");
  add_config(synth);

  auto* compose = app.add_subcommand(
      "compose", "serialize and tokenize the training example per book");
  add_config(compose);

  auto* stats_cmd =
      app.add_subcommand("stats", "corpus-level sequence length statistics");
  std::string manifest, histogram_out, envelope_out;
  std::uint64_t bucket_width = 16384;
  stats_cmd->add_option("--config", config_path,
                        "run config file (measures the run's output dir)");
  stats_cmd->add_option("--manifest", manifest,
                        "length manifest (JSONL), bypasses the config");
  stats_cmd->add_option("--bucket-width", bucket_width,
                        "histogram bucket width in tokens");
  stats_cmd->add_option("--histogram", histogram_out,
                        "write the histogram CSV here ('-' for stdout)");
  stats_cmd->add_option("--envelope", envelope_out,
                        "write the per-bucket envelope CSV here");

  auto* validate = app.add_subcommand(
      "validate", "check every artifact tree against the format invariants");
  add_config(validate);

  auto* bench = app.add_subcommand(
      "downcast-bench", "dither moments vs theory across the alpha sweep");
  float theta_value = 1.0f;
  int samples = 200000;
  std::string bench_out;
  bench->add_option("--theta", theta_value, "parameter value to downcast");
  bench->add_option("--samples", samples, "draws per alpha")
      ->check(CLI::PositiveNumber);
  bench->add_option("--out", bench_out, "CSV path ('-' or empty for stdout)");

  auto* train = app.add_subcommand(
      "train-toy", "bigram trainer comparing materialization modes");
  toy::TrainConfig tcfg;
  std::string mode_name = "deterministic_nearest";
  std::string trace_out = "trace.csv";
  bool compare = false;
  int sequences = 8, length = 512, prompt_len = 16;
  double jump = 0.0;
  train->add_option("--vocab", tcfg.vocab, "vocabulary size (<= 64)");
  train->add_option("--steps", tcfg.steps, "training steps");
  train->add_option("--eta-max", tcfg.eta_max, "peak learning rate");
  train->add_option("--eta-end", tcfg.eta_end, "learning rate at the horizon");
  train->add_option("--decay-steps", tcfg.decay_steps,
                    "schedule horizon (0: same as --steps)");
  train->add_option("--init-base", tcfg.init_base,
                    "logit offset added at initialization");
  train->add_option("--mode", mode_name,
                    "deterministic_nearest or lr_scaled_stochastic");
  train->add_option("--seed", tcfg.seed, "run seed");
  train->add_option("--sequences", sequences, "corpus sequences");
  train->add_option("--length", length, "tokens per sequence");
  train->add_option("--prompt-len", prompt_len, "masked prefix length");
  train->add_option("--jump", jump, "probability of leaving the cycle");
  train->add_option("--trace", trace_out, "per-step CSV path ('-' for stdout)");
  train->add_flag("--compare", compare,
                  "run both modes on the same data and print a report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) return run_stage(config_path, bp::Stage::Ingest);
    if (annotate->parsed())
      return run_stage(config_path, bp::parse_stage(stage_name));
    if (synth->parsed()) return run_stage(config_path, bp::Stage::Prompt);
    if (compose->parsed()) return run_stage(config_path, bp::Stage::Compose);

    if (stats_cmd->parsed()) {
      if (!manifest.empty())
        return manifest_stats(manifest, bucket_width, histogram_out,
                              envelope_out);
      if (config_path.empty()) {
        std::cerr << "error: stats needs --config or --manifest\n";
        return 1;
      }
      return run_stage(config_path, bp::Stage::Stats);
    }

    if (validate->parsed()) {
      bp::Runner runner(bp::load_run_config(config_path));
      bp::ValidationReport report = runner.validate();
      std::cout << bp::report_text(report);
      return report.ok() ? 0 : 1;
    }

    if (bench->parsed()) {
      write_or_print(bench_out, downcast_bench(theta_value, samples));
      return 0;
    }

    if (train->parsed()) {
      tcfg.mode = toy::parse_materialization(mode_name);
      auto corpus = toy::make_cycle_corpus(tcfg.vocab, sequences, length,
                                           prompt_len, jump, tcfg.seed + 1000);
      auto counts = toy::BigramCounts::from_corpus(tcfg.vocab, corpus);
      if (compare) {
        toy::ModeReport report = toy::compare_modes(tcfg, counts);
        std::cout << toy::report_json(report).dump(2) << "\n";
        if (trace_out != "trace.csv" && !trace_out.empty() &&
            trace_out != "-") {
          write_or_print(trace_out + ".deterministic.csv",
                         toy::trace_csv(report.deterministic));
          write_or_print(trace_out + ".stochastic.csv",
                         toy::trace_csv(report.stochastic));
        }
        return 0;
      }
      toy::TrainResult result = toy::train(tcfg, counts);
      write_or_print(trace_out, toy::trace_csv(result));
      std::cout << "final_loss=" << result.final_loss()
                << " stalled=" << (result.stalled ? "true" : "false") << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
