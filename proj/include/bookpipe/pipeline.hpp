#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "bookpipe/annotate_book.hpp"
#include "bookpipe/annotate_scene.hpp"
#include "bookpipe/gateway.hpp"
#include "bookpipe/ingest.hpp"
#include "bookpipe/prompt_synth.hpp"
#include "bookpipe/tokenizer.hpp"

namespace bookpipe::pipe {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::filesystem::path input_dir;
  std::filesystem::path output_dir;
  std::filesystem::path fixtures_dir;  // empty: live HTTP backend
  std::optional<std::filesystem::path> prompt_template_dir;
  gw::ModelProfile reasoning_profile;  // book-level abstraction steps
  gw::ModelProfile tool_profile;       // repeated local processing steps
  annotate::ScoringConfig scoring;
  annotate::BookConfig book;
  synth::DistributionConfig prompt_distribution =
      synth::DistributionConfig::defaults();
  tok::TokenizerSpec tokenizer;
  std::uint64_t seed = 1;
  int workers = 1;
  int max_in_flight = 4;
  std::size_t min_words = 500;
  std::uint64_t histogram_bucket_width = 16384;
};

// Relative paths resolve against the config file's directory. Referenced
// directories must exist (the output dir is created).
RunConfig load_run_config(const std::filesystem::path& file);
RunConfig run_config_from_json(const nlohmann::json& j,
                               const std::filesystem::path& base_dir);

enum class Stage { Ingest, Scenes, Chapters, Book, Prompt, Compose, Stats };

const char* stage_name(Stage s);
Stage parse_stage(const std::string& name);

struct BookOutcome {
  enum class Status { Processed, Skipped, Failed };
  std::string book_id;
  Status status = Status::Processed;
  std::string error;
};

struct StageReport {
  Stage stage = Stage::Ingest;
  std::vector<BookOutcome> outcomes;  // sorted by book id

  int processed() const;
  int skipped() const;
  int failed() const;
  bool ok() const { return failed() == 0; }
};

std::string report_text(const StageReport& report);

struct Violation {
  std::string book_id;
  std::string artifact;
  std::string message;
};

struct ValidationReport {
  std::size_t books_checked = 0;
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

std::string report_text(const ValidationReport& report);

class Runner {
 public:
  explicit Runner(RunConfig cfg);

  StageReport run_stage(Stage stage);
  // Ingest through compose, then stats; stops after a stage with failures.
  std::vector<StageReport> run_all();
  ValidationReport validate() const;

  const RunConfig& config() const { return cfg_; }
  std::filesystem::path book_dir(const std::string& book_id) const;

 private:
  std::vector<std::string> input_book_ids() const;
  std::vector<std::string> output_book_ids() const;

  RunConfig cfg_;
  std::shared_ptr<gw::Gateway> gateway_;
  std::shared_ptr<const tok::Tokenizer> tokenizer_;
  prompts::TemplateSet templates_;
};

// Stable 64-bit content hash used to derive per-book seeds.
std::uint64_t fnv1a64(std::string_view data,
                      std::uint64_t basis = 14695981039346656037ull);

// Per-book stream seed: folds the run seed, a purpose tag ("profile",
// "noise"), and the book id. Also used by the mock corpus generator so its
// scripted responses line up with what a run will sample.
std::uint64_t book_seed(std::uint64_t run_seed, std::string_view tag,
                        std::string_view book_id);

}  // namespace bookpipe::pipe
