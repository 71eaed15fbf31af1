#include "bookpipe/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "bookpipe/annotate_chapter.hpp"
#include "bookpipe/corpus_stats.hpp"
#include "bookpipe/scaffold.hpp"
#include "bookpipe/text_util.hpp"

namespace bookpipe::pipe {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(std::string_view data, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t book_seed(std::uint64_t run_seed, std::string_view tag,
                        std::string_view book_id) {
  std::uint64_t h = fnv1a64(std::to_string(run_seed));
  h = fnv1a64(tag, h);
  return fnv1a64(book_id, h);
}

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Scenes: return "scenes";
    case Stage::Chapters: return "chapters";
    case Stage::Book: return "book";
    case Stage::Prompt: return "prompt";
    case Stage::Compose: return "compose";
    case Stage::Stats: return "stats";
  }
  return "";
}

Stage parse_stage(const std::string& name) {
  for (Stage s : {Stage::Ingest, Stage::Scenes, Stage::Chapters, Stage::Book,
                  Stage::Prompt, Stage::Compose, Stage::Stats})
    if (name == stage_name(s)) return s;
  throw ConfigError("unknown stage: " + name);
}

int StageReport::processed() const {
  return static_cast<int>(std::count_if(
      outcomes.begin(), outcomes.end(), [](const BookOutcome& o) {
        return o.status == BookOutcome::Status::Processed;
      }));
}

int StageReport::skipped() const {
  return static_cast<int>(std::count_if(
      outcomes.begin(), outcomes.end(), [](const BookOutcome& o) {
        return o.status == BookOutcome::Status::Skipped;
      }));
}

int StageReport::failed() const {
  return static_cast<int>(std::count_if(
      outcomes.begin(), outcomes.end(), [](const BookOutcome& o) {
        return o.status == BookOutcome::Status::Failed;
      }));
}

std::string report_text(const StageReport& report) {
  std::ostringstream out;
  out << "stage " << stage_name(report.stage) << ": processed "
      << report.processed() << ", skipped " << report.skipped() << ", failed "
      << report.failed() << "\n";
  for (const auto& o : report.outcomes)
    if (o.status == BookOutcome::Status::Failed)
      out << "  failed " << o.book_id << ": " << o.error << "\n";
  return out.str();
}

std::string report_text(const ValidationReport& report) {
  std::ostringstream out;
  out << "validate: " << report.books_checked << " books, "
      << report.violations.size() << " violations\n";
  for (const auto& v : report.violations)
    out << "  " << v.book_id << ": " << v.artifact << ": " << v.message
        << "\n";
  return out.str();
}

// --- config ------------------------------------------------------------------

static fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
  RunConfig cfg;
  if (!j.contains("input_dir") || !j.contains("output_dir"))
    throw ConfigError("config requires input_dir and output_dir");
  cfg.input_dir = resolve(base_dir, j.at("input_dir").get<std::string>());
  cfg.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
  if (j.contains("fixtures_dir") && !j.at("fixtures_dir").is_null())
    cfg.fixtures_dir =
        resolve(base_dir, j.at("fixtures_dir").get<std::string>());
  if (j.contains("prompt_template_dir") &&
      !j.at("prompt_template_dir").is_null())
    cfg.prompt_template_dir =
        resolve(base_dir, j.at("prompt_template_dir").get<std::string>());

  cfg.reasoning_profile.name = "reasoning";
  cfg.reasoning_profile.reasoning = true;
  cfg.tool_profile.name = "tool";
  if (j.contains("reasoning_profile"))
    j.at("reasoning_profile").get_to(cfg.reasoning_profile);
  if (j.contains("tool_profile")) j.at("tool_profile").get_to(cfg.tool_profile);

  if (j.contains("scoring")) {
    const auto& s = j.at("scoring");
    if (s.contains("ensemble_runs"))
      s.at("ensemble_runs").get_to(cfg.scoring.ensemble_runs);
    if (s.contains("zero_threshold"))
      s.at("zero_threshold").get_to(cfg.scoring.zero_threshold);
    if (cfg.scoring.ensemble_runs < 1)
      throw ConfigError("scoring.ensemble_runs must be positive");
  }
  if (j.contains("prompt_distribution") &&
      !j.at("prompt_distribution").is_null())
    cfg.prompt_distribution =
        synth::load_distribution_config(j.at("prompt_distribution"));
  if (j.contains("tokenizer")) {
    const auto& t = j.at("tokenizer");
    if (t.contains("type")) t.at("type").get_to(cfg.tokenizer.type);
    if (t.contains("path") && !t.at("path").is_null())
      cfg.tokenizer.path =
          resolve(base_dir, t.at("path").get<std::string>()).string();
  }
  if (j.contains("seed")) j.at("seed").get_to(cfg.seed);
  if (j.contains("workers")) j.at("workers").get_to(cfg.workers);
  if (j.contains("max_in_flight")) j.at("max_in_flight").get_to(cfg.max_in_flight);
  if (j.contains("min_words")) j.at("min_words").get_to(cfg.min_words);
  if (j.contains("histogram_bucket_width"))
    j.at("histogram_bucket_width").get_to(cfg.histogram_bucket_width);
  if (cfg.workers < 1) throw ConfigError("workers must be positive");
  if (cfg.max_in_flight < 1) throw ConfigError("max_in_flight must be positive");
  if (cfg.histogram_bucket_width == 0)
    throw ConfigError("histogram_bucket_width must be positive");

  if (!fs::is_directory(cfg.input_dir))
    throw ConfigError("input_dir does not exist: " + cfg.input_dir.string());
  if (!cfg.fixtures_dir.empty() && !fs::is_directory(cfg.fixtures_dir))
    throw ConfigError("fixtures_dir does not exist: " +
                      cfg.fixtures_dir.string());
  if (cfg.prompt_template_dir && !fs::is_directory(*cfg.prompt_template_dir))
    throw ConfigError("prompt_template_dir does not exist: " +
                      cfg.prompt_template_dir->string());
  if (cfg.tokenizer.type == "merge_table" && !fs::is_regular_file(cfg.tokenizer.path))
    throw ConfigError("tokenizer merge table does not exist: " +
                      cfg.tokenizer.path);
  return cfg;
}

RunConfig load_run_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config: " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error: " + std::string(e.what()));
  }
  return run_config_from_json(j, file.parent_path());
}

// --- file helpers --------------------------------------------------------------

static std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

static void write_atomic(const fs::path& p, std::string_view content) {
  fs::path tmp = p;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + tmp.string());
  }
  fs::rename(tmp, p);
}

static fs::path hash_sidecar(const fs::path& artifact) {
  fs::path p = artifact;
  p += ".src";
  return p;
}

static bool up_to_date(const fs::path& artifact, const std::string& input_hash) {
  if (!fs::is_regular_file(artifact)) return false;
  fs::path side = hash_sidecar(artifact);
  if (!fs::is_regular_file(side)) return false;
  return read_file(side) == input_hash;
}

// Artifact first, sidecar second: a partial pair never satisfies the resume
// check above.
static void commit(const fs::path& artifact, std::string_view content,
                   const std::string& input_hash) {
  write_atomic(artifact, content);
  write_atomic(hash_sidecar(artifact), input_hash);
}

// --- runner --------------------------------------------------------------------

Runner::Runner(RunConfig cfg) : cfg_(std::move(cfg)) {
  fs::create_directories(cfg_.output_dir / "books");
  std::shared_ptr<gw::Backend> backend;
  if (!cfg_.fixtures_dir.empty())
    backend = std::make_shared<gw::MockBackend>(cfg_.fixtures_dir);
  else
    backend = std::make_shared<gw::HttpBackend>();
  gateway_ = std::make_shared<gw::Gateway>(backend, cfg_.max_in_flight);
  tokenizer_ = tok::make_tokenizer(cfg_.tokenizer);
  templates_ = cfg_.prompt_template_dir
                   ? prompts::TemplateSet(*cfg_.prompt_template_dir)
                   : prompts::TemplateSet();
}

fs::path Runner::book_dir(const std::string& book_id) const {
  return cfg_.output_dir / "books" / book_id;
}

std::vector<std::string> Runner::input_book_ids() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(cfg_.input_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".txt")
      ids.push_back(entry.path().stem().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::vector<std::string> Runner::output_book_ids() const {
  std::vector<std::string> ids;
  fs::path books = cfg_.output_dir / "books";
  if (fs::is_directory(books))
    for (const auto& entry : fs::directory_iterator(books))
      if (entry.is_directory()) ids.push_back(entry.path().filename().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

template <typename Fn>
static std::vector<BookOutcome> for_each_book(
    const std::vector<std::string>& ids, int workers, Fn fn) {
  std::vector<BookOutcome> outcomes(ids.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= ids.size()) return;
      try {
        outcomes[i] = fn(ids[i]);
      } catch (const std::exception& e) {
        outcomes[i] = {ids[i], BookOutcome::Status::Failed, e.what()};
      }
    }
  };
  int n = std::min<int>(workers, static_cast<int>(ids.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  return outcomes;
}

namespace {

struct ScenesFile {
  // parallel to the chapter list
  std::vector<std::vector<SceneAnnotation>> per_chapter;
};

json scenes_to_json(const ScenesFile& f) {
  json arr = json::array();
  for (std::size_t i = 0; i < f.per_chapter.size(); ++i)
    arr.push_back(json{{"chapter_index", i + 1}, {"scenes", f.per_chapter[i]}});
  return arr;
}

ScenesFile scenes_from_json(const json& j) {
  ScenesFile f;
  for (const auto& entry : j) {
    std::size_t idx = entry.at("chapter_index").get<std::size_t>();
    if (idx != f.per_chapter.size() + 1)
      throw std::runtime_error("scene file chapters out of order");
    f.per_chapter.push_back(
        entry.at("scenes").get<std::vector<SceneAnnotation>>());
  }
  return f;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

StageReport Runner::run_stage(Stage stage) {
  StageReport report;
  report.stage = stage;

  auto seed_for = [this](const std::string& book_id, std::string_view tag) {
    return book_seed(cfg_.seed, tag, book_id);
  };

  switch (stage) {
    case Stage::Ingest: {
      auto ids = input_book_ids();
      report.outcomes = for_each_book(ids, cfg_.workers, [&](const std::string& id) {
        std::string raw = read_file(cfg_.input_dir / (id + ".txt"));
        std::string hash = gw::sha256_hex(raw);
        fs::path dir = book_dir(id);
        fs::path artifact = dir / "chapters.json";
        if (up_to_date(artifact, hash))
          return BookOutcome{id, BookOutcome::Status::Skipped, ""};
        fs::create_directories(dir);
        ingest::IngestConfig icfg;
        icfg.min_words = cfg_.min_words;
        ingest::RawBook book = ingest::ingest_book(raw, id, icfg);
        auto chapters = ingest::split_chapters(book);
        json j{{"book", book}, {"chapters", chapters}};
        commit(artifact, dump(j), hash);
        return BookOutcome{id, BookOutcome::Status::Processed, ""};
      });
      break;
    }
    case Stage::Scenes: {
      auto ids = output_book_ids();
      report.outcomes = for_each_book(ids, cfg_.workers, [&](const std::string& id) {
        fs::path dir = book_dir(id);
        if (!fs::is_regular_file(dir / "chapters.json"))
          return BookOutcome{id, BookOutcome::Status::Failed,
                             "missing chapters.json"};
        std::string input = read_file(dir / "chapters.json");
        std::string hash = gw::sha256_hex(input);
        fs::path artifact = dir / "scenes.json";
        if (up_to_date(artifact, hash))
          return BookOutcome{id, BookOutcome::Status::Skipped, ""};
        auto chapters =
            json::parse(input).at("chapters").get<std::vector<ingest::ChapterSplit>>();
        annotate::Ctx ctx{*gateway_, cfg_.tool_profile, templates_, id};
        ScenesFile f;
        for (const auto& ch : chapters)
          f.per_chapter.push_back(
              annotate::annotate_chapter_scenes(ctx, ch, cfg_.scoring));
        commit(artifact, dump(scenes_to_json(f)), hash);
        return BookOutcome{id, BookOutcome::Status::Processed, ""};
      });
      break;
    }
    case Stage::Chapters: {
      auto ids = output_book_ids();
      report.outcomes = for_each_book(ids, cfg_.workers, [&](const std::string& id) {
        fs::path dir = book_dir(id);
        for (const char* need : {"chapters.json", "scenes.json"})
          if (!fs::is_regular_file(dir / need))
            return BookOutcome{id, BookOutcome::Status::Failed,
                               std::string("missing ") + need};
        std::string in_chapters = read_file(dir / "chapters.json");
        std::string in_scenes = read_file(dir / "scenes.json");
        std::string hash = gw::sha256_hex(in_chapters + "\n" + in_scenes);
        fs::path artifact = dir / "chapters_annotated.json";
        if (up_to_date(artifact, hash))
          return BookOutcome{id, BookOutcome::Status::Skipped, ""};
        auto chapters = json::parse(in_chapters)
                            .at("chapters")
                            .get<std::vector<ingest::ChapterSplit>>();
        ScenesFile scenes = scenes_from_json(json::parse(in_scenes));
        if (scenes.per_chapter.size() != chapters.size())
          throw std::runtime_error("scene file does not match chapter count");
        annotate::Ctx ctx{*gateway_, cfg_.tool_profile, templates_, id};
        annotate::NameNormalizer norm;
        std::vector<ChapterAnnotation> annotated;
        annotated.reserve(chapters.size());
        for (std::size_t i = 0; i < chapters.size(); ++i)
          annotated.push_back(annotate::annotate_chapter(
              ctx, chapters[i], scenes.per_chapter[i], norm));
        commit(artifact, dump(json(annotated)), hash);
        return BookOutcome{id, BookOutcome::Status::Processed, ""};
      });
      break;
    }
    case Stage::Book: {
      auto ids = output_book_ids();
      report.outcomes = for_each_book(ids, cfg_.workers, [&](const std::string& id) {
        fs::path dir = book_dir(id);
        if (!fs::is_regular_file(dir / "chapters_annotated.json"))
          return BookOutcome{id, BookOutcome::Status::Failed,
                             "missing chapters_annotated.json"};
        std::string input = read_file(dir / "chapters_annotated.json");
        std::string hash = gw::sha256_hex(input);
        fs::path artifact = dir / "book.json";
        if (up_to_date(artifact, hash))
          return BookOutcome{id, BookOutcome::Status::Skipped, ""};
        auto chapters =
            json::parse(input).get<std::vector<ChapterAnnotation>>();
        annotate::Ctx ctx{*gateway_, cfg_.reasoning_profile, templates_, id};
        annotate::NameNormalizer norm;
        BookAnnotation book =
            annotate::annotate_book(ctx, chapters, norm, cfg_.book);
        commit(artifact, dump(json(book)), hash);
        return BookOutcome{id, BookOutcome::Status::Processed, ""};
      });
      break;
    }
    case Stage::Prompt: {
      auto ids = output_book_ids();
      report.outcomes = for_each_book(ids, cfg_.workers, [&](const std::string& id) {
        fs::path dir = book_dir(id);
        if (!fs::is_regular_file(dir / "book.json"))
          return BookOutcome{id, BookOutcome::Status::Failed,
                             "missing book.json"};
        std::string input = read_file(dir / "book.json");
        std::string hash =
            gw::sha256_hex(input + "\nseed=" + std::to_string(cfg_.seed));
        fs::path artifact = dir / "prompt.json";
        if (up_to_date(artifact, hash))
          return BookOutcome{id, BookOutcome::Status::Skipped, ""};
        auto book = json::parse(input).get<BookAnnotation>();
        annotate::Ctx ctx{*gateway_, cfg_.reasoning_profile, templates_, id};
        synth::PromptProfile profile = synth::sample_profile(
            seed_for(id, "profile"), cfg_.prompt_distribution);
        synth::SynthPrompt prompt = synth::render_prompt(ctx, book, profile);
        auto [noised, ops] = synth::inject_noise(
            prompt.text, profile.noise_level, seed_for(id, "noise"));
        prompt.text = noised;
        prompt.noise_ops_applied = std::move(ops);
        commit(artifact, dump(json(prompt)), hash);
        return BookOutcome{id, BookOutcome::Status::Processed, ""};
      });
      break;
    }
    case Stage::Compose: {
      auto ids = output_book_ids();
      report.outcomes = for_each_book(ids, cfg_.workers, [&](const std::string& id) {
        fs::path dir = book_dir(id);
        for (const char* need : {"chapters.json", "scenes.json",
                                 "chapters_annotated.json", "book.json",
                                 "prompt.json"})
          if (!fs::is_regular_file(dir / need))
            return BookOutcome{id, BookOutcome::Status::Failed,
                               std::string("missing ") + need};
        std::string in_chapters = read_file(dir / "chapters.json");
        std::string in_scenes = read_file(dir / "scenes.json");
        std::string in_annot = read_file(dir / "chapters_annotated.json");
        std::string in_book = read_file(dir / "book.json");
        std::string in_prompt = read_file(dir / "prompt.json");
        std::string hash = gw::sha256_hex(in_chapters + "\n" + in_scenes +
                                          "\n" + in_annot + "\n" + in_book +
                                          "\n" + in_prompt + "\n" +
                                          tokenizer_->name());
        fs::path artifact = dir / "example.txt";
        fs::path tokens_artifact = dir / "example.tokens.json";
        if (up_to_date(artifact, hash) && up_to_date(tokens_artifact, hash))
          return BookOutcome{id, BookOutcome::Status::Skipped, ""};

        auto chapters = json::parse(in_chapters)
                            .at("chapters")
                            .get<std::vector<ingest::ChapterSplit>>();
        ScenesFile scenes = scenes_from_json(json::parse(in_scenes));
        auto annotated = json::parse(in_annot).get<std::vector<ChapterAnnotation>>();
        auto book = json::parse(in_book).get<BookAnnotation>();
        auto prompt = json::parse(in_prompt).get<synth::SynthPrompt>();

        std::vector<std::string> chapter_texts;
        chapter_texts.reserve(chapters.size());
        for (const auto& ch : chapters) chapter_texts.push_back(ch.text);

        scaffold::ComposeInputs in;
        in.book = &book;
        in.chapters = &annotated;
        in.scenes = &scenes.per_chapter;
        in.prompt_text = &prompt.text;
        in.chapter_texts = &chapter_texts;
        scaffold::TrainingExample ex = scaffold::compose_example(in);
        std::string text = scaffold::serialize(ex);
        scaffold::TokenizedExample toks =
            scaffold::clip(scaffold::tokenize_and_mask(ex, *tokenizer_));
        commit(artifact, text, hash);
        commit(tokens_artifact, dump(json(toks)), hash);
        return BookOutcome{id, BookOutcome::Status::Processed, ""};
      });
      break;
    }
    case Stage::Stats: {
      auto ids = output_book_ids();
      fs::path stats_dir = cfg_.output_dir / "stats";
      std::string combined;
      std::vector<std::pair<std::string, std::string>> token_files;
      for (const auto& id : ids) {
        fs::path p = book_dir(id) / "example.tokens.json";
        if (!fs::is_regular_file(p)) {
          report.outcomes.push_back(
              {id, BookOutcome::Status::Failed, "missing example.tokens.json"});
          continue;
        }
        std::string bytes = read_file(p);
        combined += id;
        combined += '\0';
        combined += bytes;
        token_files.emplace_back(id, std::move(bytes));
      }
      combined += "width=" + std::to_string(cfg_.histogram_bucket_width);
      std::string hash = gw::sha256_hex(combined);
      fs::path summary = stats_dir / "summary.json";
      if (token_files.empty()) {
        if (report.outcomes.empty())
          report.outcomes.push_back({"corpus", BookOutcome::Status::Failed,
                                     "no tokenized examples found"});
        break;
      }
      if (up_to_date(summary, hash)) {
        for (const auto& [id, bytes] : token_files)
          report.outcomes.push_back({id, BookOutcome::Status::Skipped, ""});
        std::sort(report.outcomes.begin(), report.outcomes.end(),
                  [](const auto& a, const auto& b) { return a.book_id < b.book_id; });
        break;
      }
      fs::create_directories(stats_dir);
      std::vector<stats::SequenceLengths> rows;
      for (const auto& [id, bytes] : token_files) {
        auto ex = json::parse(bytes).get<scaffold::TokenizedExample>();
        rows.push_back(stats::measure(ex, id));
        report.outcomes.push_back({id, BookOutcome::Status::Processed, ""});
      }
      std::string jsonl;
      for (const auto& r : rows) jsonl += json(r).dump() + "\n";
      stats::CorpusSummary sum = stats::summarize(rows);
      auto hist = stats::histogram(rows, cfg_.histogram_bucket_width);
      auto env = stats::bucket_envelope(rows, cfg_.histogram_bucket_width);
      write_atomic(stats_dir / "lengths.jsonl", jsonl);
      write_atomic(stats_dir / "histogram.csv", stats::histogram_csv(hist));
      write_atomic(stats_dir / "envelope.csv", stats::envelope_csv(env));
      commit(summary, dump(json(sum)), hash);
      std::sort(report.outcomes.begin(), report.outcomes.end(),
                [](const auto& a, const auto& b) { return a.book_id < b.book_id; });
      break;
    }
  }
  return report;
}

std::vector<StageReport> Runner::run_all() {
  std::vector<StageReport> reports;
  for (Stage s : {Stage::Ingest, Stage::Scenes, Stage::Chapters, Stage::Book,
                  Stage::Prompt, Stage::Compose, Stage::Stats}) {
    reports.push_back(run_stage(s));
    if (!reports.back().ok()) break;
  }
  return reports;
}

// --- validation ----------------------------------------------------------------

namespace {

struct Checker {
  const std::string& book_id;
  const std::string& artifact;
  std::vector<Violation>& out;

  void fail(const std::string& message) const {
    out.push_back({book_id, artifact, message});
  }
  void check(bool ok, const std::string& message) const {
    if (!ok) fail(message);
  }
};

bool bullet_ok(const Bullet& b, std::size_t limit) {
  std::size_t wc = text::words(b.text).size();
  return wc >= 1 && wc <= limit &&
         wc == static_cast<std::size_t>(b.word_count);
}

void check_bullets(const Checker& c, const std::vector<Bullet>& bullets,
                   const std::string& what, std::size_t limit = kBulletWordLimit) {
  for (const auto& b : bullets)
    c.check(bullet_ok(b, limit), what + " bullet breaks the " +
                                     std::to_string(limit) + "-word limit: \"" +
                                     b.text + "\"");
}

bool mentions_any_name(const std::string& text_value,
                       const std::vector<std::string>& names) {
  for (const auto& name : names)
    for (auto word : text::words(name))
      if (text::contains_word(text_value, word)) return true;
  return false;
}

}  // namespace

ValidationReport Runner::validate() const {
  ValidationReport report;
  annotate::NameNormalizer norm;

  for (const auto& id : output_book_ids()) {
    ++report.books_checked;
    fs::path dir = book_dir(id);

    std::optional<ingest::RawBook> raw;
    std::vector<ingest::ChapterSplit> chapters;
    if (fs::is_regular_file(dir / "chapters.json")) {
      Checker c{id, "chapters.json", report.violations};
      try {
        json j = json::parse(read_file(dir / "chapters.json"));
        raw = j.at("book").get<ingest::RawBook>();
        chapters = j.at("chapters").get<std::vector<ingest::ChapterSplit>>();
        c.check(!chapters.empty(), "no chapters");
        c.check(ingest::reconstruct_body(chapters) == raw->body,
                "chapter texts do not reconstruct the body");
        std::size_t words_sum = 0;
        for (std::size_t i = 0; i < chapters.size(); ++i) {
          c.check(chapters[i].index == static_cast<int>(i) + 1,
                  "chapter indexes not sequential");
          words_sum += chapters[i].word_count;
        }
        c.check(words_sum == text::words(raw->body).size(),
                "chapter word counts do not sum to the body count");
      } catch (const std::exception& e) {
        c.fail(std::string("unreadable: ") + e.what());
      }
    }

    std::vector<std::vector<SceneAnnotation>> scenes;
    if (fs::is_regular_file(dir / "scenes.json")) {
      Checker c{id, "scenes.json", report.violations};
      try {
        scenes = scenes_from_json(json::parse(read_file(dir / "scenes.json")))
                     .per_chapter;
        if (!chapters.empty())
          c.check(scenes.size() == chapters.size(),
                  "scene chapters do not match the chapter count");
        for (std::size_t i = 0; i < scenes.size(); ++i) {
          const auto& list = scenes[i];
          std::string where = "chapter " + std::to_string(i + 1);
          c.check(!list.empty(), where + ": no scenes");
          std::size_t cursor = 0;
          for (const auto& sc : list) {
            c.check(sc.boundary.start == cursor,
                    where + ": scene spans leave a gap or overlap");
            c.check(sc.boundary.end > sc.boundary.start,
                    where + ": empty scene span");
            cursor = sc.boundary.end;
            c.check(sc.scores.in_range(), where + ": score out of range");
            for (double v : sc.scores.as_array())
              c.check(v == 0.0 || v >= cfg_.scoring.zero_threshold,
                      where + ": sub-threshold score survived zeroing");
            c.check(!sc.summary.empty(), where + ": empty scene summary");
            check_bullets(c, sc.summary, where + " scene summary");
          }
          if (i < chapters.size())
            c.check(cursor == chapters[i].text.size(),
                    where + ": scene spans do not cover the chapter");
        }
      } catch (const std::exception& e) {
        c.fail(std::string("unreadable: ") + e.what());
      }
    }

    std::vector<ChapterAnnotation> annotated;
    if (fs::is_regular_file(dir / "chapters_annotated.json")) {
      Checker c{id, "chapters_annotated.json", report.violations};
      try {
        annotated = json::parse(read_file(dir / "chapters_annotated.json"))
                        .get<std::vector<ChapterAnnotation>>();
        for (std::size_t i = 0; i < annotated.size(); ++i) {
          const auto& ch = annotated[i];
          std::string where = "chapter " + std::to_string(ch.index);
          c.check(ch.index == static_cast<int>(i) + 1,
                  "chapter indexes not sequential");
          c.check(!ch.summary.empty(), where + ": empty summary");
          check_bullets(c, ch.summary, where + " summary");
          if (i < scenes.size()) {
            std::size_t n = scenes[i].size();
            c.check(ch.summary.size() <=
                        static_cast<std::size_t>(
                            annotate::chapter_summary_budget(n)),
                    where + ": summary exceeds its budget");
            c.check(ch.short_scene_summaries.size() == n,
                    where + ": short scene summaries do not match scene count");
          }
          for (std::size_t k = 0; k < ch.short_scene_summaries.size(); ++k) {
            const auto& s = ch.short_scene_summaries[k];
            c.check(s.scene_index == static_cast<int>(k),
                    where + ": short scene summaries out of order");
            c.check(bullet_ok(s.bullet, annotate::kShortSceneWordLimit),
                    where + ": short scene summary breaks the 20-word limit");
          }
          std::vector<std::string> seen;
          auto disjoint = [&](const std::vector<std::string>& group) {
            for (const auto& name : group) {
              std::string key = norm.key(name);
              if (std::find(seen.begin(), seen.end(), key) != seen.end())
                return false;
              seen.push_back(key);
            }
            return true;
          };
          c.check(disjoint(ch.characters.main) && disjoint(ch.characters.side) &&
                      disjoint(ch.characters.mentioned),
                  where + ": roster tiers are not disjoint");
          check_bullets(c, ch.style, where + " style");
        }
      } catch (const std::exception& e) {
        c.fail(std::string("unreadable: ") + e.what());
      }
    }

    std::optional<BookAnnotation> book;
    if (fs::is_regular_file(dir / "book.json")) {
      Checker c{id, "book.json", report.violations};
      try {
        book = json::parse(read_file(dir / "book.json")).get<BookAnnotation>();
        int n = static_cast<int>(annotated.size());
        c.check(!book->arcs.empty() &&
                    book->arcs.size() <= static_cast<std::size_t>(cfg_.book.max_arcs),
                "arc count out of range");
        for (const auto& arc : book->arcs) {
          c.check(!arc.name.empty(), "unnamed arc");
          c.check(!arc.progression.empty(), "arc without progression");
          check_bullets(c, arc.progression, "arc progression");
          c.check(arc.first_chapter >= 1 && arc.first_chapter <= arc.last_chapter,
                  "arc chapter span inverted");
          if (n > 0) c.check(arc.last_chapter <= n, "arc span past the last chapter");
        }
        std::vector<std::string> names;
        for (const auto& ch : book->characters) {
          c.check(!ch.name.empty(), "unnamed character");
          names.push_back(ch.name);
          check_bullets(c, ch.profile, "character profile");
        }
        for (std::size_t a = 0; a < names.size(); ++a)
          for (std::size_t b = a + 1; b < names.size(); ++b)
            c.check(norm.key(names[a]) != norm.key(names[b]),
                    "duplicate character after normalization: " + names[a]);
        for (const auto& e : book->archetype_edges) {
          auto known = [&](const std::string& name) {
            return std::find(names.begin(), names.end(), name) != names.end();
          };
          c.check(known(e.from_character) && known(e.to_character),
                  "edge endpoint not in the character list");
          c.check(e.from_character != e.to_character, "self edge");
        }
        c.check(book->style.bullets.size() >=
                        static_cast<std::size_t>(cfg_.book.style_min_bullets) &&
                    book->style.bullets.size() <=
                        static_cast<std::size_t>(cfg_.book.style_max_bullets),
                "style bullet count out of range");
        check_bullets(c, book->style.bullets, "style");
        c.check(book->world_rules.size() <=
                    static_cast<std::size_t>(cfg_.book.max_world_rules),
                "too many world rules");
        check_bullets(c, book->world_rules, "world rule");
        std::size_t awc = text::words(book->book_archetype).size();
        c.check(awc >= static_cast<std::size_t>(cfg_.book.archetype_min_words) &&
                    awc <= static_cast<std::size_t>(cfg_.book.archetype_max_words),
                "archetype word count out of range");
        c.check(!mentions_any_name(book->book_archetype, names),
                "archetype mentions a character name");
        c.check(!book->preview.synthetic_title.empty(), "empty preview title");
        c.check(book->preview.tags.size() ==
                    static_cast<std::size_t>(cfg_.book.preview_tag_count),
                "preview must carry exactly " +
                    std::to_string(cfg_.book.preview_tag_count) + " tags");
        for (const auto& t : book->preview.tags)
          c.check(!t.empty(), "empty preview tag");
        std::size_t hwc = text::words(book->preview.highlight).size();
        c.check(hwc >= static_cast<std::size_t>(cfg_.book.highlight_min_words) &&
                    hwc <= static_cast<std::size_t>(cfg_.book.highlight_max_words),
                "preview highlight word count out of range");
        std::size_t sc = text::sentence_count(book->preview.highlight);
        c.check(sc >= static_cast<std::size_t>(cfg_.book.highlight_min_sentences) &&
                    sc <= static_cast<std::size_t>(cfg_.book.highlight_max_sentences),
                "preview highlight sentence count out of range");
      } catch (const std::exception& e) {
        c.fail(std::string("unreadable: ") + e.what());
      }
    }

    std::optional<synth::SynthPrompt> prompt;
    if (fs::is_regular_file(dir / "prompt.json")) {
      Checker c{id, "prompt.json", report.violations};
      try {
        prompt = json::parse(read_file(dir / "prompt.json"))
                     .get<synth::SynthPrompt>();
        std::string stripped =
            synth::strip_noise(prompt->text, prompt->noise_ops_applied);
        std::size_t wc = text::words(stripped).size();
        auto band = prompt->profile.target_words;
        std::size_t lo = static_cast<std::size_t>(band.min_words * 0.8);
        std::size_t hi =
            static_cast<std::size_t>(std::ceil(band.max_words * 1.2));
        c.check(wc >= lo && wc <= hi,
                "prompt word count outside the regime band");
      } catch (const std::exception& e) {
        c.fail(std::string("unreadable: ") + e.what());
      }
    }

    if (fs::is_regular_file(dir / "example.txt")) {
      Checker c{id, "example.txt", report.violations};
      std::string text_bytes = read_file(dir / "example.txt");
      scaffold::TemplateAutomaton automaton = scaffold::build_automaton_open();
      scaffold::Verdict v = automaton.validate(text_bytes);
      switch (v.kind) {
        case scaffold::Verdict::Kind::Accept:
          break;
        case scaffold::Verdict::Kind::Incomplete:
          c.fail("example is incomplete (expected " + v.expected + ")");
          break;
        case scaffold::Verdict::Kind::Violation:
          c.fail("example violates the template at offset " +
                 std::to_string(v.offset) + " (expected " + v.expected + ")");
          break;
      }
      if (v.kind == scaffold::Verdict::Kind::Accept) {
        try {
          scaffold::TrainingExample ex = scaffold::parse(text_bytes);
          c.check(scaffold::serialize(ex) == text_bytes,
                  "example does not round-trip");
          if (!chapters.empty())
            c.check(ex.chapter_count == static_cast<int>(chapters.size()),
                    "example chapter count differs from the split");
          if (prompt)
            c.check(ex.prompt_text() == prompt->text,
                    "example prompt differs from prompt.json");
        } catch (const scaffold::ParseError& e) {
          c.fail(std::string("parse error: ") + e.what());
        }
      }
    }

    if (fs::is_regular_file(dir / "example.tokens.json")) {
      Checker c{id, "example.tokens.json", report.violations};
      try {
        auto toks = json::parse(read_file(dir / "example.tokens.json"))
                        .get<scaffold::TokenizedExample>();
        c.check(toks.size() <= scaffold::kMaxSequenceTokens,
                "tokenized example exceeds the clip limit");
        c.check(toks.mask.size() == toks.size(), "mask length mismatch");
        std::size_t cursor = 0;
        std::size_t prompt_len = 0;
        for (const auto& span : toks.role_spans) {
          c.check(span.start == cursor, "role spans leave a gap or overlap");
          cursor = span.end;
          std::size_t zeros = 0;
          for (std::size_t i = span.start; i < span.end && i < toks.mask.size(); ++i)
            if (toks.mask[i] == 0) ++zeros;
          if (span.kind == scaffold::ComponentKind::UserPrompt) {
            prompt_len += span.end - span.start;
            c.check(zeros == span.end - span.start,
                    "prompt span not fully masked out");
          } else {
            c.check(zeros == 0, "mask zeros outside the prompt span");
          }
        }
        c.check(cursor == toks.size(), "role spans do not cover the sequence");
        c.check(toks.mask_sum() + prompt_len == toks.size(),
                "mask identity violated");
      } catch (const std::exception& e) {
        c.fail(std::string("unreadable: ") + e.what());
      }
    }
  }
  return report;
}

}  // namespace bookpipe::pipe
