#include "bookpipe/fixture_gen.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

#include "bookpipe/annotate_book.hpp"
#include "bookpipe/annotate_chapter.hpp"
#include "bookpipe/annotate_scene.hpp"
#include "bookpipe/gateway.hpp"
#include "bookpipe/ingest.hpp"
#include "bookpipe/pipeline.hpp"
#include "bookpipe/prompt_synth.hpp"
#include "bookpipe/text_util.hpp"

namespace bookpipe::fixgen {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kMaxRetries = 3;  // must match the profiles in the config

void must(bool ok, const std::string& what) {
  if (!ok) throw std::logic_error("fixture generator: " + what);
}

class Pick {
 public:
  explicit Pick(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  const std::string& from(const std::vector<std::string>& list) {
    must(!list.empty(), "empty word bank");
    return list[next() % list.size()];
  }

  int range(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::uint64_t state_;
};

struct Theme {
  std::vector<std::string> actors;
  std::vector<std::string> verbs;    // past tense
  std::vector<std::string> objects;
  std::vector<std::string> places;
  std::vector<std::string> asides;   // standalone sentences, no period
  std::vector<std::string> lines;    // dialogue, no quotes or period
};

struct Roster {
  std::vector<std::string> main;
  std::vector<std::string> side;
  std::vector<std::string> mentioned;
};

struct Plan {
  std::string id;
  std::string title;
  Theme theme;
  std::vector<int> scene_counts;  // one entry per chapter
  std::vector<Roster> rosters;
  std::vector<std::pair<std::string, std::string>> edges;  // from, to
  std::vector<std::string> edge_relations;
  std::string arc_name;
  std::string second_arc_name;  // empty: single arc
  std::vector<std::string> world_rules;
  std::string archetype;
  std::string synthetic_title;
  std::vector<std::string> tags;
  std::string highlight;
  std::vector<std::string> premise;  // prompt-opening sentences
};

std::string sentence(Pick& p, const Theme& t) {
  switch (p.next() % 5) {
    case 0:
      return t.actors[p.next() % t.actors.size()] + " " + p.from(t.verbs) +
             " " + p.from(t.objects) + " " + p.from(t.places) + ".";
    case 1:
      return p.from(t.asides) + ".";
    case 2:
      return "\"" + p.from(t.lines) + ",\" said " +
             t.actors[p.next() % t.actors.size()] + ".";
    case 3:
      return t.actors[p.next() % t.actors.size()] + " " + p.from(t.verbs) +
             " " + p.from(t.objects) + ", and for a while nobody spoke.";
    default:
      return p.from(t.asides) + " while " +
             t.actors[p.next() % t.actors.size()] + " " + p.from(t.verbs) +
             " " + p.from(t.objects) + ".";
  }
}

std::string paragraph(Pick& p, const Theme& t) {
  int n = p.range(4, 6);
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out += " ";
    out += sentence(p, t);
  }
  return out;
}

std::string chapter_block(Pick& p, const Theme& t, int number, int paragraphs) {
  std::string out = "Chapter " + std::to_string(number);
  for (int i = 0; i < paragraphs; ++i) out += "\n\n" + paragraph(p, t);
  return out;
}

std::string book_source(Pick& p, const Plan& plan) {
  std::string upper = plan.title;
  for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  std::string out = "Title: " + plan.title + "\n\n";
  out += "*** START OF " + upper + " ***\n\n";
  for (std::size_t i = 0; i < plan.scene_counts.size(); ++i) {
    if (i) out += "\n\n";
    // enough text that every chapter splits into its planned scene count
    out += chapter_block(p, plan.theme, static_cast<int>(i) + 1,
                         3 + plan.scene_counts[i]);
  }
  out += "\n\n*** END OF " + upper + " ***\n";
  return out;
}

class Writer {
 public:
  Writer(fs::path dir, std::string book_id)
      : dir_(std::move(dir)), book_(std::move(book_id)) {}

  void put(const std::string& step, const std::string& unit, int ordinal,
           const json& body) {
    write(step, unit, ordinal, ".json", body.dump(2) + "\n");
  }

  void put_text(const std::string& step, const std::string& unit, int ordinal,
                const std::string& body) {
    write(step, unit, ordinal, ".txt", body);
  }

 private:
  void write(const std::string& step, const std::string& unit, int ordinal,
             const char* ext, const std::string& content) {
    gw::CallKey key{step, book_, unit, ordinal};
    fs::path p = dir_ / (gw::fixture_key(key) + ext);
    must(!fs::exists(p), "duplicate fixture for " + step + "/" + unit + "/" +
                             std::to_string(ordinal));
    std::ofstream out(p, std::ios::binary);
    out << content;
    must(static_cast<bool>(out), "cannot write " + p.string());
  }

  fs::path dir_;
  std::string book_;
};

std::string checked_bullet(const std::string& s, std::size_t limit = 45) {
  std::size_t wc = text::word_count(s);
  must(wc >= 1 && wc <= limit,
       "bullet of " + std::to_string(wc) + " words: " + s);
  return s;
}

json score_json(Pick& p, bool romantic_book, int run) {
  // Runs differ by a balanced offset so the ensemble mean equals the base
  // and zeroing is decided by the base alone.
  int offset = run == 0 ? -2 : run == 1 ? 0 : 2;
  auto dim = [&](int lo, int hi) { return p.range(lo, hi) + offset; };
  json j;
  j["action"] = dim(30, 70);
  j["dialog"] = dim(20, 60);
  j["world_building"] = dim(25, 65);
  j["exposition"] = dim(15, 55);
  j["romantic"] = romantic_book ? dim(25, 55) : 4 + offset;
  j["erotic"] = 3 + offset;
  j["pacing"] = dim(30, 70);
  return j;
}

const std::vector<std::string>& style_bank() {
  static const std::vector<std::string> kBank = {
      "Short declarative sentences carry most action beats.",
      "Dialogue stays clipped, rarely more than two exchanges.",
      "Weather notes bracket nearly every transition.",
      "Interior monologue arrives in single-line bursts.",
      "Paragraphs average four to six sentences.",
      "Scene breaks land on images rather than cliffhangers.",
      "Sensory detail favors sound over sight.",
      "Technical vocabulary is used without explanation.",
      "Chapters open mid-motion, without establishing shots.",
      "Similes are rare and drawn from work, not nature.",
      "Narration keeps a cool, inventory-taking tone.",
      "Emotive language is displaced onto rooms and tools.",
      "Repetition of small rituals marks the passage of time.",
      "Verbs do the descriptive work; adjectives are sparse.",
      "Most tension is carried by what characters decline to say.",
      "Sentences lengthen noticeably in reflective passages.",
      "Objects are tracked across chapters like recurring motifs.",
      "Quiet humor surfaces in understatement, never in jokes told aloud.",
      "The narrator never explains feelings already shown in gesture.",
      "Time skips are signalled by a single orienting clause.",
      "Lists and litanies appear at moments of stress.",
      "Color words are reserved for turning points.",
      "Each chapter ends on a held breath rather than a resolution.",
      "Secondary voices get distinct cadences within shared diction.",
      "Past habits are narrated in the iterative, present choices in scene.",
      "Physical work is described step by step, almost procedurally.",
      "Rooms are introduced by temperature before appearance.",
      "Questions in narration go unanswered for at least a page.",
  };
  return kBank;
}

json bullets_json(const std::vector<std::string>& bullets) {
  for (const auto& b : bullets) checked_bullet(b);
  return json{{"bullets", bullets}};
}

// Distinct sentence-boundary cuts giving the requested scene count, or a
// loud failure if the chapter is too short to support it.
std::vector<std::size_t> scene_cuts(const std::string& chapter_text, int scenes) {
  std::vector<std::size_t> cuts;
  cuts.push_back(0);
  for (int j = 1; j < scenes; ++j) {
    std::size_t proposal = chapter_text.size() * static_cast<std::size_t>(j) /
                           static_cast<std::size_t>(scenes);
    std::size_t snapped = text::snap_to_sentence_boundary(chapter_text, proposal);
    must(snapped > cuts.back() && snapped < chapter_text.size(),
         "chapter too short for " + std::to_string(scenes) + " scenes");
    cuts.push_back(snapped);
  }
  cuts.push_back(chapter_text.size());
  return cuts;
}

struct RetryScript {
  // chapter/scene that rejects its first score attempt
  int bad_score_chapter = 0;  // 0: none (1-based otherwise)
  int bad_score_scene = 0;
  // chapter/scene whose second summary bullet needs a repair call
  int long_bullet_chapter = 0;
  int long_bullet_scene = 0;
  bool short_count_retry = false;  // chapter 1 miscounts short summaries once
  bool render_retry = false;       // first prompt render is prose, not JSON
};

std::vector<std::string> profiled_characters(const Plan& plan) {
  annotate::NameNormalizer norm;
  std::vector<std::string> displays;
  std::set<std::string> seen;
  for (const auto& roster : plan.rosters) {
    for (const auto& list : {roster.main, roster.side})
      for (const auto& name : list)
        if (seen.insert(norm.key(name)).second) displays.push_back(name);
  }
  return displays;
}

void write_book_fixtures(const fs::path& fixtures_dir, const fs::path& input_dir,
                         const Plan& plan, const RetryScript& script,
                         std::uint64_t seed) {
  must(plan.scene_counts.size() == plan.rosters.size(),
       "plan rosters out of step with chapters");
  Pick pick(pipe::fnv1a64(plan.id));
  Writer w(fixtures_dir, plan.id);
  const Theme& t = plan.theme;

  std::string source = book_source(pick, plan);
  {
    std::ofstream out(input_dir / (plan.id + ".txt"), std::ios::binary);
    out << source;
    must(static_cast<bool>(out), "cannot write input for " + plan.id);
  }

  ingest::IngestConfig icfg;
  icfg.min_words = 150;
  ingest::RawBook raw = ingest::ingest_book(source, plan.id, icfg);
  auto chapters = ingest::split_chapters(raw);
  must(chapters.size() == plan.scene_counts.size(),
       plan.id + " split into " + std::to_string(chapters.size()) +
           " chapters, planned " + std::to_string(plan.scene_counts.size()));

  const std::vector<std::string> perspectives = {"third person", "third person",
                                                 "close third person"};
  const std::vector<std::string> scene_adjs = {"opening", "middle", "closing",
                                               "turning", "quiet"};

  for (std::size_t ci = 0; ci < chapters.size(); ++ci) {
    const auto& ch = chapters[ci];
    std::string unit = "ch" + std::to_string(ch.index);
    int scenes = plan.scene_counts[ci];
    auto cuts = scene_cuts(ch.text, scenes);

    json seg;
    seg["scenes"] = json::array();
    for (int j = 0; j < scenes; ++j) {
      seg["scenes"].push_back(
          {{"scene_name", scene_adjs[static_cast<std::size_t>(j) %
                                     scene_adjs.size()] +
                              " beat of chapter " + std::to_string(ch.index)},
           {"start_offset", cuts[j]},
           {"end_offset", cuts[j + 1]},
           {"narrative_focus", t.actors[static_cast<std::size_t>(j) %
                                        t.actors.size()]},
           {"narrative_perspective",
            perspectives[static_cast<std::size_t>(j) % perspectives.size()]}});
    }
    if (ci == 0) {
      // wrapped in chat prose; the JSON still has to be dug out
      w.put_text(annotate::kStepSegment, unit, 0,
                 "Here is the scene breakdown you asked for.\n\n" +
                     seg.dump(2) + "\n\nLet me know if the cuts look wrong.");
    } else {
      w.put(annotate::kStepSegment, unit, 0, seg);
    }

    for (int j = 1; j <= scenes; ++j) {
      std::string scene_unit = unit + "/sc" + std::to_string(j);
      bool bad_first = script.bad_score_chapter == ch.index &&
                       script.bad_score_scene == j;
      Pick base(pipe::fnv1a64(plan.id + "|" + scene_unit));
      for (int run = 0; run < 3; ++run) {
        Pick per_run = base;  // same base, balanced per-run offsets
        json scores = score_json(per_run, plan.id == "harbor-lights", run);
        int ordinal = run * (kMaxRetries + 1);
        if (run == 0 && bad_first) {
          json bad = scores;
          bad["action"] = 150;  // schema rejects, retry follows
          w.put(annotate::kStepScore, scene_unit, ordinal, bad);
          w.put(annotate::kStepScore, scene_unit, ordinal + 1, scores);
        } else {
          w.put(annotate::kStepScore, scene_unit, ordinal, scores);
        }
      }

      std::vector<std::string> bullets = {
          t.actors[static_cast<std::size_t>(j - 1) % t.actors.size()] + " " +
              pick.from(t.verbs) + " " + pick.from(t.objects) + " " +
              pick.from(t.places) + ", setting the segment in motion.",
          "The pressure shifts when " +
              t.actors[static_cast<std::size_t>(j) % t.actors.size()] + " " +
              pick.from(t.verbs) + " " + pick.from(t.objects) + ".",
      };
      if (script.long_bullet_chapter == ch.index &&
          script.long_bullet_scene == j) {
        std::string run_on = "The scene keeps circling back";
        while (text::word_count(run_on) <= 48)
          run_on += " to " + pick.from(t.objects);
        bullets[1] = run_on + ".";
        checked_bullet(bullets[0]);
        std::string fixed = "The scene circles back to " +
                            pick.from(t.objects) + " one last time.";
        w.put(annotate::kStepSummarizeScene, scene_unit,
              annotate::kRepairOrdinalBase + 1,
              json{{"bullet", checked_bullet(fixed)}});
        w.put(annotate::kStepSummarizeScene, scene_unit, 0,
              json{{"bullets", bullets}});
      } else {
        w.put(annotate::kStepSummarizeScene, scene_unit, 0,
              bullets_json(bullets));
      }
    }

    std::vector<std::string> ch_summary = {
        "Chapter " + std::to_string(ch.index) + " follows " + t.actors[0] +
            " through " + pick.from(t.objects) + " trouble " +
            pick.from(t.places) + ".",
        t.actors[1 % t.actors.size()] + " " + pick.from(t.verbs) + " " +
            pick.from(t.objects) + " and keeps the consequences quiet.",
        "A complication around " + pick.from(t.objects) +
            " forces a change of plan.",
        "The chapter closes with " + t.actors[0] + " weighing what to admit.",
    };
    w.put(annotate::kStepSummarizeChapter, unit, 0, bullets_json(ch_summary));

    std::vector<std::string> shorts;
    for (int j = 1; j <= scenes; ++j)
      shorts.push_back(checked_bullet(
          t.actors[static_cast<std::size_t>(j - 1) % t.actors.size()] + " " +
              pick.from(t.verbs) + " " + pick.from(t.objects) + ".",
          annotate::kShortSceneWordLimit));
    if (script.short_count_retry && ch.index == 1) {
      std::vector<std::string> wrong(shorts.begin(), shorts.end() - 1);
      w.put(annotate::kStepShortScenes, unit, 0, json{{"bullets", wrong}});
      w.put(annotate::kStepShortScenes, unit, 1, json{{"bullets", shorts}});
    } else {
      w.put(annotate::kStepShortScenes, unit, 0, json{{"bullets", shorts}});
    }

    const Roster& roster = plan.rosters[ci];
    w.put(annotate::kStepChapterCharacters, unit, 0,
          json{{"main", roster.main},
               {"side", roster.side},
               {"mentioned", roster.mentioned}});

    const auto& bank = style_bank();
    std::vector<std::string> style;
    for (int k = 0; k < 4; ++k)
      style.push_back(bank[(ci * 4 + static_cast<std::size_t>(k)) % bank.size()]);
    w.put(annotate::kStepChapterStyle, unit, 0, bullets_json(style));
  }

  // book level
  int n = static_cast<int>(chapters.size());
  json arcs = json::array();
  arcs.push_back({{"name", plan.arc_name},
                  {"progression",
                   json::array({"An early setback reveals how thin the margins are.",
                                "Workarounds hold, at growing personal cost.",
                                "The final push trades safety for resolution."})},
                  {"first_chapter", 1},
                  {"last_chapter", n}});
  if (!plan.second_arc_name.empty() && n > 1) {
    arcs.push_back({{"name", plan.second_arc_name},
                    {"progression",
                     json::array({"Wary cooperation hardens into trust.",
                                  "A misunderstanding nearly undoes it."})},
                    {"first_chapter", std::min(2, n)},
                    {"last_chapter", n}});
  }
  w.put(annotate::kStepArcs, "book", 0, json{{"arcs", arcs}});

  annotate::NameNormalizer norm;
  auto profiled = profiled_characters(plan);
  for (const auto& name : profiled) {
    std::vector<std::string> profile = {
        "Steady under pressure and inclined to act before explaining.",
        "Measures loyalty in shared work rather than words.",
    };
    w.put(annotate::kStepCharacterProfile, "book/char:" + norm.key(name), 0,
          bullets_json(profile));
  }

  json edges = json::array();
  must(plan.edges.size() == plan.edge_relations.size(),
       "edge relations out of step");
  for (std::size_t i = 0; i < plan.edges.size(); ++i)
    edges.push_back({{"from", plan.edges[i].first},
                     {"to", plan.edges[i].second},
                     {"relation", plan.edge_relations[i]}});
  w.put(annotate::kStepEdges, "book", 0, json{{"edges", edges}});

  const auto& bank = style_bank();
  std::vector<std::string> book_style;
  for (std::size_t k = 0; k < 26; ++k)
    book_style.push_back(bank[(k + pipe::fnv1a64(plan.id) % 3) % bank.size()]);
  std::set<std::string> distinct(book_style.begin(), book_style.end());
  must(distinct.size() >= 25, "book style bank collided");
  w.put(annotate::kStepBookStyle, "book", 0, bullets_json(book_style));

  w.put(annotate::kStepWorldRules, "book", 0, bullets_json(plan.world_rules));

  std::size_t awc = text::word_count(plan.archetype);
  must(awc >= 40 && awc <= 120, "archetype is " + std::to_string(awc) + " words");
  for (const auto& name : profiled)
    for (const auto& token : text::words(name))
      must(!text::contains_word(plan.archetype, token),
           "archetype names a character: " + std::string(token));
  w.put(annotate::kStepArchetype, "book", 0,
        json{{"paragraph", plan.archetype}});

  must(plan.tags.size() == 7, "need exactly 7 tags");
  std::size_t hwc = text::word_count(plan.highlight);
  must(hwc >= 90 && hwc <= 130,
       "highlight is " + std::to_string(hwc) + " words");
  std::size_t hsc = text::sentence_count(plan.highlight);
  must(hsc >= 3 && hsc <= 5,
       "highlight is " + std::to_string(hsc) + " sentences");
  w.put(annotate::kStepPreview, "book", 0,
        json{{"synthetic_title", plan.synthetic_title},
             {"tags", plan.tags},
             {"highlight", plan.highlight}});

  // prompt render, matched to the profile the run will sample
  synth::PromptProfile profile = synth::sample_profile(
      pipe::book_seed(seed, "profile", plan.id),
      synth::DistributionConfig::defaults());
  int lo = profile.target_words.min_words;
  int hi = profile.target_words.max_words;

  std::vector<std::string> fillers = {
      "Keep the chapters on the short side.",
      "I want the tension to come from the work itself, not from a villain.",
      "Give the minor characters their own small routines.",
      "It should feel lived-in rather than explained.",
      "Let the setting do a lot of the emotional work.",
      "No sudden genre swerves near the end, please.",
      "I like endings that are earned but not tidy.",
      "Dialogue can be sparse as long as it lands.",
      "Somewhere in the middle, let things go quietly wrong.",
      "The pacing can breathe; I am not in a hurry.",
      "Avoid prologues and epilogues if you can.",
      "A little dry humor would not hurt.",
      "Make the practical details feel researched.",
      "I would rather be shown a routine twice than told about it once.",
      "The stakes should stay personal even when the setting is big.",
  };

  std::string body;
  auto append_line = [&](const std::string& line, bool newline) {
    if (!body.empty()) body += newline ? "\n" : " ";
    body += line;
  };
  auto wc_of = [&] { return static_cast<int>(text::word_count(body)); };

  // Mandatory structure first so its words count against the band; short
  // regimes leave little room once the list lines are in.
  using synth::Structure;
  if (profile.structure == Structure::List) {
    body += "Things I care about:";
    append_line("- Quiet, steady pacing.", true);
    append_line("- Small stakes, told well.", true);
    append_line("- An ending that lingers.", true);
    if (hi >= 150)
      append_line("- " + fillers[1], true);
  } else if (profile.structure == Structure::Fields) {
    append_line("Title: open to suggestions", true);
    append_line("Genre: " + plan.tags[0], true);
    append_line("Tone: " + plan.tags[6], true);
    append_line("Setting: " + plan.tags[1] + ", " + plan.tags[2], true);
    append_line("Length: a full book", true);
  }
  for (const auto& s : plan.premise) {
    if (wc_of() + static_cast<int>(text::word_count(s)) > hi) break;
    append_line(s, false);
  }
  std::size_t fi = 0;
  while (wc_of() < lo) {
    const std::string& f = fillers[fi % fillers.size()];
    if (wc_of() + static_cast<int>(text::word_count(f)) <= hi)
      append_line(f, false);
    ++fi;
    must(fi < 200, "could not fill the prompt band");
  }
  must(wc_of() >= lo && wc_of() <= hi, "prompt missed the regime band");

  if (script.render_retry) {
    w.put_text(synth::kStepRender, "book", 0,
               "Happy to help. Could you paste the book digest again? I seem "
               "to have lost the thread.");
    w.put(synth::kStepRender, "book", 1, json{{"prompt", body}});
  } else {
    w.put(synth::kStepRender, "book", 0, json{{"prompt", body}});
  }
}

Plan aurora_plan() {
  Plan p;
  p.id = "aurora-station";
  p.title = "Aurora Station";
  p.theme.actors = {"Mara Voss", "Theo Park", "Ilsa Renn"};
  p.theme.verbs = {"checked", "sealed",  "crossed", "watched",
                   "repaired", "traced", "lowered", "charted"};
  p.theme.objects = {"the coolant manifold", "the signal array",
                     "the cargo manifest",   "the dormant relay",
                     "the survey drone",     "the pressure door",
                     "the ice core rack",    "the auxiliary battery"};
  p.theme.places = {"beneath the station's spine", "outside the docking bay",
                    "under the pale ring light",   "in the hydroponics bay",
                    "along the service tunnel"};
  p.theme.asides = {"The alarms had gone quiet an hour before",
                    "Frost climbed the inside of the viewport",
                    "The deck hummed a half tone lower than usual",
                    "Static washed over the open channel",
                    "Somewhere below, a pump changed its mind"};
  p.theme.lines = {"We hold the line here", "Seal it before the next cycle",
                   "I can hear the relay ticking", "Nobody walks the spine alone",
                   "Log it and move on"};
  p.scene_counts = {2, 3, 2, 2};
  p.rosters = {
      {{"Mara Voss", "Theo Park"}, {"Ilsa Renn"}, {"Corvan"}},
      {{"Mara Voss", "Theo Park"}, {"Ilsa Renn"}, {}},
      {{"Mara Voss"}, {"Theo Park", "Ilsa Renn"}, {"Corvan"}},
      {{"Mara Voss", "Theo Park"}, {"Ilsa Renn"}, {}},
  };
  p.edges = {{"Mara Voss", "Theo Park"}, {"Ilsa Renn", "Mara Voss"}};
  p.edge_relations = {"mentorship", "support"};
  p.arc_name = "Keeping the station alive";
  p.second_arc_name = "Trust between the watch officers";
  p.world_rules = {
      "Hard vacuum is always one bad seal away.",
      "The relay network only reaches the surface while the ring is in shadow.",
      "Resupply comes twice a year or not at all.",
      "Every system on the station has exactly one backup.",
  };
  p.archetype =
      "A small crew keeps a failing orbital outpost alive while its support "
      "systems wind down one by one. Quiet technical competence stands in "
      "for heroics; every repair buys time rather than victory. Loyalty is "
      "expressed through shared work, and the outpost itself becomes a "
      "character whose moods set the pace. The mood is patient, cold, and "
      "finally hopeful.";
  p.synthetic_title = "The Long Watch Below";
  p.tags = {"science fiction", "space station", "survival", "found family",
            "slow burn tension", "engineering", "hopeful ending"};
  p.highlight =
      "The station's long night begins when the primary relay goes dark and "
      "the crew must choose which of its failing systems deserves the last "
      "of the power. An engineer with a habit of talking to machines, a "
      "young officer still learning when to be afraid, and a doctor who "
      "keeps her own counsel hold the ring together. Every chapter tightens "
      "the margin between cold arithmetic and stubborn hope as repairs "
      "fail, freeze, and fail again. What waits at the end of the spine is "
      "not rescue but a decision about what a home in the dark is worth.";
  p.premise = {
      "I keep thinking about a story set on a small research station "
      "orbiting a frozen moon, staffed by three people who know each other "
      "too well.",
      "The station is slowly failing and the book should be about "
      "maintenance as devotion."};
  return p;
}

Plan harbor_plan() {
  Plan p;
  p.id = "harbor-lights";
  p.title = "Harbor Lights";
  p.theme.actors = {"Nora Quinn", "Elias Hart", "Bessie Tran"};
  p.theme.verbs = {"mended",  "carried", "watched", "followed",
                   "promised", "painted", "opened",  "counted"};
  p.theme.objects = {"the torn mainsail",  "the tide chart",
                     "the lantern glass",  "the oyster baskets",
                     "the harbor ledger",  "the blue rowboat",
                     "the mooring lines",  "the cannery keys"};
  p.theme.places = {"along the breakwater",      "by the cannery steps",
                    "under the pier lamps",      "at the edge of the salt flats",
                    "outside the chandlery door"};
  p.theme.asides = {"The fog lifted in ragged strips",
                    "Gulls argued over the morning catch",
                    "The tide had turned without anyone noticing",
                    "Rain ticked against the cannery roof",
                    "The season was changing faster than the paint dried"};
  p.theme.lines = {"The fleet sails whether we are ready or not",
                   "You fix things that are not yours to fix",
                   "Nobody charts a heart", "Bring the ledger, not excuses",
                   "Stay through the autumn, then decide"};
  p.scene_counts = {2, 2, 3, 2};
  p.rosters = {
      {{"Nora Quinn", "Elias Hart"}, {"Bessie Tran"}, {"Doyle"}},
      {{"Nora Quinn", "Elias Hart"}, {"Bessie Tran"}, {}},
      {{"Nora Quinn", "Elias Hart"}, {"Bessie Tran"}, {"Doyle"}},
      {{"Nora Quinn", "Elias Hart"}, {}, {"Bessie Tran"}},
  };
  p.edges = {{"Nora Quinn", "Elias Hart"}, {"Bessie Tran", "Nora Quinn"}};
  p.edge_relations = {"emotional_contrast", "mentorship"};
  p.arc_name = "The season that decides the harbor";
  p.second_arc_name = "Two people refusing to name a courtship";
  p.world_rules = {
      "The cannery pays out only after the autumn fleet returns.",
      "Every family owes the chandlery something.",
      "Weather rules the calendar; the calendar rules nothing.",
  };
  p.archetype =
      "Two stubborn people circle each other in a fading harbor town, "
      "trading small kindnesses they refuse to name. The romance advances "
      "through practical gestures: mended sails, shared ledgers, lamps left "
      "burning. Community rhythms of tide and season structure every "
      "chapter, and the central question is whether staying can be braver "
      "than leaving. Warm, unhurried, and quietly funny.";
  p.synthetic_title = "What the Tide Leaves";
  p.tags = {"romance", "small town", "coastal", "slow burn", "found family",
            "second chances", "gentle humor"};
  p.highlight =
      "A sail maker who never leaves and a pilot who never stays keep "
      "meeting over torn canvas, tide charts, and a ledger neither of them "
      "will admit to reading. Around them a small harbor town prepares for "
      "the season that decides everything, and every neighbor has an "
      "opinion about the two of them. The courtship advances by repair and "
      "refusal, one mended thing at a time, while the weather keeps its own "
      "score. When the autumn fleet finally turns for open water, someone "
      "has to decide whether love is an anchor, a harbor, or a heading.";
  p.premise = {
      "Please draft a slow romance set in a small fishing harbor where the "
      "two leads keep repairing each other's property instead of talking.",
      "The town itself should feel like a third main character."};
  return p;
}

Plan clockwork_plan() {
  Plan p;
  p.id = "clockwork-garden";
  p.title = "The Clockwork Garden";
  p.theme.actors = {"Pell", "Odwin Finch", "Greta Malm"};
  p.theme.verbs = {"wound",   "oiled",   "pruned", "listened to",
                   "steadied", "counted", "sketched"};
  p.theme.objects = {"the geared hedge",      "the mainspring rose",
                     "the calendar tree",     "the brass beehive",
                     "the escapement fountain", "the winding key ring"};
  p.theme.places = {"between the mirrored rows", "at the garden's cold corner",
                    "beneath the pendulum willow", "by the keeper's bench"};
  p.theme.asides = {"The afternoon ticked unevenly",
                    "A seam of rust had opened overnight",
                    "The light fell in measured bars",
                    "Somewhere a governor spun too fast"};
  p.theme.lines = {"Every spring remembers being wound",
                   "Let this one run down", "Count the teeth, then decide",
                   "The garden keeps its own calendar"};
  p.scene_counts = {3};
  p.rosters = {
      {{"Pell", "Odwin Finch"}, {"Greta Malm"}, {}},
  };
  p.edges = {{"Odwin Finch", "Pell"}};
  p.edge_relations = {"mentorship"};
  p.arc_name = "Deciding what deserves winding";
  p.second_arc_name = "";
  p.world_rules = {
      "Every mechanism in the garden was once a promise to someone.",
      "A spring wound past its stop cannot be unwound.",
      "The garden's seasons run on maintenance, not weather.",
  };
  p.archetype =
      "An apprentice tends a mechanical garden whose clockwork seasons have "
      "begun to slip, and must decide which traditions deserve winding and "
      "which should run down. Gentle fable logic governs the world; "
      "machines grow like plants and memory behaves like weather. The tone "
      "is wistful but precise, and the single long movement of the story "
      "closes on an image of deliberate, chosen renewal.";
  p.synthetic_title = "A Season of Small Gears";
  p.tags = {"fantasy", "fable", "clockwork", "apprenticeship", "standalone",
            "bittersweet", "quiet"};
  p.highlight =
      "Inside a walled garden where the hedges are geared and the roses run "
      "on mainsprings, an apprentice discovers that the seasons themselves "
      "have started to skip their teeth. The old keeper remembers how every "
      "mechanism ought to sing, but remembering is not the same as winding, "
      "and winding is not the same as letting go. Apprentice and keeper "
      "walk the rows by lamplight, deciding which marvels to save. By the "
      "last turning of the year the garden blooms in a pattern no chart "
      "predicted, and the book closes on the quiet click of something new "
      "beginning.";
  p.premise = {
      "Write me a quiet fable about an apprentice in a garden made entirely "
      "of clockwork, where tending the plants means winding them.",
      "One long chapter, no villains, and an ending about choosing what to "
      "keep."};
  return p;
}

}  // namespace

CorpusPaths write_fixture_corpus(const fs::path& root, std::uint64_t seed) {
  CorpusPaths paths;
  paths.root = root;
  paths.input_dir = root / "input";
  paths.fixtures_dir = root / "fixtures";
  paths.config_file = root / "config.json";
  fs::create_directories(paths.input_dir);
  fs::create_directories(paths.fixtures_dir);

  RetryScript clean;
  RetryScript harbor;
  harbor.bad_score_chapter = 2;
  harbor.bad_score_scene = 1;
  harbor.long_bullet_chapter = 1;
  harbor.long_bullet_scene = 2;
  RetryScript clockwork;
  clockwork.short_count_retry = true;
  RetryScript aurora = clean;
  aurora.render_retry = true;

  write_book_fixtures(paths.fixtures_dir, paths.input_dir, aurora_plan(),
                      aurora, seed);
  write_book_fixtures(paths.fixtures_dir, paths.input_dir, harbor_plan(),
                      harbor, seed);
  write_book_fixtures(paths.fixtures_dir, paths.input_dir, clockwork_plan(),
                      clockwork, seed);

  json cfg = {
      {"input_dir", "input"},
      {"output_dir", "out"},
      {"fixtures_dir", "fixtures"},
      {"reasoning_profile",
       {{"name", "mock-reasoning"},
        {"endpoint", "mock"},
        {"reasoning", true},
        {"temperature", 0.7},
        {"max_retries", kMaxRetries}}},
      {"tool_profile",
       {{"name", "mock-tool"},
        {"endpoint", "mock"},
        {"temperature", 0.2},
        {"max_retries", kMaxRetries}}},
      {"scoring", {{"ensemble_runs", 3}, {"zero_threshold", 10.0}}},
      {"tokenizer", {{"type", "byte"}}},
      {"seed", seed},
      {"workers", 2},
      {"min_words", 150},
  };
  std::ofstream out(paths.config_file, std::ios::binary);
  out << cfg.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write " + paths.config_file.string());
  return paths;
}

}  // namespace bookpipe::fixgen
