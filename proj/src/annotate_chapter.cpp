#include "bookpipe/annotate_chapter.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "bookpipe/text_util.hpp"

namespace bookpipe::annotate {

using nlohmann::json;

int chapter_summary_budget(std::size_t scene_count) {
  return std::clamp<int>(2 * static_cast<int>(scene_count), 4, 24);
}

ScoreVector chapter_embedding(const std::vector<SceneAnnotation>& scenes) {
  if (scenes.empty()) throw NoScenes("chapter has no annotated scenes");
  std::array<double, ScoreVector::kDims> acc{};
  double total = 0.0;
  for (const auto& sc : scenes) {
    double w = static_cast<double>(sc.word_count);
    auto v = sc.scores.as_array();
    for (std::size_t d = 0; d < v.size(); ++d) acc[d] += w * v[d];
    total += w;
  }
  if (total == 0.0) {
    // Degenerate chapter of empty scenes: fall back to the plain mean.
    for (const auto& sc : scenes) {
      auto v = sc.scores.as_array();
      for (std::size_t d = 0; d < v.size(); ++d)
        acc[d] += v[d] / static_cast<double>(scenes.size());
    }
    return ScoreVector::from_array(acc);
  }
  for (auto& a : acc) a /= total;
  return ScoreVector::from_array(acc);
}

namespace {

std::string scene_digest(const std::vector<SceneAnnotation>& scenes) {
  std::ostringstream out;
  auto names = ScoreVector::dim_names();
  for (std::size_t i = 0; i < scenes.size(); ++i) {
    const auto& sc = scenes[i];
    out << "Scene " << (i + 1) << " (" << sc.boundary.scene_name << ", "
        << sc.word_count << " words; ";
    auto v = sc.scores.as_array();
    for (std::size_t d = 0; d < v.size(); ++d) {
      if (d) out << ", ";
      out << names[d] << "=" << v[d];
    }
    out << "):\n";
    for (const auto& b : sc.summary) out << "- " << b.text << "\n";
  }
  return out.str();
}

}  // namespace

std::vector<Bullet> summarize_chapter(const Ctx& ctx,
                                      const std::vector<SceneAnnotation>& scenes,
                                      int chapter_index) {
  if (scenes.empty()) throw NoScenes("chapter has no annotated scenes");
  std::string unit = "ch" + std::to_string(chapter_index);
  int budget = chapter_summary_budget(scenes.size());
  std::string prompt =
      prompts::render(ctx.templates.get(kStepSummarizeChapter),
                      {{"budget", std::to_string(budget)},
                       {"scene_digest", scene_digest(scenes)}});
  auto resp = ctx.gateway.complete_structured(
      ctx.profile, prompt, ctx.key(kStepSummarizeChapter, unit),
      bullets_schema("chapter_summary"));
  auto raw = resp.parsed["bullets"].get<std::vector<std::string>>();
  auto bullets = enforce_bullets(ctx, kStepSummarizeChapter, unit, raw);
  if (bullets.empty())
    throw EmptySummary("no valid chapter summary bullets for " + unit);
  return bullets;
}

std::vector<ShortSceneSummary> short_scene_summaries(
    const Ctx& ctx, const std::vector<SceneAnnotation>& scenes,
    int chapter_index) {
  if (scenes.empty()) throw NoScenes("chapter has no annotated scenes");
  std::string unit = "ch" + std::to_string(chapter_index);
  std::string base_prompt =
      prompts::render(ctx.templates.get(kStepShortScenes),
                      {{"scene_count", std::to_string(scenes.size())},
                       {"scene_digest", scene_digest(scenes)}});

  // One repair attempt on a count mismatch, then failure.
  std::vector<std::string> raw;
  std::string error;
  bool ok = false;
  for (int attempt = 0; attempt <= 1; ++attempt) {
    std::string prompt = base_prompt;
    if (attempt > 0) {
      prompt += "\n\nYour previous reply was rejected: ";
      prompt += error;
      prompt += "\nReturn only a corrected response matching the required "
                "format.";
    }
    std::string text = ctx.gateway.complete(
        ctx.profile, prompt, ctx.key(kStepShortScenes, unit, attempt));
    try {
      json j = bullets_schema("short_scene_summaries").parse(text);
      raw = j["bullets"].get<std::vector<std::string>>();
    } catch (const std::exception& e) {
      error = e.what();
      continue;
    }
    if (raw.size() != scenes.size()) {
      error = "expected " + std::to_string(scenes.size()) +
              " bullets, one per scene, got " + std::to_string(raw.size());
      continue;
    }
    ok = true;
    break;
  }
  if (!ok)
    throw CountMismatch("short scene summaries for " + unit + ": " + error);

  std::vector<ShortSceneSummary> out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    Bullet b = make_bullet(raw[i]);
    if (b.word_count < 1 ||
        static_cast<std::size_t>(b.word_count) > kShortSceneWordLimit) {
      auto fixed = repair_bullet(ctx, kStepShortScenes, unit,
                                 kRepairOrdinalBase + static_cast<int>(i),
                                 raw[i], kShortSceneWordLimit);
      if (!fixed)
        throw CountMismatch("scene " + std::to_string(i + 1) + " of " + unit +
                            " has no valid short summary after repair");
      b = *fixed;
    }
    out.push_back({static_cast<int>(i), std::move(b)});
  }
  return out;
}

NameNormalizer::NameNormalizer() : honorifics(text::default_honorifics()) {}

std::string NameNormalizer::display(const std::string& raw) const {
  return text::strip_honorifics(text::collapse_whitespace(raw), honorifics);
}

std::string NameNormalizer::key(const std::string& raw) const {
  return text::to_lower(display(raw));
}

CharacterRoster extract_chapter_characters(const Ctx& ctx,
                                           const std::string& chapter_text,
                                           int chapter_index,
                                           const NameNormalizer& norm) {
  std::string unit = "ch" + std::to_string(chapter_index);
  std::string prompt = prompts::render(ctx.templates.get(kStepChapterCharacters),
                                       {{"chapter_text", chapter_text}});
  gw::Schema schema;
  schema.name = "chapter_characters";
  schema.parse = [](const std::string& raw) -> json {
    json j = extract_json(raw);
    for (const char* field : {"main", "side", "mentioned"}) {
      if (!j.contains(field) || !j[field].is_array())
        throw std::runtime_error(std::string("missing array \"") + field +
                                 "\"");
      for (const auto& name : j[field])
        if (!name.is_string() || name.get<std::string>().empty())
          throw std::runtime_error("names must be non-empty strings");
    }
    return j;
  };
  auto resp = ctx.gateway.complete_structured(
      ctx.profile, prompt, ctx.key(kStepChapterCharacters, unit), schema);

  CharacterRoster roster;
  std::set<std::string> seen;
  auto take = [&](const char* field, std::vector<std::string>& into) {
    for (const auto& j : resp.parsed[field]) {
      std::string disp = norm.display(j.get<std::string>());
      if (disp.empty()) continue;
      std::string key = norm.key(disp);
      if (!seen.insert(key).second) continue;  // main > side > mentioned
      into.push_back(disp);
    }
  };
  take("main", roster.main);
  take("side", roster.side);
  take("mentioned", roster.mentioned);
  return roster;
}

namespace {

bool mentions_roster_name(const std::string& bullet,
                          const std::vector<std::string>& name_tokens) {
  for (const auto& t : name_tokens)
    if (text::contains_word(bullet, t)) return true;
  return false;
}

}  // namespace

std::vector<Bullet> extract_chapter_style(const Ctx& ctx,
                                          const std::string& chapter_text,
                                          int chapter_index,
                                          const CharacterRoster& roster) {
  std::string unit = "ch" + std::to_string(chapter_index);
  std::string prompt = prompts::render(ctx.templates.get(kStepChapterStyle),
                                       {{"chapter_text", chapter_text}});
  auto resp = ctx.gateway.complete_structured(
      ctx.profile, prompt, ctx.key(kStepChapterStyle, unit),
      bullets_schema("chapter_style"));
  auto raw = resp.parsed["bullets"].get<std::vector<std::string>>();

  std::vector<std::string> name_tokens;
  auto add_tokens = [&](const std::vector<std::string>& names) {
    for (const auto& n : names)
      for (const auto& w : text::words(n)) name_tokens.emplace_back(w);
  };
  add_tokens(roster.main);
  add_tokens(roster.side);
  add_tokens(roster.mentioned);

  std::vector<Bullet> out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    Bullet b = make_bullet(raw[i]);
    bool valid = b.word_count >= 1 && b.word_count <= kBulletWordLimit &&
                 !mentions_roster_name(b.text, name_tokens);
    if (!valid) {
      auto fixed = repair_bullet(ctx, kStepChapterStyle, unit,
                                 kRepairOrdinalBase + static_cast<int>(i),
                                 raw[i], kBulletWordLimit);
      if (!fixed || mentions_roster_name(fixed->text, name_tokens)) continue;
      b = *fixed;
    }
    out.push_back(std::move(b));
  }
  if (out.empty())
    throw EmptyStyle("no name-free style bullets survived for " + unit);
  return out;
}

ChapterAnnotation annotate_chapter(const Ctx& ctx,
                                   const ingest::ChapterSplit& chapter,
                                   const std::vector<SceneAnnotation>& scenes,
                                   const NameNormalizer& norm) {
  ChapterAnnotation ca;
  ca.index = chapter.index;
  ca.embedding = chapter_embedding(scenes);
  ca.summary = summarize_chapter(ctx, scenes, chapter.index);
  ca.short_scene_summaries = short_scene_summaries(ctx, scenes, chapter.index);
  ca.characters =
      extract_chapter_characters(ctx, chapter.text, chapter.index, norm);
  ca.style =
      extract_chapter_style(ctx, chapter.text, chapter.index, ca.characters);
  return ca;
}

}  // namespace bookpipe::annotate
