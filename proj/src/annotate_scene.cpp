#include "bookpipe/annotate_scene.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bookpipe/text_util.hpp"

namespace bookpipe::annotate {

using nlohmann::json;

namespace {

gw::Schema scene_list_schema(std::size_t chapter_len) {
  gw::Schema s;
  s.name = "scene_list";
  s.parse = [chapter_len](const std::string& raw) -> json {
    json j = extract_json(raw);
    if (!j.is_object() || !j.contains("scenes") || !j["scenes"].is_array())
      throw std::runtime_error("expected an object with a \"scenes\" array");
    for (const auto& sc : j["scenes"]) {
      for (const char* field : {"scene_name", "narrative_focus",
                                "narrative_perspective"}) {
        if (!sc.contains(field) || !sc[field].is_string() ||
            sc[field].get<std::string>().empty())
          throw std::runtime_error(std::string("scene missing field \"") +
                                   field + "\"");
      }
      if (!sc.contains("start_offset") ||
          !sc["start_offset"].is_number_integer() ||
          !sc.contains("end_offset") || !sc["end_offset"].is_number_integer())
        throw std::runtime_error("scene offsets must be integers");
      long long start = sc["start_offset"].get<long long>();
      long long end = sc["end_offset"].get<long long>();
      if (start < 0 || end <= start)
        throw std::runtime_error(
            "scene offsets must satisfy 0 <= start < end");
      if (static_cast<std::size_t>(start) >= chapter_len)
        throw std::runtime_error("scene start beyond chapter end");
    }
    return j;
  };
  return s;
}

gw::Schema score_schema() {
  gw::Schema s;
  s.name = "score_vector";
  s.parse = [](const std::string& raw) -> json {
    json j = extract_json(raw);
    if (!j.is_object()) throw std::runtime_error("expected a JSON object");
    for (const char* dim : ScoreVector::dim_names()) {
      if (!j.contains(dim) || !j[dim].is_number())
        throw std::runtime_error(std::string("missing numeric dimension \"") +
                                 dim + "\"");
      double v = j[dim].get<double>();
      if (v < 0.0 || v > 100.0)
        throw std::runtime_error(std::string("dimension \"") + dim +
                                 "\" out of range [0,100]: " +
                                 std::to_string(v));
    }
    return j;
  };
  return s;
}

}  // namespace

std::vector<SceneBoundary> repair_spans(std::vector<SceneBoundary> spans,
                                        const std::string& chapter_text) {
  const std::size_t len = chapter_text.size();
  for (auto& sp : spans) {
    sp.start = text::snap_to_sentence_boundary(chapter_text,
                                               std::min(sp.start, len));
    sp.end =
        text::snap_to_sentence_boundary(chapter_text, std::min(sp.end, len));
  }
  std::stable_sort(spans.begin(), spans.end(),
                   [](const SceneBoundary& a, const SceneBoundary& b) {
                     return a.start < b.start;
                   });
  if (!spans.empty()) {
    spans.front().start = 0;
    for (std::size_t i = 1; i < spans.size(); ++i) {
      if (spans[i - 1].end < spans[i].start)
        spans[i - 1].end = spans[i].start;  // gap: extend the earlier scene
      else if (spans[i - 1].end > spans[i].start)
        spans[i].start = spans[i - 1].end;  // overlap: the earlier scene wins
    }
    spans.back().end = len;
  }
  std::vector<SceneBoundary> kept;
  for (auto& sp : spans)
    if (sp.start < sp.end) kept.push_back(std::move(sp));
  if (!kept.empty()) {
    kept.front().start = 0;
    kept.back().end = len;
  }
  if (kept.empty()) {
    SceneBoundary whole;
    whole.scene_name = "whole chapter";
    whole.start = 0;
    whole.end = len;
    whole.narrative_focus = "narrator";
    whole.narrative_perspective = "third person";
    kept.push_back(std::move(whole));
  }
  return kept;
}

std::vector<SceneBoundary> segment_scenes(const Ctx& ctx,
                                          const ingest::ChapterSplit& chapter) {
  std::string unit = "ch" + std::to_string(chapter.index);
  std::string prompt = prompts::render(
      ctx.templates.get(kStepSegment),
      {{"chapter_length", std::to_string(chapter.text.size())},
       {"chapter_text", chapter.text}});
  auto resp = ctx.gateway.complete_structured(
      ctx.profile, prompt, ctx.key(kStepSegment, unit),
      scene_list_schema(chapter.text.size()));

  std::vector<SceneBoundary> spans;
  for (const auto& sc : resp.parsed["scenes"]) {
    SceneBoundary b;
    b.scene_name = sc["scene_name"].get<std::string>();
    b.start = static_cast<std::size_t>(sc["start_offset"].get<long long>());
    b.end = static_cast<std::size_t>(sc["end_offset"].get<long long>());
    b.narrative_focus = sc["narrative_focus"].get<std::string>();
    b.narrative_perspective = sc["narrative_perspective"].get<std::string>();
    spans.push_back(std::move(b));
  }
  return repair_spans(std::move(spans), chapter.text);
}

ScoreVector score_scene(const Ctx& ctx, const std::string& scene_text,
                        const std::string& unit, const ScoringConfig& cfg) {
  if (cfg.ensemble_runs < 1)
    throw std::invalid_argument("ensemble_runs must be >= 1");
  std::string prompt = prompts::render(ctx.templates.get(kStepScore),
                                       {{"scene_text", scene_text}});
  gw::Schema schema = score_schema();

  std::array<double, ScoreVector::kDims> sum{};
  int runs = 0;
  // Each run gets a disjoint ordinal block so its repair attempts cannot
  // collide with the next run's first attempt.
  int stride = ctx.profile.max_retries + 1;
  for (int r = 0; r < cfg.ensemble_runs; ++r) {
    auto resp = ctx.gateway.complete_structured(
        ctx.profile, prompt, ctx.key(kStepScore, unit, r * stride), schema);
    auto arr = ScoreVector::dim_names();
    for (std::size_t d = 0; d < arr.size(); ++d)
      sum[d] += resp.parsed[arr[d]].get<double>();
    ++runs;
  }
  std::array<double, ScoreVector::kDims> mean{};
  for (std::size_t d = 0; d < mean.size(); ++d) {
    mean[d] = sum[d] / runs;
    if (mean[d] < cfg.zero_threshold) mean[d] = 0.0;
  }
  return ScoreVector::from_array(mean);
}

std::vector<Bullet> summarize_scene(const Ctx& ctx,
                                    const std::string& scene_text,
                                    const ScoreVector& scores,
                                    const std::string& unit) {
  std::ostringstream digest;
  auto vals = scores.as_array();
  auto names = ScoreVector::dim_names();
  for (std::size_t d = 0; d < names.size(); ++d) {
    if (d) digest << ", ";
    digest << names[d] << "=" << vals[d];
  }
  std::string prompt = prompts::render(
      ctx.templates.get(kStepSummarizeScene),
      {{"score_summary", digest.str()}, {"scene_text", scene_text}});
  auto resp = ctx.gateway.complete_structured(
      ctx.profile, prompt, ctx.key(kStepSummarizeScene, unit),
      bullets_schema("scene_summary"));
  std::vector<std::string> raw =
      resp.parsed["bullets"].get<std::vector<std::string>>();
  std::vector<Bullet> bullets =
      enforce_bullets(ctx, kStepSummarizeScene, unit, raw);
  if (bullets.empty())
    throw EmptySummary("no valid bullets survived for " + unit);
  return bullets;
}

std::vector<SceneAnnotation> annotate_chapter_scenes(
    const Ctx& ctx, const ingest::ChapterSplit& chapter,
    const ScoringConfig& cfg) {
  std::vector<SceneAnnotation> out;
  std::vector<SceneBoundary> bounds = segment_scenes(ctx, chapter);
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    SceneAnnotation sa;
    sa.boundary = bounds[i];
    sa.text = chapter.text.substr(sa.boundary.start,
                                  sa.boundary.end - sa.boundary.start);
    sa.word_count = text::word_count(sa.text);
    std::string unit = "ch" + std::to_string(chapter.index) + "/sc" +
                       std::to_string(i + 1);
    sa.scores = score_scene(ctx, sa.text, unit, cfg);
    sa.summary = summarize_scene(ctx, sa.text, sa.scores, unit);
    out.push_back(std::move(sa));
  }
  return out;
}

}  // namespace bookpipe::annotate
