#include "bookpipe/types.hpp"

#include "bookpipe/text_util.hpp"

namespace bookpipe {

const std::array<const char*, ScoreVector::kDims>& ScoreVector::dim_names() {
  static const std::array<const char*, kDims> kNames = {
      "action",   "dialog", "world_building", "exposition",
      "romantic", "erotic", "pacing"};
  return kNames;
}

std::array<double, ScoreVector::kDims> ScoreVector::as_array() const {
  return {action, dialog, world_building, exposition, romantic, erotic, pacing};
}

ScoreVector ScoreVector::from_array(const std::array<double, kDims>& a) {
  return {a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
}

bool ScoreVector::in_range() const {
  for (double v : as_array())
    if (!(v >= 0.0 && v <= 100.0)) return false;
  return true;
}

Bullet make_bullet(const std::string& text) {
  Bullet b;
  b.text = text::collapse_whitespace(text::trim(text));
  b.word_count = static_cast<int>(text::word_count(b.text));
  return b;
}

const char* relation_name(Relation r) {
  switch (r) {
    case Relation::opposition: return "opposition";
    case Relation::support: return "support";
    case Relation::mentorship: return "mentorship";
    case Relation::rivalry: return "rivalry";
    case Relation::dependence: return "dependence";
    case Relation::emotional_contrast: return "emotional_contrast";
  }
  return "support";
}

std::optional<Relation> relation_from_name(const std::string& s) {
  std::string key = text::to_lower(text::trim(s));
  for (char& c : key)
    if (c == ' ' || c == '-') c = '_';
  static const std::pair<const char*, Relation> kTable[] = {
      {"opposition", Relation::opposition},
      {"support", Relation::support},
      {"mentorship", Relation::mentorship},
      {"rivalry", Relation::rivalry},
      {"dependence", Relation::dependence},
      {"emotional_contrast", Relation::emotional_contrast}};
  for (const auto& [name, rel] : kTable)
    if (key == name) return rel;
  return std::nullopt;
}

using nlohmann::json;

void to_json(json& j, const ScoreVector& v) {
  j = json::object();
  auto a = v.as_array();
  for (std::size_t i = 0; i < ScoreVector::kDims; ++i)
    j[ScoreVector::dim_names()[i]] = a[i];
}

void from_json(const json& j, ScoreVector& v) {
  std::array<double, ScoreVector::kDims> a{};
  for (std::size_t i = 0; i < ScoreVector::kDims; ++i)
    a[i] = j.at(ScoreVector::dim_names()[i]).get<double>();
  v = ScoreVector::from_array(a);
}

void to_json(json& j, const Bullet& b) {
  j = json{{"text", b.text}, {"word_count", b.word_count}};
}

void from_json(const json& j, Bullet& b) {
  j.at("text").get_to(b.text);
  j.at("word_count").get_to(b.word_count);
}

void to_json(json& j, const SceneBoundary& b) {
  j = json{{"scene_name", b.scene_name},
           {"start", b.start},
           {"end", b.end},
           {"narrative_focus", b.narrative_focus},
           {"narrative_perspective", b.narrative_perspective}};
}

void from_json(const json& j, SceneBoundary& b) {
  j.at("scene_name").get_to(b.scene_name);
  j.at("start").get_to(b.start);
  j.at("end").get_to(b.end);
  j.at("narrative_focus").get_to(b.narrative_focus);
  j.at("narrative_perspective").get_to(b.narrative_perspective);
}

void to_json(json& j, const SceneAnnotation& a) {
  j = json{{"boundary", a.boundary},
           {"text", a.text},
           {"word_count", a.word_count},
           {"scores", a.scores},
           {"summary", a.summary}};
}

void from_json(const json& j, SceneAnnotation& a) {
  j.at("boundary").get_to(a.boundary);
  j.at("text").get_to(a.text);
  j.at("word_count").get_to(a.word_count);
  j.at("scores").get_to(a.scores);
  j.at("summary").get_to(a.summary);
}

void to_json(json& j, const CharacterRoster& r) {
  j = json{{"main", r.main}, {"side", r.side}, {"mentioned", r.mentioned}};
}

void from_json(const json& j, CharacterRoster& r) {
  j.at("main").get_to(r.main);
  j.at("side").get_to(r.side);
  j.at("mentioned").get_to(r.mentioned);
}

void to_json(json& j, const ShortSceneSummary& s) {
  j = json{{"scene_index", s.scene_index}, {"bullet", s.bullet}};
}

void from_json(const json& j, ShortSceneSummary& s) {
  j.at("scene_index").get_to(s.scene_index);
  j.at("bullet").get_to(s.bullet);
}

void to_json(json& j, const ChapterAnnotation& c) {
  j = json{{"index", c.index},
           {"embedding", c.embedding},
           {"summary", c.summary},
           {"short_scene_summaries", c.short_scene_summaries},
           {"characters", c.characters},
           {"style", c.style}};
}

void from_json(const json& j, ChapterAnnotation& c) {
  j.at("index").get_to(c.index);
  j.at("embedding").get_to(c.embedding);
  j.at("summary").get_to(c.summary);
  j.at("short_scene_summaries").get_to(c.short_scene_summaries);
  j.at("characters").get_to(c.characters);
  j.at("style").get_to(c.style);
}

void to_json(json& j, const StoryArc& a) {
  j = json{{"name", a.name},
           {"progression", a.progression},
           {"first_chapter", a.first_chapter},
           {"last_chapter", a.last_chapter}};
}

void from_json(const json& j, StoryArc& a) {
  j.at("name").get_to(a.name);
  j.at("progression").get_to(a.progression);
  j.at("first_chapter").get_to(a.first_chapter);
  j.at("last_chapter").get_to(a.last_chapter);
}

void to_json(json& j, const ArchetypeEdge& e) {
  j = json{{"from", e.from_character},
           {"to", e.to_character},
           {"relation", relation_name(e.relation)}};
}

void from_json(const json& j, ArchetypeEdge& e) {
  j.at("from").get_to(e.from_character);
  j.at("to").get_to(e.to_character);
  auto rel = relation_from_name(j.at("relation").get<std::string>());
  if (!rel) throw std::invalid_argument("unknown relation label");
  e.relation = *rel;
}

void to_json(json& j, const CharacterProfile& p) {
  j = json{{"name", p.name},
           {"tier", p.tier == Tier::main ? "main" : "side"},
           {"profile", p.profile}};
}

void from_json(const json& j, CharacterProfile& p) {
  j.at("name").get_to(p.name);
  std::string t = j.at("tier").get<std::string>();
  if (t != "main" && t != "side")
    throw std::invalid_argument("tier must be main or side");
  p.tier = t == "main" ? Tier::main : Tier::side;
  j.at("profile").get_to(p.profile);
}

void to_json(json& j, const BookStyleProfile& s) {
  j = json{{"bullets", s.bullets}};
}

void from_json(const json& j, BookStyleProfile& s) {
  j.at("bullets").get_to(s.bullets);
}

void to_json(json& j, const BookPreview& p) {
  j = json{{"synthetic_title", p.synthetic_title},
           {"highlight", p.highlight},
           {"tags", p.tags}};
}

void from_json(const json& j, BookPreview& p) {
  j.at("synthetic_title").get_to(p.synthetic_title);
  j.at("highlight").get_to(p.highlight);
  j.at("tags").get_to(p.tags);
}

void to_json(json& j, const BookAnnotation& b) {
  j = json{{"arcs", b.arcs},
           {"archetype_edges", b.archetype_edges},
           {"characters", b.characters},
           {"style", b.style},
           {"world_rules", b.world_rules},
           {"book_archetype", b.book_archetype},
           {"preview", b.preview}};
}

void from_json(const json& j, BookAnnotation& b) {
  j.at("arcs").get_to(b.arcs);
  j.at("archetype_edges").get_to(b.archetype_edges);
  j.at("characters").get_to(b.characters);
  j.at("style").get_to(b.style);
  j.at("world_rules").get_to(b.world_rules);
  j.at("book_archetype").get_to(b.book_archetype);
  j.at("preview").get_to(b.preview);
}

}  // namespace bookpipe
