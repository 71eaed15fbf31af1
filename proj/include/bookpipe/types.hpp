#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace bookpipe {

// Seven-axis narrative profile, each component in [0,100]. After
// finalization, components below the zeroing threshold are exactly 0.
struct ScoreVector {
  double action = 0, dialog = 0, world_building = 0, exposition = 0,
         romantic = 0, erotic = 0, pacing = 0;

  static constexpr std::size_t kDims = 7;
  static const std::array<const char*, kDims>& dim_names();
  std::array<double, kDims> as_array() const;
  static ScoreVector from_array(const std::array<double, kDims>& a);
  bool in_range() const;
};

struct Bullet {
  std::string text;
  int word_count = 0;
};

inline constexpr int kBulletWordLimit = 45;

Bullet make_bullet(const std::string& text);

struct SceneBoundary {
  std::string scene_name;
  std::size_t start = 0;  // char offsets into the chapter text
  std::size_t end = 0;
  std::string narrative_focus;
  std::string narrative_perspective;
};

struct SceneAnnotation {
  SceneBoundary boundary;
  std::string text;
  std::size_t word_count = 0;
  ScoreVector scores;
  std::vector<Bullet> summary;
};

struct CharacterRoster {
  std::vector<std::string> main;
  std::vector<std::string> side;
  std::vector<std::string> mentioned;
};

struct ShortSceneSummary {
  int scene_index = 0;  // 0-based position within the chapter
  Bullet bullet;
};

struct ChapterAnnotation {
  int index = 0;  // 1-based chapter index
  ScoreVector embedding;
  std::vector<Bullet> summary;
  std::vector<ShortSceneSummary> short_scene_summaries;
  CharacterRoster characters;
  std::vector<Bullet> style;
};

struct StoryArc {
  std::string name;
  std::vector<Bullet> progression;
  int first_chapter = 1;
  int last_chapter = 1;
};

enum class Relation {
  opposition,
  support,
  mentorship,
  rivalry,
  dependence,
  emotional_contrast,
};

const char* relation_name(Relation r);
std::optional<Relation> relation_from_name(const std::string& s);

struct ArchetypeEdge {
  std::string from_character;
  std::string to_character;
  Relation relation = Relation::support;
};

enum class Tier { main, side };

struct CharacterProfile {
  std::string name;
  Tier tier = Tier::side;
  std::vector<Bullet> profile;
};

struct BookStyleProfile {
  std::vector<Bullet> bullets;  // 25..45 entries, target ~35
};

struct BookPreview {
  std::string synthetic_title;
  std::string highlight;               // 90..130 words, 3..5 sentences
  std::vector<std::string> tags;       // exactly 7, importance-ordered
};

struct BookAnnotation {
  std::vector<StoryArc> arcs;
  std::vector<ArchetypeEdge> archetype_edges;
  std::vector<CharacterProfile> characters;
  BookStyleProfile style;
  std::vector<Bullet> world_rules;
  std::string book_archetype;
  BookPreview preview;
};

void to_json(nlohmann::json& j, const ScoreVector& v);
void from_json(const nlohmann::json& j, ScoreVector& v);
void to_json(nlohmann::json& j, const Bullet& b);
void from_json(const nlohmann::json& j, Bullet& b);
void to_json(nlohmann::json& j, const SceneBoundary& b);
void from_json(const nlohmann::json& j, SceneBoundary& b);
void to_json(nlohmann::json& j, const SceneAnnotation& a);
void from_json(const nlohmann::json& j, SceneAnnotation& a);
void to_json(nlohmann::json& j, const CharacterRoster& r);
void from_json(const nlohmann::json& j, CharacterRoster& r);
void to_json(nlohmann::json& j, const ShortSceneSummary& s);
void from_json(const nlohmann::json& j, ShortSceneSummary& s);
void to_json(nlohmann::json& j, const ChapterAnnotation& c);
void from_json(const nlohmann::json& j, ChapterAnnotation& c);
void to_json(nlohmann::json& j, const StoryArc& a);
void from_json(const nlohmann::json& j, StoryArc& a);
void to_json(nlohmann::json& j, const ArchetypeEdge& e);
void from_json(const nlohmann::json& j, ArchetypeEdge& e);
void to_json(nlohmann::json& j, const CharacterProfile& p);
void from_json(const nlohmann::json& j, CharacterProfile& p);
void to_json(nlohmann::json& j, const BookStyleProfile& s);
void from_json(const nlohmann::json& j, BookStyleProfile& s);
void to_json(nlohmann::json& j, const BookPreview& p);
void from_json(const nlohmann::json& j, BookPreview& p);
void to_json(nlohmann::json& j, const BookAnnotation& b);
void from_json(const nlohmann::json& j, BookAnnotation& b);

}  // namespace bookpipe
