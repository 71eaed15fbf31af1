#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "bookpipe/annotate_chapter.hpp"
#include "bookpipe/annotate_util.hpp"
#include "bookpipe/types.hpp"

namespace bookpipe::annotate {

class StyleCountOutOfRange : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArchetypeInvalid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreviewInvalid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kStepArcs = "detect_story_arcs";
inline constexpr const char* kStepCharacterProfile = "character_profile";
inline constexpr const char* kStepEdges = "derive_archetype_edges";
inline constexpr const char* kStepBookStyle = "consolidate_style";
inline constexpr const char* kStepWorldRules = "extract_world_rules";
inline constexpr const char* kStepArchetype = "derive_book_archetype";
inline constexpr const char* kStepPreview = "build_preview";

struct BookConfig {
  int max_arcs = 7;
  int max_world_rules = 20;
  int archetype_min_words = 40;
  int archetype_max_words = 120;
  double main_tier_fraction = 0.20;
  int style_min_bullets = 25;
  int style_max_bullets = 45;
  int style_target_bullets = 35;
  int preview_tag_count = 7;
  int highlight_min_words = 90;
  int highlight_max_words = 130;
  int highlight_min_sentences = 3;
  int highlight_max_sentences = 5;
};

std::vector<StoryArc> detect_story_arcs(
    const Ctx& ctx, const std::vector<ChapterAnnotation>& chapters,
    const BookConfig& cfg = {});

// Mechanical tier assignment over the chapter rosters, then one profile
// call per surviving character. Mentioned-only characters are dropped.
std::vector<CharacterProfile> consolidate_characters(
    const Ctx& ctx, const std::vector<ChapterAnnotation>& chapters,
    const NameNormalizer& norm = {}, const BookConfig& cfg = {});

std::vector<ArchetypeEdge> derive_archetype_edges(
    const Ctx& ctx, const std::vector<CharacterProfile>& characters,
    const std::vector<ChapterAnnotation>& chapters);

// Input is chapter style bullets only; the request payload never sees arcs,
// characters, or world rules.
BookStyleProfile consolidate_style(
    const Ctx& ctx, const std::vector<std::vector<Bullet>>& chapter_styles,
    const BookConfig& cfg = {});

std::vector<Bullet> extract_world_rules(
    const Ctx& ctx, const std::vector<ChapterAnnotation>& chapters,
    const BookConfig& cfg = {});

std::string derive_book_archetype(const Ctx& ctx,
                                  const std::vector<StoryArc>& arcs,
                                  const std::vector<ChapterAnnotation>& chapters,
                                  const BookStyleProfile& style,
                                  const std::vector<CharacterProfile>& characters,
                                  const BookConfig& cfg = {});

BookPreview build_preview(const Ctx& ctx, const BookAnnotation& partial,
                          const BookConfig& cfg = {});

BookAnnotation annotate_book(const Ctx& ctx,
                             const std::vector<ChapterAnnotation>& chapters,
                             const NameNormalizer& norm = {},
                             const BookConfig& cfg = {});

}  // namespace bookpipe::annotate
