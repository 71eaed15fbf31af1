#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "bookpipe/annotate_scene.hpp"
#include "bookpipe/annotate_util.hpp"
#include "bookpipe/ingest.hpp"
#include "bookpipe/types.hpp"

namespace bookpipe::annotate {

class NoScenes : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CountMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EmptyStyle : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kStepSummarizeChapter = "summarize_chapter";
inline constexpr const char* kStepShortScenes = "short_scene_summaries";
inline constexpr const char* kStepChapterCharacters =
    "extract_chapter_characters";
inline constexpr const char* kStepChapterStyle = "extract_chapter_style";

inline constexpr std::size_t kShortSceneWordLimit = 20;

int chapter_summary_budget(std::size_t scene_count);

// Word-count-weighted mean of the scene vectors; no re-thresholding.
ScoreVector chapter_embedding(const std::vector<SceneAnnotation>& scenes);

std::vector<Bullet> summarize_chapter(const Ctx& ctx,
                                      const std::vector<SceneAnnotation>& scenes,
                                      int chapter_index);

std::vector<ShortSceneSummary> short_scene_summaries(
    const Ctx& ctx, const std::vector<SceneAnnotation>& scenes,
    int chapter_index);

struct NameNormalizer {
  std::vector<std::string> honorifics;  // config asset
  NameNormalizer();
  std::string display(const std::string& raw) const;
  std::string key(const std::string& raw) const;
};

CharacterRoster extract_chapter_characters(const Ctx& ctx,
                                           const std::string& chapter_text,
                                           int chapter_index,
                                           const NameNormalizer& norm = {});

std::vector<Bullet> extract_chapter_style(const Ctx& ctx,
                                          const std::string& chapter_text,
                                          int chapter_index,
                                          const CharacterRoster& roster);

// Full chapter pass: scenes must already be annotated.
ChapterAnnotation annotate_chapter(const Ctx& ctx,
                                   const ingest::ChapterSplit& chapter,
                                   const std::vector<SceneAnnotation>& scenes,
                                   const NameNormalizer& norm = {});

}  // namespace bookpipe::annotate
