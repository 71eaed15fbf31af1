#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "bookpipe/annotate_util.hpp"
#include "bookpipe/ingest.hpp"
#include "bookpipe/types.hpp"

namespace bookpipe::annotate {

struct ScoringConfig {
  int ensemble_runs = 3;
  double zero_threshold = 10.0;
};

class EmptySummary : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kStepSegment = "segment_scenes";
inline constexpr const char* kStepScore = "score_scene";
inline constexpr const char* kStepSummarizeScene = "summarize_scene";

// Model-proposed spans snapped to sentence boundaries, sorted, and repaired
// so they partition [0, chapter length) exactly. Zero proposed scenes fall
// back to a single whole-chapter scene.
std::vector<SceneBoundary> segment_scenes(const Ctx& ctx,
                                          const ingest::ChapterSplit& chapter);

// Per-dimension mean over k parses, then dimensions below the threshold are
// zeroed. Out-of-range raw values are repaired per run, never clamped.
ScoreVector score_scene(const Ctx& ctx, const std::string& scene_text,
                        const std::string& unit, const ScoringConfig& cfg);

std::vector<Bullet> summarize_scene(const Ctx& ctx,
                                    const std::string& scene_text,
                                    const ScoreVector& scores,
                                    const std::string& unit);

// Runs the three steps above over one chapter.
std::vector<SceneAnnotation> annotate_chapter_scenes(
    const Ctx& ctx, const ingest::ChapterSplit& chapter,
    const ScoringConfig& cfg = {});

// Exposed for tests: the mechanical span cleanup applied after the model
// call. Returns spans partitioning [0, len).
std::vector<SceneBoundary> repair_spans(std::vector<SceneBoundary> spans,
                                        const std::string& chapter_text);

}  // namespace bookpipe::annotate
