#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "bookpipe/annotate_util.hpp"
#include "bookpipe/types.hpp"

namespace bookpipe::synth {

enum class Regime { Short, Medium, Long };
enum class Phrasing { Casual, Direct, Elaborate, Terse };
enum class Structure { Prose, List, Fields };
enum class Specificity { Low, Medium, High };

const char* regime_name(Regime r);
const char* phrasing_name(Phrasing p);
const char* structure_name(Structure s);
const char* specificity_name(Specificity s);

struct RegimeBand {
  int min_words = 0;
  int max_words = 0;
};

class BadDistribution : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RenderInvalid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Weights per dimension; each list must sum to 1 (±1e-9). Structure weights
// are per regime because the fields form is reserved for long prompts by
// default.
struct DistributionConfig {
  std::vector<std::pair<Regime, double>> regime;
  std::vector<std::pair<Phrasing, double>> phrasing;
  std::map<Regime, std::vector<std::pair<Structure, double>>> structure;
  std::vector<std::pair<Specificity, double>> specificity;
  std::vector<std::pair<double, double>> noise_levels;  // (level, weight)
  std::map<Regime, RegimeBand> bands;

  static DistributionConfig defaults();
};

DistributionConfig load_distribution_config(const nlohmann::json& j);

struct PromptProfile {
  Regime regime = Regime::Medium;
  Phrasing phrasing = Phrasing::Direct;
  Structure structure = Structure::Prose;
  Specificity specificity = Specificity::Medium;
  double noise_level = 0.0;
  RegimeBand target_words;
};

struct NoiseOp {
  std::string kind;
  std::size_t position = 0;
  std::string before;  // text replaced at position
  std::string after;   // replacement actually written
};

struct SynthPrompt {
  std::string text;
  PromptProfile profile;
  std::vector<NoiseOp> noise_ops_applied;
};

// Draw order is fixed (regime, phrasing, structure, specificity, noise) so
// a seed pins the whole profile.
PromptProfile sample_profile(std::uint64_t seed,
                             const DistributionConfig& cfg =
                                 DistributionConfig::defaults());

inline constexpr const char* kStepRender = "render_prompt";

// Renders the prompt text via the model, enforcing the structural form and
// the word band (±20%) with one repair; noise is not applied here.
SynthPrompt render_prompt(const annotate::Ctx& ctx, const BookAnnotation& book,
                          const PromptProfile& profile);

// Deterministic surface perturbation; every edit is logged so replaying the
// log backwards restores the input exactly.
std::pair<std::string, std::vector<NoiseOp>> inject_noise(
    const std::string& text, double noise_level, std::uint64_t seed);

// Replays the op log in reverse, recovering the pre-noise text.
std::string strip_noise(const std::string& noised,
                        const std::vector<NoiseOp>& ops);

void to_json(nlohmann::json& j, const PromptProfile& p);
void from_json(const nlohmann::json& j, PromptProfile& p);
void to_json(nlohmann::json& j, const NoiseOp& op);
void from_json(const nlohmann::json& j, NoiseOp& op);
void to_json(nlohmann::json& j, const SynthPrompt& p);
void from_json(const nlohmann::json& j, SynthPrompt& p);

}  // namespace bookpipe::synth
