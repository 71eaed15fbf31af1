#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bookpipe/tokenizer.hpp"
#include "bookpipe/types.hpp"
#include "json.hpp"

namespace bookpipe::scaffold {

// Component order of a serialized training trajectory:
//   user_prompt, book_plan, early_first_chapter_plan, chapter_text:1,
//   full_book_chapter_plans, chapter_text:2, ..., chapter_text:N
// Single-chapter books omit full_book_chapter_plans.
enum class ComponentKind {
  UserPrompt,
  BookPlan,
  EarlyFirstChapterPlan,
  ChapterText,
  FullBookChapterPlans,
};

struct Component {
  ComponentKind kind = ComponentKind::UserPrompt;
  int chapter_index = 0;  // 1-based, ChapterText only
  std::string body;       // never ends in '\n'; normalized at composition
};

std::string component_name(ComponentKind kind, int chapter_index = 0);
std::optional<std::pair<ComponentKind, int>> parse_component_name(
    std::string_view name);

struct TrainingExample {
  std::vector<Component> components;
  int chapter_count = 0;

  const std::string& prompt_text() const { return components.at(0).body; }
};

inline constexpr std::string_view kHeaderOpen = "<|component|>";
inline constexpr std::string_view kHeaderClose = "<|/component|>";
inline constexpr std::string_view kEndMarker = "<|end|>";

std::string header_line(ComponentKind kind, int chapter_index = 0);

struct MarkerCollision : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Emits: header line, body (if nonempty) + '\n', "<|end|>\n" per component.
// Throws MarkerCollision if a body contains a marker line of its own or a
// trailing newline (bodies are normalized at composition).
std::string serialize(const TrainingExample& example);

struct ParseError : std::runtime_error {
  ParseError(std::size_t offset, std::string expected, std::string found);
  std::size_t offset;
  std::string expected;
  std::string found;
};

// Strict inverse of serialize: any order/header/boundary violation raises
// ParseError with the byte offset. Chapter count is inferred from the text.
TrainingExample parse(std::string_view text);

// --- template automaton -----------------------------------------------------
// Independent of parse() by construction: a state machine over component
// positions whose edges are header/body/boundary line patterns. Used for
// constrained-decoding validation of full texts and prefixes.

struct Verdict {
  enum class Kind { Accept, Incomplete, Violation };
  Kind kind = Kind::Accept;
  std::size_t offset = 0;  // Violation: byte offset of the offending line
  std::string expected;    // next allowed pattern (Incomplete/Violation)

  bool accepted() const { return kind == Kind::Accept; }
};

class TemplateAutomaton {
 public:
  // Fixed chapter count: accepts exactly the legal N-chapter serializations.
  // std::nullopt: accepts any legal serialization (N inferred).
  explicit TemplateAutomaton(std::optional<int> chapter_count);

  Verdict validate(std::string_view text_or_prefix) const;
  std::optional<int> chapter_count() const { return chapter_count_; }

 private:
  struct State;  // sequence position + body/header phase
  std::optional<int> chapter_count_;
};

TemplateAutomaton build_automaton(int chapter_count);
TemplateAutomaton build_automaton_open();

// --- tokenized form ----------------------------------------------------------

struct RoleSpan {
  ComponentKind kind = ComponentKind::UserPrompt;
  int chapter_index = 0;
  std::size_t start = 0;  // token positions, half-open [start, end)
  std::size_t end = 0;
};

inline constexpr std::size_t kMaxSequenceTokens = 262144;

struct TokenizedExample {
  std::vector<int> tokens;
  std::vector<std::uint8_t> mask;  // 0 exactly on the UserPrompt span
  std::vector<RoleSpan> role_spans;

  std::size_t size() const { return tokens.size(); }
  std::size_t mask_sum() const;
};

struct AllMasked : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateMask : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonFiniteLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tokenizes component blocks independently and concatenates, so role spans
// are exact. Mask is 0 over the whole UserPrompt block (headers included).
TokenizedExample tokenize_and_mask(const TrainingExample& example,
                                   const tok::Tokenizer& tokenizer);

// Keeps the first `limit` tokens; role spans are truncated consistently.
TokenizedExample clip(TokenizedExample t,
                      std::size_t limit = kMaxSequenceTokens);

// Mean negative log-probability over unmasked positions. `probs[i]` is the
// model probability of token i given its prefix.
double masked_ce_loss(std::span<const double> probs,
                      const TokenizedExample& t);

void to_json(nlohmann::json& j, const RoleSpan& s);
void from_json(const nlohmann::json& j, RoleSpan& s);
void to_json(nlohmann::json& j, const TokenizedExample& t);
void from_json(const nlohmann::json& j, TokenizedExample& t);

// --- composition -------------------------------------------------------------

struct IncompleteAnnotation : std::runtime_error {
  explicit IncompleteAnnotation(const std::string& stage);
  std::string stage;
};

struct ComposeInputs {
  const BookAnnotation* book = nullptr;
  const std::vector<ChapterAnnotation>* chapters = nullptr;
  const std::vector<std::vector<SceneAnnotation>>* scenes = nullptr;  // per chapter
  const std::string* prompt_text = nullptr;
  const std::vector<std::string>* chapter_texts = nullptr;  // original prose
};

// Assembles the ordered component list: prompt, book plan, early
// first-chapter plan (with next-chapter outlook), first chapter text,
// remaining chapter plans, remaining chapter texts.
TrainingExample compose_example(const ComposeInputs& in);

}  // namespace bookpipe::scaffold
