#include "bookpipe/scaffold.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "bookpipe/text_util.hpp"

namespace bookpipe::scaffold {

namespace {

const char* kUserPrompt = "user_prompt";
const char* kBookPlan = "book_plan";
const char* kEarlyFcp = "early_first_chapter_plan";
const char* kFullPlans = "full_book_chapter_plans";
const char* kChapterPrefix = "chapter_text:";

bool body_line_is_marker(std::string_view line) {
  return line == kEndMarker ||
         line.substr(0, kHeaderOpen.size()) == kHeaderOpen;
}

}  // namespace

std::string component_name(ComponentKind kind, int chapter_index) {
  switch (kind) {
    case ComponentKind::UserPrompt: return kUserPrompt;
    case ComponentKind::BookPlan: return kBookPlan;
    case ComponentKind::EarlyFirstChapterPlan: return kEarlyFcp;
    case ComponentKind::FullBookChapterPlans: return kFullPlans;
    case ComponentKind::ChapterText:
      return kChapterPrefix + std::to_string(chapter_index);
  }
  return kUserPrompt;
}

std::optional<std::pair<ComponentKind, int>> parse_component_name(
    std::string_view name) {
  if (name == kUserPrompt) return {{ComponentKind::UserPrompt, 0}};
  if (name == kBookPlan) return {{ComponentKind::BookPlan, 0}};
  if (name == kEarlyFcp) return {{ComponentKind::EarlyFirstChapterPlan, 0}};
  if (name == kFullPlans) return {{ComponentKind::FullBookChapterPlans, 0}};
  if (name.substr(0, std::string_view(kChapterPrefix).size()) ==
      kChapterPrefix) {
    std::string_view digits = name.substr(std::string_view(kChapterPrefix).size());
    if (digits.empty() || digits.size() > 9) return std::nullopt;
    int idx = 0;
    for (char c : digits) {
      if (c < '0' || c > '9') return std::nullopt;
      idx = idx * 10 + (c - '0');
    }
    if (idx < 1 || digits[0] == '0') return std::nullopt;
    return {{ComponentKind::ChapterText, idx}};
  }
  return std::nullopt;
}

std::string header_line(ComponentKind kind, int chapter_index) {
  std::string s;
  s += kHeaderOpen;
  s += component_name(kind, chapter_index);
  s += kHeaderClose;
  return s;
}

std::string serialize(const TrainingExample& example) {
  std::string out;
  for (const Component& c : example.components) {
    if (!c.body.empty() && c.body.back() == '\n')
      throw MarkerCollision("component body has a trailing newline: " +
                            component_name(c.kind, c.chapter_index));
    std::size_t pos = 0;
    std::string_view body = c.body;
    while (pos <= body.size() && !body.empty()) {
      std::size_t nl = body.find('\n', pos);
      std::string_view line =
          body.substr(pos, nl == std::string_view::npos ? body.size() - pos
                                                        : nl - pos);
      if (body_line_is_marker(line))
        throw MarkerCollision("component body contains a marker line: " +
                              component_name(c.kind, c.chapter_index));
      if (nl == std::string_view::npos) break;
      pos = nl + 1;
    }
    out += header_line(c.kind, c.chapter_index);
    out += '\n';
    if (!c.body.empty()) {
      out += c.body;
      out += '\n';
    }
    out += kEndMarker;
    out += '\n';
  }
  return out;
}

ParseError::ParseError(std::size_t offset_, std::string expected_,
                       std::string found_)
    : std::runtime_error("parse error at byte " + std::to_string(offset_) +
                         ": expected " + expected_ + ", found " + found_),
      offset(offset_),
      expected(std::move(expected_)),
      found(std::move(found_)) {}

namespace {

// Line cursor over the input; a line without trailing '\n' at EOF is
// reported as partial.
struct LineCursor {
  std::string_view text;
  std::size_t pos = 0;

  bool done() const { return pos >= text.size(); }

  struct Line {
    std::string_view content;
    std::size_t offset;
    bool terminated;
  };

  Line next() {
    std::size_t nl = text.find('\n', pos);
    Line line;
    line.offset = pos;
    if (nl == std::string_view::npos) {
      line.content = text.substr(pos);
      line.terminated = false;
      pos = text.size();
    } else {
      line.content = text.substr(pos, nl - pos);
      line.terminated = true;
      pos = nl + 1;
    }
    return line;
  }
};

}  // namespace

TrainingExample parse(std::string_view text) {
  LineCursor cur{text};
  TrainingExample ex;

  // Reads and validates a header line against the one expected component,
  // then reads body lines up to the end marker.
  auto read_component = [&](ComponentKind kind, int chapter_index,
                            bool eof_ok) -> bool {
    std::string want = header_line(kind, chapter_index);
    std::string expected = eof_ok ? want + " or end of input" : want;
    if (cur.done()) {
      if (eof_ok) return false;
      throw ParseError(text.size(), expected, "end of input");
    }
    auto header = cur.next();
    if (!header.terminated)
      throw ParseError(header.offset, expected, "unexpected end of input");
    if (header.content != want)
      throw ParseError(header.offset, expected, std::string(header.content));
    Component c;
    c.kind = kind;
    c.chapter_index = chapter_index;
    std::string body;
    bool first = true;
    for (;;) {
      if (cur.done())
        throw ParseError(text.size(), std::string(kEndMarker),
                         "unexpected end of input");
      auto l = cur.next();
      if (!l.terminated)
        throw ParseError(l.offset, std::string(kEndMarker),
                         "unexpected end of input");
      if (l.content == kEndMarker) break;
      if (!first) body += '\n';
      body.append(l.content);
      first = false;
    }
    c.body = std::move(body);
    ex.components.push_back(std::move(c));
    return true;
  };

  read_component(ComponentKind::UserPrompt, 0, false);
  read_component(ComponentKind::BookPlan, 0, false);
  read_component(ComponentKind::EarlyFirstChapterPlan, 0, false);
  read_component(ComponentKind::ChapterText, 1, false);

  if (!read_component(ComponentKind::FullBookChapterPlans, 0, true)) {
    ex.chapter_count = 1;
    return ex;
  }
  read_component(ComponentKind::ChapterText, 2, false);
  int next_chapter = 3;
  while (read_component(ComponentKind::ChapterText, next_chapter, true))
    ++next_chapter;
  ex.chapter_count = next_chapter - 1;
  return ex;
}

// --- TemplateAutomaton -------------------------------------------------------

TemplateAutomaton::TemplateAutomaton(std::optional<int> chapter_count)
    : chapter_count_(chapter_count) {
  if (chapter_count_ && *chapter_count_ < 1)
    throw std::invalid_argument("chapter count must be >= 1");
}

TemplateAutomaton build_automaton(int chapter_count) {
  return TemplateAutomaton(chapter_count);
}

TemplateAutomaton build_automaton_open() {
  return TemplateAutomaton(std::nullopt);
}

namespace {

// Automaton states walk the component sequence; seq position k expects that
// component's header line, then body lines, then the boundary line.
struct AutomatonState {
  int position = 0;        // components fully consumed
  int last_chapter = 0;    // highest chapter_text index consumed
  bool in_body = false;
};

// Allowed headers at a given state. Empty list means only end-of-input.
std::vector<std::string> allowed_headers(const AutomatonState& st,
                                         std::optional<int> n) {
  switch (st.position) {
    case 0: return {header_line(ComponentKind::UserPrompt)};
    case 1: return {header_line(ComponentKind::BookPlan)};
    case 2: return {header_line(ComponentKind::EarlyFirstChapterPlan)};
    case 3: return {header_line(ComponentKind::ChapterText, 1)};
    case 4:
      if (n && *n == 1) return {};
      return {header_line(ComponentKind::FullBookChapterPlans)};
    default:
      if (n && st.last_chapter >= *n) return {};
      return {header_line(ComponentKind::ChapterText, st.last_chapter + 1)};
  }
}

bool may_stop(const AutomatonState& st, std::optional<int> n) {
  if (st.in_body) return false;
  if (n) {
    // user_prompt, book_plan, early plan, ch1 (+ full plans + ch2..chN).
    int expected_components = *n == 1 ? 4 : 4 + *n;
    return st.position == expected_components;
  }
  if (st.position == 4) return true;  // N = 1 form
  return st.position >= 6 && st.last_chapter >= 2;
}

std::string join_expected(const std::vector<std::string>& hs, bool stop_ok) {
  std::string out;
  for (const auto& h : hs) {
    if (!out.empty()) out += " | ";
    out += h;
  }
  if (stop_ok) {
    if (!out.empty()) out += " | ";
    out += "end of input";
  }
  return out;
}

}  // namespace

Verdict TemplateAutomaton::validate(std::string_view text) const {
  AutomatonState st;
  LineCursor cur{text};
  while (!cur.done()) {
    if (st.in_body) {
      auto line = cur.next();
      if (!line.terminated)
        return {Verdict::Kind::Incomplete, 0,
                std::string(kEndMarker) + " or body line"};
      if (line.content == kEndMarker) {
        st.in_body = false;
        st.position += 1;
      }
      continue;
    }
    std::vector<std::string> allowed = allowed_headers(st, chapter_count_);
    auto line = cur.next();
    if (!line.terminated) {
      // Partial header line: fine if it can still become an allowed header.
      for (const auto& h : allowed)
        if (h.size() >= line.content.size() &&
            h.compare(0, line.content.size(), line.content) == 0)
          return {Verdict::Kind::Incomplete, 0, h};
      return {Verdict::Kind::Violation, line.offset,
              join_expected(allowed, may_stop(st, chapter_count_))};
    }
    bool matched = false;
    for (const auto& h : allowed) {
      if (line.content == h) {
        matched = true;
        break;
      }
    }
    if (!matched)
      return {Verdict::Kind::Violation, line.offset,
              join_expected(allowed, may_stop(st, chapter_count_))};
    std::string_view name = line.content;
    name.remove_prefix(kHeaderOpen.size());
    name.remove_suffix(kHeaderClose.size());
    auto pk = parse_component_name(name);
    if (pk && pk->first == ComponentKind::ChapterText)
      st.last_chapter = pk->second;
    st.in_body = true;
  }
  if (may_stop(st, chapter_count_)) return {Verdict::Kind::Accept, 0, ""};
  if (st.in_body)
    return {Verdict::Kind::Incomplete, 0,
            std::string(kEndMarker) + " or body line"};
  std::vector<std::string> allowed = allowed_headers(st, chapter_count_);
  return {Verdict::Kind::Incomplete, 0,
          join_expected(allowed, may_stop(st, chapter_count_))};
}

// --- tokenized form ----------------------------------------------------------

std::size_t TokenizedExample::mask_sum() const {
  std::size_t s = 0;
  for (auto m : mask) s += m;
  return s;
}

TokenizedExample tokenize_and_mask(const TrainingExample& example,
                                   const tok::Tokenizer& tokenizer) {
  TokenizedExample out;
  for (const Component& c : example.components) {
    TrainingExample one;
    one.components.push_back(c);
    std::string block = serialize(one);
    std::vector<int> toks = tokenizer.encode(block);
    RoleSpan span;
    span.kind = c.kind;
    span.chapter_index = c.chapter_index;
    span.start = out.tokens.size();
    span.end = span.start + toks.size();
    std::uint8_t m = c.kind == ComponentKind::UserPrompt ? 0 : 1;
    out.tokens.insert(out.tokens.end(), toks.begin(), toks.end());
    out.mask.insert(out.mask.end(), toks.size(), m);
    out.role_spans.push_back(span);
  }
  if (out.mask_sum() == 0)
    throw AllMasked("no unmasked tokens: example has no non-prompt content");
  return out;
}

TokenizedExample clip(TokenizedExample t, std::size_t limit) {
  if (t.tokens.size() <= limit) return t;
  t.tokens.resize(limit);
  t.mask.resize(limit);
  std::vector<RoleSpan> spans;
  for (RoleSpan s : t.role_spans) {
    if (s.start >= limit) continue;
    s.end = std::min(s.end, limit);
    spans.push_back(s);
  }
  t.role_spans = std::move(spans);
  return t;
}

double masked_ce_loss(std::span<const double> probs,
                      const TokenizedExample& t) {
  if (probs.size() != t.tokens.size())
    throw std::invalid_argument("probability vector length mismatch");
  std::size_t msum = t.mask_sum();
  if (msum == 0) throw DegenerateMask("mask sums to zero");
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (!t.mask[i]) continue;
    double p = probs[i];
    if (!(p > 0.0) || !std::isfinite(p))
      throw NonFiniteLoss("zero or non-finite probability at position " +
                          std::to_string(i));
    acc += std::log(p);
  }
  return -acc / static_cast<double>(msum);
}

using nlohmann::json;

void to_json(json& j, const RoleSpan& s) {
  j = json{{"component", component_name(s.kind, s.chapter_index)},
           {"start", s.start},
           {"end", s.end}};
}

void from_json(const json& j, RoleSpan& s) {
  auto kind = parse_component_name(j.at("component").get<std::string>());
  if (!kind) throw std::invalid_argument("unknown component name");
  s.kind = kind->first;
  s.chapter_index = kind->second;
  j.at("start").get_to(s.start);
  j.at("end").get_to(s.end);
}

void to_json(json& j, const TokenizedExample& t) {
  std::vector<int> mask(t.mask.begin(), t.mask.end());
  j = json{{"tokens", t.tokens}, {"mask", mask}, {"role_spans", t.role_spans}};
}

void from_json(const json& j, TokenizedExample& t) {
  j.at("tokens").get_to(t.tokens);
  std::vector<int> mask = j.at("mask").get<std::vector<int>>();
  t.mask.assign(mask.begin(), mask.end());
  j.at("role_spans").get_to(t.role_spans);
}

// --- composition -------------------------------------------------------------

IncompleteAnnotation::IncompleteAnnotation(const std::string& stage_)
    : std::runtime_error("annotation stage missing: " + stage_),
      stage(stage_) {}

namespace {

std::string rstrip_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' ||
                        s.back() == ' ' || s.back() == '\t'))
    s.pop_back();
  return s;
}

// Word-count-weighted majority of a per-scene string attribute.
std::string dominant_attr(const std::vector<SceneAnnotation>& scenes,
                          const std::string SceneBoundary::* field) {
  std::map<std::string, std::size_t> weight;
  for (const auto& sc : scenes)
    weight[sc.boundary.*field] += std::max<std::size_t>(sc.word_count, 1);
  std::string best;
  std::size_t best_w = 0;
  for (const auto& sc : scenes) {
    const std::string& v = sc.boundary.*field;
    if (weight[v] > best_w) {
      best_w = weight[v];
      best = v;
    }
  }
  return best;
}

void append_bullets(std::string& out, const std::vector<Bullet>& bullets) {
  for (const auto& b : bullets) {
    out += "- ";
    out += b.text;
    out += '\n';
  }
}

std::string chapter_plan_text(int index,
                              const ChapterAnnotation& ch,
                              const std::vector<SceneAnnotation>& scenes) {
  std::string focus = dominant_attr(scenes, &SceneBoundary::narrative_focus);
  std::string persp =
      dominant_attr(scenes, &SceneBoundary::narrative_perspective);
  std::size_t target = 0;
  for (const auto& sc : scenes) target += sc.word_count;

  std::string out;
  out += "# Chapter " + std::to_string(index) + " Plan\n";
  out += "Focus: " + focus + "\n";
  out += "Perspective: " + persp + "\n";
  out += "Target length: about " + std::to_string(target) + " words\n";
  out += "Scenes:\n";
  for (const auto& sss : ch.short_scene_summaries) {
    const auto& sc = scenes.at(static_cast<std::size_t>(sss.scene_index));
    out += std::to_string(sss.scene_index + 1) + ". " + sc.boundary.scene_name +
           ": " + sss.bullet.text + "\n";
  }
  return out;
}

std::string book_plan_text(const BookAnnotation& book) {
  std::string out;
  out += "# Book Plan\n\n";
  out += "## Premise\n" + book.book_archetype + "\n\n";
  out += "## Preview\n";
  out += "Title: " + book.preview.synthetic_title + "\n";
  out += "Tags: ";
  for (std::size_t i = 0; i < book.preview.tags.size(); ++i) {
    if (i) out += "; ";
    out += book.preview.tags[i];
  }
  out += "\n";
  out += "Highlight: " + book.preview.highlight + "\n\n";
  out += "## Story Arcs\n";
  for (const auto& arc : book.arcs) {
    out += "### " + arc.name + " (chapters " +
           std::to_string(arc.first_chapter) + "-" +
           std::to_string(arc.last_chapter) + ")\n";
    append_bullets(out, arc.progression);
  }
  out += "\n## Characters\n";
  for (const auto& ch : book.characters) {
    out += "### " + ch.name + " (" +
           (ch.tier == Tier::main ? "main" : "side") + ")\n";
    append_bullets(out, ch.profile);
  }
  out += "\n## Relationships\n";
  if (book.archetype_edges.empty()) out += "(none)\n";
  for (const auto& e : book.archetype_edges)
    out += "- " + e.from_character + " -> " + e.to_character + ": " +
           relation_name(e.relation) + "\n";
  out += "\n## World Rules\n";
  if (book.world_rules.empty()) out += "(none)\n";
  append_bullets(out, book.world_rules);
  out += "\n## Writing Style\n";
  append_bullets(out, book.style.bullets);
  return out;
}

std::string early_first_chapter_text(
    const std::vector<ChapterAnnotation>& chapters,
    const std::vector<std::vector<SceneAnnotation>>& scenes) {
  std::string out;
  out += "# Chapter 1 Plan\n\n";
  const ChapterAnnotation& ch1 = chapters.front();
  const auto& sc1 = scenes.front();
  std::string focus = dominant_attr(sc1, &SceneBoundary::narrative_focus);
  std::string persp = dominant_attr(sc1, &SceneBoundary::narrative_perspective);
  std::size_t target = 0;
  for (const auto& sc : sc1) target += sc.word_count;
  out += "Focus: " + focus + "\n";
  out += "Perspective: " + persp + "\n";
  out += "Target length: about " + std::to_string(target) + " words\n\n";
  out += "## Summary\n";
  append_bullets(out, ch1.summary);
  out += "\n## Scenes\n";
  for (const auto& sss : ch1.short_scene_summaries) {
    const auto& sc = sc1.at(static_cast<std::size_t>(sss.scene_index));
    out += std::to_string(sss.scene_index + 1) + ". " + sc.boundary.scene_name +
           ": " + sss.bullet.text + "\n";
  }
  out += "\n## Next Chapter Outlook\n";
  if (chapters.size() < 2) {
    out += "- The story concludes within this single chapter.\n";
  } else {
    const ChapterAnnotation& ch2 = chapters[1];
    std::size_t take = std::min<std::size_t>(2, ch2.summary.size());
    for (std::size_t i = 0; i < take; ++i)
      out += "- " + ch2.summary[i].text + "\n";
    if (take == 0) out += "- Continue directly into the next chapter.\n";
  }
  return out;
}

}  // namespace

TrainingExample compose_example(const ComposeInputs& in) {
  if (!in.prompt_text) throw IncompleteAnnotation("prompt");
  if (!in.book) throw IncompleteAnnotation("book");
  if (!in.chapters) throw IncompleteAnnotation("chapters");
  if (!in.scenes) throw IncompleteAnnotation("scenes");
  if (!in.chapter_texts || in.chapter_texts->empty())
    throw IncompleteAnnotation("ingest");
  std::size_t n = in.chapter_texts->size();
  if (in.chapters->size() != n) throw IncompleteAnnotation("chapters");
  if (in.scenes->size() != n) throw IncompleteAnnotation("scenes");

  TrainingExample ex;
  ex.chapter_count = static_cast<int>(n);

  auto add = [&](ComponentKind kind, int idx, std::string body) {
    Component c;
    c.kind = kind;
    c.chapter_index = idx;
    c.body = rstrip_newlines(std::move(body));
    ex.components.push_back(std::move(c));
  };

  add(ComponentKind::UserPrompt, 0, *in.prompt_text);
  add(ComponentKind::BookPlan, 0, book_plan_text(*in.book));
  add(ComponentKind::EarlyFirstChapterPlan, 0,
      early_first_chapter_text(*in.chapters, *in.scenes));
  add(ComponentKind::ChapterText, 1, in.chapter_texts->front());

  if (n >= 2) {
    std::string plans;
    for (std::size_t i = 1; i < n; ++i) {
      if (!plans.empty()) plans += "\n";
      plans += chapter_plan_text(static_cast<int>(i + 1), (*in.chapters)[i],
                                 (*in.scenes)[i]);
    }
    add(ComponentKind::FullBookChapterPlans, 0, std::move(plans));
    for (std::size_t i = 1; i < n; ++i)
      add(ComponentKind::ChapterText, static_cast<int>(i + 1),
          (*in.chapter_texts)[i]);
  }
  return ex;
}

}  // namespace bookpipe::scaffold
