#include "bookpipe/annotate_book.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "bookpipe/text_util.hpp"

namespace bookpipe::annotate {

using nlohmann::json;

namespace {

std::string chapter_digest(const std::vector<ChapterAnnotation>& chapters) {
  std::ostringstream out;
  for (const auto& ch : chapters) {
    out << "Chapter " << ch.index << ":\n";
    for (const auto& b : ch.summary) out << "- " << b.text << "\n";
  }
  return out.str();
}

bool bullet_text_ok(const std::string& s) {
  std::size_t wc = text::word_count(s);
  return wc >= 1 && wc <= static_cast<std::size_t>(kBulletWordLimit);
}

}  // namespace

std::vector<StoryArc> detect_story_arcs(
    const Ctx& ctx, const std::vector<ChapterAnnotation>& chapters,
    const BookConfig& cfg) {
  int n = static_cast<int>(chapters.size());
  std::string prompt =
      prompts::render(ctx.templates.get(kStepArcs),
                      {{"max_arcs", std::to_string(cfg.max_arcs)},
                       {"chapter_count", std::to_string(n)},
                       {"chapter_digest", chapter_digest(chapters)}});
  gw::Schema schema;
  schema.name = "story_arcs";
  int max_arcs = cfg.max_arcs;
  schema.parse = [n, max_arcs](const std::string& raw) -> json {
    json j = extract_json(raw);
    if (!j.contains("arcs") || !j["arcs"].is_array())
      throw std::runtime_error("expected an object with an \"arcs\" array");
    auto& arcs = j["arcs"];
    if (arcs.empty() || arcs.size() > static_cast<std::size_t>(max_arcs))
      throw std::runtime_error("need between 1 and " +
                               std::to_string(max_arcs) + " arcs, got " +
                               std::to_string(arcs.size()));
    for (const auto& a : arcs) {
      if (!a.contains("name") || !a["name"].is_string() ||
          a["name"].get<std::string>().empty())
        throw std::runtime_error("arc needs a non-empty name");
      if (!a.contains("progression") || !a["progression"].is_array() ||
          a["progression"].empty())
        throw std::runtime_error("arc needs a non-empty progression");
      for (const auto& p : a["progression"])
        if (!p.is_string() || !bullet_text_ok(p.get<std::string>()))
          throw std::runtime_error(
              "progression entries must be bullets of 1 to 45 words");
      if (!a.contains("first_chapter") ||
          !a["first_chapter"].is_number_integer() ||
          !a.contains("last_chapter") ||
          !a["last_chapter"].is_number_integer())
        throw std::runtime_error("arc chapter span must be two integers");
      int first = a["first_chapter"].get<int>();
      int last = a["last_chapter"].get<int>();
      if (first < 1 || first > last || last > n)
        throw std::runtime_error(
            "arc span must satisfy 1 <= first <= last <= " +
            std::to_string(n) + " (1-based)");
    }
    return j;
  };
  auto resp = ctx.gateway.complete_structured(ctx.profile, prompt,
                                              ctx.key(kStepArcs, "book"),
                                              schema);
  std::vector<StoryArc> arcs;
  for (const auto& a : resp.parsed["arcs"]) {
    StoryArc arc;
    arc.name = a["name"].get<std::string>();
    for (const auto& p : a["progression"])
      arc.progression.push_back(make_bullet(p.get<std::string>()));
    arc.first_chapter = a["first_chapter"].get<int>();
    arc.last_chapter = a["last_chapter"].get<int>();
    arcs.push_back(std::move(arc));
  }
  return arcs;
}

std::vector<CharacterProfile> consolidate_characters(
    const Ctx& ctx, const std::vector<ChapterAnnotation>& chapters,
    const NameNormalizer& norm, const BookConfig& cfg) {
  struct Tally {
    std::string display;
    int main_count = 0;
    int appearances = 0;  // chapters where main or side
    int first_seen = 0;   // ordering key
    std::vector<std::pair<int, bool>> chapters_in;  // (index, was_main)
  };
  std::map<std::string, Tally> tally;
  int order = 0;
  for (const auto& ch : chapters) {
    auto note = [&](const std::string& name, bool is_main, bool counted) {
      std::string key = norm.key(name);
      if (key.empty()) return;
      auto [it, fresh] = tally.try_emplace(key);
      if (fresh) {
        it->second.display = norm.display(name);
        it->second.first_seen = order++;
      }
      if (!counted) return;
      it->second.appearances += 1;
      if (is_main) it->second.main_count += 1;
      it->second.chapters_in.emplace_back(ch.index, is_main);
    };
    for (const auto& n : ch.characters.main) note(n, true, true);
    for (const auto& n : ch.characters.side) note(n, false, true);
    for (const auto& n : ch.characters.mentioned) note(n, false, false);
  }

  std::vector<const Tally*> kept;
  for (const auto& [key, t] : tally)
    if (t.appearances > 0) kept.push_back(&t);
  std::sort(kept.begin(), kept.end(), [](const Tally* a, const Tally* b) {
    return a->first_seen < b->first_seen;
  });

  std::map<int, const ChapterAnnotation*> by_index;
  for (const auto& ch : chapters) by_index[ch.index] = &ch;

  std::vector<CharacterProfile> out;
  for (const Tally* t : kept) {
    int threshold = static_cast<int>(
        std::ceil(cfg.main_tier_fraction * t->appearances));
    CharacterProfile cp;
    cp.name = t->display;
    cp.tier = t->main_count >= std::max(threshold, 1) ? Tier::main : Tier::side;
    if (t->main_count == 0) cp.tier = Tier::side;

    std::ostringstream notes;
    for (auto [idx, was_main] : t->chapters_in) {
      notes << "Chapter " << idx << " (" << (was_main ? "main" : "side")
            << "):\n";
      auto it = by_index.find(idx);
      if (it != by_index.end())
        for (const auto& b : it->second->summary) notes << "- " << b.text
                                                        << "\n";
    }
    std::string prompt = prompts::render(
        ctx.templates.get(kStepCharacterProfile),
        {{"name", cp.name}, {"notes", notes.str()}});
    gw::Schema schema = bullets_schema("character_profile");
    auto resp = ctx.gateway.complete_structured(
        ctx.profile, prompt,
        ctx.key(kStepCharacterProfile, "book/char:" + norm.key(cp.name)),
        schema);
    auto raw = resp.parsed["bullets"].get<std::vector<std::string>>();
    cp.profile = enforce_bullets(ctx, kStepCharacterProfile,
                                 "book/char:" + norm.key(cp.name), raw);
    if (cp.profile.empty())
      cp.profile.push_back(make_bullet("Appears in " +
                                       std::to_string(t->appearances) +
                                       " chapters."));
    out.push_back(std::move(cp));
  }
  return out;
}

std::vector<ArchetypeEdge> derive_archetype_edges(
    const Ctx& ctx, const std::vector<CharacterProfile>& characters,
    const std::vector<ChapterAnnotation>& chapters) {
  NameNormalizer norm;
  std::map<std::string, std::string> known;  // key -> canonical display
  std::ostringstream char_list;
  for (const auto& c : characters) {
    known[norm.key(c.name)] = c.name;
    char_list << "- " << c.name << " ("
              << (c.tier == Tier::main ? "main" : "side") << ")\n";
  }
  std::string prompt =
      prompts::render(ctx.templates.get(kStepEdges),
                      {{"character_list", char_list.str()},
                       {"chapter_digest", chapter_digest(chapters)}});
  gw::Schema schema;
  schema.name = "archetype_edges";
  schema.parse = [](const std::string& raw) -> json {
    json j = extract_json(raw);
    if (!j.contains("edges") || !j["edges"].is_array())
      throw std::runtime_error("expected an object with an \"edges\" array");
    for (const auto& e : j["edges"])
      for (const char* f : {"from", "to", "relation"})
        if (!e.contains(f) || !e[f].is_string() ||
            e[f].get<std::string>().empty())
          throw std::runtime_error(std::string("edge missing field \"") + f +
                                   "\"");
    return j;
  };
  auto resp = ctx.gateway.complete_structured(ctx.profile, prompt,
                                              ctx.key(kStepEdges, "book"),
                                              schema);
  // Unknown endpoints and off-vocabulary relations are dropped rather than
  // re-prompted; the surviving set is what the annotation keeps.
  std::vector<ArchetypeEdge> edges;
  for (const auto& e : resp.parsed["edges"]) {
    auto from = known.find(norm.key(e["from"].get<std::string>()));
    auto to = known.find(norm.key(e["to"].get<std::string>()));
    auto rel = relation_from_name(e["relation"].get<std::string>());
    if (from == known.end() || to == known.end() || !rel) continue;
    if (from->second == to->second) continue;
    edges.push_back({from->second, to->second, *rel});
  }
  return edges;
}

BookStyleProfile consolidate_style(
    const Ctx& ctx, const std::vector<std::vector<Bullet>>& chapter_styles,
    const BookConfig& cfg) {
  std::ostringstream digest;
  for (std::size_t i = 0; i < chapter_styles.size(); ++i) {
    digest << "Chapter " << (i + 1) << " style:\n";
    for (const auto& b : chapter_styles[i]) digest << "- " << b.text << "\n";
  }
  std::string prompt = prompts::render(
      ctx.templates.get(kStepBookStyle),
      {{"min_bullets", std::to_string(cfg.style_min_bullets)},
       {"max_bullets", std::to_string(cfg.style_max_bullets)},
       {"target_bullets", std::to_string(cfg.style_target_bullets)},
       {"style_digest", digest.str()}});

  int min_b = cfg.style_min_bullets;
  int max_b = cfg.style_max_bullets;
  gw::Schema schema;
  schema.name = "book_style";
  schema.parse = [min_b, max_b](const std::string& raw) -> json {
    json j = extract_json(raw);
    if (!j.contains("bullets") || !j["bullets"].is_array())
      throw std::runtime_error("expected an object with a \"bullets\" array");
    std::vector<std::string> deduped;
    std::set<std::string> seen;
    for (const auto& b : j["bullets"]) {
      if (!b.is_string() || !bullet_text_ok(b.get<std::string>()))
        throw std::runtime_error("bullets must be 1 to 45 words each");
      std::string norm = text::collapse_whitespace(b.get<std::string>());
      std::string key = text::to_lower(norm);
      if (seen.insert(key).second) deduped.push_back(norm);
    }
    if (deduped.size() < static_cast<std::size_t>(min_b) ||
        deduped.size() > static_cast<std::size_t>(max_b))
      throw std::runtime_error(
          "need " + std::to_string(min_b) + " to " + std::to_string(max_b) +
          " distinct bullets after deduplication, got " +
          std::to_string(deduped.size()));
    return json{{"bullets", deduped}};
  };
  try {
    auto resp = ctx.gateway.complete_structured(
        ctx.profile, prompt, ctx.key(kStepBookStyle, "book"), schema);
    BookStyleProfile style;
    for (const auto& b : resp.parsed["bullets"])
      style.bullets.push_back(make_bullet(b.get<std::string>()));
    return style;
  } catch (const gw::SchemaFailure& e) {
    throw StyleCountOutOfRange(e.what());
  }
}

std::vector<Bullet> extract_world_rules(
    const Ctx& ctx, const std::vector<ChapterAnnotation>& chapters,
    const BookConfig& cfg) {
  std::string prompt = prompts::render(
      ctx.templates.get(kStepWorldRules),
      {{"max_rules", std::to_string(cfg.max_world_rules)},
       {"chapter_digest", chapter_digest(chapters)}});
  auto resp = ctx.gateway.complete_structured(
      ctx.profile, prompt, ctx.key(kStepWorldRules, "book"),
      bullets_schema("world_rules", 0));
  auto raw = resp.parsed["bullets"].get<std::vector<std::string>>();
  auto bullets = enforce_bullets(ctx, kStepWorldRules, "book", raw);
  if (bullets.size() > static_cast<std::size_t>(cfg.max_world_rules))
    bullets.resize(cfg.max_world_rules);
  return bullets;
}

std::string derive_book_archetype(const Ctx& ctx,
                                  const std::vector<StoryArc>& arcs,
                                  const std::vector<ChapterAnnotation>& chapters,
                                  const BookStyleProfile& style,
                                  const std::vector<CharacterProfile>& characters,
                                  const BookConfig& cfg) {
  std::ostringstream arc_digest;
  for (const auto& a : arcs) {
    arc_digest << a.name << " (chapters " << a.first_chapter << "-"
               << a.last_chapter << "):\n";
    for (const auto& b : a.progression) arc_digest << "- " << b.text << "\n";
  }
  std::ostringstream style_digest;
  for (const auto& b : style.bullets) style_digest << "- " << b.text << "\n";

  std::vector<std::string> name_tokens;
  for (const auto& c : characters)
    for (const auto& w : text::words(c.name)) name_tokens.emplace_back(w);

  std::string prompt = prompts::render(
      ctx.templates.get(kStepArchetype),
      {{"min_words", std::to_string(cfg.archetype_min_words)},
       {"max_words", std::to_string(cfg.archetype_max_words)},
       {"arc_digest", arc_digest.str()},
       {"chapter_digest", chapter_digest(chapters)},
       {"style_digest", style_digest.str()}});

  int min_w = cfg.archetype_min_words;
  int max_w = cfg.archetype_max_words;
  gw::Schema schema;
  schema.name = "book_archetype";
  schema.parse = [min_w, max_w, name_tokens](const std::string& raw) -> json {
    json j = extract_json(raw);
    if (!j.contains("paragraph") || !j["paragraph"].is_string())
      throw std::runtime_error("expected an object with a \"paragraph\"");
    std::string p = text::collapse_whitespace(j["paragraph"].get<std::string>());
    std::size_t wc = text::word_count(p);
    if (wc < static_cast<std::size_t>(min_w) ||
        wc > static_cast<std::size_t>(max_w))
      throw std::runtime_error("paragraph must be " + std::to_string(min_w) +
                               " to " + std::to_string(max_w) +
                               " words, got " + std::to_string(wc));
    for (const auto& t : name_tokens)
      if (text::contains_word(p, t))
        throw std::runtime_error("paragraph must not name characters (found "
                                 "\"" + t + "\")");
    return json{{"paragraph", p}};
  };
  try {
    auto resp = ctx.gateway.complete_structured(
        ctx.profile, prompt, ctx.key(kStepArchetype, "book"), schema);
    return resp.parsed["paragraph"].get<std::string>();
  } catch (const gw::SchemaFailure& e) {
    throw ArchetypeInvalid(e.what());
  }
}

BookPreview build_preview(const Ctx& ctx, const BookAnnotation& partial,
                          const BookConfig& cfg) {
  std::ostringstream digest;
  digest << "Archetype: " << partial.book_archetype << "\n\nArcs:\n";
  for (const auto& a : partial.arcs) digest << "- " << a.name << "\n";
  digest << "\nCharacters:\n";
  for (const auto& c : partial.characters)
    digest << "- " << c.name << " (" << (c.tier == Tier::main ? "main" : "side")
           << ")\n";
  digest << "\nStyle:\n";
  for (std::size_t i = 0; i < partial.style.bullets.size() && i < 8; ++i)
    digest << "- " << partial.style.bullets[i].text << "\n";

  std::string prompt = prompts::render(ctx.templates.get(kStepPreview),
                                       {{"book_digest", digest.str()}});
  BookConfig c = cfg;
  gw::Schema schema;
  schema.name = "book_preview";
  schema.parse = [c](const std::string& raw) -> json {
    json j = extract_json(raw);
    if (!j.contains("synthetic_title") || !j["synthetic_title"].is_string() ||
        j["synthetic_title"].get<std::string>().empty())
      throw std::runtime_error("missing synthetic_title");
    if (!j.contains("tags") || !j["tags"].is_array() ||
        j["tags"].size() != static_cast<std::size_t>(c.preview_tag_count))
      throw std::runtime_error("need exactly " +
                               std::to_string(c.preview_tag_count) + " tags");
    for (const auto& t : j["tags"])
      if (!t.is_string() || t.get<std::string>().empty())
        throw std::runtime_error("tags must be non-empty strings");
    if (!j.contains("highlight") || !j["highlight"].is_string())
      throw std::runtime_error("missing highlight");
    std::string h = text::collapse_whitespace(j["highlight"].get<std::string>());
    std::size_t wc = text::word_count(h);
    if (wc < static_cast<std::size_t>(c.highlight_min_words) ||
        wc > static_cast<std::size_t>(c.highlight_max_words))
      throw std::runtime_error(
          "highlight must be " + std::to_string(c.highlight_min_words) +
          " to " + std::to_string(c.highlight_max_words) + " words, got " +
          std::to_string(wc));
    std::size_t sc = text::sentence_count(h);
    if (sc < static_cast<std::size_t>(c.highlight_min_sentences) ||
        sc > static_cast<std::size_t>(c.highlight_max_sentences))
      throw std::runtime_error(
          "highlight must be " + std::to_string(c.highlight_min_sentences) +
          " to " + std::to_string(c.highlight_max_sentences) +
          " sentences, got " + std::to_string(sc));
    j["highlight"] = h;
    return j;
  };
  try {
    auto resp = ctx.gateway.complete_structured(
        ctx.profile, prompt, ctx.key(kStepPreview, "book"), schema);
    BookPreview p;
    p.synthetic_title = resp.parsed["synthetic_title"].get<std::string>();
    p.highlight = resp.parsed["highlight"].get<std::string>();
    p.tags = resp.parsed["tags"].get<std::vector<std::string>>();
    return p;
  } catch (const gw::SchemaFailure& e) {
    throw PreviewInvalid(e.what());
  }
}

BookAnnotation annotate_book(const Ctx& ctx,
                             const std::vector<ChapterAnnotation>& chapters,
                             const NameNormalizer& norm,
                             const BookConfig& cfg) {
  BookAnnotation book;
  book.arcs = detect_story_arcs(ctx, chapters, cfg);
  book.characters = consolidate_characters(ctx, chapters, norm, cfg);
  book.archetype_edges = derive_archetype_edges(ctx, book.characters, chapters);
  std::vector<std::vector<Bullet>> styles;
  for (const auto& ch : chapters) styles.push_back(ch.style);
  book.style = consolidate_style(ctx, styles, cfg);
  book.world_rules = extract_world_rules(ctx, chapters, cfg);
  book.book_archetype = derive_book_archetype(ctx, book.arcs, chapters,
                                              book.style, book.characters,
                                              cfg);
  book.preview = build_preview(ctx, book, cfg);
  return book;
}

}  // namespace bookpipe::annotate
