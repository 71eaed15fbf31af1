#include "bookpipe/prompts.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace bookpipe::prompts {

namespace {

const std::map<std::string, std::string>& builtin_templates() {
  static const std::map<std::string, std::string> t = {
      {"segment_scenes",
       "Split the chapter below into scenes. A new scene starts at a shift in "
       "setting, time, focal character, character grouping, dialogue focus, "
       "point of view, or narrative purpose.\n"
       "Reply with JSON only:\n"
       "{\"scenes\": [{\"scene_name\": str, \"start_offset\": int, "
       "\"end_offset\": int, \"narrative_focus\": str, "
       "\"narrative_perspective\": str}]}\n"
       "Offsets are character indices into the chapter text; spans must be "
       "in order and cover the chapter.\n\nCHAPTER ({{chapter_length}} "
       "characters):\n{{chapter_text}}"},
      {"score_scene",
       "Score the scene below on each axis from 0 to 100: action, dialog, "
       "world_building, exposition, romantic, erotic, pacing.\n"
       "Reply with JSON only: {\"action\": int, \"dialog\": int, "
       "\"world_building\": int, \"exposition\": int, \"romantic\": int, "
       "\"erotic\": int, \"pacing\": int}\n\nSCENE:\n{{scene_text}}"},
      {"summarize_scene",
       "Summarize the scene below as bullet points. Each bullet must be a "
       "single statement of 10 to 20 words (never more than 45). Weight the "
       "coverage by the scene's narrative profile: {{score_summary}}.\n"
       "Reply with JSON only: {\"bullets\": [str, ...]}\n\nSCENE:\n"
       "{{scene_text}}"},
      {"repair_bullet",
       "Rewrite the bullet below so it is a single statement of at most "
       "{{limit}} words. Keep the meaning.\nReply with JSON only: "
       "{\"bullet\": str}\n\nBULLET:\n{{bullet}}"},
      {"summarize_chapter",
       "Write a chapter summary as exactly {{budget}} bullet points of 10 to "
       "20 words each (never more than 45), using only the scene summaries "
       "and scores below.\nReply with JSON only: {\"bullets\": [str, ...]}\n\n"
       "SCENES:\n{{scene_digest}}"},
      {"short_scene_summaries",
       "For each of the {{scene_count}} scenes below, write one bullet of at "
       "most 20 words capturing what happens.\nReply with JSON only: "
       "{\"bullets\": [str, ...]} with exactly {{scene_count}} entries in "
       "scene order.\n\nSCENES:\n{{scene_digest}}"},
      {"extract_chapter_characters",
       "List the characters in the chapter below. Classify each as main "
       "(drives the chapter), side (present but secondary), or mentioned "
       "(named but absent).\nReply with JSON only: {\"main\": [str], "
       "\"side\": [str], \"mentioned\": [str]}\n\nCHAPTER:\n{{chapter_text}}"},
      {"extract_chapter_style",
       "Describe the writing style of the chapter below as bullet points "
       "covering tense, diction, syntax, rhythm, and dialogue handling. Do "
       "not mention character names, locations, or plot events.\nReply with "
       "JSON only: {\"bullets\": [str, ...]}\n\nCHAPTER:\n{{chapter_text}}"},
      {"detect_story_arcs",
       "Group the chapter summaries below into 1 to {{max_arcs}} story arcs. "
       "Give each arc a synthetic name, a bullet-point progression, and the "
       "1-based first/last chapter it spans. Arcs may overlap.\nReply with "
       "JSON only: {\"arcs\": [{\"name\": str, \"progression\": [str], "
       "\"first_chapter\": int, \"last_chapter\": int}]}\n\nCHAPTERS "
       "({{chapter_count}} total):\n{{chapter_digest}}"},
      {"character_profile",
       "Write a compact bullet-point profile (2 to 6 bullets, each at most "
       "45 words) for the character {{name}} using the chapter notes "
       "below.\nReply with JSON only: {\"bullets\": [str, ...]}\n\nNOTES:\n"
       "{{notes}}"},
      {"derive_archetype_edges",
       "Describe the functional relationships between the characters below "
       "as directed edges. Allowed relations: opposition, support, "
       "mentorship, rivalry, dependence, emotional_contrast. Use only the "
       "listed character names.\nReply with JSON only: {\"edges\": "
       "[{\"from\": str, \"to\": str, \"relation\": str}]}\n\nCHARACTERS:\n"
       "{{character_list}}\n\nCHAPTERS:\n{{chapter_digest}}"},
      {"consolidate_style",
       "Merge the chapter style notes below into {{min_bullets}} to "
       "{{max_bullets}} deduplicated bullet points (target about "
       "{{target_bullets}}) describing tense, diction, syntax, dialogue "
       "handling, and rhythm.\nReply with JSON only: {\"bullets\": [str, "
       "...]}\n\nCHAPTER STYLE NOTES:\n{{style_digest}}"},
      {"extract_world_rules",
       "List up to {{max_rules}} explicit rules of the story world (magic "
       "systems, technology limits, social laws) stated or implied in the "
       "chapter summaries below. Reply {\"bullets\": []} if the setting is "
       "mundane.\nReply with JSON only: {\"bullets\": [str, ...]}\n\n"
       "CHAPTERS:\n{{chapter_digest}}"},
      {"derive_book_archetype",
       "Write one abstract paragraph of {{min_words}} to {{max_words}} words "
       "describing what kind of book this is: its shape, movement, and "
       "emotional register. Do not mention character names or concrete plot "
       "events.\nReply with JSON only: {\"paragraph\": str}\n\nARCS:\n"
       "{{arc_digest}}\n\nCHAPTERS:\n{{chapter_digest}}\n\nSTYLE:\n"
       "{{style_digest}}"},
      {"build_preview",
       "Create a preview for the book below: a synthetic title, a highlight "
       "of 90 to 130 words in 3 to 5 sentences covering premise, conflict, "
       "stakes, and hook without spoilers, and exactly 7 tags ordered from "
       "most to least important.\nReply with JSON only: {\"synthetic_title\":"
       " str, \"highlight\": str, \"tags\": [str x7]}\n\nBOOK:\n"
       "{{book_digest}}"},
      {"render_prompt",
       "Write a synthetic user prompt asking for this book to be written. "
       "Style constraints: length {{min_words}} to {{max_words}} words, "
       "phrasing {{phrasing}}, structure {{structure}}, specificity "
       "{{specificity}}. {{structure_rule}}\nReply with JSON only: "
       "{\"prompt\": str}\n\nBOOK:\n{{book_digest}}"},
  };
  return t;
}

}  // namespace

const std::string& builtin(const std::string& step) {
  return builtin_templates().at(step);
}

TemplateSet::TemplateSet(std::filesystem::path override_dir)
    : dir_(std::move(override_dir)) {}

std::string TemplateSet::get(const std::string& step) const {
  if (dir_) {
    std::ifstream in(*dir_ / (step + ".txt"), std::ios::binary);
    if (in) {
      std::ostringstream buf;
      buf << in.rdbuf();
      return buf.str();
    }
  }
  return builtin(step);
}

std::string render(const std::string& tmpl,
                   const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    std::size_t open = tmpl.find("{{", pos);
    if (open == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      break;
    }
    std::size_t close = tmpl.find("}}", open + 2);
    if (close == std::string::npos) {
      out.append(tmpl, pos, std::string::npos);
      break;
    }
    out.append(tmpl, pos, open - pos);
    std::string key = tmpl.substr(open + 2, close - open - 2);
    auto it = values.find(key);
    if (it != values.end())
      out += it->second;
    else
      out.append(tmpl, open, close + 2 - open);
    pos = close + 2;
  }
  return out;
}

}  // namespace bookpipe::prompts
