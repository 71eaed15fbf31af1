#include "bookpipe/annotate_util.hpp"

#include <stdexcept>

#include "bookpipe/text_util.hpp"

namespace bookpipe::annotate {

using nlohmann::json;

json extract_json(const std::string& raw) {
  std::size_t begin = raw.find_first_of("{[");
  if (begin == std::string::npos)
    throw std::runtime_error("no JSON value found in response");
  char open = raw[begin];
  char close = open == '{' ? '}' : ']';
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = begin; i < raw.size(); ++i) {
    char c = raw[i];
    if (in_string) {
      if (escaped)
        escaped = false;
      else if (c == '\\')
        escaped = true;
      else if (c == '"')
        in_string = false;
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == open) {
      ++depth;
    } else if (c == close) {
      --depth;
      if (depth == 0)
        return json::parse(raw.substr(begin, i - begin + 1));
    }
  }
  throw std::runtime_error("unbalanced JSON value in response");
}

gw::Schema bullets_schema(std::string name, std::size_t min_count) {
  gw::Schema s;
  s.name = name;
  s.parse = [min_count](const std::string& raw) -> json {
    json j = extract_json(raw);
    if (!j.is_object() || !j.contains("bullets") || !j["bullets"].is_array())
      throw std::runtime_error("expected an object with a \"bullets\" array");
    for (const auto& b : j["bullets"]) {
      if (!b.is_string() || b.get<std::string>().empty())
        throw std::runtime_error("bullets must be non-empty strings");
    }
    if (j["bullets"].size() < min_count)
      throw std::runtime_error("need at least " + std::to_string(min_count) +
                               " bullets, got " +
                               std::to_string(j["bullets"].size()));
    return j;
  };
  return s;
}

std::optional<Bullet> repair_bullet(const Ctx& ctx, const std::string& step,
                                    const std::string& unit, int ordinal,
                                    const std::string& text,
                                    std::size_t word_limit) {
  std::string prompt = prompts::render(
      ctx.templates.get("repair_bullet"),
      {{"limit", std::to_string(word_limit)}, {"bullet", text}});
  try {
    std::string raw =
        ctx.gateway.complete(ctx.profile, prompt, ctx.key(step, unit, ordinal));
    json j = extract_json(raw);
    std::string fixed = j.at("bullet").get<std::string>();
    Bullet b = make_bullet(fixed);
    if (b.word_count >= 1 &&
        static_cast<std::size_t>(b.word_count) <= word_limit)
      return b;
  } catch (const gw::MissingFixture&) {
    // Mock corpora may simply not script a repair; treat as failed repair.
  } catch (const std::exception&) {
  }
  return std::nullopt;
}

std::vector<Bullet> enforce_bullets(const Ctx& ctx, const std::string& step,
                                    const std::string& unit,
                                    const std::vector<std::string>& raw,
                                    std::size_t word_limit) {
  std::vector<Bullet> out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    Bullet b = make_bullet(raw[i]);
    if (b.word_count >= 1 &&
        static_cast<std::size_t>(b.word_count) <= word_limit) {
      out.push_back(std::move(b));
      continue;
    }
    if (b.word_count == 0) continue;
    auto fixed = repair_bullet(ctx, step, unit,
                               kRepairOrdinalBase + static_cast<int>(i),
                               raw[i], word_limit);
    if (fixed) out.push_back(std::move(*fixed));
  }
  return out;
}

}  // namespace bookpipe::annotate
