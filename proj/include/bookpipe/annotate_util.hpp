#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bookpipe/gateway.hpp"
#include "bookpipe/prompts.hpp"
#include "bookpipe/types.hpp"

namespace bookpipe::annotate {

// Shared call context for one book's annotation run.
struct Ctx {
  gw::Gateway& gateway;
  gw::ModelProfile profile;
  prompts::TemplateSet templates;
  std::string book_id;

  gw::CallKey key(const std::string& step, const std::string& unit,
                  int ordinal = 0) const {
    return gw::CallKey{step, book_id, unit, ordinal};
  }
};

// Model replies often wrap JSON in prose or code fences; pull out the first
// balanced JSON value and parse it.
nlohmann::json extract_json(const std::string& raw);

// Schema over {"bullets": [str, ...]}; enforces non-empty strings and the
// count floor.
gw::Schema bullets_schema(std::string name, std::size_t min_count = 1);

// Ordinal offset reserved for per-bullet repair calls within a step.
inline constexpr int kRepairOrdinalBase = 100;

// One re-prompt for a bullet that broke the word limit; nullopt when the
// repair also fails.
std::optional<Bullet> repair_bullet(const Ctx& ctx, const std::string& step,
                                    const std::string& unit, int ordinal,
                                    const std::string& text,
                                    std::size_t word_limit);

// Applies the bullet word-limit rule to a raw list: overlong entries get one
// repair call (ordinal kRepairOrdinalBase + index), then are dropped.
std::vector<Bullet> enforce_bullets(const Ctx& ctx, const std::string& step,
                                    const std::string& unit,
                                    const std::vector<std::string>& raw,
                                    std::size_t word_limit = kBulletWordLimit);

}  // namespace bookpipe::annotate
