#include "bookpipe/prompt_synth.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

#include "bookpipe/text_util.hpp"

namespace bookpipe::synth {

using nlohmann::json;

const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Short: return "short";
    case Regime::Medium: return "medium";
    case Regime::Long: return "long";
  }
  return "medium";
}

const char* phrasing_name(Phrasing p) {
  switch (p) {
    case Phrasing::Casual: return "casual";
    case Phrasing::Direct: return "direct";
    case Phrasing::Elaborate: return "elaborate";
    case Phrasing::Terse: return "terse";
  }
  return "direct";
}

const char* structure_name(Structure s) {
  switch (s) {
    case Structure::Prose: return "prose";
    case Structure::List: return "list";
    case Structure::Fields: return "fields";
  }
  return "prose";
}

const char* specificity_name(Specificity s) {
  switch (s) {
    case Specificity::Low: return "low";
    case Specificity::Medium: return "medium";
    case Specificity::High: return "high";
  }
  return "medium";
}

namespace {

template <typename T>
T parse_enum_name(const std::string& s, const std::vector<std::pair<T, const char*>>& table,
                  const char* what) {
  for (const auto& [v, n] : table)
    if (s == n) return v;
  throw std::invalid_argument(std::string("unknown ") + what + ": " + s);
}

const std::vector<std::pair<Regime, const char*>>& regime_table() {
  static const std::vector<std::pair<Regime, const char*>> t = {
      {Regime::Short, "short"},
      {Regime::Medium, "medium"},
      {Regime::Long, "long"}};
  return t;
}

const std::vector<std::pair<Phrasing, const char*>>& phrasing_table() {
  static const std::vector<std::pair<Phrasing, const char*>> t = {
      {Phrasing::Casual, "casual"},
      {Phrasing::Direct, "direct"},
      {Phrasing::Elaborate, "elaborate"},
      {Phrasing::Terse, "terse"}};
  return t;
}

const std::vector<std::pair<Structure, const char*>>& structure_table() {
  static const std::vector<std::pair<Structure, const char*>> t = {
      {Structure::Prose, "prose"},
      {Structure::List, "list"},
      {Structure::Fields, "fields"}};
  return t;
}

const std::vector<std::pair<Specificity, const char*>>& specificity_table() {
  static const std::vector<std::pair<Specificity, const char*>> t = {
      {Specificity::Low, "low"},
      {Specificity::Medium, "medium"},
      {Specificity::High, "high"}};
  return t;
}

}  // namespace

DistributionConfig DistributionConfig::defaults() {
  DistributionConfig c;
  c.regime = {{Regime::Short, 0.30}, {Regime::Medium, 0.60},
              {Regime::Long, 0.10}};
  c.phrasing = {{Phrasing::Casual, 0.25},
                {Phrasing::Direct, 0.25},
                {Phrasing::Elaborate, 0.25},
                {Phrasing::Terse, 0.25}};
  c.structure[Regime::Short] = {{Structure::Prose, 0.5},
                                {Structure::List, 0.5}};
  c.structure[Regime::Medium] = {{Structure::Prose, 0.5},
                                 {Structure::List, 0.5}};
  c.structure[Regime::Long] = {{Structure::Prose, 1.0 / 3},
                               {Structure::List, 1.0 / 3},
                               {Structure::Fields, 1.0 / 3}};
  c.specificity = {{Specificity::Low, 1.0 / 3},
                   {Specificity::Medium, 1.0 / 3},
                   {Specificity::High, 1.0 / 3}};
  c.noise_levels = {{0.0, 0.50}, {0.25, 0.30}, {0.50, 0.15}, {0.75, 0.05}};
  c.bands = {{Regime::Short, {15, 60}},
             {Regime::Medium, {60, 250}},
             {Regime::Long, {250, 700}}};
  return c;
}

namespace {

template <typename T>
void check_weights(const std::vector<std::pair<T, double>>& weights,
                   const char* dim) {
  if (weights.empty())
    throw BadDistribution(std::string(dim) + " has no weights");
  double sum = 0.0;
  for (const auto& [v, w] : weights) {
    if (w < 0.0)
      throw BadDistribution(std::string(dim) + " has a negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw BadDistribution(std::string(dim) + " weights sum to " +
                          std::to_string(sum) + ", expected 1");
}

// Raw engine bits mapped to [0,1); the engine is seed-stable across
// platforms, unlike the standard distributions.
double next_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

template <typename T>
T pick(const std::vector<std::pair<T, double>>& weights, double u) {
  double acc = 0.0;
  for (const auto& [v, w] : weights) {
    acc += w;
    if (u < acc) return v;
  }
  return weights.back().first;
}

}  // namespace

PromptProfile sample_profile(std::uint64_t seed,
                             const DistributionConfig& cfg) {
  check_weights(cfg.regime, "regime");
  check_weights(cfg.phrasing, "phrasing");
  check_weights(cfg.specificity, "specificity");
  check_weights(cfg.noise_levels, "noise_levels");
  for (const auto& [r, weights] : cfg.structure)
    check_weights(weights, "structure");

  std::mt19937_64 gen(seed);
  PromptProfile p;
  p.regime = pick(cfg.regime, next_uniform(gen));
  p.phrasing = pick(cfg.phrasing, next_uniform(gen));
  auto st = cfg.structure.find(p.regime);
  if (st == cfg.structure.end())
    throw BadDistribution("no structure weights for regime " +
                          std::string(regime_name(p.regime)));
  p.structure = pick(st->second, next_uniform(gen));
  p.specificity = pick(cfg.specificity, next_uniform(gen));
  p.noise_level = pick(cfg.noise_levels, next_uniform(gen));
  auto band = cfg.bands.find(p.regime);
  if (band == cfg.bands.end())
    throw BadDistribution("no word band for regime " +
                          std::string(regime_name(p.regime)));
  p.target_words = band->second;
  return p;
}

DistributionConfig load_distribution_config(const json& j) {
  DistributionConfig c = DistributionConfig::defaults();
  auto read_weights = [&](const char* dim, auto& table, auto& into) {
    if (!j.contains(dim)) return;
    using Pair = typename std::decay_t<decltype(into)>::value_type;
    std::vector<Pair> out;
    for (const auto& [v, name] : table) {
      if (!j[dim].contains(name)) continue;
      out.push_back({v, j[dim][name].template get<double>()});
    }
    into = std::move(out);
  };
  read_weights("regime", regime_table(), c.regime);
  read_weights("phrasing", phrasing_table(), c.phrasing);
  read_weights("specificity", specificity_table(), c.specificity);
  if (j.contains("structure")) {
    for (const auto& [r, rname] : regime_table()) {
      if (!j["structure"].contains(rname)) continue;
      std::vector<std::pair<Structure, double>> out;
      for (const auto& [s, sname] : structure_table())
        if (j["structure"][rname].contains(sname))
          out.push_back({s, j["structure"][rname][sname].get<double>()});
      c.structure[r] = std::move(out);
    }
  }
  if (j.contains("noise_levels")) {
    c.noise_levels.clear();
    for (const auto& e : j["noise_levels"])
      c.noise_levels.push_back(
          {e.at("level").get<double>(), e.at("weight").get<double>()});
  }
  if (j.contains("bands")) {
    for (const auto& [r, rname] : regime_table()) {
      if (!j["bands"].contains(rname)) continue;
      c.bands[r] = {j["bands"][rname].at("min").get<int>(),
                    j["bands"][rname].at("max").get<int>()};
    }
  }
  return c;
}

// --- rendering ---------------------------------------------------------------

namespace {

bool is_list_line(std::string_view line) {
  std::string t = text::trim(line);
  if (t.empty()) return false;
  if (t[0] == '-' || t[0] == '*' ||
      t.substr(0, 3) == "\xE2\x80\xA2")  // bullet char
    return true;
  std::size_t d = 0;
  while (d < t.size() && std::isdigit(static_cast<unsigned char>(t[d]))) ++d;
  return d > 0 && d < t.size() && (t[d] == '.' || t[d] == ')');
}

bool is_field_line(std::string_view line) {
  std::string t = text::trim(line);
  std::size_t colon = t.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 >= t.size())
    return false;
  std::string_view key = std::string_view(t).substr(0, colon);
  if (text::word_count(key) > 4) return false;
  if (!std::isalpha(static_cast<unsigned char>(key[0]))) return false;
  return !text::trim(t.substr(colon + 1)).empty();
}

std::vector<std::string_view> split_lines(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t nl = s.find('\n', pos);
    if (nl == std::string_view::npos) {
      out.push_back(s.substr(pos));
      break;
    }
    out.push_back(s.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

// Empty string means the text satisfies the profile; otherwise the reason.
std::string check_rendered(const std::string& body,
                           const PromptProfile& profile) {
  std::size_t wc = text::word_count(body);
  auto lo = static_cast<std::size_t>(
      std::floor(profile.target_words.min_words * 0.8));
  auto hi = static_cast<std::size_t>(
      std::ceil(profile.target_words.max_words * 1.2));
  if (wc < lo || wc > hi)
    return "prompt must be about " +
           std::to_string(profile.target_words.min_words) + " to " +
           std::to_string(profile.target_words.max_words) + " words, got " +
           std::to_string(wc);
  auto lines = split_lines(body);
  int list_lines = 0, field_lines = 0;
  for (const auto& l : lines) {
    if (is_list_line(l)) ++list_lines;
    else if (is_field_line(l)) ++field_lines;
  }
  switch (profile.structure) {
    case Structure::Prose:
      if (list_lines > 0) return "prose form must not contain list lines";
      break;
    case Structure::List:
      if (list_lines < 3)
        return "list form needs at least 3 list lines, got " +
               std::to_string(list_lines);
      break;
    case Structure::Fields:
      if (field_lines < 4)
        return "field form needs at least 4 \"Key: value\" lines, got " +
               std::to_string(field_lines);
      break;
  }
  return "";
}

std::string book_digest_for(const BookAnnotation& book,
                            Specificity specificity) {
  std::string out;
  out += "Archetype: " + book.book_archetype + "\n";
  out += "Tags:";
  for (const auto& t : book.preview.tags) out += " " + t + ";";
  out += "\n";
  if (specificity == Specificity::Low) return out;
  out += "Highlight: " + book.preview.highlight + "\n";
  out += "Main characters:";
  for (const auto& c : book.characters)
    if (c.tier == Tier::main) out += " " + c.name + ";";
  out += "\n";
  if (specificity == Specificity::Medium) return out;
  out += "Arcs:";
  for (const auto& a : book.arcs) out += " " + a.name + ";";
  out += "\n";
  if (!book.world_rules.empty()) {
    out += "World rules:\n";
    for (const auto& r : book.world_rules) out += "- " + r.text + "\n";
  }
  out += "Style notes:\n";
  for (std::size_t i = 0; i < book.style.bullets.size() && i < 6; ++i)
    out += "- " + book.style.bullets[i].text + "\n";
  return out;
}

}  // namespace

SynthPrompt render_prompt(const annotate::Ctx& ctx, const BookAnnotation& book,
                          const PromptProfile& profile) {
  const char* structure_rule = "";
  switch (profile.structure) {
    case Structure::Prose:
      structure_rule = "Write flowing prose with no list or field lines.";
      break;
    case Structure::List:
      structure_rule =
          "Format the request as a bullet list with at least 3 items, one "
          "per line, each starting with \"- \".";
      break;
    case Structure::Fields:
      structure_rule =
          "Format the request as at least 4 lines of the form \"Key: "
          "value\".";
      break;
  }
  std::string base_prompt = prompts::render(
      ctx.templates.get(kStepRender),
      {{"min_words", std::to_string(profile.target_words.min_words)},
       {"max_words", std::to_string(profile.target_words.max_words)},
       {"phrasing", phrasing_name(profile.phrasing)},
       {"structure", structure_name(profile.structure)},
       {"specificity", specificity_name(profile.specificity)},
       {"structure_rule", structure_rule},
       {"book_digest", book_digest_for(book, profile.specificity)}});

  std::string error;
  for (int attempt = 0; attempt <= 1; ++attempt) {
    std::string p = base_prompt;
    if (attempt > 0) {
      p += "\n\nYour previous reply was rejected: ";
      p += error;
      p += "\nReturn only a corrected response matching the required format.";
    }
    std::string raw = ctx.gateway.complete(ctx.profile, p,
                                           ctx.key(kStepRender, "book",
                                                   attempt));
    std::string body;
    try {
      json j = annotate::extract_json(raw);
      body = j.at("prompt").get<std::string>();
    } catch (const std::exception& e) {
      error = e.what();
      continue;
    }
    error = check_rendered(body, profile);
    if (error.empty()) {
      SynthPrompt sp;
      sp.text = body;
      sp.profile = profile;
      return sp;
    }
  }
  throw RenderInvalid("rendered prompt rejected twice: " + error);
}

// --- noise ---------------------------------------------------------------

namespace {

struct Range {
  std::size_t begin, end;  // half-open
  bool contains(std::size_t i) const { return i >= begin && i < end; }
};

std::vector<Range> protected_ranges(const std::string& s) {
  std::vector<Range> out;
  // Quoted spans, straight and curly.
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '"') {
      std::size_t close = s.find('"', i + 1);
      if (close == std::string::npos) break;
      out.push_back({i, close + 1});
      i = close + 1;
      continue;
    }
    if (s.compare(i, 3, "\xE2\x80\x9C") == 0) {  // left curly quote
      std::size_t close = s.find("\xE2\x80\x9D", i + 3);
      if (close == std::string::npos) break;
      out.push_back({i, close + 3});
      i = close + 3;
      continue;
    }
    ++i;
  }
  // Field keys: protect up to and including the colon.
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t nl = s.find('\n', pos);
    std::size_t end = nl == std::string::npos ? s.size() : nl;
    std::string_view line(s.data() + pos, end - pos);
    if (is_field_line(line)) {
      std::size_t colon = line.find(':');
      out.push_back({pos, pos + colon + 1});
    }
    if (nl == std::string::npos) break;
    pos = nl + 1;
  }
  return out;
}

bool is_protected(const std::vector<Range>& ranges, std::size_t i,
                  std::size_t len = 1) {
  for (const auto& r : ranges)
    for (std::size_t k = 0; k < len; ++k)
      if (r.contains(i + k)) return true;
  return false;
}

bool ascii_letter(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

struct WordSpan {
  std::size_t begin, end;
};

std::vector<WordSpan> letter_words(const std::string& s) {
  std::vector<WordSpan> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (!ascii_letter(s[i])) {
      ++i;
      continue;
    }
    std::size_t b = i;
    while (i < s.size() && ascii_letter(s[i])) ++i;
    out.push_back({b, i});
  }
  return out;
}

bool sentence_start_at(const std::string& s, std::size_t p) {
  if (s[p] < 'A' || s[p] > 'Z') return false;
  std::size_t i = p;
  while (i > 0 && std::isspace(static_cast<unsigned char>(s[i - 1]))) --i;
  if (i == 0) return true;  // text start, possibly after leading whitespace
  char prev = s[i - 1];
  return (prev == '.' || prev == '!' || prev == '?') && i < p;
}

using Candidates = std::vector<std::size_t>;

Candidates transpose_sites(const std::string& s, const std::vector<Range>& pr) {
  Candidates out;
  for (const auto& w : letter_words(s))
    for (std::size_t p = w.begin; p + 1 < w.end; ++p)
      if (s[p] != s[p + 1] && !is_protected(pr, p, 2)) out.push_back(p);
  return out;
}

Candidates drop_sites(const std::string& s, const std::vector<Range>& pr) {
  Candidates out;
  for (const auto& w : letter_words(s)) {
    if (w.end - w.begin < 4) continue;
    for (std::size_t p = w.begin + 1; p < w.end; ++p)
      if (!is_protected(pr, p)) out.push_back(p);
  }
  return out;
}

Candidates double_sites(const std::string& s, const std::vector<Range>& pr) {
  Candidates out;
  for (const auto& w : letter_words(s)) {
    if (w.end - w.begin < 3) continue;
    for (std::size_t p = w.begin; p < w.end; ++p)
      if (!is_protected(pr, p)) out.push_back(p);
  }
  return out;
}

Candidates comma_sites(const std::string& s, const std::vector<Range>& pr) {
  Candidates out;
  for (std::size_t p = 0; p < s.size(); ++p)
    if (s[p] == ',' && !is_protected(pr, p)) out.push_back(p);
  return out;
}

Candidates period_sites(const std::string& s, const std::vector<Range>& pr) {
  Candidates out;
  for (std::size_t p = 0; p < s.size(); ++p) {
    if (s[p] != '.' || is_protected(pr, p)) continue;
    if (p == 0 || !ascii_letter(s[p - 1])) continue;
    if (p + 1 < s.size() &&
        !std::isspace(static_cast<unsigned char>(s[p + 1])))
      continue;
    out.push_back(p);
  }
  return out;
}

Candidates lowercase_sites(const std::string& s, const std::vector<Range>& pr) {
  Candidates out;
  for (std::size_t p = 0; p < s.size(); ++p)
    if (!is_protected(pr, p) && sentence_start_at(s, p)) out.push_back(p);
  return out;
}

}  // namespace

std::pair<std::string, std::vector<NoiseOp>> inject_noise(
    const std::string& text, double noise_level, std::uint64_t seed) {
  if (noise_level < 0.0 || noise_level > 1.0)
    throw std::invalid_argument("noise_level must be in [0,1]");
  std::string out = text;
  std::vector<NoiseOp> ops;
  std::size_t words = text::word_count(text);
  long target = std::lround(noise_level * static_cast<double>(words) / 25.0);
  if (target <= 0) return {out, ops};

  std::mt19937_64 gen(seed);
  struct KindSpec {
    const char* name;
    Candidates (*sites)(const std::string&, const std::vector<Range>&);
  };
  static const KindSpec kKinds[] = {
      {"transpose", transpose_sites},   {"drop_char", drop_sites},
      {"double_char", double_sites},    {"comma_drop", comma_sites},
      {"period_drop", period_sites},    {"lowercase_start", lowercase_sites},
  };

  for (long i = 0; i < target; ++i) {
    auto pr = protected_ranges(out);
    std::vector<std::pair<const KindSpec*, Candidates>> viable;
    for (const auto& k : kKinds) {
      Candidates c = k.sites(out, pr);
      if (!c.empty()) viable.emplace_back(&k, std::move(c));
    }
    if (viable.empty()) break;
    double u1 = next_uniform(gen);
    auto& [kind, sites] = viable[std::min(
        static_cast<std::size_t>(u1 * viable.size()), viable.size() - 1)];
    double u2 = next_uniform(gen);
    std::size_t p = sites[std::min(static_cast<std::size_t>(u2 * sites.size()),
                                   sites.size() - 1)];
    NoiseOp op;
    op.kind = kind->name;
    op.position = p;
    std::string name = kind->name;
    if (name == "transpose") {
      op.before = out.substr(p, 2);
      op.after = {op.before[1], op.before[0]};
    } else if (name == "drop_char" || name == "comma_drop" ||
               name == "period_drop") {
      op.before = out.substr(p, 1);
      op.after = "";
    } else if (name == "double_char") {
      op.before = out.substr(p, 1);
      op.after = op.before + op.before;
    } else {  // lowercase_start
      op.before = out.substr(p, 1);
      op.after = std::string(
          1, static_cast<char>(std::tolower(static_cast<unsigned char>(
                 op.before[0]))));
    }
    out.replace(p, op.before.size(), op.after);
    ops.push_back(std::move(op));
  }
  return {out, ops};
}

std::string strip_noise(const std::string& noised,
                        const std::vector<NoiseOp>& ops) {
  std::string out = noised;
  for (auto it = ops.rbegin(); it != ops.rend(); ++it)
    out.replace(it->position, it->after.size(), it->before);
  return out;
}

// --- json ----------------------------------------------------------------

void to_json(json& j, const PromptProfile& p) {
  j = json{{"regime", regime_name(p.regime)},
           {"phrasing", phrasing_name(p.phrasing)},
           {"structure", structure_name(p.structure)},
           {"specificity", specificity_name(p.specificity)},
           {"noise_level", p.noise_level},
           {"target_words", {{"min", p.target_words.min_words},
                             {"max", p.target_words.max_words}}}};
}

void from_json(const json& j, PromptProfile& p) {
  p.regime = parse_enum_name(j.at("regime").get<std::string>(),
                             regime_table(), "regime");
  p.phrasing = parse_enum_name(j.at("phrasing").get<std::string>(),
                               phrasing_table(), "phrasing");
  p.structure = parse_enum_name(j.at("structure").get<std::string>(),
                                structure_table(), "structure");
  p.specificity = parse_enum_name(j.at("specificity").get<std::string>(),
                                  specificity_table(), "specificity");
  j.at("noise_level").get_to(p.noise_level);
  p.target_words.min_words = j.at("target_words").at("min").get<int>();
  p.target_words.max_words = j.at("target_words").at("max").get<int>();
}

void to_json(json& j, const NoiseOp& op) {
  j = json{{"kind", op.kind},
           {"position", op.position},
           {"before", op.before},
           {"after", op.after}};
}

void from_json(const json& j, NoiseOp& op) {
  j.at("kind").get_to(op.kind);
  j.at("position").get_to(op.position);
  j.at("before").get_to(op.before);
  j.at("after").get_to(op.after);
}

void to_json(json& j, const SynthPrompt& p) {
  j = json{{"text", p.text},
           {"profile", p.profile},
           {"noise_ops", p.noise_ops_applied}};
}

void from_json(const json& j, SynthPrompt& p) {
  j.at("text").get_to(p.text);
  j.at("profile").get_to(p.profile);
  j.at("noise_ops").get_to(p.noise_ops_applied);
}

}  // namespace bookpipe::synth
