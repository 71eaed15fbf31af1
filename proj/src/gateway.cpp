#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "bookpipe/gateway.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

namespace bookpipe::gw {

using nlohmann::json;

void to_json(json& j, const ModelProfile& p) {
  j = json{{"name", p.name},
           {"endpoint", p.endpoint},
           {"reasoning", p.reasoning},
           {"temperature", p.temperature},
           {"max_output_tokens", p.max_output_tokens},
           {"max_retries", p.max_retries},
           {"api_key_env", p.api_key_env}};
}

void from_json(const json& j, ModelProfile& p) {
  j.at("name").get_to(p.name);
  j.at("endpoint").get_to(p.endpoint);
  p.reasoning = j.value("reasoning", false);
  p.temperature = j.value("temperature", 0.0);
  p.max_output_tokens = j.value("max_output_tokens", 8192);
  p.max_retries = j.value("max_retries", 3);
  p.api_key_env = j.value("api_key_env", std::string());
  if (p.temperature < 0.0)
    throw std::invalid_argument("temperature must be >= 0");
  if (p.max_output_tokens <= 0)
    throw std::invalid_argument("max_output_tokens must be positive");
  if (p.max_retries < 0)
    throw std::invalid_argument("max_retries must be non-negative");
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

std::string fixture_key(const CallKey& key) {
  std::string tuple = key.step + "|" + key.book_id + "|" + key.unit_id + "|" +
                      std::to_string(key.ordinal);
  return sha256_hex(tuple).substr(0, 16);
}

SchemaFailure::SchemaFailure(const std::string& what,
                             std::vector<std::string> attempts)
    : std::runtime_error(what), raw_attempts(std::move(attempts)) {}

MockBackend::MockBackend(std::filesystem::path fixtures_dir)
    : dir_(std::move(fixtures_dir)) {}

std::string MockBackend::complete(const ModelProfile&, const std::string&,
                                  const CallKey& key) {
  std::string k = fixture_key(key);
  for (const char* ext : {".txt", ".json"}) {
    std::filesystem::path p = dir_ / (k + ext);
    std::ifstream in(p, std::ios::binary);
    if (!in) continue;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }
  throw MissingFixture("no fixture " + k + " for (" + key.step + ", " +
                       key.book_id + ", " + key.unit_id + ", " +
                       std::to_string(key.ordinal) + ") under " +
                       dir_.string());
}

namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  std::size_t scheme = url.find("://");
  if (scheme == std::string::npos)
    throw Transport("endpoint is not a URL: " + url);
  std::size_t path_at = url.find('/', scheme + 3);
  if (path_at == std::string::npos) return {url, "/v1/chat/completions"};
  return {url.substr(0, path_at), url.substr(path_at)};
}

}  // namespace

std::string HttpBackend::complete(const ModelProfile& profile,
                                  const std::string& prompt, const CallKey&) {
  Endpoint ep = split_endpoint(profile.endpoint);
  json body = {
      {"model", profile.name},
      {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
      {"temperature", profile.temperature},
      {"max_tokens", profile.max_output_tokens},
  };
  // Reasoning profiles differ only in what the request asks for.
  if (profile.reasoning) body["enable_thinking"] = true;

  httplib::Headers headers;
  if (!profile.api_key_env.empty()) {
    const char* key = std::getenv(profile.api_key_env.c_str());
    if (key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  std::string last_error;
  int attempts = profile.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      int shift = std::min(attempt - 1, 6);
      std::this_thread::sleep_for(std::chrono::milliseconds(250 << shift));
    }
    httplib::Client cli(ep.base);
    cli.set_read_timeout(300, 0);
    cli.set_connection_timeout(30, 0);
    auto res = cli.Post(ep.path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "connection failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw Transport("status " + std::to_string(res->status) + ": " +
                      res->body);
    try {
      json reply = json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content")
          .get<std::string>();
    } catch (const std::exception& e) {
      throw Transport(std::string("malformed completion response: ") +
                      e.what());
    }
  }
  throw Transport("gave up after " + std::to_string(attempts) +
                  " attempts; last error: " + last_error);
}

Gateway::Gateway(std::shared_ptr<Backend> backend, int max_in_flight)
    : backend_(std::move(backend)), max_in_flight_(max_in_flight) {
  if (max_in_flight_ < 1)
    throw std::invalid_argument("max_in_flight must be >= 1");
}

Gateway Gateway::with_fixtures(const std::filesystem::path& fixtures_dir,
                               int max_in_flight) {
  return Gateway(std::make_shared<MockBackend>(fixtures_dir), max_in_flight);
}

struct Gateway::Slot {
  Gateway& g;
  explicit Slot(Gateway& gateway) : g(gateway) {
    std::unique_lock lock(g.mu_);
    g.cv_.wait(lock, [&] { return g.in_flight_ < g.max_in_flight_; });
    ++g.in_flight_;
  }
  ~Slot() {
    {
      std::lock_guard lock(g.mu_);
      --g.in_flight_;
    }
    g.cv_.notify_one();
  }
};

std::string Gateway::complete(const ModelProfile& profile,
                              const std::string& prompt, const CallKey& key) {
  Slot slot(*this);
  return backend_->complete(profile, prompt, key);
}

std::vector<std::string> Gateway::ensemble_complete(const ModelProfile& profile,
                                                    const std::string& prompt,
                                                    const CallKey& key,
                                                    int k) {
  if (k < 1) throw std::invalid_argument("ensemble size must be >= 1");
  std::vector<std::string> out;
  out.reserve(k);
  for (int i = 0; i < k; ++i)
    out.push_back(complete(profile, prompt, key.with_ordinal(key.ordinal + i)));
  return out;
}

StructuredResponse Gateway::complete_structured(const ModelProfile& profile,
                                                const std::string& prompt,
                                                const CallKey& key,
                                                const Schema& schema) {
  std::vector<std::string> raw_attempts;
  std::string error;
  for (int attempt = 0; attempt <= profile.max_retries; ++attempt) {
    std::string p = prompt;
    if (attempt > 0) {
      p += "\n\nYour previous reply was rejected: ";
      p += error;
      p += "\nReturn only a corrected response matching the required format.";
    }
    std::string raw =
        complete(profile, p, key.with_ordinal(key.ordinal + attempt));
    raw_attempts.push_back(raw);
    try {
      StructuredResponse r;
      r.parsed = schema.parse(raw);
      r.raw_text = raw;
      r.attempts = attempt + 1;
      return r;
    } catch (const std::exception& e) {
      error = e.what();
    }
  }
  throw SchemaFailure("schema '" + schema.name + "' rejected all " +
                          std::to_string(raw_attempts.size()) +
                          " attempts for (" + key.step + ", " + key.book_id +
                          ", " + key.unit_id + "); last error: " + error,
                      std::move(raw_attempts));
}

}  // namespace bookpipe::gw
