#include <memory>
#include <string>
#include <vector>

#include "bookpipe/gateway.hpp"
#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"

using namespace bookpipe;
using testutil::ScriptedBackend;

namespace {

gw::ModelProfile mock_profile(int max_retries = 3) {
  gw::ModelProfile p;
  p.name = "mock";
  p.endpoint = "mock";
  p.max_retries = max_retries;
  return p;
}

// accepts {"n": <number>}, rejects anything else
gw::Schema number_schema() {
  gw::Schema s;
  s.name = "number";
  s.parse = [](const std::string& raw) -> nlohmann::json {
    auto j = nlohmann::json::parse(raw, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("n") ||
        !j["n"].is_number())
      throw std::runtime_error("need an object with a numeric \"n\"");
    return j;
  };
  return s;
}

}  // namespace

TEST_SUITE("gateway") {

TEST_CASE("sha256 and fixture keys are stable") {
  CHECK(gw::sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(gw::sha256_hex("") ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");

  gw::CallKey k{"segment_scenes", "bk", "ch1", 0};
  CHECK(gw::fixture_key(k) == "3262ac9780d76147");
  CHECK(gw::fixture_key(gw::CallKey{"score_scene", "b", "s", 4}) ==
        "f11d4eacdb036f85");
  CHECK(gw::fixture_key(k) ==
        gw::sha256_hex("segment_scenes|bk|ch1|0").substr(0, 16));
  CHECK(k.with_ordinal(9).ordinal == 9);
  CHECK(k.with_ordinal(9).step == k.step);
}

TEST_CASE("mock backend serves .txt then .json fixtures") {
  testutil::TempDir dir("fixtures");
  gw::CallKey key{"step", "book", "unit", 2};
  auto name = gw::fixture_key(key);
  testutil::write_file(dir.path / (name + ".txt"), "text body");
  gw::MockBackend backend(dir.path);
  CHECK(backend.complete(mock_profile(), "prompt", key) == "text body");

  gw::CallKey key_json{"step", "book", "unit", 3};
  testutil::write_file(dir.path / (gw::fixture_key(key_json) + ".json"),
                       "{\"a\":1}");
  CHECK(backend.complete(mock_profile(), "prompt", key_json) == "{\"a\":1}");

  gw::CallKey missing{"step", "book", "unit", 4};
  try {
    backend.complete(mock_profile(), "prompt", missing);
    FAIL("expected MissingFixture");
  } catch (const gw::MissingFixture& e) {
    std::string msg = e.what();
    CHECK(msg.find(gw::fixture_key(missing)) != std::string::npos);
    CHECK(msg.find("step") != std::string::npos);
    CHECK(msg.find("unit") != std::string::npos);
    CHECK(msg.find("4") != std::string::npos);
  }
}

TEST_CASE("gateway passes completions through the backend") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->script("s", "u", 0, "reply");
  gw::Gateway g(backend);
  CHECK(g.complete(mock_profile(), "hello", gw::CallKey{"s", "b", "u", 0}) ==
        "reply");
  REQUIRE(backend->calls.size() == 1);
  CHECK(backend->calls[0].prompt == "hello");
  CHECK(backend->calls[0].key.book_id == "b");
}

TEST_CASE("ensemble uses consecutive ordinals from the base") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->script("s", "u", 5, "one");
  backend->script("s", "u", 6, "two");
  backend->script("s", "u", 7, "three");
  gw::Gateway g(backend);
  auto out = g.ensemble_complete(mock_profile(), "p",
                                 gw::CallKey{"s", "b", "u", 5}, 3);
  CHECK(out == std::vector<std::string>{"one", "two", "three"});
}

TEST_CASE("structured completion re-prompts with the rejection reason") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->script("s", "u", 0, "not json at all");
  backend->script("s", "u", 1, "{\"n\": 41}");
  gw::Gateway g(backend);

  auto resp = g.complete_structured(mock_profile(), "base prompt",
                                    gw::CallKey{"s", "b", "u", 0},
                                    number_schema());
  CHECK(resp.attempts == 2);
  CHECK(resp.parsed["n"] == 41);
  CHECK(resp.raw_text == "{\"n\": 41}");

  REQUIRE(backend->calls.size() == 2);
  CHECK(backend->calls[0].key.ordinal == 0);
  CHECK(backend->calls[0].prompt == "base prompt");
  CHECK(backend->calls[1].key.ordinal == 1);
  CHECK(backend->calls[1].prompt ==
        "base prompt\n\nYour previous reply was rejected: "
        "need an object with a numeric \"n\""
        "\nReturn only a corrected response matching the required format.");
}

TEST_CASE("structured completion gives up after max_retries re-prompts") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->script("s", "u", 0, "bad0");
  backend->script("s", "u", 1, "bad1");
  backend->script("s", "u", 2, "bad2");
  backend->script("s", "u", 3, "{\"n\": 1}");  // never reached
  gw::Gateway g(backend);

  try {
    g.complete_structured(mock_profile(/*max_retries=*/2), "p",
                          gw::CallKey{"s", "b", "u", 0}, number_schema());
    FAIL("expected SchemaFailure");
  } catch (const gw::SchemaFailure& e) {
    CHECK(e.raw_attempts == std::vector<std::string>{"bad0", "bad1", "bad2"});
  }
  CHECK(backend->calls.size() == 3);
}

TEST_CASE("structured completion succeeds first try without a re-prompt") {
  auto backend = std::make_shared<ScriptedBackend>();
  backend->script("s", "u", 10, "{\"n\": 7}");
  gw::Gateway g(backend);
  auto resp = g.complete_structured(mock_profile(), "p",
                                    gw::CallKey{"s", "b", "u", 10},
                                    number_schema());
  CHECK(resp.attempts == 1);
  CHECK(backend->calls.size() == 1);
  CHECK(backend->calls[0].key.ordinal == 10);
}

TEST_CASE("missing fixtures propagate out of structured calls") {
  auto backend = std::make_shared<ScriptedBackend>();
  gw::Gateway g(backend);
  CHECK_THROWS_AS(g.complete_structured(mock_profile(), "p",
                                        gw::CallKey{"s", "b", "u", 0},
                                        number_schema()),
                  gw::MissingFixture);
}

TEST_CASE("model profile json round-trips") {
  gw::ModelProfile p;
  p.name = "reason";
  p.endpoint = "mock";
  p.reasoning = true;
  p.temperature = 0.25;
  p.max_output_tokens = 1234;
  p.max_retries = 5;
  p.api_key_env = "KEY";
  nlohmann::json j;
  to_json(j, p);
  gw::ModelProfile back;
  from_json(j, back);
  CHECK(back.name == p.name);
  CHECK(back.reasoning == p.reasoning);
  CHECK(back.temperature == p.temperature);
  CHECK(back.max_output_tokens == p.max_output_tokens);
  CHECK(back.max_retries == p.max_retries);
  CHECK(back.api_key_env == p.api_key_env);
}

}  // TEST_SUITE
