#pragma once

#include <cstdint>
#include <filesystem>

namespace bookpipe::fixgen {

struct CorpusPaths {
  std::filesystem::path root;
  std::filesystem::path input_dir;
  std::filesystem::path fixtures_dir;
  std::filesystem::path config_file;
};

// Writes a self-contained offline corpus under root: three synthetic books,
// scripted gateway responses for every call the pipeline will make against
// them, and a ready-to-run config. The response set deliberately exercises
// the retry and repair paths (a rejected score, an overlong bullet, a wrong
// summary count, a malformed prompt render). Everything is deterministic in
// the seed, which must match the seed in the written config for the prompt
// render fixtures to line up.
CorpusPaths write_fixture_corpus(const std::filesystem::path& root,
                                 std::uint64_t seed = 1);

}  // namespace bookpipe::fixgen
