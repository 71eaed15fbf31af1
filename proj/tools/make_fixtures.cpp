#include <cstdint>
#include <iostream>

#include <CLI11.hpp>

#include "bookpipe/fixture_gen.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a self-contained offline corpus (books, scripted "
               "responses, config) for running the pipeline without a model "
               "endpoint"};
  std::string out_dir;
  std::uint64_t seed = 1;
  app.add_option("--out", out_dir, "directory to create the corpus in")
      ->required();
  app.add_option("--seed", seed, "run seed the corpus is keyed to");
  CLI11_PARSE(app, argc, argv);

  try {
    auto paths = bookpipe::fixgen::write_fixture_corpus(out_dir, seed);
    std::cout << "wrote corpus under " << paths.root.string() << "\n"
              << "run stages with --config " << paths.config_file.string()
              << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
