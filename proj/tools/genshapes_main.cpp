#include <iostream>

#include <CLI11.hpp>

#include "statenet/shapes.hpp"

// Standalone generator for the synthetic shapes corpus used by the
// desk-scale experiments. Kept out of the main binary: it produces fixture
// data rather than operating on a dataset.
int main(int argc, char** argv) {
  CLI::App app{"Generate the 11-class synthetic shapes dataset"};
  std::string out;
  statenet::ShapesConfig cfg;
  app.add_option("--out", out, "Output root directory")->required();
  app.add_option("--per-class", cfg.per_class, "Images per class")
      ->capture_default_str();
  app.add_option("--size", cfg.size, "Square image edge length")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "Generator seed")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    statenet::generate_shapes_dataset(out, cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << out << "\n";
  return 0;
}
