// Generates the six reference level fixtures (lvl0..lvl5) as .aaspkg files.
// Levels 4 and 5 need a working C++ compiler on PATH.
#include <CLI11.hpp>

#include <iostream>

#include "shellforge/fixtures/fixtures.hpp"
#include "shellforge/util/error.hpp"

int main(int argc, char** argv) {
  CLI::App app{"write the shellforge level fixtures"};
  std::string out = "fixtures/levels";
  shellforge::fixtures::FixtureOptions opts;
  app.add_option("--out", out, "output directory");
  app.add_option("--sim-host", opts.sim_host);
  app.add_option("--sim-port", opts.sim_port)->check(CLI::Range(1, 65535));
  app.add_option("--poll-interval", opts.poll_interval_s)
      ->check(CLI::PositiveNumber);
  app.add_option("--build-dir", opts.build_dir,
                 "where reference services get compiled");
  CLI11_PARSE(app, argc, argv);

  try {
    shellforge::fixtures::write_level_fixtures(out, opts);
    for (int level = 0; level <= 5; ++level) {
      std::cout << out << "/" << shellforge::fixtures::fixture_filename(level)
                << "\n";
    }
  } catch (const shellforge::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
