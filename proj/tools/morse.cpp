#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "morse/config.hpp"
#include "morse/errors.hpp"
#include "morse/parallel.hpp"
#include "morse/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Morse complexes, homology and flow currents"};
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  int threads = 1;
  bool no_cache = false;
  bool verbose = false;

  for (const auto& name : morse::pipeline::subcommands()) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "YAML run configuration")->required();
    sub->add_option("--out", out_dir, "output directory (default: config 'output', else ./out)");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--no-cache", no_cache, "ignore and do not reuse cached stages");
    sub->add_flag("--verbose", verbose, "progress on stderr");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  const std::string subcommand = app.get_subcommands().front()->get_name();
  try {
    const morse::config::RunConfig cfg = morse::config::load_config(config_path);
    morse::set_thread_count(threads);
    morse::pipeline::Options options;
    options.out_dir = !out_dir.empty() ? out_dir : !cfg.output.empty() ? cfg.output : "out";
    options.use_cache = !no_cache;
    if (verbose) options.log = &std::cerr;

    const auto outcome = morse::pipeline::run(cfg, subcommand, options);
    std::cout << outcome.report_text;
    return outcome.exit_code;
  } catch (const morse::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const morse::VerificationError& e) {
    std::cerr << "verification failed: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
