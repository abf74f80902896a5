#pragma once

// Stage orchestration, on-disk cache and report assembly behind the CLI.

#include <iosfwd>
#include <string>
#include <vector>

#include "morse/config.hpp"

namespace morse::pipeline {

inline constexpr const char* kSchema = "morse-report/1";

const std::vector<std::string>& subcommands();

struct Options {
  std::string out_dir = "out";
  bool use_cache = true;
  std::ostream* log = nullptr;  // progress lines when set
};

struct Outcome {
  int exit_code = 0;                 // 0 ok, 2 verification failure
  std::vector<std::string> failures; // one line per failed check
  std::string report_json;           // as written to report.json
  std::string report_text;           // as written to report.txt
  std::vector<std::string> cache_hits;
};

/// Runs `subcommand` and its upstream stages. Writes report.json, report.txt
/// and the CSV exports under options.out_dir. Configuration and numerical
/// errors propagate as exceptions.
Outcome run(const config::RunConfig& cfg, const std::string& subcommand, const Options& options = {});

/// Report with the "timings" member removed, for reproducibility checks.
std::string strip_timings(const std::string& report_json);

/// Hex SHA-256 of the given text.
std::string sha256_hex(const std::string& text);

}  // namespace morse::pipeline
