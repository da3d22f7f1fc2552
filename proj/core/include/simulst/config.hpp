#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "simulst/session.hpp"

namespace simulst {

struct SweepConfig {
  std::string param;           // "k" or "lambda"
  std::vector<double> values;
};

struct ServerConfig {
  std::string endpoint = "127.0.0.1:7878";
  int session_timeout_ms = 10'000;
  int idle_timeout_ms = 30'000;
};

/// Declarative run document for the CLI. Every field is optional; flags
/// given on the command line override what is loaded here.
struct AppConfig {
  SessionConfig session;
  std::string corpus;
  std::string output;
  std::string session_log;
  std::size_t jobs = 0;  // 0: hardware concurrency
  SweepConfig sweep;
  ServerConfig server;
};

/// Schema check; ConfigError messages start with the JSON pointer of the
/// offending value.
AppConfig parse_app_config(const nlohmann::json& doc);

/// Reads a file; syntax errors report line, column and byte offset.
AppConfig load_app_config(const std::string& path);

/// Sets log verbosity from SIMULST_LOG_LEVEL (trace..off); default warn.
void init_logging_from_env();

}  // namespace simulst
