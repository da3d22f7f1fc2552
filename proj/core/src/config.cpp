#include "simulst/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "simulst/error.hpp"
#include "spdlog/sinks/stdout_color_sinks.h"
#include "spdlog/spdlog.h"

namespace simulst {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& ptr, const std::string& msg) {
  throw ConfigError(ptr + ": " + msg);
}

std::string get_string(const json& v, const std::string& ptr) {
  if (!v.is_string()) bad(ptr, "expected a string");
  return v.get<std::string>();
}

int get_ms(const json& v, const std::string& ptr) {
  if (!v.is_number_integer() || v.get<std::int64_t>() <= 0 || v.get<std::int64_t>() > 86'400'000)
    bad(ptr, "expected a positive integer number of milliseconds");
  return v.get<int>();
}

}  // namespace

AppConfig parse_app_config(const json& doc) {
  if (!doc.is_object()) bad("", "expected an object at the document root");
  AppConfig cfg;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const std::string key = it.key();
    const std::string ptr = "/" + key;
    const json& v = it.value();
    if (key == "session") {
      try {
        cfg.session = v.get<SessionConfig>();
      } catch (const ConfigError& e) {
        throw ConfigError("/session" + std::string(e.what()));
      }
    } else if (key == "corpus") {
      cfg.corpus = get_string(v, ptr);
    } else if (key == "output") {
      cfg.output = get_string(v, ptr);
    } else if (key == "session_log") {
      cfg.session_log = get_string(v, ptr);
    } else if (key == "jobs") {
      if (!v.is_number_integer() || v.get<std::int64_t>() < 0) bad(ptr, "expected a non-negative integer");
      cfg.jobs = v.get<std::size_t>();
    } else if (key == "sweep") {
      if (!v.is_object()) bad(ptr, "expected an object");
      for (auto s = v.begin(); s != v.end(); ++s) {
        const std::string sp = ptr + "/" + s.key();
        if (s.key() == "param") {
          cfg.sweep.param = get_string(s.value(), sp);
          if (cfg.sweep.param != "k" && cfg.sweep.param != "lambda")
            bad(sp, "expected \"k\" or \"lambda\"");
        } else if (s.key() == "values") {
          if (!s.value().is_array() || s.value().empty()) bad(sp, "expected a non-empty array");
          for (std::size_t i = 0; i < s.value().size(); ++i) {
            const json& x = s.value()[i];
            if (!x.is_number()) bad(sp + "/" + std::to_string(i), "expected a number");
            cfg.sweep.values.push_back(x.get<double>());
          }
        } else {
          bad(sp, "unknown key");
        }
      }
    } else if (key == "server") {
      if (!v.is_object()) bad(ptr, "expected an object");
      for (auto s = v.begin(); s != v.end(); ++s) {
        const std::string sp = ptr + "/" + s.key();
        if (s.key() == "endpoint") cfg.server.endpoint = get_string(s.value(), sp);
        else if (s.key() == "session_timeout_ms") cfg.server.session_timeout_ms = get_ms(s.value(), sp);
        else if (s.key() == "idle_timeout_ms") cfg.server.idle_timeout_ms = get_ms(s.value(), sp);
        else bad(sp, "unknown key");
      }
    } else {
      bad(ptr, "unknown key");
    }
  }
  return cfg;
}

AppConfig load_app_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + " (byte " +
                      std::to_string(e.byte) + "): syntax error");
  }
  try {
    return parse_app_config(doc);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void init_logging_from_env() {
  const char* env = std::getenv("SIMULST_LOG_LEVEL");
  spdlog::level::level_enum level = spdlog::level::warn;
  if (env != nullptr && *env != '\0') {
    level = spdlog::level::from_str(env);
    // from_str maps unknown names to off
    if (level == spdlog::level::off && std::string(env) != "off") level = spdlog::level::warn;
  }
  static const auto logger = [] {
    auto l = spdlog::stderr_color_mt("simulst");
    spdlog::set_default_logger(l);
    return l;
  }();
  logger->set_level(level);
  spdlog::set_level(level);
}

}  // namespace simulst
