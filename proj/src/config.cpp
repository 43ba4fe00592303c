#include "simsel/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <sstream>

#include "simsel/error.hpp"

namespace simsel {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T to_number(const std::string& key, const std::string& value) {
  T out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::kValidation,
                "config key '" + key + "' expects a number, got '" + value + "'");
  }
  return out;
}

}  // namespace

AppConfig parse_app_config(const std::string& text, AppConfig base) {
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kValidation,
                  "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "store") {
      base.store = value;
    } else if (key == "data_dir") {
      base.data_dir = value;
    } else if (key == "bind") {
      parse_bind(value);
      base.bind = value;
    } else if (key == "ensemble_config") {
      base.ensemble_config = value;
    } else if (key == "verbosity") {
      base.verbosity = to_number<int>(key, value);
    } else if (key == "jobs") {
      base.jobs = to_number<int>(key, value);
    } else if (key == "sync_work_limit") {
      base.sync_work_limit = to_number<std::size_t>(key, value);
    } else if (key == "static_dir") {
      base.static_dir = value;
    } else {
      throw Error(ErrorCode::kValidation, "unknown config key '" + key + "'");
    }
  }
  return base;
}

AppConfig load_app_config(const std::filesystem::path& path, AppConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config " + path.string());
  const std::string text{std::istreambuf_iterator<char>(in),
                         std::istreambuf_iterator<char>()};
  return parse_app_config(text, std::move(base));
}

AppConfig apply_env_overrides(AppConfig config) {
  if (const char* store = std::getenv("SIMSEL_STORE"); store && *store) {
    config.store = store;
  }
  if (const char* bind = std::getenv("SIMSEL_BIND"); bind && *bind) {
    parse_bind(bind);
    config.bind = bind;
  }
  return config;
}

BindAddress parse_bind(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) {
    throw Error(ErrorCode::kValidation, "bind address must be host:port");
  }
  BindAddress out;
  out.host = colon == 0 ? "127.0.0.1" : text.substr(0, colon);
  out.port = to_number<int>("bind", text.substr(colon + 1));
  if (out.port < 0 || out.port > 65535) {
    throw Error(ErrorCode::kValidation, "port out of range");
  }
  return out;
}

}  // namespace simsel
