#pragma once

// Application configuration shared by the CLI and the HTTP service.
//
// File format: one `key = value` per line, `#` starts a comment. Keys:
//   store            path of the metadata store file
//   data_dir         directory for generated ensembles
//   bind             host:port for `serve`
//   ensemble_config  default ensemble config file for `generate`
//   verbosity        0 (quiet) .. 2 (debug)
//   jobs             pipeline worker threads
//   sync_work_limit  largest n_sims * T post-processed inline by the API
//   static_dir       directory of web assets served at /
//
// Environment overrides applied after the file: SIMSEL_STORE, SIMSEL_BIND.

#include <cstddef>
#include <filesystem>
#include <string>

namespace simsel {

struct AppConfig {
  std::filesystem::path store;
  std::filesystem::path data_dir = "data";
  std::string bind = "127.0.0.1:8080";
  std::filesystem::path ensemble_config;
  int verbosity = 1;
  int jobs = 1;
  std::size_t sync_work_limit = 20000;
  std::filesystem::path static_dir;
};

AppConfig parse_app_config(const std::string& text, AppConfig base = {});
AppConfig load_app_config(const std::filesystem::path& path, AppConfig base = {});
AppConfig apply_env_overrides(AppConfig config);

struct BindAddress {
  std::string host;
  int port = 0;
};

// "host:port" or ":port" (host defaults to 127.0.0.1).
BindAddress parse_bind(const std::string& text);

}  // namespace simsel
