#include "simsel/synth.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <iterator>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "simsel/distance.hpp"
#include "simsel/error.hpp"
#include "simsel/rng.hpp"

namespace simsel {

namespace fs = std::filesystem;

namespace {

constexpr double kInnerRadius = 0.2;
constexpr double kEdgeRadius0 = 1.05;
constexpr double kEdgeSpeed = 0.01;
constexpr double kCompression = 1.5;
constexpr double kShockCoupling = 0.25;
constexpr double kMaxEdgeJitter = 0.004;
constexpr std::array<double, 3> kShockSpeed = {0.0125, 0.020, 0.0275};
constexpr std::array<double, 3> kS1Amplitude = {0.0, 0.02, 0.04};
constexpr std::array<double, 2> kS2Amplitude = {0.0, 0.015};

enum : std::size_t { kProfile, kS1, kCs, kMgrg, kS2, kRho0, kTshift };

double effective_time(const ParamLevels& p, int t) {
  return static_cast<double>(t) + 2.0 * p[kTshift];
}

// Relative modulation of the edge at polar angle theta.
double edge_modulation(const ParamLevels& p, double theta) {
  return kS1Amplitude[p[kS1]] * std::cos(2.0 * theta) +
         kS2Amplitude[p[kS2]] * std::cos(4.0 * theta);
}

double edge_radius(const ParamLevels& p, int t) {
  return kEdgeRadius0 + kEdgeSpeed * effective_time(p, t);
}

double shock_at(const SimulationModel& m, int t, double theta) {
  return shock_radius(m.params, t) *
         (1.0 + kShockCoupling * edge_modulation(m.params, theta));
}

double edge_at(const SimulationModel& m, int t, double theta) {
  return edge_radius(m.params, t) * (1.0 + edge_modulation(m.params, theta)) +
         m.edge_jitter * std::cos(3.0 * theta);
}

// Interior shape of the compressed region, u in [0, 1] from inner radius to
// shock.
double profile_shape(int profile, double u) {
  switch (profile) {
    case 0:
      return 1.0 + u;
    case 1:
      return 1.0 + u + 0.15 * std::sin(std::numbers::pi * u);
    default:
      return 2.0 - u;
  }
}

void check_levels(const ParamLevels& p, const LevelCounts& levels) {
  for (std::size_t i = 0; i < kParamCount; ++i) {
    if (p[i] < 0 || p[i] >= levels[i] || p[i] >= kMaxGeneratorLevels[i]) {
      throw Error(ErrorCode::kInvalidLevel,
                  "level " + std::to_string(p[i]) + " invalid for parameter " +
                      std::string(kParamNames[i]));
    }
  }
}

void check_time(int t, const EnsembleConfig& config) {
  if (t < 1 || t > config.time_steps) {
    throw Error(ErrorCode::kInvalidTimeStep,
                "time step " + std::to_string(t) + " outside [1, " +
                    std::to_string(config.time_steps) + "]");
  }
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_value(std::string_view key, std::string_view text) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kValidation,
                "bad value for '" + std::string(key) + "': '" +
                    std::string(text) + "'");
  }
  return value;
}

std::vector<double> parse_number_line(std::string_view line) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i == start) break;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(line.data() + start, line.data() + i, v);
    if (ec != std::errc{} || ptr != line.data() + i) {
      throw Error(ErrorCode::kMalformedFile,
                  "bad number '" + std::string(line.substr(start, i - start)) +
                      "'");
    }
    out.push_back(v);
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string sim_dir_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sim_%04zu", index);
  return buf;
}

std::string density_file_name(int t) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "rho_t%02d.bin", t);
  return buf;
}

nlohmann::json config_to_json(const EnsembleConfig& c) {
  return {{"n_r", c.grid.n_r},          {"n_z", c.grid.n_z},
          {"d_r", c.grid.d_r},          {"d_z", c.grid.d_z},
          {"levels", c.levels},         {"time_steps", c.time_steps},
          {"n_theta", c.n_theta},       {"n_modes", c.n_modes},
          {"seed", c.seed}};
}

EnsembleConfig config_from_json(const nlohmann::json& j) {
  EnsembleConfig c;
  c.grid = {j.at("n_r").get<int>(), j.at("n_z").get<int>(),
            j.at("d_r").get<double>(), j.at("d_z").get<double>()};
  c.levels = j.at("levels").get<LevelCounts>();
  c.time_steps = j.at("time_steps").get<int>();
  c.n_theta = j.at("n_theta").get<int>();
  c.n_modes = j.at("n_modes").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace

std::size_t EnsembleConfig::ensemble_size() const {
  std::size_t n = 1;
  for (int l : levels) n *= static_cast<std::size_t>(std::max(l, 0));
  return n;
}

void validate(const EnsembleConfig& config) {
  validate(config.grid);
  for (std::size_t i = 0; i < kParamCount; ++i) {
    if (config.levels[i] < 1) {
      throw Error(ErrorCode::kValidation,
                  "level count for " + std::string(kParamNames[i]) +
                      " must be >= 1");
    }
    if (config.levels[i] > kMaxGeneratorLevels[i]) {
      throw Error(ErrorCode::kInvalidLevel,
                  "generator supports at most " +
                      std::to_string(kMaxGeneratorLevels[i]) + " levels of " +
                      std::string(kParamNames[i]));
    }
  }
  if (config.time_steps < 1) {
    throw Error(ErrorCode::kValidation, "time_steps must be >= 1");
  }
  if (config.n_modes < 1 || config.n_theta < 2 * config.n_modes) {
    throw Error(ErrorCode::kTooFewSamples, "n_theta must be >= 2 * n_modes");
  }
}

EnsembleConfig parse_ensemble_config(const std::string& text) {
  EnsembleConfig c;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kValidation,
                  "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key == "n_r") {
      c.grid.n_r = parse_value<int>(key, value);
    } else if (key == "n_z") {
      c.grid.n_z = parse_value<int>(key, value);
    } else if (key == "d_r") {
      c.grid.d_r = parse_value<double>(key, value);
    } else if (key == "d_z") {
      c.grid.d_z = parse_value<double>(key, value);
    } else if (key == "time_steps") {
      c.time_steps = parse_value<int>(key, value);
    } else if (key == "n_theta") {
      c.n_theta = parse_value<int>(key, value);
    } else if (key == "n_modes") {
      c.n_modes = parse_value<int>(key, value);
    } else if (key == "seed") {
      c.seed = parse_value<std::uint64_t>(key, value);
    } else if (key == "levels") {
      std::size_t i = 0;
      std::string_view rest = value;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        const auto item = trim(rest.substr(0, comma));
        if (i >= kParamCount) {
          throw Error(ErrorCode::kValidation, "levels needs exactly 7 entries");
        }
        c.levels[i++] = parse_value<int>(key, item);
        rest = comma == std::string_view::npos ? std::string_view{}
                                               : rest.substr(comma + 1);
      }
      if (i != kParamCount) {
        throw Error(ErrorCode::kValidation, "levels needs exactly 7 entries");
      }
    } else {
      throw Error(ErrorCode::kValidation,
                  "unknown config key '" + std::string(key) + "'");
    }
  }
  validate(c);
  return c;
}

EnsembleConfig load_ensemble_config(const fs::path& path) {
  return parse_ensemble_config(read_file(path));
}

ParamLevels params_for_index(const EnsembleConfig& config, std::size_t index) {
  if (index >= config.ensemble_size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "simulation index " + std::to_string(index) + " out of range");
  }
  ParamLevels p{};
  for (std::size_t i = kParamCount; i-- > 0;) {
    const auto n = static_cast<std::size_t>(config.levels[i]);
    p[i] = static_cast<int>(index % n);
    index /= n;
  }
  return p;
}

SimulationModel make_model(const EnsembleConfig& config, std::size_t index) {
  SimulationModel m;
  m.params = params_for_index(config, index);
  m.edge_jitter = kMaxEdgeJitter * unit_interval(mix_seed(config.seed, index));
  return m;
}

double shock_radius(const ParamLevels& p, int t) {
  const double speed = kShockSpeed[static_cast<std::size_t>(p[kCs])] *
                       (1.0 - 0.03 * p[kRho0]);
  return kInnerRadius + speed * effective_time(p, t);
}

DensityField density_at(const SimulationModel& model, int t,
                        const EnsembleConfig& config) {
  check_levels(model.params, config.levels);
  check_time(t, config);
  const auto& p = model.params;
  const auto& grid = config.grid;
  const double base = (1.0 + 0.08 * p[kRho0]) * (1.0 + 0.001 * p[kMgrg]);

  DensityField field{grid, std::vector<double>(grid.size(), 0.0)};
  for (int j = 0; j < grid.n_r; ++j) {
    const double radial = grid.radius(j);
    for (int k = 0; k < grid.n_z; ++k) {
      const double axial = grid.axial(k);
      const double r = std::hypot(radial, axial);
      if (r < kInnerRadius) continue;
      const double theta = std::atan2(radial, axial);
      if (r > edge_at(model, t, theta)) continue;
      const double shock = shock_at(model, t, theta);
      double rho = base;
      if (r <= shock) {
        const double u = std::clamp((r - kInnerRadius) / (shock - kInnerRadius),
                                    0.0, 1.0);
        rho = base * kCompression * profile_shape(p[kProfile], u);
      }
      field.values[grid.index(j, k)] = rho;
    }
  }
  return field;
}

FeatureSet features_at(const SimulationModel& model, int t,
                       const EnsembleConfig& config) {
  check_levels(model.params, config.levels);
  check_time(t, config);
  const auto n = static_cast<std::size_t>(config.n_theta);
  std::vector<double> shock(n);
  std::vector<double> edge(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(i) /
                         static_cast<double>(n);
    shock[i] = shock_at(model, t, theta);
    edge[i] = edge_at(model, t, theta);
  }
  return {fourier_decompose(shock, config.n_modes),
          fourier_decompose(edge, config.n_modes)};
}

std::vector<SimulationRecord> generate_ensemble(const EnsembleConfig& config,
                                                const fs::path& out_dir,
                                                int jobs) {
  validate(config);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw Error(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " +
                                    ec.message());
  }
  const fs::path root = fs::absolute(out_dir);
  const std::size_t count = config.ensemble_size();
  std::vector<SimulationRecord> records(count);

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        const SimulationModel model = make_model(config, i);
        const fs::path dir = root / sim_dir_name(i);
        fs::create_directories(dir);
        SimulationRecord rec;
        rec.sim_id = static_cast<SimId>(i);
        rec.params = model.params;
        std::vector<FeatureSet> features;
        for (int t = 1; t <= config.time_steps; ++t) {
          const fs::path file = dir / density_file_name(t);
          write_density(density_at(model, t, config), file);
          rec.density_paths.push_back(file.string());
          features.push_back(features_at(model, t, config));
        }
        rec.feature_path = (dir / "features.txt").string();
        write_features(features, rec.feature_path);
        records[i] = std::move(rec);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  const int n_threads = std::clamp(jobs, 1, 64);
  std::vector<std::jthread> threads;
  for (int i = 1; i < n_threads; ++i) threads.emplace_back(worker);
  worker();
  threads.clear();
  if (first_error) std::rethrow_exception(first_error);

  write_manifest(config, records, root / "manifest.json");
  return records;
}

void write_density(const DensityField& field, const fs::path& path) {
  validate(field);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << field.grid.n_r << ' ' << field.grid.n_z << ' '
      << format_number(field.grid.d_r) << ' ' << format_number(field.grid.d_z)
      << '\n';
  std::vector<char> payload(field.values.size() * sizeof(double));
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    auto bits = std::bit_cast<std::uint64_t>(field.values[i]);
    for (int b = 0; b < 8; ++b) {
      payload[i * 8 + static_cast<std::size_t>(b)] =
          static_cast<char>((bits >> (8 * b)) & 0xff);
    }
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

DensityField read_density(const fs::path& path) {
  const std::string data = read_file(path);
  const auto newline = data.find('\n');
  if (data.empty() || newline == std::string::npos) {
    throw Error(ErrorCode::kMalformedFile,
                path.string() + ": missing density header");
  }
  std::istringstream header(data.substr(0, newline));
  DensityField field;
  std::string d_r;
  std::string d_z;
  if (!(header >> field.grid.n_r >> field.grid.n_z >> d_r >> d_z)) {
    throw Error(ErrorCode::kMalformedFile,
                path.string() + ": bad density header");
  }
  try {
    field.grid.d_r = parse_value<double>("d_r", d_r);
    field.grid.d_z = parse_value<double>("d_z", d_z);
    validate(field.grid);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
  const std::size_t payload = data.size() - newline - 1;
  if (payload != field.grid.size() * sizeof(double)) {
    throw Error(ErrorCode::kMalformedFile,
                path.string() + ": header declares " +
                    std::to_string(field.grid.size()) + " values but payload has " +
                    std::to_string(payload) + " bytes");
  }
  field.values.resize(field.grid.size());
  const auto* bytes =
      reinterpret_cast<const unsigned char*>(data.data() + newline + 1);
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(bytes[i * 8 + static_cast<std::size_t>(b)])
              << (8 * b);
    }
    field.values[i] = std::bit_cast<double>(bits);
  }
  return field;
}

void write_features(const std::vector<FeatureSet>& per_step,
                    const fs::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  auto write_line = [&out](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i > 0) out << ' ';
      out << format_number(v[i]);
    }
    out << '\n';
  };
  for (const auto& fset : per_step) {
    write_line(fset.shock_coeffs);
    write_line(fset.edge_coeffs);
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::vector<FeatureSet> read_features(const fs::path& path) {
  const std::string data = read_file(path);
  if (data.empty()) {
    throw Error(ErrorCode::kMalformedFile, path.string() + ": empty feature file");
  }
  std::vector<std::vector<double>> lines;
  std::istringstream in(data);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    lines.push_back(parse_number_line(line));
  }
  if (lines.empty() || lines.size() % 2 != 0) {
    throw Error(ErrorCode::kMalformedFile,
                path.string() + ": expected shock/edge line pairs");
  }
  std::vector<FeatureSet> out;
  for (std::size_t i = 0; i < lines.size(); i += 2) {
    FeatureSet fset{std::move(lines[i]), std::move(lines[i + 1])};
    if (fset.shock_coeffs.size() != fset.edge_coeffs.size() ||
        (!out.empty() && fset.shock_coeffs.size() != out.front().shock_coeffs.size())) {
      throw Error(ErrorCode::kMalformedFile,
                  path.string() + ": inconsistent coefficient counts");
    }
    out.push_back(std::move(fset));
  }
  return out;
}

void write_manifest(const EnsembleConfig& config,
                    const std::vector<SimulationRecord>& records,
                    const fs::path& path) {
  const fs::path base = fs::absolute(path).parent_path();
  nlohmann::json sims = nlohmann::json::array();
  for (const auto& rec : records) {
    nlohmann::json params = nlohmann::json::object();
    for (std::size_t i = 0; i < kParamCount; ++i) {
      params[std::string(kParamNames[i])] = rec.params[i];
    }
    nlohmann::json densities = nlohmann::json::array();
    for (const auto& p : rec.density_paths) {
      densities.push_back(fs::path(p).lexically_relative(base).generic_string());
    }
    sims.push_back({{"sim_id", rec.sim_id},
                    {"params", params},
                    {"density_paths", densities},
                    {"feature_path", fs::path(rec.feature_path)
                                         .lexically_relative(base)
                                         .generic_string()}});
  }
  nlohmann::json doc = {{"format", "simsel-manifest"},
                        {"version", 1},
                        {"param_names", kParamNames},
                        {"config", config_to_json(config)},
                        {"simulations", sims}};
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << doc.dump(1) << '\n';
}

Manifest read_manifest(const fs::path& path) {
  const fs::path base = fs::absolute(path).parent_path();
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
  try {
    if (doc.at("format") != "simsel-manifest") {
      throw Error(ErrorCode::kMalformedFile, path.string() + ": not a manifest");
    }
    Manifest m;
    m.config = config_from_json(doc.at("config"));
    for (const auto& s : doc.at("simulations")) {
      SimulationRecord rec;
      rec.sim_id = s.at("sim_id").get<SimId>();
      for (std::size_t i = 0; i < kParamCount; ++i) {
        rec.params[i] = s.at("params").at(std::string(kParamNames[i])).get<int>();
      }
      for (const auto& d : s.at("density_paths")) {
        rec.density_paths.push_back((base / d.get<std::string>()).lexically_normal().string());
      }
      rec.feature_path =
          (base / s.at("feature_path").get<std::string>()).lexically_normal().string();
      m.simulations.push_back(std::move(rec));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedFile, path.string() + ": " + e.what());
  }
}

}  // namespace simsel
