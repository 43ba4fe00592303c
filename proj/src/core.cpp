#include "simsel/core.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <sstream>

#include "simsel/error.hpp"

namespace simsel {

namespace {

[[noreturn]] void fail(const std::string& message) {
  throw Error(ErrorCode::kValidation, message);
}

constexpr std::array<std::string_view, kAxisCount> kAxisNames = {
    "profile", "s1", "cs", "mgrg", "s2", "rho0", "tshift",
    "dshock", "dedge", "drho"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

double parse_double_token(std::string_view token) {
  double value = 0.0;
  auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw Error(ErrorCode::kValidation,
                "bad number in geometry: '" + std::string(token) + "'");
  }
  return value;
}

std::vector<double> parse_numbers(std::string_view text) {
  std::vector<double> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() &&
           std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    std::size_t start = i;
    while (i < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    if (i > start) out.push_back(parse_double_token(text.substr(start, i - start)));
  }
  return out;
}

}  // namespace

std::optional<std::size_t> param_index(std::string_view name) {
  for (std::size_t i = 0; i < kParamCount; ++i) {
    if (kParamNames[i] == name) return i;
  }
  return std::nullopt;
}

std::string_view norm_name(NormKind norm) {
  switch (norm) {
    case NormKind::kL1:
      return "L1";
    case NormKind::kL2:
      return "L2";
    case NormKind::kLInf:
      return "LINF";
  }
  return "?";
}

std::optional<NormKind> parse_norm(std::string_view text) {
  if (text == "L1") return NormKind::kL1;
  if (text == "L2") return NormKind::kL2;
  if (text == "LINF") return NormKind::kLInf;
  return std::nullopt;
}

std::string_view axis_name(Axis axis) {
  return kAxisNames[static_cast<std::size_t>(axis)];
}

std::optional<Axis> parse_axis(std::string_view name) {
  for (std::size_t i = 0; i < kAxisCount; ++i) {
    if (kAxisNames[i] == name) return static_cast<Axis>(i);
  }
  return std::nullopt;
}

std::string_view selection_type_name(SelectionType type) {
  return type == SelectionType::kBox ? "box" : "lasso";
}

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string utc_timestamp_now() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string geometry_to_text(const Geometry& g) {
  std::string out;
  if (const auto* box = std::get_if<BoxGeometry>(&g)) {
    out = "box " + format_number(box->x_min) + " " + format_number(box->x_max) +
          " " + format_number(box->y_min) + " " + format_number(box->y_max);
    return out;
  }
  const auto& lasso = std::get<LassoGeometry>(g);
  out = "lasso ";
  for (std::size_t i = 0; i < lasso.vertices.size(); ++i) {
    if (i > 0) out += "; ";
    out += format_number(lasso.vertices[i].x) + " " +
           format_number(lasso.vertices[i].y);
  }
  return out;
}

Geometry geometry_from_text(std::string_view text) {
  text = trim(text);
  if (text.rfind("box", 0) == 0) {
    auto nums = parse_numbers(text.substr(3));
    if (nums.size() != 4) {
      throw Error(ErrorCode::kValidation, "box geometry needs 4 numbers");
    }
    return BoxGeometry{nums[0], nums[1], nums[2], nums[3]};
  }
  if (text.rfind("lasso", 0) == 0) {
    LassoGeometry lasso;
    std::string_view rest = text.substr(5);
    while (!rest.empty()) {
      auto semi = rest.find(';');
      auto part = trim(rest.substr(0, semi));
      rest = semi == std::string_view::npos ? std::string_view{}
                                            : rest.substr(semi + 1);
      if (part.empty()) continue;
      auto nums = parse_numbers(part);
      if (nums.size() != 2) {
        throw Error(ErrorCode::kValidation, "lasso vertex needs 2 numbers");
      }
      lasso.vertices.push_back({nums[0], nums[1]});
    }
    return lasso;
  }
  throw Error(ErrorCode::kValidation,
              "unknown geometry kind in '" + std::string(text) + "'");
}

void validate(const CylGrid& grid) {
  if (grid.n_r < 1) fail("grid.n_r must be >= 1");
  if (grid.n_z < 1) fail("grid.n_z must be >= 1");
  if (!(grid.d_r > 0.0) || !std::isfinite(grid.d_r)) fail("grid.d_r must be > 0");
  if (!(grid.d_z > 0.0) || !std::isfinite(grid.d_z)) fail("grid.d_z must be > 0");
}

void validate(const DensityField& field) {
  validate(field.grid);
  if (field.values.size() != field.grid.size()) {
    fail("density values length " + std::to_string(field.values.size()) +
         " != n_r*n_z " + std::to_string(field.grid.size()));
  }
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    const double v = field.values[i];
    if (!std::isfinite(v) || v < 0.0) {
      fail("density value at cell " + std::to_string(i) + " (j=" +
           std::to_string(i / field.grid.n_z) + ", k=" +
           std::to_string(i % field.grid.n_z) +
           ") must be finite and >= 0");
    }
  }
}

void validate(const FeatureSet& features) {
  if (features.shock_coeffs.size() != features.edge_coeffs.size()) {
    fail("shock and edge coefficient vectors differ in length");
  }
  auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(),
                       [](double x) { return std::isfinite(x); });
  };
  if (!finite(features.shock_coeffs)) fail("non-finite shock coefficient");
  if (!finite(features.edge_coeffs)) fail("non-finite edge coefficient");
}

void validate(const SimulationRecord& record) {
  for (std::size_t i = 0; i < kParamCount; ++i) {
    if (record.params[i] < 0) {
      fail("parameter " + std::string(kParamNames[i]) + " level must be >= 0");
    }
  }
}

void validate(const SimulationRecord& record, const LevelCounts& levels) {
  validate(record);
  for (std::size_t i = 0; i < kParamCount; ++i) {
    if (record.params[i] >= levels[i]) {
      fail("parameter " + std::string(kParamNames[i]) + " level " +
           std::to_string(record.params[i]) + " >= level count " +
           std::to_string(levels[i]));
    }
  }
}

void validate(const MethodInfo& method, int time_steps) {
  if (method.gt_time_step < 1 || method.gt_time_step > time_steps) {
    fail("gt_time_step " + std::to_string(method.gt_time_step) +
         " outside [1, " + std::to_string(time_steps) + "]");
  }
}

void validate(const PostRecord& record, int time_steps) {
  if (record.time_step < 1 || record.time_step > time_steps) {
    fail("time_step outside [1, " + std::to_string(time_steps) + "]");
  }
  auto ok = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!ok(record.delta_shock)) fail("delta_shock must be finite and >= 0");
  if (!ok(record.delta_edge)) fail("delta_edge must be finite and >= 0");
  if (record.delta_rho && !ok(*record.delta_rho)) {
    fail("delta_rho must be finite and >= 0");
  }
}

void validate(const FilterExpr& filter) {
  std::array<bool, kAxisCount> seen{};
  for (const auto& clause : filter.clauses) {
    const auto idx = static_cast<std::size_t>(clause.axis);
    if (idx >= kAxisCount) fail("unknown filter axis");
    if (seen[idx]) {
      throw Error(ErrorCode::kDuplicateAxis,
                  "duplicate axis '" + std::string(axis_name(clause.axis)) +
                      "' in filter");
    }
    seen[idx] = true;
    if (const auto* cat = std::get_if<CategoricalClause>(&clause.test)) {
      if (!is_param_axis(clause.axis)) {
        fail("categorical clause on non-parameter axis '" +
             std::string(axis_name(clause.axis)) + "'");
      }
      if (cat->levels.empty()) fail("categorical clause with no levels");
      if (std::any_of(cat->levels.begin(), cat->levels.end(),
                      [](int v) { return v < 0; })) {
        fail("negative level in categorical clause");
      }
    } else {
      const auto& range = std::get<RangeClause>(clause.test);
      if (!std::isfinite(range.lo) || !std::isfinite(range.hi)) {
        fail("non-finite range bound");
      }
      if (range.lo > range.hi) {
        fail("range clause on '" + std::string(axis_name(clause.axis)) +
             "' has lo > hi");
      }
    }
  }
}

void validate(const Geometry& geometry) {
  if (const auto* box = std::get_if<BoxGeometry>(&geometry)) {
    for (double v : {box->x_min, box->x_max, box->y_min, box->y_max}) {
      if (!std::isfinite(v)) fail("non-finite box bound");
    }
    if (box->x_min > box->x_max) fail("box has x_min > x_max");
    if (box->y_min > box->y_max) fail("box has y_min > y_max");
    return;
  }
  const auto& lasso = std::get<LassoGeometry>(geometry);
  if (lasso.vertices.size() < 3) fail("lasso polygon needs >= 3 vertices");
  for (const auto& p : lasso.vertices) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      fail("non-finite lasso vertex");
    }
  }
}

void validate(const SelectionSpec& spec, int time_steps) {
  if (spec.description.empty()) fail("description required");
  if (spec.time_step < 1 || spec.time_step > time_steps) {
    fail("time_step outside [1, " + std::to_string(time_steps) + "]");
  }
  if (!(spec.w_shock >= 0.0 && spec.w_shock <= 1.0)) {
    fail("w_shock outside [0, 1]");
  }
  if (!(spec.w_edge >= 0.0 && spec.w_edge <= 1.0)) fail("w_edge outside [0, 1]");
  if (!param_index(spec.color_by)) {
    fail("color_by '" + spec.color_by + "' is not a parameter name");
  }
  if (!(spec.subsample_p > 0.0 && spec.subsample_p <= 1.0)) {
    fail("subsample_p outside (0, 1]");
  }
  validate(spec.filter);
  validate(spec.geometry);
}

void validate(const TrainingDataset& dataset, int time_steps) {
  if (dataset.members.empty()) fail("training dataset has no members");
  validate(dataset.spec, time_steps);
}

}  // namespace simsel
