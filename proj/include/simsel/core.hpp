#pragma once

// Shared domain types for the ensemble post-processing and selection tools.
//
// Everything here is a plain value type. Checking an invariant never touches
// the store; referenced-ID existence checks live in Store.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace simsel {

inline constexpr std::size_t kParamCount = 7;

// Declaration order is also the canonical axis order of filter strings.
// profile, s1, cs and mgrg are the parameters named in the published study;
// s2, rho0 and tshift are placeholder names for the remaining three.
inline constexpr std::array<std::string_view, kParamCount> kParamNames = {
    "profile", "s1", "cs", "mgrg", "s2", "rho0", "tshift"};

inline constexpr int kDefaultTimeSteps = 40;

using ParamLevels = std::array<int, kParamCount>;
using SimId = std::int64_t;
using MethodId = std::int64_t;
using GroundTruthId = std::int64_t;
using DatasetId = std::int64_t;

std::optional<std::size_t> param_index(std::string_view name);

/// Uniform cell-centered (R, z) grid. R_j = (j + 1/2) dR and
/// z_k = (k + 1/2) dz - n_z dz / 2, so every R_j is strictly positive.
struct CylGrid {
  int n_r = 0;
  int n_z = 0;
  double d_r = 0.0;
  double d_z = 0.0;

  std::size_t size() const {
    return static_cast<std::size_t>(n_r) * static_cast<std::size_t>(n_z);
  }
  std::size_t index(int j, int k) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(n_z) +
           static_cast<std::size_t>(k);
  }
  double radius(int j) const { return (j + 0.5) * d_r; }
  double axial(int k) const { return (k + 0.5) * d_z - 0.5 * n_z * d_z; }

  bool operator==(const CylGrid&) const = default;
};

/// Density in g/cc, row-major over (j, k): values[j * n_z + k].
struct DensityField {
  CylGrid grid;
  std::vector<double> values;

  double at(int j, int k) const { return values[grid.index(j, k)]; }
  bool operator==(const DensityField&) const = default;
};

struct FeatureSet {
  std::vector<double> shock_coeffs;
  std::vector<double> edge_coeffs;

  bool operator==(const FeatureSet&) const = default;
};

struct SimulationRecord {
  SimId sim_id = 0;
  ParamLevels params{};
  std::vector<std::string> density_paths;  // index t-1 holds time step t
  std::string feature_path;

  bool operator==(const SimulationRecord&) const = default;
};

enum class NormKind { kL1, kL2, kLInf };

std::string_view norm_name(NormKind norm);
std::optional<NormKind> parse_norm(std::string_view text);

struct MethodInfo {
  MethodId method_id = 0;
  GroundTruthId ground_truth_id = 0;
  int gt_time_step = 1;
  NormKind norm = NormKind::kL2;
  std::string description;
  // Reserved: compare sim-at-t against GT-at-t instead of GT-at-gt_time_step.
  bool match_time_steps = false;

  bool operator==(const MethodInfo&) const = default;
};

struct PostRecord {
  MethodId method_id = 0;
  SimId sim_id = 0;
  int time_step = 1;
  double delta_shock = 0.0;
  double delta_edge = 0.0;
  // Empty when the density supports did not overlap.
  std::optional<double> delta_rho;

  bool valid() const { return delta_rho.has_value(); }
  bool operator==(const PostRecord&) const = default;
};

// Filter axes: the seven parameters followed by the three distances.
enum class Axis : std::uint8_t {
  kProfile,
  kS1,
  kCs,
  kMgrg,
  kS2,
  kRho0,
  kTshift,
  kDeltaShock,
  kDeltaEdge,
  kDeltaRho,
};
inline constexpr std::size_t kAxisCount = 10;

std::string_view axis_name(Axis axis);
std::optional<Axis> parse_axis(std::string_view name);
inline bool is_param_axis(Axis axis) {
  return static_cast<std::size_t>(axis) < kParamCount;
}

struct CategoricalClause {
  std::vector<int> levels;  // sorted, unique
  bool operator==(const CategoricalClause&) const = default;
};

struct RangeClause {
  double lo = 0.0;
  double hi = 0.0;  // inclusive
  bool operator==(const RangeClause&) const = default;
};

struct FilterClause {
  Axis axis = Axis::kProfile;
  std::variant<CategoricalClause, RangeClause> test;
  bool operator==(const FilterClause&) const = default;
};

struct FilterExpr {
  std::vector<FilterClause> clauses;

  bool empty() const { return clauses.empty(); }
  bool operator==(const FilterExpr&) const = default;
};

enum class SelectionType { kBox, kLasso };

std::string_view selection_type_name(SelectionType type);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point2&) const = default;
};

struct BoxGeometry {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
  bool operator==(const BoxGeometry&) const = default;
};

// Vertices in data coordinates; the polygon is implicitly closed.
struct LassoGeometry {
  std::vector<Point2> vertices;
  bool operator==(const LassoGeometry&) const = default;
};

using Geometry = std::variant<BoxGeometry, LassoGeometry>;

inline SelectionType selection_type(const Geometry& g) {
  return std::holds_alternative<BoxGeometry>(g) ? SelectionType::kBox
                                                : SelectionType::kLasso;
}

// Canonical text blob: "box x_min x_max y_min y_max" or
// "lasso x0 y0; x1 y1; ...". Numbers use shortest round-trip formatting.
std::string geometry_to_text(const Geometry& g);
Geometry geometry_from_text(std::string_view text);

struct SelectionSpec {
  MethodId method_id = 0;
  int time_step = kDefaultTimeSteps;
  double w_shock = 1.0;
  double w_edge = 1.0;
  std::string color_by = "profile";
  FilterExpr filter;
  Geometry geometry = BoxGeometry{};
  double subsample_p = 1.0;
  std::uint64_t subsample_seed = 0;
  std::string description;
  std::string created_at;  // ISO-8601 UTC

  bool operator==(const SelectionSpec&) const = default;
};

struct TrainingDataset {
  DatasetId dataset_id = 0;
  std::vector<SimId> members;  // sorted ascending
  SelectionSpec spec;

  bool operator==(const TrainingDataset&) const = default;
};

using LevelCounts = std::array<int, kParamCount>;

// Each validate() throws Error{kValidation} naming the first violated
// invariant.
void validate(const CylGrid& grid);
void validate(const DensityField& field);
void validate(const FeatureSet& features);
void validate(const SimulationRecord& record);
void validate(const SimulationRecord& record, const LevelCounts& levels);
void validate(const MethodInfo& method, int time_steps = kDefaultTimeSteps);
void validate(const PostRecord& record, int time_steps = kDefaultTimeSteps);
void validate(const FilterExpr& filter);
void validate(const Geometry& geometry);
void validate(const SelectionSpec& spec, int time_steps = kDefaultTimeSteps);
void validate(const TrainingDataset& dataset,
              int time_steps = kDefaultTimeSteps);

// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

// Current UTC time as "YYYY-MM-DDTHH:MM:SSZ".
std::string utc_timestamp_now();

}  // namespace simsel
