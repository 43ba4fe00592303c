#pragma once

// Visual-query evaluation: filter strings, box and lasso selections on the
// (combined feature distance, density distance) scatter plot, seeded
// subsampling, and replay of saved selections.
//
// Filter-string grammar (version 1):
//
//   filter   := "" | clause ("; " clause)*
//   clause   := axis " " levels | axis " [" number "," number "]"
//   levels   := int ("," int)*
//   axis     := profile | s1 | cs | mgrg | s2 | rho0 | tshift
//             | dshock | dedge | drho
//
// Categorical clauses apply to parameter axes only; range bounds are
// inclusive. The canonical form orders clauses by axis declaration order,
// sorts and deduplicates levels, and prints numbers in shortest round-trip
// form. The parser accepts extra whitespace and any clause order.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simsel/core.hpp"

namespace simsel {

class Store;

// Clauses sorted by axis, categorical levels sorted and deduplicated.
FilterExpr canonicalize(FilterExpr filter);

// Always emits the canonical form.
std::string serialize_filter(const FilterExpr& filter);

// Errors carry the character offset of the offending token.
FilterExpr parse_filter(std::string_view text);

// One simulation's row in the parallel-coordinates view.
struct JoinedRow {
  SimId sim_id = 0;
  ParamLevels params{};
  double delta_shock = 0.0;
  double delta_edge = 0.0;
  double delta_rho = 0.0;
  bool valid = true;  // false when the density supports did not overlap

  double axis_value(Axis axis) const;
  bool operator==(const JoinedRow&) const = default;
};

bool matches(const JoinedRow& row, const FilterExpr& filter);

std::vector<JoinedRow> apply_filter(std::span<const JoinedRow> rows,
                                    const FilterExpr& filter);

struct ScatterPoint {
  SimId sim_id = 0;
  double x = 0.0;  // w_shock * delta_shock + w_edge * delta_edge
  double y = 0.0;  // delta_rho
  ParamLevels params{};
};

// Invalid rows are dropped.
std::vector<ScatterPoint> scatter_points(std::span<const JoinedRow> rows,
                                         double w_shock, double w_edge);

// Boundary-inclusive. Throws kInvertedRect.
std::vector<SimId> select_box(std::span<const ScatterPoint> points,
                              const BoxGeometry& rect);

// Even-odd rule; points on an edge or vertex count as inside.
bool point_in_polygon(const Point2& p, std::span<const Point2> polygon);

// Throws kDegeneratePolygon for fewer than 3 vertices or all collinear.
std::vector<SimId> select_lasso(std::span<const ScatterPoint> points,
                                std::span<const Point2> polygon);

std::vector<SimId> select_geometry(std::span<const ScatterPoint> points,
                                   const Geometry& geometry);

// Bernoulli(p) keep decision for one id, independent of every other id.
bool subsample_keep(SimId id, double p, std::uint64_t seed);

// Order-preserving; throws kInvalidProbability unless 0 < p <= 1.
std::vector<SimId> subsample(std::span<const SimId> ids, double p,
                             std::uint64_t seed);

// Full selection from already-fetched rows: filter, weights, geometry,
// subsample. Result sorted ascending.
std::vector<SimId> evaluate_selection(std::span<const JoinedRow> rows,
                                      const SelectionSpec& spec);

// Recomputes a saved selection from stored post-processed records.
// Throws kNotFound for an unknown method, kStaleRecords when the method has
// fewer rows at spec.time_step than there are simulations.
std::vector<SimId> replay(const SelectionSpec& spec, Store& store);

}  // namespace simsel
