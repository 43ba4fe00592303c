#include "simsel/selection.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "simsel/distance.hpp"
#include "simsel/error.hpp"
#include "simsel/rng.hpp"
#include "simsel/store.hpp"

namespace simsel {

namespace {

// Cursor over the filter text; every error reports the absolute offset.
class FilterScanner {
 public:
  explicit FilterScanner(std::string_view text) : text_(text) {}

  std::size_t pos() const { return pos_; }
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }

  void skip_spaces() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(text_[pos_])) &&
           text_[pos_] != ';') {
      ++pos_;
    }
  }

  bool consume(char c) {
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  std::string_view identifier() {
    const std::size_t start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                         text_[pos_] == '_')) {
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  // Token up to the next delimiter in `stops` or whitespace.
  std::string_view token(std::string_view stops) {
    const std::size_t start = pos_;
    while (!at_end() && stops.find(text_[pos_]) == std::string_view::npos &&
           !std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  [[noreturn]] void fail(ErrorCode code, const std::string& what,
                         std::size_t at) const {
    throw Error(code, what + " at position " + std::to_string(at), at);
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

double parse_bound(FilterScanner& s, std::string_view stops) {
  s.skip_spaces();
  const std::size_t at = s.pos();
  const auto tok = s.token(stops);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size() ||
      !std::isfinite(value)) {
    s.fail(ErrorCode::kMalformedClause,
           "expected a number, found '" + std::string(tok) + "'", at);
  }
  s.skip_spaces();
  return value;
}

int parse_level(FilterScanner& s) {
  s.skip_spaces();
  const std::size_t at = s.pos();
  const auto tok = s.token(",;");
  int value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (tok.empty() || ec != std::errc{} || ptr != tok.data() + tok.size() ||
      value < 0) {
    s.fail(ErrorCode::kMalformedClause,
           "expected a non-negative level, found '" + std::string(tok) + "'", at);
  }
  s.skip_spaces();
  return value;
}

FilterClause parse_clause(FilterScanner& s) {
  s.skip_spaces();
  const std::size_t axis_at = s.pos();
  const auto name = s.identifier();
  if (name.empty()) {
    s.fail(ErrorCode::kMalformedClause, "expected an axis name", axis_at);
  }
  const auto axis = parse_axis(name);
  if (!axis) {
    s.fail(ErrorCode::kUnknownAxis, "unknown axis '" + std::string(name) + "'",
           axis_at);
  }
  FilterClause clause{*axis, CategoricalClause{}};
  s.skip_spaces();
  const std::size_t body_at = s.pos();
  if (s.consume('[')) {
    RangeClause range;
    range.lo = parse_bound(s, ",]");
    if (!s.consume(',')) {
      s.fail(ErrorCode::kMalformedClause, "expected ',' in range", s.pos());
    }
    range.hi = parse_bound(s, "]");
    if (!s.consume(']')) {
      s.fail(ErrorCode::kMalformedClause, "expected ']' to close range", s.pos());
    }
    if (range.lo > range.hi) {
      s.fail(ErrorCode::kMalformedClause, "range has lo > hi", body_at);
    }
    clause.test = range;
  } else {
    if (!is_param_axis(*axis)) {
      s.fail(ErrorCode::kMalformedClause,
             "axis '" + std::string(name) + "' takes a [lo,hi] range", body_at);
    }
    if (body_at == axis_at + name.size() || s.at_end() || s.peek() == ';') {
      s.fail(ErrorCode::kMalformedClause, "expected levels after axis", body_at);
    }
    CategoricalClause cat;
    cat.levels.push_back(parse_level(s));
    while (s.consume(',')) cat.levels.push_back(parse_level(s));
    clause.test = std::move(cat);
  }
  s.skip_spaces();
  if (!s.at_end() && s.peek() != ';') {
    s.fail(ErrorCode::kMalformedClause,
           std::string("unexpected '") + s.peek() + "'", s.pos());
  }
  return clause;
}

}  // namespace

FilterExpr canonicalize(FilterExpr filter) {
  for (auto& clause : filter.clauses) {
    if (auto* cat = std::get_if<CategoricalClause>(&clause.test)) {
      std::sort(cat->levels.begin(), cat->levels.end());
      cat->levels.erase(std::unique(cat->levels.begin(), cat->levels.end()),
                        cat->levels.end());
    }
  }
  std::stable_sort(filter.clauses.begin(), filter.clauses.end(),
                   [](const FilterClause& a, const FilterClause& b) {
                     return a.axis < b.axis;
                   });
  return filter;
}

std::string serialize_filter(const FilterExpr& filter) {
  const FilterExpr canonical = canonicalize(filter);
  std::string out;
  for (const auto& clause : canonical.clauses) {
    if (!out.empty()) out += "; ";
    out += axis_name(clause.axis);
    if (const auto* cat = std::get_if<CategoricalClause>(&clause.test)) {
      out += ' ';
      for (std::size_t i = 0; i < cat->levels.size(); ++i) {
        if (i > 0) out += ',';
        out += std::to_string(cat->levels[i]);
      }
    } else {
      const auto& range = std::get<RangeClause>(clause.test);
      out += " [" + format_number(range.lo) + "," + format_number(range.hi) + "]";
    }
  }
  return out;
}

FilterExpr parse_filter(std::string_view text) {
  FilterExpr filter;
  FilterScanner s(text);
  s.skip_spaces();
  if (s.at_end()) return filter;
  std::array<bool, kAxisCount> seen{};
  while (true) {
    s.skip_spaces();
    const std::size_t clause_at = s.pos();
    FilterClause clause = parse_clause(s);
    const auto idx = static_cast<std::size_t>(clause.axis);
    if (seen[idx]) {
      s.fail(ErrorCode::kDuplicateAxis,
             "axis '" + std::string(axis_name(clause.axis)) + "' repeated",
             clause_at);
    }
    seen[idx] = true;
    filter.clauses.push_back(std::move(clause));
    if (s.at_end()) break;
    s.consume(';');
  }
  return canonicalize(std::move(filter));
}

double JoinedRow::axis_value(Axis axis) const {
  switch (axis) {
    case Axis::kDeltaShock:
      return delta_shock;
    case Axis::kDeltaEdge:
      return delta_edge;
    case Axis::kDeltaRho:
      return valid ? delta_rho : std::numeric_limits<double>::quiet_NaN();
    default:
      break;
  }
  const auto idx = static_cast<std::size_t>(axis);
  if (idx >= kParamCount) {
    throw Error(ErrorCode::kUnknownAxis, "unknown axis index " + std::to_string(idx));
  }
  return params[idx];
}

bool matches(const JoinedRow& row, const FilterExpr& filter) {
  for (const auto& clause : filter.clauses) {
    if (static_cast<std::size_t>(clause.axis) >= kAxisCount) {
      throw Error(ErrorCode::kUnknownAxis, "unknown axis in filter");
    }
    if (const auto* cat = std::get_if<CategoricalClause>(&clause.test)) {
      if (!is_param_axis(clause.axis)) return false;
      const int level = row.params[static_cast<std::size_t>(clause.axis)];
      if (std::find(cat->levels.begin(), cat->levels.end(), level) ==
          cat->levels.end()) {
        return false;
      }
    } else {
      const auto& range = std::get<RangeClause>(clause.test);
      const double v = row.axis_value(clause.axis);
      if (!(range.lo <= v && v <= range.hi)) return false;
    }
  }
  return true;
}

std::vector<JoinedRow> apply_filter(std::span<const JoinedRow> rows,
                                    const FilterExpr& filter) {
  std::vector<JoinedRow> out;
  for (const auto& row : rows) {
    if (matches(row, filter)) out.push_back(row);
  }
  return out;
}

std::vector<ScatterPoint> scatter_points(std::span<const JoinedRow> rows,
                                         double w_shock, double w_edge) {
  std::vector<ScatterPoint> out;
  out.reserve(rows.size());
  for (const auto& row : rows) {
    if (!row.valid) continue;
    out.push_back({row.sim_id,
                   combined_feature_distance(row.delta_shock, row.delta_edge,
                                             w_shock, w_edge),
                   row.delta_rho, row.params});
  }
  return out;
}

std::vector<SimId> select_box(std::span<const ScatterPoint> points,
                              const BoxGeometry& rect) {
  if (rect.x_min > rect.x_max || rect.y_min > rect.y_max) {
    throw Error(ErrorCode::kInvertedRect, "selection rectangle is inverted");
  }
  std::vector<SimId> out;
  for (const auto& p : points) {
    if (rect.x_min <= p.x && p.x <= rect.x_max && rect.y_min <= p.y &&
        p.y <= rect.y_max) {
      out.push_back(p.sim_id);
    }
  }
  return out;
}

bool point_in_polygon(const Point2& p, std::span<const Point2> polygon) {
  const std::size_t n = polygon.size();
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point2& a = polygon[i];
    const Point2& b = polygon[j];
    const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
    if (cross == 0.0 && std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
        std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y)) {
      return true;
    }
    if ((a.y > p.y) != (b.y > p.y) &&
        p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) {
      inside = !inside;
    }
  }
  return inside;
}

std::vector<SimId> select_lasso(std::span<const ScatterPoint> points,
                                std::span<const Point2> polygon) {
  if (polygon.size() < 3) {
    throw Error(ErrorCode::kDegeneratePolygon, "lasso needs at least 3 vertices");
  }
  const Point2& o = polygon[0];
  bool has_area = false;
  for (std::size_t i = 1; i + 1 < polygon.size() && !has_area; ++i) {
    for (std::size_t k = i + 1; k < polygon.size(); ++k) {
      const double cross = (polygon[i].x - o.x) * (polygon[k].y - o.y) -
                           (polygon[i].y - o.y) * (polygon[k].x - o.x);
      if (cross != 0.0) {
        has_area = true;
        break;
      }
    }
  }
  if (!has_area) {
    throw Error(ErrorCode::kDegeneratePolygon, "lasso vertices are collinear");
  }
  std::vector<SimId> out;
  for (const auto& p : points) {
    if (point_in_polygon({p.x, p.y}, polygon)) out.push_back(p.sim_id);
  }
  return out;
}

std::vector<SimId> select_geometry(std::span<const ScatterPoint> points,
                                   const Geometry& geometry) {
  if (const auto* box = std::get_if<BoxGeometry>(&geometry)) {
    return select_box(points, *box);
  }
  return select_lasso(points, std::get<LassoGeometry>(geometry).vertices);
}

bool subsample_keep(SimId id, double p, std::uint64_t seed) {
  return unit_interval(mix_seed(seed, static_cast<std::uint64_t>(id))) < p;
}

std::vector<SimId> subsample(std::span<const SimId> ids, double p,
                             std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kInvalidProbability,
                "subsample probability must lie in (0, 1]");
  }
  std::vector<SimId> out;
  for (SimId id : ids) {
    if (subsample_keep(id, p, seed)) out.push_back(id);
  }
  return out;
}

std::vector<SimId> evaluate_selection(std::span<const JoinedRow> rows,
                                      const SelectionSpec& spec) {
  const auto filtered = apply_filter(rows, spec.filter);
  const auto points = scatter_points(filtered, spec.w_shock, spec.w_edge);
  auto ids = select_geometry(points, spec.geometry);
  std::sort(ids.begin(), ids.end());
  return subsample(ids, spec.subsample_p, spec.subsample_seed);
}

std::vector<SimId> replay(const SelectionSpec& spec, Store& store) {
  const MethodInfo method = store.get_method(spec.method_id);
  const auto result = store.query_records(method.method_id, spec.time_step);
  const std::size_t expected = store.simulation_count();
  if (result.rows.size() < expected) {
    throw Error(ErrorCode::kStaleRecords,
                "method " + std::to_string(method.method_id) + " has " +
                    std::to_string(result.rows.size()) + " of " +
                    std::to_string(expected) + " records at time step " +
                    std::to_string(spec.time_step));
  }
  return evaluate_selection(result.rows, spec);
}

}  // namespace simsel
