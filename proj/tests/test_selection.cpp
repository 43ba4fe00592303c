#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "simsel/error.hpp"
#include "simsel/rng.hpp"
#include "simsel/selection.hpp"
#include "support/test_support.hpp"

using namespace simsel;
using simsel::testing::on_boundary;
using simsel::testing::random_filter_text;
using simsel::testing::winding_number;

namespace {

struct Caught {
  ErrorCode code;
  std::optional<std::size_t> position;
};

Caught catch_error(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return {e.code(), e.position()};
  }
  FAIL("expected simsel::Error");
  return {ErrorCode::kInvalidArgument, {}};
}

std::vector<JoinedRow> grid_rows() {
  std::vector<JoinedRow> rows;
  SimId id = 0;
  for (int profile = 0; profile < 3; ++profile) {
    for (int s1 = 0; s1 < 3; ++s1) {
      for (int cs = 0; cs < 3; ++cs) {
        JoinedRow r;
        r.sim_id = id++;
        r.params = {profile, s1, cs, 0, 0, 0, 0};
        r.delta_shock = 0.05 * cs + 0.001 * s1;
        r.delta_edge = 0.01 * s1;
        r.delta_rho = 0.1 * profile + 0.01 * cs;
        rows.push_back(r);
      }
    }
  }
  return rows;
}

std::vector<SimId> ids(const std::vector<JoinedRow>& rows) {
  std::vector<SimId> out;
  for (const auto& r : rows) out.push_back(r.sim_id);
  return out;
}

std::vector<ScatterPoint> points(std::initializer_list<Point2> xy) {
  std::vector<ScatterPoint> out;
  SimId id = 0;
  for (auto p : xy) out.push_back({id++, p.x, p.y, {}});
  return out;
}

}  // namespace

TEST_CASE("parse the published filter string") {
  const auto f = parse_filter("profile 0; s1 0");
  REQUIRE(f.clauses.size() == 2);
  CHECK(f.clauses[0].axis == Axis::kProfile);
  CHECK(std::get<CategoricalClause>(f.clauses[0].test).levels == std::vector<int>{0});
  CHECK(f.clauses[1].axis == Axis::kS1);
  CHECK(std::get<CategoricalClause>(f.clauses[1].test).levels == std::vector<int>{0});
  CHECK(serialize_filter(f) == "profile 0; s1 0");
}

TEST_CASE("empty filter and range clause") {
  CHECK(parse_filter("").empty());
  CHECK(serialize_filter(FilterExpr{}) == "");
  const auto f = parse_filter("dshock [0,0.1]");
  REQUIRE(f.clauses.size() == 1);
  CHECK(f.clauses[0].axis == Axis::kDeltaShock);
  const auto& r = std::get<RangeClause>(f.clauses[0].test);
  CHECK(r.lo == 0.0);
  CHECK(r.hi == 0.1);
  JoinedRow row;
  row.delta_shock = 0.1;
  CHECK(matches(row, f));
  row.delta_shock = 0.0;
  CHECK(matches(row, f));
  row.delta_shock = std::nextafter(0.1, 1.0);
  CHECK_FALSE(matches(row, f));
}

TEST_CASE("canonicalization") {
  const auto f = parse_filter("  cs 2,0,2 ;  profile   1 ; drho [ 1e-3 , 2.5 ]");
  CHECK(serialize_filter(f) == "profile 1; cs 0,2; drho [0.001,2.5]");
  CHECK(serialize_filter(parse_filter(serialize_filter(f))) == serialize_filter(f));
}

TEST_CASE("malformed filters carry positions") {
  auto c = catch_error([] { parse_filter("profile 0; volume 3"); });
  CHECK(c.code == ErrorCode::kUnknownAxis);
  CHECK(c.position == 11u);

  c = catch_error([] { parse_filter("profile 0; profile 1"); });
  CHECK(c.code == ErrorCode::kDuplicateAxis);
  CHECK(c.position == 11u);

  c = catch_error([] { parse_filter("profile x"); });
  CHECK(c.code == ErrorCode::kMalformedClause);
  CHECK(c.position == 8u);

  c = catch_error([] { parse_filter("dshock [0.5,0.1]"); });
  CHECK(c.code == ErrorCode::kMalformedClause);
  REQUIRE(c.position.has_value());

  c = catch_error([] { parse_filter("dshock [0,1"); });
  CHECK(c.code == ErrorCode::kMalformedClause);
  REQUIRE(c.position.has_value());
  CHECK(*c.position <= 11u);

  c = catch_error([] { parse_filter("dshock 1"); });
  CHECK(c.code == ErrorCode::kMalformedClause);

  c = catch_error([] { parse_filter("profile 0;"); });
  CHECK(c.code == ErrorCode::kMalformedClause);
  REQUIRE(c.position.has_value());

  c = catch_error([] { parse_filter("profile"); });
  CHECK(c.code == ErrorCode::kMalformedClause);
}

TEST_CASE("filter round-trip property") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    const auto text = random_filter_text(rng);
    const auto f = parse_filter(text);
    const auto canon = serialize_filter(f);
    CHECK(parse_filter(canon) == canonicalize(f));
    CHECK(serialize_filter(parse_filter(canon)) == canon);
  }
}

TEST_CASE("apply_filter semantics") {
  const auto rows = grid_rows();
  CHECK(apply_filter(rows, FilterExpr{}).size() == rows.size());
  const auto p0 = apply_filter(rows, parse_filter("profile 0"));
  CHECK(p0.size() == 9);
  for (const auto& r : p0) CHECK(r.params[0] == 0);

  const auto a = ids(apply_filter(rows, parse_filter("profile 0,2")));
  const auto b = ids(apply_filter(rows, parse_filter("cs 1")));
  const auto both = ids(apply_filter(rows, parse_filter("profile 0,2; cs 1")));
  std::vector<SimId> inter;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
  CHECK(both == inter);
}

TEST_CASE("box selection") {
  const auto pts = points({{0, 0}, {1, 1}, {2, 2}});
  CHECK(select_box(pts, {0.5, 1.5, 0.5, 1.5}) == std::vector<SimId>{1});
  CHECK(select_box(pts, {1.0, 2.0, 1.0, 1.0}) == std::vector<SimId>{1});
  CHECK(catch_error([&] { select_box(pts, {2.0, 1.0, 0.0, 1.0}); }).code ==
        ErrorCode::kInvertedRect);
}

TEST_CASE("box monotonicity and filter commutation") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto rows = grid_rows();
  for (int trial = 0; trial < 200; ++trial) {
    const double x0 = u(rng) * 0.2, x1 = x0 + u(rng) * 0.2;
    const double y0 = u(rng) * 0.3, y1 = y0 + u(rng) * 0.3;
    const BoxGeometry small{x0, x1, y0, y1};
    const BoxGeometry big{x0 - u(rng) * 0.05, x1 + u(rng) * 0.05, y0 - u(rng) * 0.05,
                          y1 + u(rng) * 0.05};
    const auto pts = scatter_points(rows, 1.0, 1.0);
    const auto s = select_box(pts, small);
    const auto b = select_box(pts, big);
    CHECK(std::includes(b.begin(), b.end(), s.begin(), s.end()));

    const auto f = parse_filter(random_filter_text(rng, false));
    const auto filtered = apply_filter(rows, f);
    const auto filter_then_box = select_box(scatter_points(filtered, 1.0, 1.0), small);
    std::vector<SimId> box_then_filter;
    for (SimId id : s) {
      if (matches(rows[static_cast<std::size_t>(id)], f)) box_then_filter.push_back(id);
    }
    CHECK(filter_then_box == box_then_filter);
  }
}

TEST_CASE("point in polygon basics") {
  const std::vector<Point2> square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  CHECK(point_in_polygon({0.5, 0.5}, square));
  CHECK_FALSE(point_in_polygon({2, 2}, square));
  CHECK(point_in_polygon({1.0, 0.5}, square));
  CHECK(point_in_polygon({0.0, 0.0}, square));
  CHECK(point_in_polygon({0.5, 1.0}, square));
  CHECK_FALSE(point_in_polygon({1.0 + 1e-9, 0.5}, square));

  const auto pts = points({{0.5, 0.5}, {2, 2}});
  CHECK(select_lasso(pts, square) == std::vector<SimId>{0});
  const std::vector<Point2> line{{0, 0}, {1, 1}, {2, 2}};
  CHECK(catch_error([&] { select_lasso(pts, line); }).code == ErrorCode::kDegeneratePolygon);
  const std::vector<Point2> two{{0, 0}, {1, 1}};
  CHECK(catch_error([&] { select_lasso(pts, two); }).code == ErrorCode::kDegeneratePolygon);
}

TEST_CASE("C-shaped lasso agrees with a winding-number oracle") {
  const std::vector<std::pair<double, double>> c_shape = {
      {0.1, 0.1}, {0.9, 0.1}, {0.9, 0.3}, {0.35, 0.3}, {0.35, 0.7},
      {0.9, 0.7}, {0.9, 0.9}, {0.1, 0.9}};
  std::vector<Point2> poly;
  for (auto [x, y] : c_shape) poly.push_back({x, y});
  std::vector<ScatterPoint> pts;
  std::set<SimId> expected;
  SimId id = 0;
  int boundary = 0;
  for (int i = 0; i < 100; ++i) {
    for (int j = 0; j < 100; ++j) {
      const double x = (i + 0.5) / 100.0;
      const double y = (j + 0.5) / 100.0;
      pts.push_back({id, x, y, {}});
      const bool edge = on_boundary(x, y, c_shape);
      boundary += edge;
      if (edge || winding_number(x, y, c_shape) != 0) expected.insert(id);
      ++id;
    }
  }
  const auto got = select_lasso(pts, poly);
  CHECK(std::set<SimId>(got.begin(), got.end()) == expected);
  CHECK(expected.size() > 3000);
  CHECK(expected.size() < 6000);

  // probes exactly on the polygon edges
  std::vector<ScatterPoint> edge_pts;
  for (std::size_t k = 0; k < c_shape.size(); ++k) {
    const auto [ax, ay] = c_shape[k];
    const auto [bx, by] = c_shape[(k + 1) % c_shape.size()];
    edge_pts.push_back({static_cast<SimId>(k), 0.5 * (ax + bx), 0.5 * (ay + by), {}});
  }
  CHECK(select_lasso(edge_pts, poly).size() == c_shape.size());
}

TEST_CASE("subsample") {
  std::vector<SimId> all(10000);
  std::iota(all.begin(), all.end(), 0);
  CHECK(subsample(all, 1.0, 5) == all);
  const auto half = subsample(all, 0.5, 12345);
  CHECK(half.size() >= 4800);
  CHECK(half.size() <= 5200);
  CHECK(subsample(all, 0.5, 12345) == half);
  CHECK(std::includes(all.begin(), all.end(), half.begin(), half.end()));
  CHECK(subsample(all, 0.5, 12346) != half);

  // order independence: each keep decision depends only on (seed, id)
  auto shuffled = all;
  std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937_64(1));
  auto kept = subsample(shuffled, 0.5, 12345);
  std::sort(kept.begin(), kept.end());
  CHECK(kept == half);

  // independent recomputation of the keep rule
  for (SimId i = 0; i < 200; ++i) {
    const bool keep =
        unit_interval(splitmix64(12345ULL ^ splitmix64(static_cast<std::uint64_t>(i)))) < 0.5;
    CHECK(subsample_keep(i, 0.5, 12345) == keep);
  }

  CHECK(catch_error([&] { subsample(all, 0.0, 1); }).code == ErrorCode::kInvalidProbability);
  CHECK(catch_error([&] { subsample(all, 1.5, 1); }).code == ErrorCode::kInvalidProbability);
}

TEST_CASE("scatter points drop invalid rows") {
  auto rows = grid_rows();
  rows[4].valid = false;
  const auto pts = scatter_points(rows, 1.0, 0.0);
  CHECK(pts.size() == rows.size() - 1);
  for (const auto& p : pts) {
    CHECK(p.sim_id != 4);
    CHECK(p.x == rows[static_cast<std::size_t>(p.sim_id)].delta_shock);
    CHECK(p.y == rows[static_cast<std::size_t>(p.sim_id)].delta_rho);
  }
}

TEST_CASE("evaluate_selection composes the stages") {
  const auto rows = grid_rows();
  SelectionSpec s;
  s.filter = parse_filter("profile 1,2");
  s.geometry = BoxGeometry{0.0, 0.06, 0.0, 1.0};
  s.w_shock = 1.0;
  s.w_edge = 0.0;
  std::vector<SimId> expected;
  for (const auto& r : rows) {
    if (r.params[0] >= 1 && r.delta_shock <= 0.06) expected.push_back(r.sim_id);
  }
  CHECK(evaluate_selection(rows, s) == expected);
  s.subsample_p = 0.5;
  s.subsample_seed = 77;
  const auto sub = evaluate_selection(rows, s);
  CHECK(sub == subsample(expected, 0.5, 77));
}
