#pragma once

// Independent oracles and fixtures shared by the unit and acceptance tests.
// Nothing here calls the library code it is used to check.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "simsel/core.hpp"

namespace simsel::testing {

namespace fs = std::filesystem;

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("simsel_" + tag + "_" + std::to_string(rd()) + "_" +
             std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// ---------------------------------------------------------------------------
// Density-distance oracle: literal transcription of the definitions, one pass
// per quantity, long double accumulation, no shared helpers.

struct NaiveDistances {
  bool empty = true;
  double volume = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double dinf = 0.0;
};

inline NaiveDistances naive_distances(int n_r, int n_z, double d_r, double d_z,
                                      const std::vector<double>& gt,
                                      const std::vector<double>& sim) {
  const long double pi = 3.141592653589793238462643383279502884L;
  NaiveDistances out;
  long double sum_r = 0.0L;
  long double sum_abs = 0.0L;
  long double sum_sq = 0.0L;
  long double max_abs = 0.0L;
  for (int j = 0; j < n_r; ++j) {
    const long double r = (j + 0.5L) * d_r;
    for (int k = 0; k < n_z; ++k) {
      const std::size_t i = static_cast<std::size_t>(j) * n_z + k;
      if (!(gt[i] > 0.0 && sim[i] > 0.0)) continue;
      out.empty = false;
      const long double diff = static_cast<long double>(sim[i]) - gt[i];
      sum_r += r;
      sum_abs += std::fabs(diff) * r;
      sum_sq += diff * diff * r;
      max_abs = std::max(max_abs, std::fabs(diff));
    }
  }
  const long double cell = 2.0L * pi * d_r * d_z;
  out.volume = static_cast<double>(cell * sum_r);
  if (!out.empty) {
    out.d1 = static_cast<double>(sum_abs / sum_r);
    out.d2 = static_cast<double>(std::sqrt(sum_sq / sum_r));
    out.dinf = static_cast<double>(max_abs);
  }
  return out;
}

inline double rel_err(double a, double b) {
  const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
  return std::fabs(a - b) / scale;
}

// ---------------------------------------------------------------------------
// Winding-number oracle for point-in-polygon (nonzero rule). For a simple
// polygon it agrees with the even-odd rule everywhere off the boundary.

inline bool on_segment(double px, double py, double ax, double ay, double bx,
                       double by) {
  const double cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
  if (std::fabs(cross) > 1e-12) return false;
  return px >= std::min(ax, bx) - 1e-12 && px <= std::max(ax, bx) + 1e-12 &&
         py >= std::min(ay, by) - 1e-12 && py <= std::max(ay, by) + 1e-12;
}

inline int winding_number(double px, double py,
                          const std::vector<std::pair<double, double>>& poly) {
  int wn = 0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto [ax, ay] = poly[i];
    const auto [bx, by] = poly[(i + 1) % n];
    const double is_left = (bx - ax) * (py - ay) - (px - ax) * (by - ay);
    if (ay <= py) {
      if (by > py && is_left > 0) ++wn;
    } else {
      if (by <= py && is_left < 0) --wn;
    }
  }
  return wn;
}

inline bool on_boundary(double px, double py,
                        const std::vector<std::pair<double, double>>& poly) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto [ax, ay] = poly[i];
    const auto [bx, by] = poly[(i + 1) % poly.size()];
    if (on_segment(px, py, ax, ay, bx, by)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Ensemble statistics used by the generator structure checks.

struct Sample {
  std::int64_t id = 0;
  double value = 0.0;
};

// First ceil(fraction * n) ids ordered by (value, id).
inline std::set<std::int64_t> lowest_fraction(std::vector<Sample> samples,
                                              double fraction) {
  std::sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) {
    return a.value != b.value ? a.value < b.value : a.id < b.id;
  });
  const auto n = static_cast<std::size_t>(
      std::ceil(fraction * static_cast<double>(samples.size()) - 1e-9));
  std::set<std::int64_t> out;
  for (std::size_t i = 0; i < n && i < samples.size(); ++i) out.insert(samples[i].id);
  return out;
}

inline double fraction_inside(const std::set<std::int64_t>& a,
                              const std::set<std::int64_t>& b) {
  if (a.empty()) return 0.0;
  std::size_t hit = 0;
  for (auto id : a) hit += b.count(id);
  return static_cast<double>(hit) / static_cast<double>(a.size());
}

struct TwoMeans {
  double threshold = 0.0;  // values <= threshold form the low cluster
  double silhouette = -1.0;
};

// Exact 1-D two-means: best split of the sorted values by within-cluster sum
// of squares, then the mean silhouette of that split.
inline TwoMeans two_means_1d(std::vector<double> v) {
  TwoMeans out;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n < 2) return out;
  double best = INFINITY;
  std::size_t cut = 1;
  for (std::size_t c = 1; c < n; ++c) {
    auto sse = [&](std::size_t lo, std::size_t hi) {
      double m = 0.0;
      for (std::size_t i = lo; i < hi; ++i) m += v[i];
      m /= static_cast<double>(hi - lo);
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += (v[i] - m) * (v[i] - m);
      return s;
    };
    const double total = sse(0, c) + sse(c, n);
    if (total < best) {
      best = total;
      cut = c;
    }
  }
  out.threshold = v[cut - 1];
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool low = i < cut;
    double own = 0.0;
    double other = 0.0;
    std::size_t own_n = 0;
    std::size_t other_n = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d = std::fabs(v[i] - v[j]);
      if ((j < cut) == low) {
        own += d;
        ++own_n;
      } else {
        other += d;
        ++other_n;
      }
    }
    if (own_n == 0) continue;  // singleton cluster: silhouette 0
    const double a = own / static_cast<double>(own_n);
    const double b = other / static_cast<double>(other_n);
    sum += (b - a) / std::max(a, b);
  }
  out.silhouette = sum / static_cast<double>(n);
  return out;
}

// Greedy depth-2 classification tree on two features, fitted and scored
// in-sample. Returns accuracy.
struct LabeledPoint {
  double f[2] = {0.0, 0.0};
  int label = 0;
};

inline int majority(const std::vector<LabeledPoint>& pts, std::size_t* hits) {
  std::map<int, std::size_t> counts;
  for (const auto& p : pts) ++counts[p.label];
  int best = 0;
  std::size_t best_n = 0;
  for (auto [label, n] : counts) {
    if (n > best_n) {
      best = label;
      best_n = n;
    }
  }
  if (hits) *hits = best_n;
  return best;
}

inline double chance_rate(const std::vector<LabeledPoint>& pts) {
  std::size_t hits = 0;
  majority(pts, &hits);
  return static_cast<double>(hits) / static_cast<double>(pts.size());
}

struct Split {
  int feature = -1;
  double threshold = 0.0;
  std::size_t correct = 0;
};

// Best single split by count of majority-label hits on both sides.
inline Split best_split(const std::vector<LabeledPoint>& pts) {
  Split best;
  majority(pts, &best.correct);
  for (int f = 0; f < 2; ++f) {
    std::vector<double> values;
    for (const auto& p : pts) values.push_back(p.f[f]);
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      const double thr = 0.5 * (values[i] + values[i + 1]);
      std::vector<LabeledPoint> lo, hi;
      for (const auto& p : pts) (p.f[f] <= thr ? lo : hi).push_back(p);
      std::size_t a = 0, b = 0;
      majority(lo, &a);
      majority(hi, &b);
      if (a + b > best.correct) best = {f, thr, a + b};
    }
  }
  return best;
}

inline double depth2_tree_accuracy(const std::vector<LabeledPoint>& pts) {
  const Split root = best_split(pts);
  if (root.feature < 0) return chance_rate(pts);
  std::vector<LabeledPoint> lo, hi;
  for (const auto& p : pts) (p.f[root.feature] <= root.threshold ? lo : hi).push_back(p);
  std::size_t correct = 0;
  for (const auto* side : {&lo, &hi}) {
    if (side->empty()) continue;
    correct += best_split(*side).correct;
  }
  return static_cast<double>(correct) / static_cast<double>(pts.size());
}

// ---------------------------------------------------------------------------
// Minimal JSON-schema checker for docs/api_schema.json: type (string or
// list), required, properties, items, enum, $ref into components/schemas.

class SchemaChecker {
 public:
  explicit SchemaChecker(nlohmann::json doc) : doc_(std::move(doc)) {}

  static SchemaChecker from_file(const fs::path& path) {
    return SchemaChecker(nlohmann::json::parse(read_text(path)));
  }

  const nlohmann::json& doc() const { return doc_; }

  // Empty string when valid, otherwise the first violation.
  std::string check(const nlohmann::json& value, const std::string& schema_name) const {
    return check_node(value, schema(schema_name), "$");
  }

  // Schema name documented for (endpoint key, status), or "" when none.
  std::string response_schema(const std::string& endpoint, int status) const {
    if (status >= 300) return doc_.at("errors").get<std::string>();
    const auto& ep = doc_.at("endpoints");
    if (!ep.contains(endpoint)) return "";
    const auto key = std::to_string(status);
    if (!ep.at(endpoint).contains(key)) return "";
    return ep.at(endpoint).at(key).get<std::string>();
  }

 private:
  const nlohmann::json& schema(const std::string& name) const {
    return doc_.at("components").at("schemas").at(name);
  }

  static bool type_ok(const nlohmann::json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "integer") return v.is_number_integer();
    if (t == "number") return v.is_number();
    if (t == "boolean") return v.is_boolean();
    if (t == "null") return v.is_null();
    return false;
  }

  std::string check_node(const nlohmann::json& v, const nlohmann::json& s,
                         const std::string& where) const {
    if (s.contains("$ref")) {
      const std::string ref = s.at("$ref");
      const std::string prefix = "#/components/schemas/";
      return check_node(v, schema(ref.substr(prefix.size())), where);
    }
    if (s.contains("type")) {
      const auto& t = s.at("type");
      bool ok = false;
      if (t.is_array()) {
        for (const auto& one : t) ok = ok || type_ok(v, one.get<std::string>());
      } else {
        ok = type_ok(v, t.get<std::string>());
      }
      if (!ok) return where + ": expected " + t.dump() + ", got " + v.dump();
    }
    if (s.contains("enum")) {
      bool found = false;
      for (const auto& e : s.at("enum")) found = found || e == v;
      if (!found) return where + ": " + v.dump() + " not in enum";
    }
    if (v.is_object()) {
      if (s.contains("required")) {
        for (const auto& key : s.at("required")) {
          if (!v.contains(key.get<std::string>())) {
            return where + ": missing " + key.get<std::string>();
          }
        }
      }
      if (s.contains("properties")) {
        for (const auto& [key, sub] : s.at("properties").items()) {
          if (!v.contains(key)) continue;
          auto err = check_node(v.at(key), sub, where + "." + key);
          if (!err.empty()) return err;
        }
      }
    }
    if (v.is_array() && s.contains("items")) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        auto err = check_node(v[i], s.at("items"), where + "[" + std::to_string(i) + "]");
        if (!err.empty()) return err;
      }
    }
    return "";
  }

  nlohmann::json doc_;
};

// "GET /api/datasets/7/settings" -> "GET /api/datasets/{id}/settings"
inline std::string endpoint_key(const std::string& method, const std::string& path) {
  std::string out = method + " ";
  std::size_t i = 0;
  while (i < path.size()) {
    if (path[i] == '/') {
      out += '/';
      ++i;
      continue;
    }
    std::size_t j = path.find('/', i);
    if (j == std::string::npos) j = path.size();
    const auto seg = path.substr(i, j - i);
    const bool numeric = std::all_of(seg.begin(), seg.end(),
                                     [](unsigned char c) { return std::isdigit(c); });
    out += numeric ? "{id}" : seg;
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Random SelectionSpec generation shared by the replay tests.

inline std::string random_filter_text(std::mt19937_64& rng, bool with_ranges = true) {
  static const std::vector<std::pair<std::string, int>> params = {
      {"profile", 3}, {"s1", 3}, {"cs", 3}, {"mgrg", 2},
      {"s2", 2},      {"rho0", 2}, {"tshift", 1}};
  std::vector<std::string> clauses;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const auto& [name, levels] : params) {
    if (u(rng) < 0.3) {
      std::string c = name + " ";
      bool first = true;
      for (int l = 0; l < levels; ++l) {
        if (u(rng) < 0.6 || (l == levels - 1 && first)) {
          c += (first ? "" : ",") + std::to_string(l);
          first = false;
        }
      }
      clauses.push_back(c);
    }
  }
  if (with_ranges) {
    for (const char* name : {"dshock", "dedge", "drho"}) {
      if (u(rng) < 0.2) {
        const double lo = std::round(u(rng) * 100.0) / 1000.0;
        const double hi = lo + std::round(u(rng) * 1000.0) / 1000.0;
        clauses.push_back(std::string(name) + " [" + format_number(lo) + "," +
                          format_number(hi) + "]");
      }
    }
  }
  std::shuffle(clauses.begin(), clauses.end(), rng);
  std::string out;
  for (std::size_t i = 0; i < clauses.size(); ++i) out += (i ? "; " : "") + clauses[i];
  return out;
}

}  // namespace simsel::testing
