#include "simsel/store.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <bit>
#include <fstream>

#include "simsel/error.hpp"
#include "simsel/json_io.hpp"

namespace simsel {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSchemaSql = R"sql(
CREATE TABLE IF NOT EXISTS schema_meta (
  key   TEXT PRIMARY KEY,
  value TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS simulation (
  sim_id        INTEGER PRIMARY KEY,
  profile       INTEGER NOT NULL,
  s1            INTEGER NOT NULL,
  cs            INTEGER NOT NULL,
  mgrg          INTEGER NOT NULL,
  s2            INTEGER NOT NULL,
  rho0          INTEGER NOT NULL,
  tshift        INTEGER NOT NULL,
  density_paths TEXT NOT NULL,
  feature_path  TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS ground_truth (
  gt_id  INTEGER PRIMARY KEY AUTOINCREMENT,
  sim_id INTEGER NOT NULL REFERENCES simulation(sim_id)
);
CREATE TABLE IF NOT EXISTS method_info (
  method_id        INTEGER PRIMARY KEY AUTOINCREMENT,
  gt_id            INTEGER NOT NULL REFERENCES ground_truth(gt_id),
  gt_time_step     INTEGER NOT NULL,
  norm             TEXT NOT NULL CHECK (norm IN ('L1', 'L2', 'LINF')),
  description      TEXT NOT NULL DEFAULT '',
  match_time_steps INTEGER NOT NULL DEFAULT 0
);
CREATE TABLE IF NOT EXISTS postprocessed_data (
  method_id   INTEGER NOT NULL REFERENCES method_info(method_id),
  sim_id      INTEGER NOT NULL REFERENCES simulation(sim_id),
  time_step   INTEGER NOT NULL,
  delta_shock REAL NOT NULL,
  delta_edge  REAL NOT NULL,
  delta_rho   REAL,
  valid       INTEGER NOT NULL,
  UNIQUE (method_id, sim_id, time_step)
);
CREATE TABLE IF NOT EXISTS training_dataset_info (
  dataset_id     INTEGER PRIMARY KEY AUTOINCREMENT,
  description    TEXT NOT NULL CHECK (length(description) > 0),
  created_at     TEXT NOT NULL,
  selection_type TEXT NOT NULL CHECK (selection_type IN ('box', 'lasso')),
  geometry       TEXT NOT NULL,
  filter_string  TEXT NOT NULL,
  w_shock        REAL NOT NULL,
  w_edge         REAL NOT NULL,
  time_step      INTEGER NOT NULL,
  color_by       TEXT NOT NULL,
  subsample_p    REAL NOT NULL,
  subsample_seed INTEGER NOT NULL,
  method_id      INTEGER NOT NULL REFERENCES method_info(method_id)
);
CREATE TABLE IF NOT EXISTS training_dataset (
  dataset_id INTEGER NOT NULL
             REFERENCES training_dataset_info(dataset_id) ON DELETE CASCADE,
  sim_id     INTEGER NOT NULL REFERENCES simulation(sim_id),
  PRIMARY KEY (dataset_id, sim_id)
);
)sql";

ErrorCode map_sqlite(int rc) {
  switch (rc & 0xff) {
    case SQLITE_NOTADB:
    case SQLITE_CORRUPT:
      return ErrorCode::kCorruptStore;
    case SQLITE_CONSTRAINT:
      if (rc == SQLITE_CONSTRAINT_FOREIGNKEY) return ErrorCode::kNotFound;
      if (rc == SQLITE_CONSTRAINT_UNIQUE || rc == SQLITE_CONSTRAINT_PRIMARYKEY) {
        return ErrorCode::kDuplicateKey;
      }
      return ErrorCode::kValidation;
    default:
      return ErrorCode::kIo;
  }
}

[[noreturn]] void throw_sqlite(sqlite3* db, int rc, const std::string& context) {
  const char* msg = db ? sqlite3_errmsg(db) : sqlite3_errstr(rc);
  throw Error(map_sqlite(rc), context + ": " + msg);
}

std::string join_paths(const std::vector<std::string>& paths) {
  return nlohmann::json(paths).dump();
}

std::vector<std::string> split_paths(const std::string& text) {
  try {
    return nlohmann::json::parse(text).get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kCorruptStore, "bad density_paths column");
  }
}

}  // namespace

// Prepared statement; resets are automatic on destruction.
class Store::Statement {
 public:
  Statement(sqlite3* db, const char* sql) : db_(db) {
    const int rc = sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr);
    if (rc != SQLITE_OK) throw_sqlite(db, rc, "prepare");
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  Statement& bind(int idx, std::int64_t v) {
    check(sqlite3_bind_int64(stmt_, idx, v));
    return *this;
  }
  Statement& bind(int idx, int v) { return bind(idx, static_cast<std::int64_t>(v)); }
  Statement& bind(int idx, double v) {
    check(sqlite3_bind_double(stmt_, idx, v));
    return *this;
  }
  Statement& bind(int idx, const std::string& v) {
    check(sqlite3_bind_text(stmt_, idx, v.data(), static_cast<int>(v.size()),
                            SQLITE_TRANSIENT));
    return *this;
  }
  Statement& bind_null(int idx) {
    check(sqlite3_bind_null(stmt_, idx));
    return *this;
  }

  // True while a row is available.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    const int ext = sqlite3_extended_errcode(db_);
    throw_sqlite(db_, ext, "step");
  }
  void run() {
    while (step()) {
    }
  }
  void reset() {
    sqlite3_reset(stmt_);
    sqlite3_clear_bindings(stmt_);
  }

  std::int64_t i64(int col) const { return sqlite3_column_int64(stmt_, col); }
  int i32(int col) const { return sqlite3_column_int(stmt_, col); }
  double f64(int col) const { return sqlite3_column_double(stmt_, col); }
  bool is_null(int col) const {
    return sqlite3_column_type(stmt_, col) == SQLITE_NULL;
  }
  std::string text(int col) const {
    const auto* p = sqlite3_column_text(stmt_, col);
    return p ? std::string(reinterpret_cast<const char*>(p),
                           static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col)))
             : std::string();
  }

 private:
  void check(int rc) {
    if (rc != SQLITE_OK) throw_sqlite(db_, rc, "bind");
  }

  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

// Rolls back unless committed.
class Store::Transaction {
 public:
  explicit Transaction(Store& store) : store_(store) {
    store_.exec("BEGIN IMMEDIATE");
  }
  ~Transaction() {
    if (!done_) sqlite3_exec(store_.db_, "ROLLBACK", nullptr, nullptr, nullptr);
  }
  void commit() {
    store_.exec("COMMIT");
    done_ = true;
  }

 private:
  Store& store_;
  bool done_ = false;
};

Store::Store(const fs::path& path) : path_(path) {
  const int rc = sqlite3_open_v2(path.c_str(), &db_,
                                 SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE,
                                 nullptr);
  if (rc != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : sqlite3_errstr(rc);
    sqlite3_close(db_);
    db_ = nullptr;
    throw Error(ErrorCode::kIo, "cannot open store " + path.string() + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  try {
    exec("PRAGMA foreign_keys = ON");
    check_version();
  } catch (const Error& e) {
    sqlite3_close(db_);
    db_ = nullptr;
    if (e.code() == ErrorCode::kIo) {
      throw Error(ErrorCode::kCorruptStore,
                  path.string() + " is not a metadata store: " + e.what());
    }
    throw;
  }
}

Store::~Store() {
  if (db_) sqlite3_close(db_);
}

void Store::exec(const char* sql) {
  char* err = nullptr;
  const int rc = sqlite3_exec(db_, sql, nullptr, nullptr, &err);
  if (rc != SQLITE_OK) {
    std::string msg = err ? err : sqlite3_errstr(rc);
    sqlite3_free(err);
    throw Error(map_sqlite(sqlite3_extended_errcode(db_)), msg);
  }
}

void Store::check_version() {
  std::vector<std::string> tables;
  {
    Statement st(db_, "SELECT name FROM sqlite_master WHERE type = 'table'");
    while (st.step()) tables.push_back(st.text(0));
  }
  if (tables.empty()) return;
  if (std::find(tables.begin(), tables.end(), "schema_meta") == tables.end()) {
    throw Error(ErrorCode::kCorruptStore,
                path_.string() + " holds tables but no schema_meta");
  }
  Statement st(db_, "SELECT value FROM schema_meta WHERE key = 'schema_version'");
  if (!st.step()) {
    throw Error(ErrorCode::kCorruptStore, "schema_version missing");
  }
  const std::string version = st.text(0);
  if (version != std::to_string(kSchemaVersion)) {
    throw Error(ErrorCode::kVersionMismatch,
                "store schema version " + version + ", expected " +
                    std::to_string(kSchemaVersion));
  }
}

void Store::init_schema() {
  std::lock_guard lock(mutex_);
  Transaction tx(*this);
  exec(kSchemaSql);
  Statement st(db_,
               "INSERT OR IGNORE INTO schema_meta (key, value) "
               "VALUES ('schema_version', ?1)");
  st.bind(1, std::to_string(kSchemaVersion)).run();
  tx.commit();
}

int Store::time_steps_locked() {
  Statement st(db_, "SELECT value FROM schema_meta WHERE key = 'time_steps'");
  if (!st.step()) return kDefaultTimeSteps;
  return std::stoi(st.text(0));
}

int Store::time_steps() {
  std::lock_guard lock(mutex_);
  return time_steps_locked();
}

void Store::set_time_steps(int time_steps) {
  if (time_steps < 1) {
    throw Error(ErrorCode::kValidation, "time_steps must be >= 1");
  }
  std::lock_guard lock(mutex_);
  Statement st(db_,
               "INSERT INTO schema_meta (key, value) VALUES ('time_steps', ?1) "
               "ON CONFLICT(key) DO UPDATE SET value = excluded.value");
  st.bind(1, std::to_string(time_steps)).run();
}

void Store::insert_simulations(std::span<const SimulationRecord> records) {
  for (const auto& r : records) validate(r);
  std::lock_guard lock(mutex_);
  Transaction tx(*this);
  Statement st(db_,
               "INSERT INTO simulation (sim_id, profile, s1, cs, mgrg, s2, rho0, "
               "tshift, density_paths, feature_path) "
               "VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10)");
  for (const auto& r : records) {
    st.bind(1, r.sim_id);
    for (std::size_t i = 0; i < kParamCount; ++i) {
      st.bind(static_cast<int>(i) + 2, r.params[i]);
    }
    st.bind(9, join_paths(r.density_paths)).bind(10, r.feature_path);
    try {
      st.run();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kDuplicateKey) {
        throw Error(ErrorCode::kDuplicateKey,
                    "simulation " + std::to_string(r.sim_id) + " already exists");
      }
      throw;
    }
    st.reset();
  }
  if (!records.empty()) {
    Statement has(db_, "SELECT 1 FROM schema_meta WHERE key = 'time_steps'");
    if (!has.step()) {
      Statement set(db_,
                    "INSERT INTO schema_meta (key, value) VALUES ('time_steps', ?1)");
      set.bind(1, std::to_string(std::max<std::size_t>(
                      records.front().density_paths.size(), 1)))
          .run();
    }
  }
  tx.commit();
}

namespace {

constexpr const char* kSimulationColumns =
    "sim_id, profile, s1, cs, mgrg, s2, rho0, tshift, density_paths, feature_path";

}  // namespace

std::vector<SimulationRecord> Store::list_simulations() {
  std::lock_guard lock(mutex_);
  const std::string sql = std::string("SELECT ") + kSimulationColumns +
                          " FROM simulation ORDER BY sim_id";
  Statement st(db_, sql.c_str());
  std::vector<SimulationRecord> out;
  while (st.step()) {
    SimulationRecord r;
    r.sim_id = st.i64(0);
    for (std::size_t i = 0; i < kParamCount; ++i) {
      r.params[i] = st.i32(static_cast<int>(i) + 1);
    }
    r.density_paths = split_paths(st.text(8));
    r.feature_path = st.text(9);
    out.push_back(std::move(r));
  }
  return out;
}

SimulationRecord Store::get_simulation(SimId sim_id) {
  std::lock_guard lock(mutex_);
  const std::string sql = std::string("SELECT ") + kSimulationColumns +
                          " FROM simulation WHERE sim_id = ?1";
  Statement st(db_, sql.c_str());
  st.bind(1, sim_id);
  if (!st.step()) {
    throw Error(ErrorCode::kNotFound,
                "simulation " + std::to_string(sim_id) + " not found");
  }
  SimulationRecord r;
  r.sim_id = st.i64(0);
  for (std::size_t i = 0; i < kParamCount; ++i) {
    r.params[i] = st.i32(static_cast<int>(i) + 1);
  }
  r.density_paths = split_paths(st.text(8));
  r.feature_path = st.text(9);
  return r;
}

std::size_t Store::simulation_count() {
  std::lock_guard lock(mutex_);
  Statement st(db_, "SELECT COUNT(*) FROM simulation");
  st.step();
  return static_cast<std::size_t>(st.i64(0));
}

GroundTruthId Store::register_ground_truth(SimId sim_id) {
  std::lock_guard lock(mutex_);
  Transaction tx(*this);
  {
    Statement st(db_, "SELECT 1 FROM simulation WHERE sim_id = ?1");
    st.bind(1, sim_id);
    if (!st.step()) {
      throw Error(ErrorCode::kNotFound,
                  "simulation " + std::to_string(sim_id) + " not found");
    }
  }
  Statement st(db_, "INSERT INTO ground_truth (sim_id) VALUES (?1)");
  st.bind(1, sim_id).run();
  const GroundTruthId id = sqlite3_last_insert_rowid(db_);
  tx.commit();
  return id;
}

SimId Store::ground_truth_sim(GroundTruthId gt_id) {
  std::lock_guard lock(mutex_);
  Statement st(db_, "SELECT sim_id FROM ground_truth WHERE gt_id = ?1");
  st.bind(1, gt_id);
  if (!st.step()) {
    throw Error(ErrorCode::kNotFound,
                "ground truth " + std::to_string(gt_id) + " not found");
  }
  return st.i64(0);
}

std::optional<GroundTruthId> Store::find_ground_truth(SimId sim_id) {
  std::lock_guard lock(mutex_);
  Statement st(db_,
               "SELECT gt_id FROM ground_truth WHERE sim_id = ?1 "
               "ORDER BY gt_id LIMIT 1");
  st.bind(1, sim_id);
  if (!st.step()) return std::nullopt;
  return st.i64(0);
}

MethodId Store::create_method(GroundTruthId gt_id, int gt_time_step,
                              NormKind norm, const std::string& description,
                              bool match_time_steps) {
  std::lock_guard lock(mutex_);
  MethodInfo probe{0, gt_id, gt_time_step, norm, description, match_time_steps};
  validate(probe, time_steps_locked());
  Transaction tx(*this);
  {
    Statement st(db_, "SELECT 1 FROM ground_truth WHERE gt_id = ?1");
    st.bind(1, gt_id);
    if (!st.step()) {
      throw Error(ErrorCode::kNotFound,
                  "ground truth " + std::to_string(gt_id) + " not found");
    }
  }
  Statement st(db_,
               "INSERT INTO method_info (gt_id, gt_time_step, norm, description, "
               "match_time_steps) VALUES (?1, ?2, ?3, ?4, ?5)");
  st.bind(1, gt_id)
      .bind(2, gt_time_step)
      .bind(3, std::string(norm_name(norm)))
      .bind(4, description)
      .bind(5, match_time_steps ? 1 : 0)
      .run();
  const MethodId id = sqlite3_last_insert_rowid(db_);
  tx.commit();
  return id;
}

namespace {

constexpr const char* kMethodColumns =
    "method_id, gt_id, gt_time_step, norm, description, match_time_steps";

}  // namespace

std::vector<MethodInfo> Store::list_methods() {
  std::lock_guard lock(mutex_);
  const std::string sql =
      std::string("SELECT ") + kMethodColumns + " FROM method_info ORDER BY method_id";
  Statement st(db_, sql.c_str());
  std::vector<MethodInfo> out;
  while (st.step()) {
    out.push_back({st.i64(0), st.i64(1), st.i32(2),
                   parse_norm(st.text(3)).value_or(NormKind::kL2), st.text(4),
                   st.i32(5) != 0});
  }
  return out;
}

MethodInfo Store::get_method_locked(MethodId method_id) {
  const std::string sql =
      std::string("SELECT ") + kMethodColumns + " FROM method_info WHERE method_id = ?1";
  Statement st(db_, sql.c_str());
  st.bind(1, method_id);
  if (!st.step()) {
    throw Error(ErrorCode::kNotFound,
                "method not found: " + std::to_string(method_id));
  }
  return {st.i64(0), st.i64(1), st.i32(2),
          parse_norm(st.text(3)).value_or(NormKind::kL2), st.text(4),
          st.i32(5) != 0};
}

MethodInfo Store::get_method(MethodId method_id) {
  std::lock_guard lock(mutex_);
  return get_method_locked(method_id);
}

void Store::bulk_insert_records(std::span<const PostRecord> records,
                                DuplicatePolicy policy) {
  std::lock_guard lock(mutex_);
  const int t_max = time_steps_locked();
  for (const auto& r : records) validate(r, t_max);
  Transaction tx(*this);
  const char* sql =
      policy == DuplicatePolicy::kReject
          ? "INSERT INTO postprocessed_data (method_id, sim_id, time_step, "
            "delta_shock, delta_edge, delta_rho, valid) "
            "VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7)"
          : "INSERT INTO postprocessed_data (method_id, sim_id, time_step, "
            "delta_shock, delta_edge, delta_rho, valid) "
            "VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7) "
            "ON CONFLICT (method_id, sim_id, time_step) DO UPDATE SET "
            "delta_shock = excluded.delta_shock, delta_edge = excluded.delta_edge, "
            "delta_rho = excluded.delta_rho, valid = excluded.valid";
  Statement st(db_, sql);
  for (const auto& r : records) {
    st.bind(1, r.method_id).bind(2, r.sim_id).bind(3, r.time_step);
    st.bind(4, r.delta_shock).bind(5, r.delta_edge);
    if (r.delta_rho) {
      st.bind(6, *r.delta_rho);
    } else {
      st.bind_null(6);
    }
    st.bind(7, r.valid() ? 1 : 0);
    try {
      st.run();
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kDuplicateKey) {
        throw Error(ErrorCode::kDuplicateKey,
                    "record (method " + std::to_string(r.method_id) + ", sim " +
                        std::to_string(r.sim_id) + ", t " +
                        std::to_string(r.time_step) + ") already exists");
      }
      if (e.code() == ErrorCode::kNotFound) {
        throw Error(ErrorCode::kNotFound,
                    "record references unknown method " +
                        std::to_string(r.method_id) + " or simulation " +
                        std::to_string(r.sim_id));
      }
      throw;
    }
    st.reset();
  }
  tx.commit();
}

RecordQuery Store::query_records(MethodId method_id, int time_step) {
  std::lock_guard lock(mutex_);
  get_method_locked(method_id);
  RecordQuery out;
  const int t_max = time_steps_locked();
  if (time_step < 1 || time_step > t_max) {
    out.warning = "time step " + std::to_string(time_step) + " outside [1, " +
                  std::to_string(t_max) + "]";
    return out;
  }
  Statement st(db_,
               "SELECT s.sim_id, s.profile, s.s1, s.cs, s.mgrg, s.s2, s.rho0, "
               "s.tshift, p.delta_shock, p.delta_edge, p.delta_rho, p.valid "
               "FROM postprocessed_data p JOIN simulation s ON s.sim_id = p.sim_id "
               "WHERE p.method_id = ?1 AND p.time_step = ?2 ORDER BY s.sim_id");
  st.bind(1, method_id).bind(2, time_step);
  while (st.step()) {
    JoinedRow row;
    row.sim_id = st.i64(0);
    for (std::size_t i = 0; i < kParamCount; ++i) {
      row.params[i] = st.i32(static_cast<int>(i) + 1);
    }
    row.delta_shock = st.f64(8);
    row.delta_edge = st.f64(9);
    row.valid = st.i32(11) != 0 && !st.is_null(10);
    row.delta_rho = row.valid ? st.f64(10) : 0.0;
    out.rows.push_back(row);
  }
  return out;
}

std::vector<PostRecord> Store::records_for_method(MethodId method_id) {
  std::lock_guard lock(mutex_);
  Statement st(db_,
               "SELECT method_id, sim_id, time_step, delta_shock, delta_edge, "
               "delta_rho FROM postprocessed_data WHERE method_id = ?1 "
               "ORDER BY sim_id, time_step");
  st.bind(1, method_id);
  std::vector<PostRecord> out;
  while (st.step()) {
    PostRecord r{st.i64(0), st.i64(1), st.i32(2), st.f64(3), st.f64(4),
                 std::nullopt};
    if (!st.is_null(5)) r.delta_rho = st.f64(5);
    out.push_back(r);
  }
  return out;
}

std::vector<std::pair<SimId, int>> Store::existing_record_keys(MethodId method_id) {
  std::lock_guard lock(mutex_);
  Statement st(db_,
               "SELECT sim_id, time_step FROM postprocessed_data "
               "WHERE method_id = ?1 ORDER BY sim_id, time_step");
  st.bind(1, method_id);
  std::vector<std::pair<SimId, int>> out;
  while (st.step()) out.emplace_back(st.i64(0), st.i32(1));
  return out;
}

DatasetId Store::save_dataset(std::span<const SimId> members, SelectionSpec spec) {
  if (members.empty()) {
    throw Error(ErrorCode::kEmptySelection, "cannot save an empty selection");
  }
  std::lock_guard lock(mutex_);
  validate(spec, time_steps_locked());
  spec.filter = canonicalize(std::move(spec.filter));
  if (spec.created_at.empty()) spec.created_at = utc_timestamp_now();
  std::vector<SimId> sorted(members.begin(), members.end());
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  Transaction tx(*this);
  get_method_locked(spec.method_id);
  {
    Statement st(db_, "SELECT 1 FROM simulation WHERE sim_id = ?1");
    for (SimId id : sorted) {
      st.bind(1, id);
      if (!st.step()) {
        throw Error(ErrorCode::kNotFound,
                    "member simulation " + std::to_string(id) + " not found");
      }
      st.reset();
    }
  }
  Statement info(db_,
                 "INSERT INTO training_dataset_info (description, created_at, "
                 "selection_type, geometry, filter_string, w_shock, w_edge, "
                 "time_step, color_by, subsample_p, subsample_seed, method_id) "
                 "VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8, ?9, ?10, ?11, ?12)");
  info.bind(1, spec.description)
      .bind(2, spec.created_at)
      .bind(3, std::string(selection_type_name(selection_type(spec.geometry))))
      .bind(4, geometry_to_text(spec.geometry))
      .bind(5, serialize_filter(spec.filter))
      .bind(6, spec.w_shock)
      .bind(7, spec.w_edge)
      .bind(8, spec.time_step)
      .bind(9, spec.color_by)
      .bind(10, spec.subsample_p)
      .bind(11, std::bit_cast<std::int64_t>(spec.subsample_seed))
      .bind(12, spec.method_id)
      .run();
  const DatasetId id = sqlite3_last_insert_rowid(db_);
  Statement member(db_,
                   "INSERT INTO training_dataset (dataset_id, sim_id) VALUES (?1, ?2)");
  for (SimId sim : sorted) {
    member.bind(1, id).bind(2, sim).run();
    member.reset();
  }
  tx.commit();
  return id;
}

TrainingDataset Store::load_dataset_locked(DatasetId dataset_id) {
  Statement st(db_,
               "SELECT description, created_at, selection_type, geometry, "
               "filter_string, w_shock, w_edge, time_step, color_by, subsample_p, "
               "subsample_seed, method_id FROM training_dataset_info "
               "WHERE dataset_id = ?1");
  st.bind(1, dataset_id);
  if (!st.step()) {
    throw Error(ErrorCode::kNotFound,
                "dataset " + std::to_string(dataset_id) + " not found");
  }
  TrainingDataset ds;
  ds.dataset_id = dataset_id;
  auto& spec = ds.spec;
  spec.description = st.text(0);
  spec.created_at = st.text(1);
  spec.geometry = geometry_from_text(st.text(3));
  if (selection_type_name(selection_type(spec.geometry)) != st.text(2)) {
    throw Error(ErrorCode::kCorruptStore, "selection_type disagrees with geometry");
  }
  spec.filter = parse_filter(st.text(4));
  spec.w_shock = st.f64(5);
  spec.w_edge = st.f64(6);
  spec.time_step = st.i32(7);
  spec.color_by = st.text(8);
  spec.subsample_p = st.f64(9);
  spec.subsample_seed = std::bit_cast<std::uint64_t>(st.i64(10));
  spec.method_id = st.i64(11);

  Statement members(db_,
                    "SELECT sim_id FROM training_dataset WHERE dataset_id = ?1 "
                    "ORDER BY sim_id");
  members.bind(1, dataset_id);
  while (members.step()) ds.members.push_back(members.i64(0));
  return ds;
}

TrainingDataset Store::load_dataset(DatasetId dataset_id) {
  std::lock_guard lock(mutex_);
  return load_dataset_locked(dataset_id);
}

SelectionSpec Store::load_settings(DatasetId dataset_id) {
  return load_dataset(dataset_id).spec;
}

std::vector<DatasetSummary> Store::list_datasets() {
  std::lock_guard lock(mutex_);
  Statement st(db_,
               "SELECT i.dataset_id, i.description, i.created_at, i.method_id, "
               "(SELECT COUNT(*) FROM training_dataset d "
               " WHERE d.dataset_id = i.dataset_id) "
               "FROM training_dataset_info i ORDER BY i.dataset_id");
  std::vector<DatasetSummary> out;
  while (st.step()) {
    out.push_back({st.i64(0), st.text(1), st.text(2),
                   static_cast<std::size_t>(st.i64(4)), st.i64(3)});
  }
  return out;
}

void Store::delete_dataset(DatasetId dataset_id) {
  std::lock_guard lock(mutex_);
  Transaction tx(*this);
  {
    Statement st(db_, "DELETE FROM training_dataset WHERE dataset_id = ?1");
    st.bind(1, dataset_id).run();
  }
  Statement st(db_, "DELETE FROM training_dataset_info WHERE dataset_id = ?1");
  st.bind(1, dataset_id).run();
  if (sqlite3_changes(db_) == 0) {
    throw Error(ErrorCode::kNotFound,
                "dataset " + std::to_string(dataset_id) + " not found");
  }
  tx.commit();
}

nlohmann::json Store::export_dataset_json(DatasetId dataset_id) {
  std::lock_guard lock(mutex_);
  const TrainingDataset ds = load_dataset_locked(dataset_id);
  nlohmann::json members = nlohmann::json::array();
  Statement st(db_,
               "SELECT s.sim_id, s.profile, s.s1, s.cs, s.mgrg, s.s2, s.rho0, "
               "s.tshift FROM training_dataset d JOIN simulation s "
               "ON s.sim_id = d.sim_id WHERE d.dataset_id = ?1 ORDER BY s.sim_id");
  st.bind(1, dataset_id);
  while (st.step()) {
    ParamLevels p{};
    for (std::size_t i = 0; i < kParamCount; ++i) {
      p[i] = st.i32(static_cast<int>(i) + 1);
    }
    members.push_back({{"sim_id", st.i64(0)}, {"params", params_to_json(p)}});
  }
  return {{"format", "simsel-dataset"},
          {"version", 1},
          {"dataset_id", ds.dataset_id},
          {"description", ds.spec.description},
          {"created_at", ds.spec.created_at},
          {"spec", spec_to_json(ds.spec)},
          {"members", members}};
}

void Store::export_dataset(DatasetId dataset_id, const fs::path& path) {
  const auto doc = export_dataset_json(dataset_id);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

std::unique_ptr<Store> open_store(const fs::path& path) {
  auto store = std::make_unique<Store>(path);
  store->init_schema();
  return store;
}

}  // namespace simsel
