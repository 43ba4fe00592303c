#pragma once

// Embedded single-file metadata store (SQLite).
//
// Tables:
//   simulation            sim_id PK, one column per parameter, density_paths,
//                         feature_path
//   ground_truth          gt_id PK, sim_id FK
//   method_info           method_id PK, gt_id FK, gt_time_step, norm,
//                         description, match_time_steps
//   postprocessed_data    (method_id, sim_id, time_step) unique, deltas, valid
//   training_dataset      (dataset_id, sim_id) membership rows
//   training_dataset_info dataset_id PK, description, created_at, the query
//                         parameters of the selection, method_id FK
//   schema_meta           key/value: schema_version, time_steps
//
// All public operations are atomic and serialized through one connection.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "simsel/core.hpp"
#include "simsel/selection.hpp"

struct sqlite3;

namespace simsel {

inline constexpr int kSchemaVersion = 1;

enum class DuplicatePolicy { kReject, kUpsert };

struct RecordQuery {
  std::vector<JoinedRow> rows;  // sorted by sim_id
  std::optional<std::string> warning;
};

struct DatasetSummary {
  DatasetId dataset_id = 0;
  std::string description;
  std::string created_at;
  std::size_t member_count = 0;
  MethodId method_id = 0;
};

class Store {
 public:
  // Throws kCorruptStore when the file is not an SQLite database or holds
  // unrelated tables, kVersionMismatch for another schema version.
  explicit Store(const std::filesystem::path& path);
  ~Store();

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // Idempotent.
  void init_schema();

  const std::filesystem::path& path() const { return path_; }

  // Ensemble time-step count T; kDefaultTimeSteps until set at ingest.
  int time_steps();
  void set_time_steps(int time_steps);

  // Also records T from the density path count when the store has none.
  void insert_simulations(std::span<const SimulationRecord> records);
  std::vector<SimulationRecord> list_simulations();
  SimulationRecord get_simulation(SimId sim_id);
  std::size_t simulation_count();

  GroundTruthId register_ground_truth(SimId sim_id);
  SimId ground_truth_sim(GroundTruthId gt_id);
  // Earliest registration backed by sim_id, if any.
  std::optional<GroundTruthId> find_ground_truth(SimId sim_id);

  MethodId create_method(GroundTruthId gt_id, int gt_time_step, NormKind norm,
                         const std::string& description,
                         bool match_time_steps = false);
  std::vector<MethodInfo> list_methods();
  MethodInfo get_method(MethodId method_id);

  // kDuplicateKey on a repeated (method, sim, time step) under kReject; the
  // whole batch is rolled back.
  void bulk_insert_records(std::span<const PostRecord> records,
                           DuplicatePolicy policy = DuplicatePolicy::kReject);

  // One row per simulation at (method, time_step), joined with parameters.
  // A time step outside [1, T] returns no rows and a warning.
  RecordQuery query_records(MethodId method_id, int time_step);

  std::vector<PostRecord> records_for_method(MethodId method_id);
  std::vector<std::pair<SimId, int>> existing_record_keys(MethodId method_id);

  // Members are stored sorted and deduplicated. Fills created_at when empty.
  // Throws kEmptySelection, kValidation, kNotFound (method or member).
  DatasetId save_dataset(std::span<const SimId> members, SelectionSpec spec);
  TrainingDataset load_dataset(DatasetId dataset_id);
  SelectionSpec load_settings(DatasetId dataset_id);
  std::vector<DatasetSummary> list_datasets();
  void delete_dataset(DatasetId dataset_id);

  // Export document: format, version, dataset_id, description, created_at,
  // spec, members [{sim_id, params}].
  nlohmann::json export_dataset_json(DatasetId dataset_id);
  void export_dataset(DatasetId dataset_id, const std::filesystem::path& path);

 private:
  class Statement;
  class Transaction;

  void exec(const char* sql);
  void check_version();
  int time_steps_locked();
  TrainingDataset load_dataset_locked(DatasetId dataset_id);
  MethodInfo get_method_locked(MethodId method_id);

  std::filesystem::path path_;
  sqlite3* db_ = nullptr;
  std::mutex mutex_;
};

// Opens and initializes in one step.
std::unique_ptr<Store> open_store(const std::filesystem::path& path);

}  // namespace simsel
