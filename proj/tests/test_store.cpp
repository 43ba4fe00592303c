#include <doctest.h>

#include <random>

#include <sqlite3.h>

#include "simsel/error.hpp"
#include "simsel/selection.hpp"
#include "simsel/store.hpp"
#include "support/test_support.hpp"

using namespace simsel;
using simsel::testing::TempDir;
using simsel::testing::write_text;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected simsel::Error");
  return ErrorCode::kInvalidArgument;
}

SimulationRecord sim(SimId id, int time_steps = 3) {
  SimulationRecord r;
  r.sim_id = id;
  r.params = {static_cast<int>(id % 3), static_cast<int>((id / 3) % 3), 0, 0, 0, 0, 0};
  for (int t = 1; t <= time_steps; ++t) {
    r.density_paths.push_back("/data/sim_" + std::to_string(id) + "/rho_t" +
                              std::to_string(t) + ".bin");
  }
  r.feature_path = "/data/sim_" + std::to_string(id) + "/features.txt";
  return r;
}

std::vector<SimulationRecord> sims(int n, int time_steps = 3) {
  std::vector<SimulationRecord> out;
  for (int i = 0; i < n; ++i) out.push_back(sim(i, time_steps));
  return out;
}

std::vector<PostRecord> records(MethodId m, int n_sims, int time_steps) {
  std::vector<PostRecord> out;
  for (int s = 0; s < n_sims; ++s) {
    for (int t = 1; t <= time_steps; ++t) {
      out.push_back({m, s, t, 0.01 * s + 0.001 * t, 0.02 * s, 0.1 * s + 1e-3 * t});
    }
  }
  return out;
}

SelectionSpec spec_for(MethodId m) {
  SelectionSpec s;
  s.method_id = m;
  s.time_step = 2;
  s.w_shock = 0.75;
  s.w_edge = 0.1 + 0.2;  // not exactly representable
  s.color_by = "cs";
  s.filter = parse_filter("profile 0; s1 0");
  s.geometry = LassoGeometry{{{0.0, 0.0}, {1.0 / 3.0, 0.0}, {0.2, 2.0 / 7.0}}};
  s.subsample_p = 0.625;
  s.subsample_seed = 0xfedcba9876543210ULL;
  s.description = "narrow profile-0 slice";
  return s;
}

}  // namespace

TEST_CASE("init, insert, reopen") {
  TempDir dir("store");
  const auto path = dir / "s.db";
  {
    auto store = open_store(path);
    CHECK(store->simulation_count() == 0);
    CHECK(store->list_methods().empty());
    CHECK(store->list_datasets().empty());
    store->insert_simulations(sims(1));
  }
  {
    auto store = open_store(path);
    store->init_schema();
    CHECK(store->simulation_count() == 1);
    CHECK(store->get_simulation(0) == sim(0));
    CHECK(store->time_steps() == 3);
  }
}

TEST_CASE("non-store files are rejected") {
  TempDir dir("corrupt");
  write_text(dir / "notes.txt", std::string(4096, 'x'));
  CHECK(code_of([&] { Store s(dir / "notes.txt"); }) == ErrorCode::kCorruptStore);

  sqlite3* db = nullptr;
  REQUIRE(sqlite3_open((dir / "other.db").c_str(), &db) == SQLITE_OK);
  sqlite3_exec(db, "CREATE TABLE unrelated (x INTEGER)", nullptr, nullptr, nullptr);
  sqlite3_close(db);
  CHECK(code_of([&] { Store s(dir / "other.db"); }) == ErrorCode::kCorruptStore);

  {
    auto store = open_store(dir / "future.db");
  }
  REQUIRE(sqlite3_open((dir / "future.db").c_str(), &db) == SQLITE_OK);
  sqlite3_exec(db, "UPDATE schema_meta SET value = '99' WHERE key = 'schema_version'",
               nullptr, nullptr, nullptr);
  sqlite3_close(db);
  CHECK(code_of([&] { Store s(dir / "future.db"); }) == ErrorCode::kVersionMismatch);
}

TEST_CASE("simulation insert and lookup") {
  TempDir dir("sims");
  auto store = open_store(dir / "s.db");
  const auto all = sims(216);
  store->insert_simulations(all);
  CHECK(store->list_simulations() == all);
  CHECK(code_of([&] { store->get_simulation(999); }) == ErrorCode::kNotFound);
  const std::vector<SimulationRecord> dup{sim(5)};
  CHECK(code_of([&] { store->insert_simulations(dup); }) == ErrorCode::kDuplicateKey);
  CHECK(store->simulation_count() == 216);
}

TEST_CASE("ground truths and methods") {
  TempDir dir("methods");
  auto store = open_store(dir / "s.db");
  store->insert_simulations(sims(4));
  CHECK(code_of([&] { store->register_ground_truth(42); }) == ErrorCode::kNotFound);
  const auto gt = store->register_ground_truth(0);
  const auto gt2 = store->register_ground_truth(0);
  CHECK(gt != gt2);
  CHECK(store->ground_truth_sim(gt2) == 0);
  CHECK(store->find_ground_truth(0) == gt);
  CHECK_FALSE(store->find_ground_truth(1).has_value());

  const auto m1 = store->create_method(gt, 3, NormKind::kL2, "l2 late");
  const auto m2 = store->create_method(gt, 1, NormKind::kLInf, "linf early");
  const auto methods = store->list_methods();
  REQUIRE(methods.size() == 2);
  CHECK(methods[0] == MethodInfo{m1, gt, 3, NormKind::kL2, "l2 late", false});
  CHECK(methods[1].norm == NormKind::kLInf);
  CHECK(store->get_method(m2).description == "linf early");
  CHECK(code_of([&] { store->create_method(777, 1, NormKind::kL1, ""); }) ==
        ErrorCode::kNotFound);
  CHECK(code_of([&] { store->create_method(gt, 4, NormKind::kL1, ""); }) ==
        ErrorCode::kValidation);
  CHECK(code_of([&] { store->get_method(55); }) == ErrorCode::kNotFound);
}

TEST_CASE("records: bulk insert, duplicates, query") {
  TempDir dir("records");
  auto store = open_store(dir / "s.db");
  store->insert_simulations(sims(6));
  const auto m = store->create_method(store->register_ground_truth(0), 3, NormKind::kL2, "");
  auto batch = records(m, 6, 3);
  batch[4].delta_rho.reset();
  store->bulk_insert_records(batch);
  CHECK(store->records_for_method(m) == batch);
  CHECK(store->existing_record_keys(m).size() == 18);

  const auto q = store->query_records(m, 2);
  CHECK_FALSE(q.warning.has_value());
  REQUIRE(q.rows.size() == 6);
  for (std::size_t i = 0; i < q.rows.size(); ++i) {
    CHECK(q.rows[i].sim_id == static_cast<SimId>(i));
    CHECK(q.rows[i].params == sim(i).params);
  }
  // batch[4] is sim 1, t = 2
  CHECK_FALSE(q.rows[1].valid);
  CHECK(q.rows[2].delta_rho == batch[7].delta_rho);

  const auto beyond = store->query_records(m, 4);
  CHECK(beyond.rows.empty());
  CHECK(beyond.warning.has_value());

  CHECK(code_of([&] { store->bulk_insert_records(batch); }) == ErrorCode::kDuplicateKey);
  // rollback: a mixed batch of new + duplicate rows leaves nothing behind
  std::vector<PostRecord> mixed{{m, 0, 1, 9.0, 9.0, 9.0}};
  const auto m2 = store->create_method(store->find_ground_truth(0).value(), 1,
                                       NormKind::kL1, "");
  mixed.push_back({m2, 0, 1, 1.0, 1.0, 1.0});
  mixed.insert(mixed.begin(), PostRecord{m2, 1, 1, 1.0, 1.0, 1.0});
  CHECK_THROWS_AS(store->bulk_insert_records(mixed), Error);
  CHECK(store->records_for_method(m2).empty());

  auto changed = batch;
  for (auto& r : changed) r.delta_shock += 1.0;
  store->bulk_insert_records(changed, DuplicatePolicy::kUpsert);
  CHECK(store->records_for_method(m) == changed);

  std::vector<PostRecord> orphan{{m, 99, 1, 0.0, 0.0, 0.0}};
  CHECK(code_of([&] { store->bulk_insert_records(orphan); }) == ErrorCode::kNotFound);
  CHECK(code_of([&] { store->query_records(12345, 1); }) == ErrorCode::kNotFound);
}

TEST_CASE("datasets: save, load, settings, export, delete") {
  TempDir dir("datasets");
  const auto path = dir / "s.db";
  DatasetId id = 0;
  SelectionSpec saved_spec;
  {
    auto store = open_store(path);
    store->insert_simulations(sims(12));
    const auto m = store->create_method(store->register_ground_truth(0), 1, NormKind::kL2, "");
    const std::vector<SimId> members{9, 0, 3, 3, 6, 1, 2, 4, 5, 7, 8};
    id = store->save_dataset(members, spec_for(m));
    const auto ds = store->load_dataset(id);
    CHECK(ds.members == std::vector<SimId>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
    saved_spec = ds.spec;
    auto expected = spec_for(m);
    expected.created_at = saved_spec.created_at;
    CHECK(saved_spec == expected);
    CHECK(saved_spec.created_at.size() == 20);
    CHECK(store->load_settings(id) == saved_spec);

    const auto doc = store->export_dataset_json(id);
    CHECK(doc.at("format") == "simsel-dataset");
    CHECK(doc.at("dataset_id") == id);
    CHECK(doc.at("description") == "narrow profile-0 slice");
    CHECK(doc.at("spec").at("filter") == "profile 0; s1 0");
    REQUIRE(doc.at("members").size() == 10);
    CHECK(doc.at("members")[3].at("sim_id") == 3);
    CHECK(doc.at("members")[3].at("params").at("profile") == 0);

    store->export_dataset(id, dir / "export.json");
    CHECK(nlohmann::json::parse(simsel::testing::read_text(dir / "export.json")) == doc);

    const auto list = store->list_datasets();
    REQUIRE(list.size() == 1);
    CHECK(list[0].member_count == 10);

    CHECK(code_of([&] { store->save_dataset(std::vector<SimId>{}, spec_for(m)); }) ==
          ErrorCode::kEmptySelection);
    CHECK(code_of([&] { store->save_dataset(std::vector<SimId>{1, 500}, spec_for(m)); }) ==
          ErrorCode::kNotFound);
    CHECK(code_of([&] { store->save_dataset(std::vector<SimId>{1}, spec_for(999)); }) ==
          ErrorCode::kNotFound);
    auto unnamed = spec_for(m);
    unnamed.description.clear();
    CHECK(code_of([&] { store->save_dataset(std::vector<SimId>{1}, unnamed); }) ==
          ErrorCode::kValidation);
    CHECK(store->list_datasets().size() == 1);
  }
  {
    auto store = open_store(path);
    CHECK(store->load_settings(id) == saved_spec);
    store->delete_dataset(id);
    CHECK(code_of([&] { store->load_dataset(id); }) == ErrorCode::kNotFound);
    CHECK(code_of([&] { store->load_settings(id); }) == ErrorCode::kNotFound);
    CHECK(code_of([&] { store->delete_dataset(id); }) == ErrorCode::kNotFound);
  }
}

TEST_CASE("spec fields survive the store bit-exactly") {
  TempDir dir("bits");
  auto store = open_store(dir / "s.db");
  store->insert_simulations(sims(3));
  const auto m = store->create_method(store->register_ground_truth(0), 1, NormKind::kL2, "");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 50; ++i) {
    auto s = spec_for(m);
    s.w_shock = u(rng);
    s.w_edge = u(rng);
    s.subsample_p = 1.0 - u(rng) * 0.99;
    s.subsample_seed = rng();
    s.geometry = BoxGeometry{-u(rng), u(rng), -u(rng) * 1e-7, u(rng) * 1e7};
    s.filter = parse_filter("drho [" + format_number(u(rng)) + "," + format_number(1 + u(rng)) +
                            "]; cs 2,0");
    const auto id = store->save_dataset(std::vector<SimId>{2}, s);
    auto got = store->load_settings(id);
    s.created_at = got.created_at;
    s.filter = canonicalize(s.filter);
    CHECK(got == s);
  }
}
