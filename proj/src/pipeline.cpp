#include "simsel/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <optional>
#include <set>
#include <thread>

#include "simsel/distance.hpp"
#include "simsel/error.hpp"
#include "simsel/store.hpp"
#include "simsel/synth.hpp"

namespace simsel {

namespace {

struct GroundTruthData {
  std::vector<std::optional<DensityField>> density;  // index t-1
  std::vector<FeatureSet> features;
};

std::vector<PostRecord> compare_simulation(const SimulationRecord& sim,
                                           const MethodInfo& method,
                                           const GroundTruthData& gt,
                                           const std::vector<int>& steps) {
  const auto features = read_features(sim.feature_path);
  std::vector<PostRecord> out;
  out.reserve(steps.size());
  for (int t : steps) {
    if (static_cast<std::size_t>(t) > sim.density_paths.size() ||
        static_cast<std::size_t>(t) > features.size()) {
      throw Error(ErrorCode::kMalformedFile,
                  "simulation " + std::to_string(sim.sim_id) +
                      " has no data for time step " + std::to_string(t));
    }
    const int gt_step = method.match_time_steps ? t : method.gt_time_step;
    const auto& gt_density = gt.density[static_cast<std::size_t>(gt_step - 1)];
    const auto& gt_features = gt.features[static_cast<std::size_t>(gt_step - 1)];
    const DensityField density =
        read_density(sim.density_paths[static_cast<std::size_t>(t - 1)]);

    PostRecord rec;
    rec.method_id = method.method_id;
    rec.sim_id = sim.sim_id;
    rec.time_step = t;
    const auto fd = feature_distance(gt_features,
                                     features[static_cast<std::size_t>(t - 1)],
                                     method.norm);
    rec.delta_shock = fd.delta_shock;
    rec.delta_edge = fd.delta_edge;
    try {
      rec.delta_rho = density_distance(*gt_density, density, method.norm);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptyOverlap) throw;
    }
    out.push_back(rec);
  }
  return out;
}

}  // namespace

PipelineReport postprocess(Store& store, MethodId method_id, int jobs) {
  const auto start = std::chrono::steady_clock::now();
  const MethodInfo method = store.get_method(method_id);
  const SimulationRecord gt_sim =
      store.get_simulation(store.ground_truth_sim(method.ground_truth_id));
  const int time_steps = store.time_steps();
  const auto sims = store.list_simulations();

  GroundTruthData gt;
  gt.features = read_features(gt_sim.feature_path);
  gt.density.resize(static_cast<std::size_t>(time_steps));
  for (int t = 1; t <= time_steps; ++t) {
    if (!method.match_time_steps && t != method.gt_time_step) continue;
    if (static_cast<std::size_t>(t) > gt_sim.density_paths.size() ||
        static_cast<std::size_t>(t) > gt.features.size()) {
      throw Error(ErrorCode::kMalformedFile,
                  "ground truth has no data for time step " + std::to_string(t));
    }
    gt.density[static_cast<std::size_t>(t - 1)] =
        read_density(gt_sim.density_paths[static_cast<std::size_t>(t - 1)]);
  }

  std::set<std::pair<SimId, int>> existing;
  for (const auto& key : store.existing_record_keys(method_id)) {
    existing.insert(key);
  }

  PipelineReport report;
  report.method_id = method_id;

  std::vector<std::vector<int>> pending(sims.size());
  for (std::size_t i = 0; i < sims.size(); ++i) {
    for (int t = 1; t <= time_steps; ++t) {
      if (existing.count({sims[i].sim_id, t})) {
        ++report.records_skipped;
      } else {
        pending[i].push_back(t);
      }
    }
  }

  std::vector<std::vector<PostRecord>> results(sims.size());
  std::vector<std::optional<std::string>> failures(sims.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < sims.size(); i = next++) {
      if (pending[i].empty()) continue;
      try {
        results[i] = compare_simulation(sims[i], method, gt, pending[i]);
      } catch (const std::exception& e) {
        failures[i] = "simulation " + std::to_string(sims[i].sim_id) + ": " +
                      e.what();
      }
    }
  };
  {
    std::vector<std::jthread> threads;
    const int n_threads = std::clamp(jobs, 1, 256);
    for (int i = 1; i < n_threads; ++i) threads.emplace_back(worker);
    worker();
  }

  std::vector<PostRecord> batch;
  for (std::size_t i = 0; i < sims.size(); ++i) {
    if (failures[i]) {
      report.errors.push_back(*failures[i]);
      report.records_failed += pending[i].size();
      continue;
    }
    for (auto& rec : results[i]) {
      if (!rec.valid()) ++report.records_invalid;
      batch.push_back(rec);
    }
  }
  store.bulk_insert_records(batch);
  report.records_written = batch.size();
  report.wall_time = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  return report;
}

std::vector<PipelineReport> postprocess_all(Store& store,
                                            const std::vector<MethodId>& methods,
                                            int jobs) {
  std::vector<PipelineReport> reports;
  for (MethodId id : methods) {
    try {
      reports.push_back(postprocess(store, id, jobs));
    } catch (const std::exception& e) {
      PipelineReport failed;
      failed.method_id = id;
      failed.errors.push_back(e.what());
      reports.push_back(std::move(failed));
    }
  }
  return reports;
}

}  // namespace simsel
