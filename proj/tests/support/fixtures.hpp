#pragma once

// Generated-ensemble fixtures. Unlike test_support.hpp these call into the
// library to build their state.

#include <memory>

#include "simsel/store.hpp"
#include "simsel/synth.hpp"
#include "support/test_support.hpp"

namespace simsel::testing {

inline EnsembleConfig tiny_config() {
  EnsembleConfig c;
  c.grid = {24, 24, 0.12, 0.12};
  c.levels = {3, 1, 2, 2, 1, 1, 1};
  c.time_steps = 4;
  c.seed = 3;
  return c;
}

// An ensemble written under a temp dir and ingested into a fresh store.
struct IngestedEnsemble {
  explicit IngestedEnsemble(const EnsembleConfig& c = tiny_config(),
                            const std::string& tag = "ens")
      : dir(tag), config(c) {
    sims = generate_ensemble(config, dir / "data", 1);
    store = open_store(dir / "store.db");
    store->set_time_steps(config.time_steps);
    store->insert_simulations(sims);
  }

  MethodId add_method(NormKind norm = NormKind::kL2, int gt_step = -1,
                      const std::string& description = "m") {
    const auto existing = store->find_ground_truth(0);
    const auto gt = existing ? *existing : store->register_ground_truth(0);
    return store->create_method(gt, gt_step < 0 ? config.time_steps : gt_step, norm,
                                description);
  }

  void reopen() {
    store.reset();
    store = open_store(dir / "store.db");
  }

  TempDir dir;
  EnsembleConfig config;
  std::vector<SimulationRecord> sims;
  std::unique_ptr<Store> store;
};

}  // namespace simsel::testing
