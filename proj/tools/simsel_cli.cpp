// Command-line entry point: generate, ingest, method, postprocess, datasets,
// serve. Exit codes: 0 success, 1 runtime error, 2 usage error. Failures
// print one machine-readable line to stderr:
//   error: {"code": "...", "message": "..."}

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <iterator>
#include <thread>

#include <pthread.h>
#include <signal.h>
#include <unistd.h>

#include "simsel/api.hpp"
#include "simsel/config.hpp"
#include "simsel/error.hpp"
#include "simsel/json_io.hpp"
#include "simsel/pipeline.hpp"
#include "simsel/selection.hpp"
#include "simsel/store.hpp"
#include "simsel/synth.hpp"

namespace {

using nlohmann::json;
using namespace simsel;

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void print_error(std::string_view code, const std::string& message) {
  std::cerr << "error: " << json{{"code", code}, {"message", message}}.dump() << '\n';
}

json report_json(const PipelineReport& r) {
  return {{"method_id", r.method_id},
          {"records_written", r.records_written},
          {"records_skipped", r.records_skipped},
          {"records_failed", r.records_failed},
          {"records_invalid", r.records_invalid},
          {"wall_time", r.wall_time},
          {"errors", r.errors}};
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation-ensemble post-processing and training-data selection"};
  app.require_subcommand(1);

  std::string config_path;
  std::string store_path;
  int verbosity = -1;
  app.add_option("--config", config_path, "application config file (key = value)");
  app.add_option("--store", store_path, "metadata store file");
  app.add_option("-v,--verbosity", verbosity, "0 quiet, 1 normal, 2 debug");

  // generate
  auto* generate = app.add_subcommand("generate", "write a synthetic ensemble");
  std::string ensemble_config;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  int gen_jobs = 1;
  generate->add_option("--config", ensemble_config, "ensemble config file");
  generate->add_option("--seed", seed, "master seed")->each([&](const std::string&) {
    seed_set = true;
  });
  generate->add_option("--out", out_dir, "output directory");
  generate->add_option("--jobs", gen_jobs, "worker threads")->check(CLI::PositiveNumber);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "load a manifest into the store");
  std::string manifest_path;
  ingest->add_option("--manifest", manifest_path, "manifest.json")->required();

  // method create | list
  auto* method = app.add_subcommand("method", "post-processing methods");
  method->require_subcommand(1);
  auto* method_create = method->add_subcommand("create", "register a method");
  SimId gt_sim = 0;
  int gt_step = kDefaultTimeSteps;
  std::string norm_text = "L2";
  std::string description;
  method_create->add_option("--gt", gt_sim, "ground-truth sim_id")->required();
  method_create->add_option("--t", gt_step, "ground-truth time step")->required();
  method_create->add_option("--norm", norm_text, "L1, L2 or LINF")
      ->check(CLI::IsMember({"L1", "L2", "LINF"}));
  method_create->add_option("--desc", description, "description");
  auto* method_list = method->add_subcommand("list", "list methods");

  // postprocess
  auto* post = app.add_subcommand("postprocess", "compute distances for a method");
  MethodId post_method = 0;
  int post_jobs = 0;
  post->add_option("--method", post_method, "method id")->required();
  post->add_option("--jobs", post_jobs, "worker threads")->check(CLI::PositiveNumber);

  // datasets list | export | delete | replay | save
  auto* datasets = app.add_subcommand("datasets", "saved training datasets");
  datasets->require_subcommand(1);
  DatasetId dataset_id = 0;
  auto* ds_list = datasets->add_subcommand("list", "list datasets");
  auto* ds_export = datasets->add_subcommand("export", "export a dataset as JSON");
  std::string export_out;
  ds_export->add_option("--id", dataset_id, "dataset id")->required();
  ds_export->add_option("--out", export_out, "output file (stdout when omitted)");
  auto* ds_delete = datasets->add_subcommand("delete", "delete a dataset");
  ds_delete->add_option("--id", dataset_id, "dataset id")->required();
  auto* ds_replay = datasets->add_subcommand(
      "replay", "recompute a dataset from its settings and compare");
  ds_replay->add_option("--id", dataset_id, "dataset id")->required();
  auto* ds_save = datasets->add_subcommand("save", "replay a spec and save it");
  std::string spec_path;
  ds_save->add_option("--spec", spec_path, "selection spec JSON file")->required();

  // serve
  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  std::string bind;
  serve->add_option("--bind", bind, "host:port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    AppConfig config;
    if (!config_path.empty()) config = load_app_config(config_path);
    config = apply_env_overrides(std::move(config));
    if (!store_path.empty()) config.store = store_path;
    if (verbosity >= 0) config.verbosity = verbosity;
    if (!bind.empty()) config.bind = bind;
    if (post_jobs > 0) config.jobs = post_jobs;

    if (generate->parsed()) {
      EnsembleConfig ens;
      if (!ensemble_config.empty()) {
        ens = load_ensemble_config(ensemble_config);
      } else if (!config.ensemble_config.empty()) {
        ens = load_ensemble_config(config.ensemble_config);
      }
      if (seed_set) ens.seed = seed;
      const std::filesystem::path dir =
          out_dir.empty() ? std::filesystem::path(config.data_dir) : std::filesystem::path(out_dir);
      const auto records = generate_ensemble(ens, dir, gen_jobs);
      std::cout << json{{"simulations", records.size()},
                        {"time_steps", ens.time_steps},
                        {"manifest", (std::filesystem::absolute(dir) / "manifest.json")
                                         .string()}}
                       .dump()
                << '\n';
      return 0;
    }

    if (config.store.empty()) {
      print_error("usage", "--store (or SIMSEL_STORE / config 'store') is required");
      return kExitUsage;
    }
    auto store = open_store(config.store);

    if (ingest->parsed()) {
      const Manifest manifest = read_manifest(manifest_path);
      for (const auto& rec : manifest.simulations) {
        validate(rec, manifest.config.levels);
      }
      store->set_time_steps(manifest.config.time_steps);
      store->insert_simulations(manifest.simulations);
      std::cout << json{{"ingested", manifest.simulations.size()},
                        {"time_steps", manifest.config.time_steps}}
                       .dump()
                << '\n';
      return 0;
    }

    if (method_create->parsed()) {
      const auto existing = store->find_ground_truth(gt_sim);
      const GroundTruthId gt = existing ? *existing : store->register_ground_truth(gt_sim);
      const MethodId id =
          store->create_method(gt, gt_step, *parse_norm(norm_text), description);
      json out = method_to_json(store->get_method(id));
      out["gt_sim_id"] = gt_sim;
      std::cout << out.dump() << '\n';
      return 0;
    }
    if (method_list->parsed()) {
      for (const auto& m : store->list_methods()) {
        json out = method_to_json(m);
        out["gt_sim_id"] = store->ground_truth_sim(m.ground_truth_id);
        std::cout << out.dump() << '\n';
      }
      return 0;
    }

    if (post->parsed()) {
      const auto report = postprocess(*store, post_method, config.jobs);
      std::cout << report_json(report).dump() << '\n';
      if (config.verbosity >= 1) {
        for (const auto& e : report.errors) std::cerr << "warning: " << e << '\n';
      }
      return report.ok() ? 0 : kExitRuntime;
    }

    if (ds_list->parsed()) {
      for (const auto& d : store->list_datasets()) {
        std::cout << json{{"dataset_id", d.dataset_id},
                          {"description", d.description},
                          {"created_at", d.created_at},
                          {"member_count", d.member_count},
                          {"method_id", d.method_id}}
                         .dump()
                  << '\n';
      }
      return 0;
    }
    if (ds_export->parsed()) {
      if (export_out.empty()) {
        std::cout << store->export_dataset_json(dataset_id).dump(2) << '\n';
      } else {
        store->export_dataset(dataset_id, export_out);
      }
      return 0;
    }
    if (ds_delete->parsed()) {
      store->delete_dataset(dataset_id);
      std::cout << json{{"deleted", dataset_id}}.dump() << '\n';
      return 0;
    }
    if (ds_replay->parsed()) {
      const auto saved = store->load_dataset(dataset_id);
      const auto members = replay(saved.spec, *store);
      const bool match = members == saved.members;
      std::cout << json(members).dump() << '\n' << (match ? "MATCH" : "MISMATCH") << '\n';
      if (!match) {
        print_error("replay_mismatch", "replayed members differ from stored members");
        return kExitRuntime;
      }
      return 0;
    }
    if (ds_save->parsed()) {
      const SelectionSpec spec = spec_from_json(json::parse(read_text(spec_path)));
      validate(spec, store->time_steps());
      const auto members = replay(spec, *store);
      const DatasetId id = store->save_dataset(members, spec);
      std::cout << json{{"dataset_id", id}, {"members", members}}.dump() << '\n';
      return 0;
    }

    if (serve->parsed()) {
      const BindAddress addr = parse_bind(config.bind);
      ApiService service(*store, config);
      // Block the shutdown signals before any server thread starts so they
      // are only ever delivered to the sigwait below.
      sigset_t signals;
      sigemptyset(&signals);
      sigaddset(&signals, SIGINT);
      sigaddset(&signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &signals, nullptr);
      std::atomic<bool> listening_failed{false};
      std::thread listener([&] {
        if (!service.serve(addr.host, addr.port)) {
          listening_failed = true;
          ::kill(::getpid(), SIGTERM);
        }
      });
      if (config.verbosity >= 1) {
        std::cerr << "starting server on " << addr.host << ':' << addr.port << '\n';
      }
      int received = 0;
      sigwait(&signals, &received);
      service.stop();
      listener.join();
      if (listening_failed) {
        print_error("bind_failed", "cannot bind " + config.bind);
        return kExitRuntime;
      }
      return 0;
    }
  } catch (const Error& e) {
    print_error(error_code_name(e.code()), e.what());
    return kExitRuntime;
  } catch (const json::exception& e) {
    print_error("bad_json", e.what());
    return kExitRuntime;
  } catch (const std::exception& e) {
    print_error("internal_error", e.what());
    return kExitRuntime;
  }
  return 0;
}
