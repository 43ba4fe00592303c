#pragma once

// HTTP/JSON service over the store, pipeline and selection engine.
//
//   GET    /api/health
//   GET    /api/simulations
//   GET    /api/methods
//   POST   /api/methods                 {gt_sim_id, gt_time_step, norm, description}
//   POST   /api/methods/{id}/postprocess
//   GET    /api/jobs/{method_id}
//   GET    /api/scatter?method=&t=&ws=&we=
//   GET    /api/records?method=&t=
//   GET    /api/datasets
//   POST   /api/datasets                {spec, client_selected_ids?}
//   GET    /api/datasets/{id}
//   GET    /api/datasets/{id}/settings
//   GET    /api/datasets/{id}/export
//   DELETE /api/datasets/{id}
//
// Every non-2xx response body is {"status", "code", "message"} plus
// endpoint-specific extras. Schemas: docs/api_schema.json.
//
// Request handling is transport-independent (handle()); serve() binds it to
// an HTTP/1.1 server.

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "simsel/config.hpp"
#include "simsel/core.hpp"
#include "simsel/pipeline.hpp"

namespace httplib {
class Server;
}

namespace simsel {

class Store;

struct ApiRequest {
  std::string method;  // GET, POST, DELETE
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

ApiResponse api_error(int status, std::string_view code, const std::string& message);

class ApiService {
 public:
  ApiService(Store& store, AppConfig config);
  ~ApiService();

  ApiService(const ApiService&) = delete;
  ApiService& operator=(const ApiService&) = delete;

  ApiResponse handle(const ApiRequest& request);

  // Blocks until stop(). Returns false if the address could not be bound.
  bool serve(const std::string& host, int port);
  // Binds an ephemeral port and serves on a background thread.
  int start_background(const std::string& host);
  void stop();

  // Waits for every background post-processing job.
  void wait_for_jobs();

 private:
  struct Job {
    std::string status = "running";  // running | done | failed
    PipelineReport report;
    std::string error;
  };

  ApiResponse list_simulations();
  ApiResponse list_methods();
  ApiResponse create_method(const ApiRequest& request);
  ApiResponse start_postprocess(MethodId method_id, int created_status,
                                nlohmann::json extra);
  ApiResponse job_status(MethodId method_id);
  ApiResponse scatter(const ApiRequest& request);
  ApiResponse records(const ApiRequest& request);
  ApiResponse list_datasets();
  ApiResponse save_dataset(const ApiRequest& request);
  ApiResponse get_dataset(DatasetId id);
  ApiResponse dataset_settings(DatasetId id);
  ApiResponse export_dataset(DatasetId id);
  ApiResponse delete_dataset(DatasetId id);

  nlohmann::json job_json(MethodId method_id, const Job& job) const;
  void setup_server();

  Store& store_;
  AppConfig config_;
  std::mutex jobs_mutex_;
  std::map<MethodId, Job> jobs_;
  std::vector<std::jthread> job_threads_;
  std::unique_ptr<httplib::Server> server_;
  std::jthread server_thread_;
};

}  // namespace simsel
