#include "simsel/api.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <cmath>

#include "simsel/error.hpp"
#include "simsel/json_io.hpp"
#include "simsel/selection.hpp"
#include "simsel/store.hpp"

namespace simsel {

using nlohmann::json;

namespace {

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kDuplicateKey:
    case ErrorCode::kStaleRecords:
      return 409;
    case ErrorCode::kValidation:
    case ErrorCode::kWeightOutOfRange:
    case ErrorCode::kInvalidTimeStep:
    case ErrorCode::kInvalidLevel:
    case ErrorCode::kUnknownAxis:
    case ErrorCode::kMalformedClause:
    case ErrorCode::kDuplicateAxis:
    case ErrorCode::kInvertedRect:
    case ErrorCode::kDegeneratePolygon:
    case ErrorCode::kInvalidProbability:
    case ErrorCode::kEmptySelection:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kLengthMismatch:
    case ErrorCode::kTooFewSamples:
      return 422;
    default:
      return 500;
  }
}

ApiResponse from_error(const Error& e) {
  ApiResponse r = api_error(status_for(e.code()), error_code_name(e.code()), e.what());
  if (e.position()) r.body["position"] = *e.position();
  return r;
}

// Thrown by request parsing helpers; converted to a 422 body.
struct BadRequest {
  std::string message;
};

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    while (i < path.size() && path[i] == '/') ++i;
    const std::size_t start = i;
    while (i < path.size() && path[i] != '/') ++i;
    if (i > start) parts.push_back(path.substr(start, i - start));
  }
  return parts;
}

std::optional<std::int64_t> to_id(const std::string& text) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::int64_t query_int(const ApiRequest& req, const std::string& key) {
  const auto it = req.query.find(key);
  if (it == req.query.end()) throw BadRequest{"missing query parameter '" + key + "'"};
  const auto v = to_id(it->second);
  if (!v) throw BadRequest{"query parameter '" + key + "' must be an integer"};
  return *v;
}

double query_double(const ApiRequest& req, const std::string& key, double fallback) {
  const auto it = req.query.find(key);
  if (it == req.query.end()) return fallback;
  double v = 0.0;
  const auto& s = it->second;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw BadRequest{"query parameter '" + key + "' must be a number"};
  }
  return v;
}

json parse_body(const ApiRequest& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw BadRequest{std::string("request body is not valid JSON: ") + e.what()};
  }
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

json row_json(const JoinedRow& row) {
  json out = {{"sim_id", row.sim_id},
              {"params", params_to_json(row.params)},
              {"delta_shock", row.delta_shock},
              {"delta_edge", row.delta_edge},
              {"delta_rho", nullptr},
              {"invalid", !row.valid}};
  if (row.valid) out["delta_rho"] = row.delta_rho;
  return out;
}

}  // namespace

ApiResponse api_error(int status, std::string_view code, const std::string& message) {
  return {status, json{{"status", status}, {"code", code}, {"message", message}}};
}

ApiService::ApiService(Store& store, AppConfig config)
    : store_(store), config_(std::move(config)) {}

ApiService::~ApiService() {
  stop();
  wait_for_jobs();
}

void ApiService::wait_for_jobs() {
  std::vector<std::jthread> threads;
  {
    std::lock_guard lock(jobs_mutex_);
    threads.swap(job_threads_);
  }
  threads.clear();
}

ApiResponse ApiService::handle(const ApiRequest& req) {
  try {
    const auto parts = split_path(req.path);
    if (parts.empty() || parts[0] != "api") {
      return api_error(404, "no_route", "no route for " + req.path);
    }
    const std::string& verb = req.method;
    auto not_allowed = [&] {
      return api_error(405, "method_not_allowed",
                       verb + " not allowed on " + req.path);
    };
    if (parts.size() == 2 && parts[1] == "health") {
      if (verb != "GET") return not_allowed();
      return {200, json{{"status", "ok"}}};
    }
    if (parts.size() == 2 && parts[1] == "simulations") {
      if (verb != "GET") return not_allowed();
      return list_simulations();
    }
    if (parts.size() >= 2 && parts[1] == "methods") {
      if (parts.size() == 2) {
        if (verb == "GET") return list_methods();
        if (verb == "POST") return create_method(req);
        return not_allowed();
      }
      const auto id = to_id(parts[2]);
      if (!id) return api_error(404, "not_found", "bad method id");
      if (parts.size() == 4 && parts[3] == "postprocess") {
        if (verb != "POST") return not_allowed();
        store_.get_method(*id);
        return start_postprocess(*id, 200, json::object());
      }
      if (parts.size() == 3) {
        if (verb != "GET") return not_allowed();
        return {200, method_to_json(store_.get_method(*id))};
      }
    }
    if (parts.size() == 3 && parts[1] == "jobs") {
      if (verb != "GET") return not_allowed();
      const auto id = to_id(parts[2]);
      if (!id) return api_error(404, "not_found", "bad job id");
      return job_status(*id);
    }
    if (parts.size() == 2 && parts[1] == "scatter") {
      if (verb != "GET") return not_allowed();
      return scatter(req);
    }
    if (parts.size() == 2 && parts[1] == "records") {
      if (verb != "GET") return not_allowed();
      return records(req);
    }
    if (parts.size() >= 2 && parts[1] == "datasets") {
      if (parts.size() == 2) {
        if (verb == "GET") return list_datasets();
        if (verb == "POST") return save_dataset(req);
        return not_allowed();
      }
      const auto id = to_id(parts[2]);
      if (!id) return api_error(404, "not_found", "bad dataset id");
      if (parts.size() == 3) {
        if (verb == "GET") return get_dataset(*id);
        if (verb == "DELETE") return delete_dataset(*id);
        return not_allowed();
      }
      if (parts.size() == 4 && parts[3] == "settings") {
        if (verb != "GET") return not_allowed();
        return dataset_settings(*id);
      }
      if (parts.size() == 4 && parts[3] == "export") {
        if (verb != "GET") return not_allowed();
        return export_dataset(*id);
      }
    }
    return api_error(404, "no_route", "no route for " + req.path);
  } catch (const BadRequest& e) {
    return api_error(422, "bad_request", e.message);
  } catch (const Error& e) {
    return from_error(e);
  } catch (const std::exception& e) {
    return api_error(500, "internal_error", e.what());
  }
}

ApiResponse ApiService::list_simulations() {
  json out = json::array();
  for (const auto& sim : store_.list_simulations()) {
    out.push_back({{"sim_id", sim.sim_id}, {"params", params_to_json(sim.params)}});
  }
  return {200, out};
}

ApiResponse ApiService::list_methods() {
  json out = json::array();
  for (const auto& m : store_.list_methods()) {
    json j = method_to_json(m);
    j["gt_sim_id"] = store_.ground_truth_sim(m.ground_truth_id);
    out.push_back(std::move(j));
  }
  return {200, out};
}

ApiResponse ApiService::create_method(const ApiRequest& req) {
  const json body = parse_body(req);
  if (!body.is_object()) throw BadRequest{"body must be an object"};
  auto get = [&](const char* key) -> const json& {
    if (!body.contains(key)) throw BadRequest{std::string("missing field '") + key + "'"};
    return body.at(key);
  };
  const json& sim = get("gt_sim_id");
  const json& step = get("gt_time_step");
  const json& norm_text = get("norm");
  if (!sim.is_number_integer() || !step.is_number_integer() || !norm_text.is_string()) {
    throw BadRequest{"gt_sim_id and gt_time_step must be integers, norm a string"};
  }
  const auto norm = parse_norm(norm_text.get<std::string>());
  if (!norm) {
    return api_error(422, "invalid_norm",
                     "norm must be one of L1, L2, LINF; got '" +
                         norm_text.get<std::string>() + "'");
  }
  const std::string description =
      body.contains("description") && body.at("description").is_string()
          ? body.at("description").get<std::string>()
          : std::string();
  const SimId sim_id = sim.get<SimId>();
  store_.get_simulation(sim_id);
  const int t = step.get<int>();
  const int t_max = store_.time_steps();
  if (t < 1 || t > t_max) {
    return api_error(422, "invalid_time_step",
                     "gt_time_step must lie in [1, " + std::to_string(t_max) + "]");
  }
  GroundTruthId gt = 0;
  if (const auto existing = store_.find_ground_truth(sim_id)) {
    gt = *existing;
  } else {
    gt = store_.register_ground_truth(sim_id);
  }
  const MethodId id = store_.create_method(gt, t, *norm, description);
  json method = method_to_json(store_.get_method(id));
  method["gt_sim_id"] = sim_id;
  return start_postprocess(id, 201, json{{"method", method}});
}

json ApiService::job_json(MethodId method_id, const Job& job) const {
  json out = {{"method_id", method_id},
              {"status", job.status},
              {"poll", "/api/jobs/" + std::to_string(method_id)}};
  if (job.status == "done") out["report"] = report_json(job.report);
  if (job.status == "failed") out["error"] = job.error;
  return out;
}

ApiResponse ApiService::start_postprocess(MethodId method_id, int created_status,
                                          json extra) {
  const std::size_t work = store_.simulation_count() *
                           static_cast<std::size_t>(store_.time_steps());
  {
    std::lock_guard lock(jobs_mutex_);
    auto it = jobs_.find(method_id);
    if (it != jobs_.end() && it->second.status == "running") {
      extra["job"] = job_json(method_id, it->second);
      return {202, extra};
    }
    jobs_[method_id] = Job{};
  }
  if (work <= config_.sync_work_limit) {
    Job job;
    try {
      job.report = postprocess(store_, method_id, config_.jobs);
      job.status = "done";
    } catch (const std::exception& e) {
      job.status = "failed";
      job.error = e.what();
    }
    std::lock_guard lock(jobs_mutex_);
    jobs_[method_id] = job;
    extra["job"] = job_json(method_id, job);
    return {created_status, extra};
  }
  std::lock_guard lock(jobs_mutex_);
  job_threads_.emplace_back([this, method_id] {
    Job job;
    try {
      job.report = postprocess(store_, method_id, config_.jobs);
      job.status = "done";
    } catch (const std::exception& e) {
      job.status = "failed";
      job.error = e.what();
    }
    std::lock_guard inner(jobs_mutex_);
    jobs_[method_id] = job;
  });
  extra["job"] = job_json(method_id, jobs_[method_id]);
  return {202, extra};
}

ApiResponse ApiService::job_status(MethodId method_id) {
  std::lock_guard lock(jobs_mutex_);
  const auto it = jobs_.find(method_id);
  if (it == jobs_.end()) {
    return api_error(404, "not_found",
                     "no post-processing job for method " + std::to_string(method_id));
  }
  return {200, job_json(method_id, it->second)};
}

ApiResponse ApiService::scatter(const ApiRequest& req) {
  const MethodId method = query_int(req, "method");
  const auto t = query_int(req, "t");
  const double ws = query_double(req, "ws", 1.0);
  const double we = query_double(req, "we", 1.0);
  store_.get_method(method);
  const int t_max = store_.time_steps();
  if (t < 1 || t > t_max) {
    return api_error(422, "invalid_time_step",
                     "t must lie in [1, " + std::to_string(t_max) + "]");
  }
  if (ws < 0.0 || ws > 1.0 || we < 0.0 || we > 1.0) {
    return api_error(422, "weight_out_of_range", "ws and we must lie in [0, 1]");
  }
  const auto result = store_.query_records(method, static_cast<int>(t));
  json out = json::array();
  for (const auto& p : scatter_points(result.rows, ws, we)) {
    out.push_back({{"sim_id", p.sim_id},
                   {"x", p.x},
                   {"y", p.y},
                   {"params", params_to_json(p.params)}});
  }
  return {200, out};
}

ApiResponse ApiService::records(const ApiRequest& req) {
  const MethodId method = query_int(req, "method");
  const auto t = query_int(req, "t");
  store_.get_method(method);
  const int t_max = store_.time_steps();
  if (t < 1 || t > t_max) {
    return api_error(422, "invalid_time_step",
                     "t must lie in [1, " + std::to_string(t_max) + "]");
  }
  json out = json::array();
  for (const auto& row : store_.query_records(method, static_cast<int>(t)).rows) {
    out.push_back(row_json(row));
  }
  return {200, out};
}

ApiResponse ApiService::list_datasets() {
  json out = json::array();
  for (const auto& d : store_.list_datasets()) {
    out.push_back({{"dataset_id", d.dataset_id},
                   {"description", d.description},
                   {"created_at", d.created_at},
                   {"member_count", d.member_count},
                   {"method_id", d.method_id}});
  }
  return {200, out};
}

ApiResponse ApiService::save_dataset(const ApiRequest& req) {
  const json body = parse_body(req);
  if (!body.is_object() || !body.contains("spec")) {
    throw BadRequest{"body must be an object with a 'spec' field"};
  }
  SelectionSpec spec = spec_from_json(body.at("spec"));
  validate(spec, store_.time_steps());
  const auto members = replay(spec, store_);
  if (body.contains("client_selected_ids") && !body.at("client_selected_ids").is_null()) {
    const auto& ids = body.at("client_selected_ids");
    if (!ids.is_array()) throw BadRequest{"client_selected_ids must be an array"};
    std::vector<SimId> client;
    for (const auto& v : ids) {
      if (!v.is_number_integer()) throw BadRequest{"client_selected_ids must be integers"};
      client.push_back(v.get<SimId>());
    }
    std::sort(client.begin(), client.end());
    client.erase(std::unique(client.begin(), client.end()), client.end());
    if (client != members) {
      ApiResponse r = api_error(409, "selection_drift",
                                "client selection differs from server replay");
      r.body["server_members"] = members;
      r.body["client_members"] = client;
      return r;
    }
  }
  if (members.empty()) {
    return api_error(422, "empty_selection", "the selection replays to no simulations");
  }
  const DatasetId id = store_.save_dataset(members, spec);
  const auto saved = store_.load_dataset(id);
  return {201, json{{"dataset_id", id},
                    {"members", saved.members},
                    {"spec", spec_to_json(saved.spec)}}};
}

ApiResponse ApiService::get_dataset(DatasetId id) {
  const auto ds = store_.load_dataset(id);
  return {200, json{{"dataset_id", ds.dataset_id},
                    {"members", ds.members},
                    {"spec", spec_to_json(ds.spec)}}};
}

ApiResponse ApiService::dataset_settings(DatasetId id) {
  return {200, spec_to_json(store_.load_settings(id))};
}

ApiResponse ApiService::export_dataset(DatasetId id) {
  return {200, store_.export_dataset_json(id)};
}

ApiResponse ApiService::delete_dataset(DatasetId id) {
  store_.delete_dataset(id);
  return {200, json{{"dataset_id", id}, {"deleted", true}}};
}

void ApiService::setup_server() {
  server_ = std::make_unique<httplib::Server>();
  // No SO_REUSEPORT: a second instance on the same port must fail to bind.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  auto bridge = [this](const httplib::Request& hreq, httplib::Response& hres) {
    ApiRequest req;
    req.method = hreq.method;
    req.path = hreq.path;
    for (const auto& [k, v] : hreq.params) req.query.emplace(k, v);
    req.body = hreq.body;
    const ApiResponse res = handle(req);
    hres.status = res.status;
    if (req.path.find("/export") != std::string::npos && res.status == 200) {
      hres.set_header("Content-Disposition", "attachment; filename=\"dataset.json\"");
    }
    hres.set_content(res.body.dump(), "application/json");
  };
  server_->Get(R"(/api/.*)", bridge);
  server_->Post(R"(/api/.*)", bridge);
  server_->Delete(R"(/api/.*)", bridge);
  server_->Put(R"(/api/.*)", bridge);
  server_->Patch(R"(/api/.*)", bridge);
  if (!config_.static_dir.empty()) {
    server_->set_mount_point("/", config_.static_dir.string());
  }
}

bool ApiService::serve(const std::string& host, int port) {
  setup_server();
  return server_->listen(host, port);
}

int ApiService::start_background(const std::string& host) {
  setup_server();
  const int port = server_->bind_to_any_port(host);
  if (port < 0) return port;
  server_thread_ = std::jthread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port;
}

void ApiService::stop() {
  if (server_) server_->stop();
  if (server_thread_.joinable()) server_thread_.join();
}

}  // namespace simsel
