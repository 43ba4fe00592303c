#include "simsel/json_io.hpp"

#include "simsel/error.hpp"
#include "simsel/selection.hpp"

namespace simsel {

using nlohmann::json;

namespace {

template <typename T>
T field(const json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) {
    throw Error(ErrorCode::kValidation, std::string("missing field '") + name + "'");
  }
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kValidation,
                std::string("field '") + name + "' has the wrong type");
  }
}

template <typename T>
T field_or(const json& j, const char* name, T fallback) {
  if (!j.is_object() || !j.contains(name) || j.at(name).is_null()) return fallback;
  return field<T>(j, name);
}

}  // namespace

json params_to_json(const ParamLevels& params) {
  json out = json::object();
  for (std::size_t i = 0; i < kParamCount; ++i) {
    out[std::string(kParamNames[i])] = params[i];
  }
  return out;
}

ParamLevels params_from_json(const json& j) {
  ParamLevels p{};
  for (std::size_t i = 0; i < kParamCount; ++i) {
    p[i] = field<int>(j, std::string(kParamNames[i]).c_str());
  }
  return p;
}

json geometry_to_json(const Geometry& g) {
  if (const auto* box = std::get_if<BoxGeometry>(&g)) {
    return {{"x_min", box->x_min},
            {"x_max", box->x_max},
            {"y_min", box->y_min},
            {"y_max", box->y_max}};
  }
  json vertices = json::array();
  for (const auto& v : std::get<LassoGeometry>(g).vertices) {
    vertices.push_back({v.x, v.y});
  }
  return {{"vertices", vertices}};
}

Geometry geometry_from_json(SelectionType type, const json& j) {
  if (type == SelectionType::kBox) {
    return BoxGeometry{field<double>(j, "x_min"), field<double>(j, "x_max"),
                       field<double>(j, "y_min"), field<double>(j, "y_max")};
  }
  LassoGeometry lasso;
  const auto vertices = field<json>(j, "vertices");
  if (!vertices.is_array()) {
    throw Error(ErrorCode::kValidation, "'vertices' must be an array");
  }
  for (const auto& v : vertices) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      throw Error(ErrorCode::kValidation, "lasso vertex must be [x, y]");
    }
    lasso.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
  }
  return lasso;
}

json spec_to_json(const SelectionSpec& spec) {
  return {{"method_id", spec.method_id},
          {"time_step", spec.time_step},
          {"w_shock", spec.w_shock},
          {"w_edge", spec.w_edge},
          {"color_by", spec.color_by},
          {"filter", serialize_filter(spec.filter)},
          {"selection_type", selection_type_name(selection_type(spec.geometry))},
          {"geometry", geometry_to_json(spec.geometry)},
          {"subsample_p", spec.subsample_p},
          {"subsample_seed", spec.subsample_seed},
          {"description", spec.description},
          {"created_at", spec.created_at}};
}

SelectionSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::kValidation, "spec must be an object");
  SelectionSpec spec;
  spec.method_id = field<MethodId>(j, "method_id");
  spec.time_step = field<int>(j, "time_step");
  spec.w_shock = field_or<double>(j, "w_shock", 1.0);
  spec.w_edge = field_or<double>(j, "w_edge", 1.0);
  spec.color_by = field_or<std::string>(j, "color_by", "profile");
  spec.filter = parse_filter(field_or<std::string>(j, "filter", ""));
  const auto type = field<std::string>(j, "selection_type");
  if (type == "box") {
    spec.geometry = geometry_from_json(SelectionType::kBox, field<json>(j, "geometry"));
  } else if (type == "lasso") {
    spec.geometry = geometry_from_json(SelectionType::kLasso, field<json>(j, "geometry"));
  } else {
    throw Error(ErrorCode::kValidation, "selection_type must be 'box' or 'lasso'");
  }
  spec.subsample_p = field_or<double>(j, "subsample_p", 1.0);
  spec.subsample_seed = field_or<std::uint64_t>(j, "subsample_seed", 0);
  spec.description = field_or<std::string>(j, "description", "");
  spec.created_at = field_or<std::string>(j, "created_at", "");
  return spec;
}

json method_to_json(const MethodInfo& method) {
  return {{"method_id", method.method_id},
          {"gt_id", method.ground_truth_id},
          {"gt_time_step", method.gt_time_step},
          {"norm", norm_name(method.norm)},
          {"description", method.description},
          {"match_time_steps", method.match_time_steps}};
}

MethodInfo method_from_json(const json& j) {
  MethodInfo m;
  m.method_id = field<MethodId>(j, "method_id");
  m.ground_truth_id = field<GroundTruthId>(j, "gt_id");
  m.gt_time_step = field<int>(j, "gt_time_step");
  const auto norm = parse_norm(field<std::string>(j, "norm"));
  if (!norm) throw Error(ErrorCode::kValidation, "unknown norm");
  m.norm = *norm;
  m.description = field<std::string>(j, "description");
  m.match_time_steps = field_or<bool>(j, "match_time_steps", false);
  return m;
}

json record_to_json(const PostRecord& record) {
  json out = {{"method_id", record.method_id},
              {"sim_id", record.sim_id},
              {"time_step", record.time_step},
              {"delta_shock", record.delta_shock},
              {"delta_edge", record.delta_edge},
              {"delta_rho", nullptr},
              {"invalid", !record.valid()}};
  if (record.delta_rho) out["delta_rho"] = *record.delta_rho;
  return out;
}

PostRecord record_from_json(const json& j) {
  PostRecord r;
  r.method_id = field<MethodId>(j, "method_id");
  r.sim_id = field<SimId>(j, "sim_id");
  r.time_step = field<int>(j, "time_step");
  r.delta_shock = field<double>(j, "delta_shock");
  r.delta_edge = field<double>(j, "delta_edge");
  if (j.contains("delta_rho") && !j.at("delta_rho").is_null()) {
    r.delta_rho = field<double>(j, "delta_rho");
  }
  return r;
}

json simulation_to_json(const SimulationRecord& record) {
  return {{"sim_id", record.sim_id},
          {"params", params_to_json(record.params)},
          {"density_paths", record.density_paths},
          {"feature_path", record.feature_path}};
}

SimulationRecord simulation_from_json(const json& j) {
  SimulationRecord r;
  r.sim_id = field<SimId>(j, "sim_id");
  r.params = params_from_json(field<json>(j, "params"));
  r.density_paths = field<std::vector<std::string>>(j, "density_paths");
  r.feature_path = field<std::string>(j, "feature_path");
  return r;
}

}  // namespace simsel
