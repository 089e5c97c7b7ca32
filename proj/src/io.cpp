#include "tcopt/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace tcopt {

namespace {

using nlohmann::json;

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open file: " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& err) {
    throw std::runtime_error("malformed JSON in " + path.string() + ": " +
                             err.what());
  }
  return j;
}

Vec to_vec(const json& j, const std::string& field) {
  if (!j.is_array()) {
    throw std::runtime_error("field '" + field + "' must be an array");
  }
  Vec v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) {
      throw std::runtime_error("field '" + field + "' must hold numbers");
    }
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::Vector3d to_vec3(const json& j, const std::string& field) {
  const Vec v = to_vec(j, field);
  if (v.size() != 3) {
    throw std::runtime_error("field '" + field + "' must have 3 entries");
  }
  return Eigen::Vector3d(v[0], v[1], v[2]);
}

Eigen::Matrix3d to_rotation(const json& j, const std::string& field) {
  const Vec v = to_vec(j, field);
  if (v.size() != 9) {
    throw std::runtime_error("field '" + field +
                             "' must have 9 entries (row-major rotation)");
  }
  Eigen::Matrix3d r;
  for (int i = 0; i < 9; ++i) {
    r(i / 3, i % 3) = v[i];
  }
  return r;
}

KinematicChain parse_chain_json(const json& j) {
  if (!j.contains("type")) {
    throw std::runtime_error("chain file misses field 'type'");
  }
  const std::string type = j.at("type").get<std::string>();
  if (!j.contains("q_max")) {
    throw std::runtime_error("chain file misses field 'q_max'");
  }
  Vec q_max = to_vec(j.at("q_max"), "q_max");

  Pose base;
  if (j.contains("base_position")) {
    base.position = to_vec3(j.at("base_position"), "base_position");
  }
  if (j.contains("base_rotation")) {
    base.rotation = to_rotation(j.at("base_rotation"), "base_rotation");
  }

  if (type == "planar") {
    if (!j.contains("link_lengths")) {
      throw std::runtime_error("planar chain misses field 'link_lengths'");
    }
    const Vec lengths = to_vec(j.at("link_lengths"), "link_lengths");
    return KinematicChain(
        PlanarChain{{lengths.data(), lengths.data() + lengths.size()}},
        std::move(q_max), base);
  }
  if (type == "spatial_dh") {
    if (!j.contains("dh_rows")) {
      throw std::runtime_error("spatial chain misses field 'dh_rows'");
    }
    SpatialDHChain chain;
    for (const auto& row : j.at("dh_rows")) {
      DHRow dh;
      dh.a = row.value("a", 0.0);
      dh.alpha = row.value("alpha", 0.0);
      dh.d = row.value("d", 0.0);
      dh.theta_offset = row.value("theta_offset", 0.0);
      chain.rows.push_back(dh);
    }
    return KinematicChain(std::move(chain), std::move(q_max), base);
  }
  throw std::runtime_error("unknown chain type '" + type + "'");
}

}  // namespace

KinematicChain load_chain(const std::filesystem::path& path) {
  return parse_chain_json(read_json_file(path));
}

KinematicChain parse_chain(const std::string& json_text) {
  return parse_chain_json(json::parse(json_text));
}

SolverConfig load_solver_config(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  SolverConfig config;
  config.n = j.value("n", config.n);
  config.dt = j.value("dt", config.dt);
  config.max_iter = j.value("max_iter", config.max_iter);
  if (j.contains("mode")) {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "coupled") {
      config.mode = SolveMode::coupled;
    } else if (mode == "distributive") {
      config.mode = SolveMode::distributive;
    } else {
      throw std::runtime_error("field 'mode' must be coupled or distributive");
    }
  }
  if (j.contains("cost")) {
    const std::string cost = j.at("cost").get<std::string>();
    if (cost == "acceleration") {
      config.cost = CostModel::acceleration;
    } else if (cost == "velocity") {
      config.cost = CostModel::velocity;
    } else {
      throw std::runtime_error("field 'cost' must be acceleration or velocity");
    }
  }
  config.proj_tol = j.value("proj_tol", config.proj_tol);
  config.task_tol = j.value("task_tol", config.task_tol);
  config.cost_tol = j.value("cost_tol", config.cost_tol);
  config.rho_q = j.value("rho_q", config.rho_q);
  config.rho_v = j.value("rho_v", config.rho_v);
  config.rho_w = j.value("rho_w", config.rho_w);
  config.rho_f = j.value("rho_f", config.rho_f);
  config.delta = j.value("delta", config.delta);
  config.rho_max = j.value("rho_max", config.rho_max);
  config.worker_count = j.value("worker_count", config.worker_count);
  if (j.contains("pin_start")) {
    config.pin_start = to_vec(j.at("pin_start"), "pin_start");
  }
  return config;
}

TaskSpec load_task_spec(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  TaskSpec spec;
  spec.horizon = j.value("n", 0);
  if (!j.contains("waypoints")) {
    throw std::runtime_error("task spec misses field 'waypoints'");
  }
  for (const auto& entry : j.at("waypoints")) {
    Waypoint wp;
    if (entry.contains("t")) {
      if (entry.at("t").is_string()) {
        if (entry.at("t").get<std::string>() != "all") {
          throw std::runtime_error("field 't' must be an index or \"all\"");
        }
        wp.all = true;
      } else {
        wp.t = entry.at("t").get<int>();
      }
    }
    wp.terminal = entry.value("terminal", false);
    if (!wp.t && !wp.all && !wp.terminal) {
      wp.all = true;
    }
    if (entry.contains("position")) {
      wp.position = to_vec3(entry.at("position"), "position");
      if (entry.contains("mask")) {
        const auto& mask = entry.at("mask");
        if (!mask.is_array() || mask.size() != 3) {
          throw std::runtime_error("field 'mask' must have 3 booleans");
        }
        for (int i = 0; i < 3; ++i) {
          wp.mask[static_cast<size_t>(i)] = mask[static_cast<size_t>(i)].get<bool>();
        }
      }
    }
    if (entry.contains("rotation")) {
      wp.rotation = to_rotation(entry.at("rotation"), "rotation");
    }
    spec.waypoints.push_back(wp);
  }
  return spec;
}

ScenarioFile load_scenario_file(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  ScenarioFile file;
  if (!j.contains("id")) {
    throw std::runtime_error("scenario file misses field 'id'");
  }
  file.id = j.at("id").get<std::string>();
  ScenarioOverrides& o = file.overrides;
  if (j.contains("n")) o.n = j.at("n").get<int>();
  if (j.contains("dt")) o.dt = j.at("dt").get<double>();
  if (j.contains("link_lengths")) {
    const Vec lengths = to_vec(j.at("link_lengths"), "link_lengths");
    o.link_lengths.emplace(lengths.data(), lengths.data() + lengths.size());
  }
  if (j.contains("q_max")) o.q_max = to_vec(j.at("q_max"), "q_max");
  if (j.contains("chain_file")) {
    const std::filesystem::path chain_path =
        path.parent_path() / j.at("chain_file").get<std::string>();
    o.spatial_chain = load_chain(chain_path);
  }
  if (j.contains("chain")) {
    o.spatial_chain = parse_chain_json(j.at("chain"));
  }
  if (j.contains("circle_center")) {
    o.circle_center = to_vec3(j.at("circle_center"), "circle_center");
  }
  if (j.contains("circle_radius")) {
    o.circle_radius = j.at("circle_radius").get<double>();
  }
  if (j.contains("second_base")) {
    o.second_base = to_vec3(j.at("second_base"), "second_base");
  }
  if (j.contains("goal_position")) {
    o.goal_position = to_vec3(j.at("goal_position"), "goal_position");
  }
  if (j.contains("start_config")) {
    o.start_config = to_vec(j.at("start_config"), "start_config");
  }
  if (j.contains("orientation_rpy")) {
    o.orientation_rpy = to_vec3(j.at("orientation_rpy"), "orientation_rpy");
  }
  if (j.contains("plane_x")) o.plane_x = j.at("plane_x").get<double>();
  return file;
}

std::string format_double(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const Trajectory& trajectory) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "t";
  for (int j = 0; j < trajectory.joints(); ++j) {
    out << ",q" << (j + 1);
  }
  out << "\n";
  for (int t = 0; t < trajectory.n(); ++t) {
    out << format_double(t * trajectory.dt);
    for (int j = 0; j < trajectory.joints(); ++j) {
      out << "," << format_double(trajectory.q(t, j));
    }
    out << "\n";
  }
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("empty trajectory file " + path.string());
  }
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      row.push_back(std::strtod(cell.c_str(), nullptr));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty() || rows.front().size() < 2) {
    throw std::runtime_error("trajectory file has no joint columns");
  }
  Trajectory trajectory;
  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(rows.front().size()) - 1;
  trajectory.q.resize(n, m);
  for (int t = 0; t < n; ++t) {
    if (static_cast<int>(rows[static_cast<size_t>(t)].size()) != m + 1) {
      throw std::runtime_error("ragged trajectory file " + path.string());
    }
    for (int j = 0; j < m; ++j) {
      trajectory.q(t, j) = rows[static_cast<size_t>(t)][static_cast<size_t>(j + 1)];
    }
  }
  if (n >= 2) {
    trajectory.dt = rows[1][0] - rows[0][0];
  }
  return trajectory;
}

void write_residuals_csv(const std::filesystem::path& path,
                         const std::vector<IterationReport>& reports) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "iteration,proj_res_v,proj_res_w,task_res,cost,wall_ms\n";
  for (const auto& report : reports) {
    out << report.iteration << "," << format_double(report.proj_res_v) << ","
        << format_double(report.proj_res_w) << ","
        << format_double(report.task_res) << "," << format_double(report.cost)
        << "," << format_double(report.wall_ms) << "\n";
  }
}

void write_summary_json(const std::filesystem::path& path,
                        const RunSummary& summary) {
  json j;
  j["scenario"] = summary.scenario;
  j["n"] = summary.n;
  j["mode"] = summary.mode;
  j["iterations"] = summary.iterations;
  j["converged"] = summary.converged;
  j["task_residual"] = summary.task_residual;
  j["proj_residual_v"] = summary.proj_residual_v;
  j["proj_residual_w"] = summary.proj_residual_w;
  j["cost"] = summary.cost;
  j["trajectory_task_residual"] = summary.trajectory_task_residual;
  if (summary.cyclicity) {
    j["cyclicity"] = {{"position_gap", summary.cyclicity->position_gap},
                      {"velocity_gap", summary.cyclicity->velocity_gap}};
  }
  j["wall_ms"] = summary.wall_ms;
  j["dt"] = summary.dt;
  j["threads"] = summary.threads;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

RunSummary read_summary_json(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  RunSummary summary;
  summary.scenario = j.value("scenario", "");
  summary.n = j.value("n", 0);
  summary.mode = j.value("mode", "");
  summary.iterations = j.value("iterations", 0);
  summary.converged = j.value("converged", false);
  summary.task_residual = j.value("task_residual", 0.0);
  summary.proj_residual_v = j.value("proj_residual_v", 0.0);
  summary.proj_residual_w = j.value("proj_residual_w", 0.0);
  summary.cost = j.value("cost", 0.0);
  summary.trajectory_task_residual = j.value("trajectory_task_residual", 0.0);
  if (j.contains("cyclicity")) {
    CyclicityReport report;
    report.position_gap = j.at("cyclicity").value("position_gap", 0.0);
    report.velocity_gap = j.at("cyclicity").value("velocity_gap", 0.0);
    summary.cyclicity = report;
  }
  summary.wall_ms = j.value("wall_ms", 0.0);
  summary.dt = j.value("dt", 0.1);
  summary.threads = j.value("threads", 1);
  return summary;
}

}  // namespace tcopt
