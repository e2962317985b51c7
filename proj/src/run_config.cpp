#include "kinetics/run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace kinetics {

namespace {

using nlohmann::json;

template <typename Visitor>
void visit_fields(RunConfig& c, Visitor&& v) {
  v("delta", c.delta);
  v("period", c.period);
  v("wall_shape", c.wall_shape);
  v("delta_max", c.delta_max);
  v("nv", c.nv);
  v("vmax", c.vmax);
  v("nx", c.nx);
  v("nt", c.nt);
  v("beta", c.beta);
  v("q", c.q);
  v("tol_fix", c.tol_fix);
  v("tol_outer", c.tol_outer);
  v("max_iter", c.max_iter);
  v("lambda0", c.lambda0);
  v("boundary_damping", c.boundary_damping);
  v("max_rungs", c.max_rungs);
  v("gmres_restart", c.gmres_restart);
  v("design_points", c.design_points);
  v("gamma_stride", c.gamma_stride);
  v("gamma_time_stride", c.gamma_time_stride);
  v("periods", c.periods);
  v("f0_amplitude", c.f0_amplitude);
  v("mass_fix", c.mass_fix);
  v("cycle_t0", c.cycle_t0);
  v("cycle_k", c.cycle_k);
  v("cycle_samples", c.cycle_samples);
  v("seed", c.seed);
  v("threads", c.threads);
  v("suite", c.suite);
  v("out", c.out);
  v("report", c.report);
}

template <typename T>
void read_value(const json& j, const std::string& key, T& field) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) throw ConfigError("");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.is_number()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!j.is_number_integer() && !j.is_number_unsigned()) throw ConfigError("");
      if (j.is_number_integer() && j.get<long long>() < 0) throw ConfigError("");
    } else {
      if (!j.is_array()) throw ConfigError("");
      for (const auto& e : j)
        if (!e.is_number_unsigned() && !(e.is_number_integer() && e.get<long long>() >= 0))
          throw ConfigError("");
    }
    field = j.get<T>();
  } catch (const std::exception&) {
    throw ConfigError("config field '" + key + "' has the wrong type: " + j.dump());
  }
}

}  // namespace

SolverSettings RunConfig::solver_settings() const {
  SolverSettings s;
  s.tol_fix = tol_fix;
  s.tol_outer = tol_outer;
  s.max_iter = max_iter;
  s.boundary_damping = boundary_damping;
  s.lambda0 = lambda0;
  s.max_rungs = max_rungs;
  s.gmres_restart = gmres_restart;
  return s;
}

WallMotion RunConfig::wall_motion() const {
  return WallMotion(delta, period, WallShape::from_name(wall_shape), delta_max);
}

PhaseGrid RunConfig::phase_grid() const {
  return PhaseGrid{VelocityGrid(vmax, nv), SpaceTimeGrid(nx, nt, period)};
}

json to_json(const RunConfig& c) {
  json j = json::object();
  RunConfig copy = c;
  visit_fields(copy, [&](const char* key, const auto& field) { j[key] = field; });
  return j;
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a flat JSON object");
  RunConfig c;
  std::size_t matched = 0;
  visit_fields(c, [&](const char* key, auto& field) {
    if (auto it = j.find(key); it != j.end()) {
      read_value(*it, key, field);
      ++matched;
    }
  });
  if (matched != j.size()) {
    const json known = to_json(RunConfig{});
    for (const auto& [key, value] : j.items())
      if (!known.contains(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot read config file " + path);
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

void apply_override(RunConfig& c, const std::string& key, const std::string& text) {
  json j = to_json(c);
  if (!j.contains(key)) throw ConfigError("unknown config field '" + key + "'");
  const json& current = j[key];
  json value;
  if (current.is_string()) {
    value = text;
  } else if (current.is_array()) {
    value = json::array();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        value.push_back(json::parse(item));
      } catch (const json::parse_error&) {
        throw ConfigError("config field '" + key + "' expects a comma-separated list of integers");
      }
    }
  } else {
    try {
      value = json::parse(text);
    } catch (const json::parse_error&) {
      throw ConfigError("config field '" + key + "' cannot parse '" + text + "'");
    }
  }
  j[key] = value;
  c = config_from_json(j);
}

void validate(const RunConfig& c) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("config field '" + field + "': " + why);
  };
  if (!(c.beta > 3.0)) fail("beta", "must exceed 3");
  if (!(c.q >= 0.0 && c.q < 1.0)) fail("q", "must lie in [0, 1)");
  if (!(c.delta >= 0.0)) fail("delta", "must be non-negative");
  if (!(c.delta_max > 0.0 && c.delta_max < 1.0)) fail("delta_max", "must lie in (0, 1)");
  if (c.delta > c.delta_max) fail("delta", "exceeds delta_max");
  if (!(c.period > 0.0)) fail("period", "must be positive");
  if (c.nv < 4 || c.nv % 2 != 0) fail("nv", "must be even and at least 4");
  if (!(c.vmax > 0.0)) fail("vmax", "must be positive");
  if (c.nx < 2) fail("nx", "must be at least 2");
  if (c.nt < 2) fail("nt", "must be at least 2");
  if (c.gamma_stride == 0) fail("gamma_stride", "must be positive");
  if (c.gamma_time_stride == 0 || c.nt % c.gamma_time_stride != 0)
    fail("gamma_time_stride", "must divide nt");
  if (!(c.tol_fix > 0.0)) fail("tol_fix", "must be positive");
  if (!(c.tol_outer > 0.0)) fail("tol_outer", "must be positive");
  if (c.max_iter == 0) fail("max_iter", "must be positive");
  if (c.max_rungs == 0) fail("max_rungs", "must be positive");
  if (c.gmres_restart == 0) fail("gmres_restart", "must be positive");
  if (c.design_points != 12 && c.design_points != 32) fail("design_points", "must be 12 or 32");
  if (c.boundary_damping == 1) fail("boundary_damping", "must be 0 (off) or at least 2");
  if (!(c.f0_amplitude >= 0.0)) fail("f0_amplitude", "must be non-negative");
  if (!(c.cycle_t0 > 0.0)) fail("cycle_t0", "must be positive");
  if (c.cycle_k.empty()) fail("cycle_k", "must not be empty");
  for (std::size_t k : c.cycle_k)
    if (k == 0) fail("cycle_k", "entries must be positive");
  if (c.cycle_samples == 0) fail("cycle_samples", "must be positive");
  if (c.suite != "trivial" && c.suite != "derived" && c.suite != "paper" && c.suite != "all")
    fail("suite", "must be trivial, derived, paper or all");
  try {
    WallShape::from_name(c.wall_shape);
  } catch (const std::exception&) {
    fail("wall_shape", "unknown shape '" + c.wall_shape + "'");
  }
}

bool operator==(const RunConfig& a, const RunConfig& b) { return to_json(a) == to_json(b); }

std::size_t effective_threads(const RunConfig& c) {
  if (const char* env = std::getenv("KINETICS_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 0) throw ConfigError("KINETICS_THREADS must be a non-negative integer");
    return static_cast<std::size_t>(v);
  }
  return c.threads;
}

}  // namespace kinetics
