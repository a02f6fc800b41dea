#include "hclbf/scenario.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace hclbf::io {

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw ScenarioError(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ScenarioError(where + ": unknown key '" + key + "'");
  }
}

double get_number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ScenarioError(where + "." + key + " is required");
  if (!obj[key].is_number()) throw ScenarioError(where + "." + key + " must be a number");
  return obj[key].get<double>();
}

double number_or(const json& obj, const std::string& key, double fallback, const std::string& where) {
  return obj.contains(key) ? get_number(obj, key, where) : fallback;
}

int int_or(const json& obj, const std::string& key, int fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_integer()) throw ScenarioError(where + "." + key + " must be an integer");
  return obj[key].get<int>();
}

bool bool_or(const json& obj, const std::string& key, bool fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_boolean()) throw ScenarioError(where + "." + key + " must be a boolean");
  return obj[key].get<bool>();
}

std::string string_of(const json& v, const std::string& where) {
  if (!v.is_string()) throw ScenarioError(where + " must be a string");
  return v.get<std::string>();
}

Eigen::Vector2d point_of(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ScenarioError(where + " must be [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

field::Rect rect_of(const json& v, const std::string& where) {
  check_keys(v, where, {"x_min", "y_min", "x_max", "y_max"});
  return {get_number(v, "x_min", where), get_number(v, "y_min", where), get_number(v, "x_max", where),
          get_number(v, "y_max", where)};
}

json rect_json(const field::Rect& r) {
  return {{"x_min", r.x_min}, {"y_min", r.y_min}, {"x_max", r.x_max}, {"y_max", r.y_max}};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

const std::filesystem::path& existing(const std::filesystem::path& p) {
  if (!std::filesystem::is_regular_file(p)) throw FileNotFound(p);
  return p;
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(existing(p));
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

sim::Scenario scenario_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ScenarioError(std::string("scenario is not valid JSON: ") + e.what());
  }
  check_keys(doc, "scenario",
             {"bounds", "grid", "obstacles", "goal", "solver", "formula", "formula_file", "sim", "policy", "filter",
              "seed"});

  sim::Scenario sc;
  if (!doc.contains("bounds")) throw ScenarioError("scenario.bounds is required");
  const json& b = doc["bounds"];
  check_keys(b, "bounds", {"x_min", "x_max", "y_min", "y_max"});
  sc.world.x_min = get_number(b, "x_min", "bounds");
  sc.world.x_max = get_number(b, "x_max", "bounds");
  sc.world.y_min = get_number(b, "y_min", "bounds");
  sc.world.y_max = get_number(b, "y_max", "bounds");

  if (!doc.contains("grid")) throw ScenarioError("scenario.grid is required");
  const json& g = doc["grid"];
  check_keys(g, "grid", {"width", "height"});
  sc.world.width = int_or(g, "width", 0, "grid");
  sc.world.height = int_or(g, "height", 0, "grid");

  if (doc.contains("obstacles")) {
    if (!doc["obstacles"].is_array()) throw ScenarioError("obstacles must be an array");
    for (std::size_t k = 0; k < doc["obstacles"].size(); ++k) {
      sc.world.static_obstacles.push_back(rect_of(doc["obstacles"][k], "obstacles[" + std::to_string(k) + "]"));
    }
  }
  if (doc.contains("goal") && !doc["goal"].is_null()) sc.world.static_goal = rect_of(doc["goal"], "goal");

  if (doc.contains("solver")) {
    const json& s = doc["solver"];
    check_keys(s, "solver", {"omega", "tol", "max_iters", "method"});
    sc.solver.omega = number_or(s, "omega", sc.solver.omega, "solver");
    sc.solver.tol = number_or(s, "tol", sc.solver.tol, "solver");
    sc.solver.max_iters = int_or(s, "max_iters", sc.solver.max_iters, "solver");
    if (s.contains("method")) {
      try {
        sc.solver.method = field::relaxation_method_from_string(string_of(s["method"], "solver.method"));
      } catch (const std::invalid_argument& e) {
        throw ScenarioError(e.what());
      }
    }
  }

  if (doc.contains("formula") && doc.contains("formula_file")) {
    throw ScenarioError("give either formula or formula_file, not both");
  }
  if (doc.contains("formula") && !doc["formula"].is_null()) {
    sc.formula = stl::parse(string_of(doc["formula"], "formula"));
  } else if (doc.contains("formula_file")) {
    const auto path = resolve(base_dir, string_of(doc["formula_file"], "formula_file"));
    sc.formula = stl::parse(stl::strip_comments(read_text(path)));
  }

  if (doc.contains("sim")) {
    const json& s = doc["sim"];
    check_keys(s, "sim", {"horizon", "dt", "start", "stop_after_flat_ticks"});
    sc.horizon = number_or(s, "horizon", sc.horizon, "sim");
    sc.dt = number_or(s, "dt", sc.dt, "sim");
    if (s.contains("start")) sc.start = point_of(s["start"], "sim.start");
    sc.stop_after_flat_ticks = int_or(s, "stop_after_flat_ticks", sc.stop_after_flat_ticks, "sim");
  }

  // Default goal point: center of the static goal, else the world center.
  if (sc.world.static_goal) {
    const auto& r = *sc.world.static_goal;
    sc.policy.goal = {0.5 * (r.x_min + r.x_max), 0.5 * (r.y_min + r.y_max)};
  } else {
    sc.policy.goal = {0.5 * (sc.world.x_min + sc.world.x_max), 0.5 * (sc.world.y_min + sc.world.y_max)};
  }
  if (doc.contains("policy")) {
    const json& p = doc["policy"];
    check_keys(p, "policy", {"type", "gain", "goal", "epsilon", "qtable", "replay"});
    if (p.contains("type")) {
      try {
        sc.policy.kind = sim::policy_kind_from_string(string_of(p["type"], "policy.type"));
      } catch (const std::invalid_argument& e) {
        throw ScenarioError(e.what());
      }
    }
    sc.policy.gain = number_or(p, "gain", sc.policy.gain, "policy");
    if (p.contains("goal")) sc.policy.goal = point_of(p["goal"], "policy.goal");
    sc.policy.noise = number_or(p, "epsilon", 0.0, "policy");
    if (sc.policy.noise < 0.0 || sc.policy.noise > 1.0) throw ScenarioError("policy.epsilon must lie in [0, 1]");
    if (p.contains("qtable")) {
      const json& q = p["qtable"];
      sc.policy.table = q.is_object() ? policy::qtable_from_json(q.dump())
                                      : policy::load_qtable(existing(resolve(base_dir, string_of(q, "policy.qtable"))));
    }
    if (p.contains("replay")) {
      const json& r = p["replay"];
      if (r.is_array()) {
        for (std::size_t k = 0; k < r.size(); ++k) {
          sc.policy.replay.push_back(point_of(r[k], "policy.replay[" + std::to_string(k) + "]"));
        }
      } else {
        sc.policy.replay = policy::load_replay_csv(existing(resolve(base_dir, string_of(r, "policy.replay"))));
      }
    }
    if (sc.policy.kind == sim::PolicyKind::QTable && !sc.policy.table) {
      throw ScenarioError("policy.type q_table needs policy.qtable");
    }
    if (sc.policy.kind == sim::PolicyKind::Replay && !p.contains("replay")) {
      throw ScenarioError("policy.type replay needs policy.replay");
    }
  }

  if (doc.contains("filter")) {
    const json& f = doc["filter"];
    check_keys(f, "filter", {"enabled", "k_alpha", "alpha_adm", "grad_epsilon", "max_speed"});
    sc.filter_enabled = bool_or(f, "enabled", true, "filter");
    sc.filter.k_alpha = number_or(f, "k_alpha", sc.filter.k_alpha, "filter");
    sc.filter.alpha_adm = number_or(f, "alpha_adm", sc.filter.alpha_adm, "filter");
    sc.filter.grad_epsilon = number_or(f, "grad_epsilon", sc.filter.grad_epsilon, "filter");
    if (f.contains("max_speed") && !f["max_speed"].is_null()) sc.filter.max_speed = get_number(f, "max_speed", "filter");
  }

  if (doc.contains("seed")) {
    if (!doc["seed"].is_number_unsigned()) throw ScenarioError("seed must be a non-negative integer");
    sc.seed = doc["seed"].get<std::uint64_t>();
  }

  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(e.what());
  }
  return sc;
}

sim::Scenario load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(read_text(path), path.parent_path());
}

std::string scenario_to_json(const sim::Scenario& sc) {
  json doc;
  doc["bounds"] = {{"x_min", sc.world.x_min}, {"x_max", sc.world.x_max}, {"y_min", sc.world.y_min},
                   {"y_max", sc.world.y_max}};
  doc["grid"] = {{"width", sc.world.width}, {"height", sc.world.height}};
  doc["obstacles"] = json::array();
  for (const auto& r : sc.world.static_obstacles) doc["obstacles"].push_back(rect_json(r));
  if (sc.world.static_goal) doc["goal"] = rect_json(*sc.world.static_goal);
  doc["solver"] = {{"omega", sc.solver.omega},
                   {"tol", sc.solver.tol},
                   {"max_iters", sc.solver.max_iters},
                   {"method", field::to_string(sc.solver.method)}};
  if (sc.formula) doc["formula"] = stl::pretty_print(*sc.formula);
  doc["sim"] = {{"horizon", sc.horizon},
                {"dt", sc.dt},
                {"start", {sc.start.x(), sc.start.y()}},
                {"stop_after_flat_ticks", sc.stop_after_flat_ticks}};
  json p = {{"type", sim::to_string(sc.policy.kind)},
            {"gain", sc.policy.gain},
            {"goal", {sc.policy.goal.x(), sc.policy.goal.y()}},
            {"epsilon", sc.policy.noise}};
  if (sc.policy.table) p["qtable"] = json::parse(policy::qtable_to_json(*sc.policy.table));
  if (!sc.policy.replay.empty()) {
    p["replay"] = json::array();
    for (const auto& f : sc.policy.replay) p["replay"].push_back({f.x(), f.y()});
  }
  doc["policy"] = p;
  json f = {{"enabled", sc.filter_enabled},
            {"k_alpha", sc.filter.k_alpha},
            {"alpha_adm", sc.filter.alpha_adm},
            {"grad_epsilon", sc.filter.grad_epsilon}};
  f["max_speed"] = sc.filter.max_speed ? json(*sc.filter.max_speed) : json(nullptr);
  doc["filter"] = f;
  doc["seed"] = sc.seed;
  return doc.dump(2);
}

const char* scenario_schema_reference() {
  return R"schema(Scenario file (JSON):
  bounds     {x_min, x_max, y_min, y_max}            required, world units
  grid       {width, height}                         required, integers >= 3
  obstacles  [{x_min, y_min, x_max, y_max}, ...]     static Unsafe rectangles
  goal       {x_min, y_min, x_max, y_max}            static Goal rectangle
  solver     {omega=1.8, tol=1e-6, max_iters=50000, method="sor"|"gauss-seidel"|"jacobi"}
  formula    "G[0,20](x > 1 & !(x > 9)) & F[5,15](...)"   or formula_file: path
  sim        {horizon=20, dt=0.05, start=[x, y], stop_after_flat_ticks=10}
  policy     {type="goal_seek"|"adversarial"|"q_table"|"replay", gain=1,
              goal=[x, y], epsilon=0, qtable=path|object, replay=path|[[fx, fy], ...]}
  filter     {enabled=true, k_alpha=1, alpha_adm=0.1, grad_epsilon=1e-9, max_speed=null}
  seed       non-negative integer (default 0)
Relative paths resolve against the scenario file's directory.
)schema";
}

}  // namespace hclbf::io
