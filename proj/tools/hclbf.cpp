#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "hclbf/field.hpp"
#include "hclbf/policy.hpp"
#include "hclbf/render.hpp"
#include "hclbf/report.hpp"
#include "hclbf/scenario.hpp"
#include "hclbf/sim.hpp"
#include "hclbf/stl.hpp"

namespace fs = std::filesystem;
using namespace hclbf;

namespace {

enum Exit : int {
  kOk = 0,
  kGeneric = 1,
  kFormula = 2,
  kNotFound = 3,
  kNonConverged = 4,
  kNoGoal = 5,
  kViolated = 6,
  kHorizon = 7,
  kCollision = 8,
  kInvalidInput = 9,
};

constexpr const char* kExitCodes = R"(Exit codes:
  0  success (verify: formula satisfied)
  1  usage or unexpected error
  2  formula syntax error or fragment violation
  3  input file not found
  4  field solve did not converge
  5  no goal cell, or empty intersection of overlapping Eventually regions
  6  verify: formula violated
  7  verify: trajectory shorter than the formula horizon
  8  start position lies in an unsafe cell
  9  invalid scenario, trajectory or table file
)";

struct FileNotFound : std::runtime_error {
  explicit FileNotFound(const fs::path& p) : std::runtime_error("file not found: " + p.string()) {}
};

struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw FileNotFound(p);
}

std::string read_file(const fs::path& p) {
  require_file(p);
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

sim::Scenario load_scenario_checked(const fs::path& p) {
  require_file(p);
  return io::load_scenario(p);
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct Common {
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool verbose = false;
};

void add_common(CLI::App* cmd, Common& c, const std::string& default_out) {
  c.out = default_out;
  cmd->add_option("--scenario", c.scenario, "Scenario JSON file");
  cmd->add_option("--out", c.out, "Output path or base name")->capture_default_str();
  cmd->add_option("--seed", c.seed, "Override the scenario seed");
  cmd->add_flag("--verbose", c.verbose, "Extra diagnostics on stderr");
}

sim::Scenario scenario_for(const Common& c) {
  if (c.scenario.empty()) throw CLI::RequiredError("--scenario");
  sim::Scenario sc = load_scenario_checked(c.scenario);
  if (c.seed) sc.seed = *c.seed;
  return sc;
}

stl::Formula formula_from(const std::string& text, const std::string& file, const std::string& scenario,
                          bool verbose) {
  (void)verbose;
  const int given = !text.empty() + !file.empty() + !scenario.empty();
  if (given != 1) throw CLI::ValidationError("give exactly one of --spec-text, --spec or --scenario");
  if (!scenario.empty()) {
    const auto sc = load_scenario_checked(scenario);
    if (!sc.formula) throw InvalidInput("scenario " + scenario + " has no formula");
    return *sc.formula;
  }
  const std::string src = text.empty() ? stl::strip_comments(read_file(file)) : text;
  const auto result = stl::parse_with_diagnostics(src);
  for (const auto& w : result.warnings) {
    std::cerr << "warning at offset " << w.offset << ": " << w.message << '\n';
  }
  return result.formula;
}

// ---------------------------------------------------------------------------

int cmd_check(const std::string& text, const std::string& file, bool verbose) {
  const auto f = formula_from(text, file, {}, verbose);
  std::cout << stl::pretty_print(f) << '\n';
  if (verbose) std::cerr << f.conjuncts.size() << " conjunct(s), max time " << f.max_time() << '\n';
  return kOk;
}

int cmd_solve(const Common& c, bool gradient) {
  const auto sc = scenario_for(c);
  const auto compiled = sim::compile(sc);
  for (std::size_t e = 0; e < compiled.schedule.epochs.size(); ++e) {
    const auto files = render::export_field(compiled.fields.at(e), compiled.schedule.epochs[e], e, c.out, gradient);
    for (const auto& f : files) std::cout << f.string() << '\n';
    if (c.verbose) {
      const auto& st = compiled.fields.at(e).stats();
      std::cerr << "epoch " << e << ": " << st.iterations << " iterations, residual " << st.final_residual << ", "
                << st.wall_time << " s\n";
    }
  }
  return kOk;
}

int cmd_render(const Common& c, int scale, int arrow_every, const std::string& trajectory) {
  const auto sc = scenario_for(c);
  const auto compiled = sim::compile(sc);
  render::SvgOptions opts;
  opts.arrow_every = arrow_every;
  if (!trajectory.empty()) {
    require_file(trajectory);
    std::vector<Eigen::Vector2d> pts;
    for (const auto& s : sim::read_trajectory_samples(trajectory)) pts.emplace_back(s.x, s.y);
    opts.trajectories.push_back(std::move(pts));
  }
  for (std::size_t e = 0; e < compiled.schedule.epochs.size(); ++e) {
    const auto& f = compiled.fields.at(e);
    const auto ppm_path = render::epoch_path(c.out, e, ".ppm");
    const auto svg_path = render::epoch_path(c.out, e, ".svg");
    render::write_file(ppm_path, render::ppm(f, scale));
    render::write_file(svg_path, render::svg(f, opts));
    std::cout << ppm_path.string() << '\n' << svg_path.string() << '\n';
  }
  return kOk;
}

int cmd_run(const Common& c, bool no_filter, int random_count, unsigned threads) {
  if (random_count > 0) {
    const std::uint64_t base = c.seed.value_or(0);
    std::vector<sim::Scenario> scenarios;
    scenarios.reserve(static_cast<std::size_t>(random_count));
    for (int k = 0; k < random_count; ++k) {
      scenarios.push_back(sim::random_scenario(base + static_cast<std::uint64_t>(k)));
      scenarios.back().filter_enabled = !no_filter;
    }
    const auto summary = sim::batch(scenarios, threads);
    const fs::path json_path = fs::path(c.out).replace_extension(".json");
    render::write_file(json_path, io::batch_summary_json(summary) + "\n");
    std::cout << "{\"n\": " << summary.n << ", \"safe_count\": " << summary.safe_count
              << ", \"reach_count\": " << summary.reach_count << ", \"error_count\": " << summary.error_count
              << ", \"summary\": \"" << json_path.string() << "\"}\n";
    return kOk;
  }

  auto sc = scenario_for(c);
  if (no_filter) sc.filter_enabled = false;
  const auto compiled = sim::compile(sc);
  const auto traj = sim::run(sc, compiled);
  const fs::path base(c.out);
  const fs::path csv_path = fs::path(base).replace_extension(".csv");
  const fs::path json_path = fs::path(base).replace_extension(".json");
  sim::write_trajectory_csv(traj, csv_path);
  const std::string summary = io::run_summary_json(sc, compiled, traj);
  render::write_file(json_path, summary + "\n");
  std::cout << summary << '\n';
  if (c.verbose) std::cerr << "wrote " << csv_path.string() << " and " << json_path.string() << '\n';
  return kOk;
}

int cmd_verify(const std::string& trajectory, const std::string& text, const std::string& file,
               const std::string& scenario, bool strict, bool verbose) {
  if (trajectory.empty()) throw CLI::RequiredError("--trajectory");
  require_file(trajectory);
  const auto f = formula_from(text, file, scenario, verbose);
  std::vector<stl::Sample> samples;
  try {
    samples = sim::read_trajectory_samples(trajectory);
  } catch (const std::runtime_error& e) {
    throw InvalidInput(e.what());
  }
  if (samples.size() < 2) throw InvalidInput("trajectory needs at least two samples");
  if (!strict) {
    // The agent is at rest after termination: hold the last position.
    const double p = samples[1].t - samples[0].t;
    const stl::Sample last = samples.back();
    for (std::size_t k = 1; samples.back().t < f.max_time() - 1e-9 * p; ++k) {
      samples.push_back({last.t + static_cast<double>(k) * p, last.x, last.y});
    }
  }
  std::optional<stl::Signal> signal;
  try {
    signal.emplace(std::move(samples));
  } catch (const std::invalid_argument& e) {
    throw InvalidInput(std::string("trajectory: ") + e.what());
  }
  const auto verdict = stl::monitor(f, *signal);
  std::cout << io::monitor_json(f, verdict) << '\n';
  if (!verdict.satisfied) std::cerr << "formula violated\n";
  return verdict.satisfied ? kOk : kViolated;
}

int cmd_train(const Common& c, int episodes, double gamma, double alpha, double epsilon, int eval_episodes,
              bool shield) {
  const auto sc = scenario_for(c);
  policy::RewardParams reward;
  reward.goal = sc.policy.goal;
  policy::QHyperParams hyper{gamma, alpha, epsilon};
  policy::TrainOptions opts;
  opts.episodes = episodes;
  opts.seed = sc.seed;
  std::optional<sim::CompiledScenario> compiled;
  if (shield) {
    compiled = sim::compile(sc);
    opts.shield = policy::TrainingShield{&compiled->fields.at(0), sc.filter};
  }
  const auto grid = policy::TrainingGrid::from_world(sc.world, sc.policy.goal);
  const auto table = policy::q_train(grid, reward, hyper, opts);
  const fs::path out = c.out;
  policy::save_qtable(table, out);
  const double success = policy::evaluate_greedy(grid, table, eval_episodes, sc.seed + 1);
  std::cout << "{\"qtable\": \"" << out.string() << "\", \"episodes\": " << episodes << ", \"seed\": " << sc.seed
            << ", \"greedy_success\": " << num(success) << "}\n";
  return kOk;
}

int cmd_bench(const Common& c, const std::string& sizes, const std::string& methods, const std::string& tols,
              double omega, double obstacles, int max_iters) {
  std::ostringstream csv;
  csv << "size,method,omega,tol,iterations,final_residual,wall_time_s,converged\n";
  const std::uint64_t seed = c.seed.value_or(0);
  for (const auto& size_text : split(sizes)) {
    const int n = std::stoi(size_text);
    const auto occ = field::random_obstacle_grid(n, n, obstacles, seed);
    for (const auto& m : split(methods)) {
      const auto method = field::relaxation_method_from_string(m);
      for (const auto& tol_text : split(tols)) {
        field::SolverParams p;
        p.method = method;
        p.omega = omega;
        p.tol = std::stod(tol_text);
        p.max_iters = max_iters;
        field::SolveStats st;
        bool converged = true;
        try {
          st = field::solve(occ, p).stats();
        } catch (const field::NonConverged& e) {
          st = e.stats();
          converged = false;
        }
        const double w = method == field::RelaxationMethod::Sor ? omega : 1.0;
        csv << n << ',' << field::to_string(method) << ',' << num(w) << ',' << num(p.tol) << ',' << st.iterations
            << ',' << num(st.final_residual) << ',' << num(st.wall_time) << ',' << (converged ? 1 : 0) << '\n';
        if (c.verbose) std::cerr << n << ' ' << m << ' ' << tol_text << ": " << st.iterations << " iterations\n";
      }
    }
  }
  if (c.out.empty() || c.out == "-") {
    std::cout << csv.str();
  } else {
    render::write_file(c.out, csv.str());
    std::cout << c.out << '\n';
  }
  return kOk;
}

int report(int code, const std::string& message) {
  std::cerr << "error: " << message << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Harmonic potential-field safety filter for a restricted temporal-logic fragment"};
  app.require_subcommand(1);
  app.footer(std::string("\n") + kExitCodes + "\n" + io::scenario_schema_reference() +
             "\nFormula grammar:\n"
             "  formula := tconj ('&' tconj)*\n"
             "  tconj   := ('G'|'F') '[' num ',' num ']' '(' lit ('&' lit)* ')'\n"
             "  lit     := ['!'] '(' atom ')' | ['!'] atom\n"
             "  atom    := ('x'|'y') ('>='|'>'|'=') num\n"
             "\nTrajectory CSV columns: t,x,y,fx,fy,ux_nom,uy_nom,V,gx,gy,lhs,rhs,violated,ux_out,uy_out,flags,epoch\n");

  std::function<int()> action;

  // check
  std::string spec_text, spec_file;
  bool check_verbose = false;
  auto* check = app.add_subcommand("check", "Parse a formula and print its canonical form");
  check->add_option("--spec-text", spec_text, "Formula text");
  check->add_option("--spec", spec_file, "Formula file (# starts a comment)");
  check->add_flag("--verbose", check_verbose, "Extra diagnostics on stderr");
  check->callback([&] { action = [&] { return cmd_check(spec_text, spec_file, check_verbose); }; });

  // solve
  Common solve_c;
  bool gradient = false;
  auto* solve = app.add_subcommand("solve", "Solve every epoch and export <out>_e<k>.json/.csv");
  add_common(solve, solve_c, "field");
  solve->add_flag("--gradient", gradient, "Also write <out>_e<k>_grad.csv");
  solve->callback([&] { action = [&] { return cmd_solve(solve_c, gradient); }; });

  // render
  Common render_c;
  int scale = 8;
  int arrow_every = 2;
  std::string overlay;
  auto* rend = app.add_subcommand("render", "Write <out>_e<k>.ppm heatmaps and <out>_e<k>.svg arrow plots");
  add_common(rend, render_c, "field");
  rend->add_option("--scale", scale, "Pixels per cell in the PPM")->capture_default_str()->check(CLI::Range(1, 64));
  rend->add_option("--arrow-every", arrow_every, "Draw -grad V every k cells")
      ->capture_default_str()
      ->check(CLI::Range(1, 1000));
  rend->add_option("--trajectory", overlay, "Trajectory CSV to overlay on the SVG");
  rend->callback([&] { action = [&] { return cmd_render(render_c, scale, arrow_every, overlay); }; });

  // run
  Common run_c;
  bool no_filter = false;
  int random_count = 0;
  unsigned threads = 0;
  auto* run = app.add_subcommand("run", "Simulate a scenario; writes <out>.csv and <out>.json");
  add_common(run, run_c, "run");
  run->add_flag("--no-filter", no_filter, "Disable the safety filter");
  run->add_option("--random", random_count, "Run N generated scenarios (seeds from --seed) instead")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--threads", threads, "Batch worker threads (0 = hardware)");
  run->callback([&] { action = [&] { return cmd_run(run_c, no_filter, random_count, threads); }; });

  // verify
  std::string traj_path, verify_text, verify_file, verify_scenario;
  bool strict = false;
  bool verify_verbose = false;
  auto* verify = app.add_subcommand("verify", "Monitor a trajectory CSV against a formula (exit 0 or 6)");
  verify->add_option("--trajectory", traj_path, "Trajectory CSV");
  verify->add_option("--spec-text", verify_text, "Formula text");
  verify->add_option("--spec", verify_file, "Formula file");
  verify->add_option("--scenario", verify_scenario, "Take the formula from a scenario");
  verify->add_flag("--strict-horizon", strict, "Do not hold the final position up to the formula horizon");
  verify->add_flag("--verbose", verify_verbose, "Extra diagnostics on stderr");
  verify->callback([&] {
    action = [&] { return cmd_verify(traj_path, verify_text, verify_file, verify_scenario, strict, verify_verbose); };
  });

  // train
  Common train_c;
  int episodes = 5000;
  double gamma = 0.9, alpha_lr = 0.1, epsilon = 0.1;
  int eval_episodes = 200;
  bool shield = false;
  auto* train = app.add_subcommand("train", "Tabular Q-learning on the scenario grid; writes a table JSON");
  add_common(train, train_c, "qtable.json");
  train->add_option("--episodes", episodes, "Training episodes")->capture_default_str();
  train->add_option("--gamma", gamma, "Discount")->capture_default_str();
  train->add_option("--alpha", alpha_lr, "Learning rate")->capture_default_str();
  train->add_option("--epsilon", epsilon, "Exploration rate")->capture_default_str();
  train->add_option("--eval-episodes", eval_episodes, "Greedy evaluation rollouts")->capture_default_str();
  train->add_flag("--shielded-training", shield, "Filter exploratory actions with the epoch-0 field");
  train->callback([&] {
    action = [&] { return cmd_train(train_c, episodes, gamma, alpha_lr, epsilon, eval_episodes, shield); };
  });

  // bench
  Common bench_c;
  std::string sizes = "25,50,100", methods = "jacobi,gauss-seidel,sor", tols = "1e-4,1e-6";
  double omega = 1.8, obstacles = 0.1;
  int max_iters = 200000;
  auto* bench = app.add_subcommand("bench", "Solver sweep: sizes x methods x tolerances to CSV");
  add_common(bench, bench_c, "-");
  bench->add_option("--sizes", sizes, "Comma-separated grid sizes")->capture_default_str();
  bench->add_option("--methods", methods, "Comma-separated methods")->capture_default_str();
  bench->add_option("--tols", tols, "Comma-separated tolerances")->capture_default_str();
  bench->add_option("--omega", omega, "SOR relaxation factor")->capture_default_str();
  bench->add_option("--obstacles", obstacles, "Obstacle cell fraction")->capture_default_str();
  bench->add_option("--max-iters", max_iters, "Iteration cap")->capture_default_str();
  bench->callback([&] {
    action = [&] { return cmd_bench(bench_c, sizes, methods, tols, omega, obstacles, max_iters); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kGeneric;
  }

  try {
    return action();
  } catch (const stl::SyntaxError& e) {
    return report(kFormula, e.what());
  } catch (const stl::FragmentViolation& e) {
    return report(kFormula, e.what());
  } catch (const FileNotFound& e) {
    return report(kNotFound, e.what());
  } catch (const io::FileNotFound& e) {
    return report(kNotFound, e.what());
  } catch (const field::NonConverged& e) {
    return report(kNonConverged, e.what());
  } catch (const field::NoGoalCell& e) {
    return report(kNoGoal, e.what());
  } catch (const field::EmptyGoalIntersection& e) {
    return report(kNoGoal, e.what());
  } catch (const stl::HorizonTooShort& e) {
    return report(kHorizon, e.what());
  } catch (const sim::StartInCollision& e) {
    return report(kCollision, e.what());
  } catch (const io::ScenarioError& e) {
    return report(kInvalidInput, e.what());
  } catch (const InvalidInput& e) {
    return report(kInvalidInput, e.what());
  } catch (const CLI::Error& e) {
    return report(kGeneric, e.what());
  } catch (const std::exception& e) {
    return report(kGeneric, e.what());
  }
}
