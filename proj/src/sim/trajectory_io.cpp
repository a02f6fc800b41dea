#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "hclbf/sim.hpp"

namespace hclbf::sim {

namespace {

std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

constexpr const char* kHeader = "t,x,y,fx,fy,ux_nom,uy_nom,V,gx,gy,lhs,rhs,violated,ux_out,uy_out,flags,epoch";

}  // namespace

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
  out << kHeader << '\n';
  for (const auto& s : traj.steps) {
    const auto& d = s.decision;
    out << num(s.t) << ',' << num(s.position.x()) << ',' << num(s.position.y()) << ',' << num(s.nominal_force.x())
        << ',' << num(s.nominal_force.y()) << ',' << num(d.nominal_u.x()) << ',' << num(d.nominal_u.y()) << ','
        << num(d.V) << ',' << num(d.grad.x()) << ',' << num(d.grad.y()) << ',' << num(d.lhs) << ',' << num(d.rhs)
        << ',' << (d.violated ? 1 : 0) << ',' << num(d.output_u.x()) << ',' << num(d.output_u.y()) << ','
        << filter::flags_to_string(d.flags) << ',' << s.epoch << '\n';
  }
  const Eigen::Vector2d last = traj.final_position();
  const std::size_t epoch = traj.steps.empty() ? 0 : traj.steps.back().epoch;
  out << num(traj.end_time()) << ',' << num(last.x()) << ',' << num(last.y()) << ",,,,,,,,,,,,,," << epoch << '\n';
}

void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trajectory file " + path.string());
  write_trajectory_csv(traj, out);
}

std::vector<stl::Sample> read_trajectory_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trajectory file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trajectory file " + path.string() + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  int col_t = -1, col_x = -1, col_y = -1;
  {
    std::istringstream header(line);
    std::string name;
    for (int c = 0; std::getline(header, name, ','); ++c) {
      if (name == "t") col_t = c;
      if (name == "x") col_x = c;
      if (name == "y") col_y = c;
    }
  }
  if (col_t < 0 || col_x < 0 || col_y < 0) {
    throw std::runtime_error("trajectory file " + path.string() + " needs t, x and y columns");
  }

  std::vector<stl::Sample> samples;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::istringstream row(line);
    std::string f;
    while (std::getline(row, f, ',')) fields.push_back(f);
    const auto need = static_cast<std::size_t>(std::max({col_t, col_x, col_y}));
    if (fields.size() <= need) {
      throw std::runtime_error("trajectory file line " + std::to_string(line_no) + ": too few columns");
    }
    try {
      samples.push_back({std::stod(fields[col_t]), std::stod(fields[col_x]), std::stod(fields[col_y])});
    } catch (const std::exception&) {
      throw std::runtime_error("trajectory file line " + std::to_string(line_no) + ": bad number");
    }
  }
  return samples;
}

}  // namespace hclbf::sim
