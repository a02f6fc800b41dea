#include "hclbf/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

namespace hclbf::render {

namespace {

std::string num(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string hex(const std::array<std::uint8_t, 3>& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
  return buf;
}

constexpr std::array<std::uint8_t, 3> kGoal{40, 200, 60};
constexpr std::array<std::uint8_t, 3> kUnsafe{210, 30, 30};

std::array<std::uint8_t, 3> cell_color(const field::PotentialField& f, int i, int j) {
  switch (f.occupancy().at(i, j)) {
    case field::CellState::Goal: return kGoal;
    case field::CellState::Unsafe: return kUnsafe;
    case field::CellState::Free: break;
  }
  return heat_color(f.value(i, j));
}

}  // namespace

std::filesystem::path epoch_path(const std::filesystem::path& base, std::size_t epoch, const std::string& ext) {
  std::filesystem::path stem = base;
  stem.replace_extension();
  return stem.parent_path() / (stem.filename().string() + "_e" + std::to_string(epoch) + ext);
}

std::string field_header_json(const field::PotentialField& f, const field::Epoch& epoch, std::size_t index) {
  const auto& t = f.transform();
  nlohmann::json j;
  j["epoch"] = index;
  j["t_start"] = epoch.t_start;
  j["t_end"] = epoch.t_end;
  j["width"] = f.width();
  j["height"] = f.height();
  j["bounds"] = {{"x_min", t.x_min()}, {"x_max", t.x_max()}, {"y_min", t.y_min()}, {"y_max", t.y_max()}};
  j["layout"] = "row-major, row j = 0 first";
  j["cells"] = {{"free", f.occupancy().count(field::CellState::Free)},
                {"goal", f.occupancy().count(field::CellState::Goal)},
                {"unsafe", f.occupancy().count(field::CellState::Unsafe)}};
  j["solve_stats"] = {{"iterations", f.stats().iterations},
                      {"final_residual", f.stats().final_residual},
                      {"wall_time_s", f.stats().wall_time}};
  return j.dump(2);
}

std::string values_csv(const field::PotentialField& f) {
  std::string out;
  for (int j = 0; j < f.height(); ++j) {
    for (int i = 0; i < f.width(); ++i) {
      if (i > 0) out += ',';
      out += num(f.value(i, j));
    }
    out += '\n';
  }
  return out;
}

std::string gradient_csv(const field::PotentialField& f) {
  std::string out;
  for (int j = 0; j < f.height(); ++j) {
    for (int i = 0; i < f.width(); ++i) {
      if (i > 0) out += ',';
      const Eigen::Vector2d g = f.gradient(i, j);
      out += num(g.x()) + ';' + num(g.y());
    }
    out += '\n';
  }
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<std::filesystem::path> export_field(const field::PotentialField& f, const field::Epoch& epoch,
                                                std::size_t index, const std::filesystem::path& base,
                                                bool with_gradient) {
  std::vector<std::filesystem::path> written{epoch_path(base, index, ".json"), epoch_path(base, index, ".csv")};
  write_file(written[0], field_header_json(f, epoch, index) + "\n");
  write_file(written[1], values_csv(f));
  if (with_gradient) {
    written.push_back(epoch_path(base, index, "_grad.csv"));
    write_file(written.back(), gradient_csv(f));
  }
  return written;
}

std::array<std::uint8_t, 3> heat_color(double v) {
  // Dark blue at V = 0 through light yellow at V = 1.
  static constexpr std::array<std::array<double, 3>, 4> kStops{{
      {20, 20, 90},
      {70, 90, 180},
      {170, 170, 220},
      {250, 245, 200},
  }};
  const double x = std::clamp(std::isfinite(v) ? v : 1.0, 0.0, 1.0) * (kStops.size() - 1);
  const auto k = std::min<std::size_t>(static_cast<std::size_t>(x), kStops.size() - 2);
  const double w = x - static_cast<double>(k);
  std::array<std::uint8_t, 3> c{};
  for (int ch = 0; ch < 3; ++ch) {
    c[ch] = static_cast<std::uint8_t>(std::lround((1.0 - w) * kStops[k][ch] + w * kStops[k + 1][ch]));
  }
  return c;
}

std::string ppm(const field::PotentialField& f, int scale) {
  if (scale < 1) throw std::invalid_argument("scale must be at least 1");
  const int w = f.width() * scale;
  const int h = f.height() * scale;
  std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + static_cast<std::size_t>(w) * h * 3);
  auto* px = reinterpret_cast<std::uint8_t*>(out.data() + header);
  for (int row = 0; row < h; ++row) {
    const int j = f.height() - 1 - row / scale;
    for (int col = 0; col < w; ++col) {
      const auto c = cell_color(f, col / scale, j);
      std::copy(c.begin(), c.end(), px);
      px += 3;
    }
  }
  return out;
}

std::string svg(const field::PotentialField& f, const SvgOptions& options) {
  const int W = f.width();
  const int H = f.height();
  const double s = options.cell_px;
  const auto& t = f.transform();
  auto px = [&](double gi) { return (gi + 0.5) * s; };
  auto py = [&](double gj) { return (H - 0.5 - gj) * s; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W * s << "\" height=\"" << H * s
     << "\" viewBox=\"0 0 " << W * s << ' ' << H * s << "\">\n";
  os << "<defs><marker id=\"head\" markerWidth=\"6\" markerHeight=\"6\" refX=\"5\" refY=\"3\" orient=\"auto\">"
        "<path d=\"M0,0 L6,3 L0,6 z\" fill=\"#000\"/></marker></defs>\n";
  os << "<g shape-rendering=\"crispEdges\">\n";
  for (int j = 0; j < H; ++j) {
    for (int i = 0; i < W; ++i) {
      os << "<rect x=\"" << i * s << "\" y=\"" << (H - 1 - j) * s << "\" width=\"" << s << "\" height=\"" << s
         << "\" fill=\"" << hex(cell_color(f, i, j)) << "\"/>\n";
    }
  }
  os << "</g>\n<g stroke=\"#000\" stroke-width=\"" << std::max(0.5, s / 12.0) << "\">\n";
  const int every = std::max(1, options.arrow_every);
  const double len = 0.8 * every * s * 0.5;
  for (int j = 0; j < H; j += every) {
    for (int i = 0; i < W; i += every) {
      if (f.occupancy().at(i, j) != field::CellState::Free) continue;
      // Arrow direction in grid units: -grad V scaled by the cell size of each axis.
      const Eigen::Vector2d g = f.gradient(i, j);
      Eigen::Vector2d d(-g.x() * t.cell_dx(), -g.y() * t.cell_dy());
      const double n = d.norm();
      if (!(n > 1e-12)) continue;
      d *= len / n;
      os << "<line x1=\"" << px(i) << "\" y1=\"" << py(j) << "\" x2=\"" << px(i) + d.x() << "\" y2=\""
         << py(j) - d.y() << "\" marker-end=\"url(#head)\"/>\n";
    }
  }
  os << "</g>\n";
  for (const auto& traj : options.trajectories) {
    if (traj.empty()) continue;
    os << "<polyline fill=\"none\" stroke=\"#ffffff\" stroke-width=\"" << std::max(1.0, s / 5.0) << "\" points=\"";
    for (const auto& p : traj) {
      const Eigen::Vector2d g = t.world_to_grid(p.x(), p.y());
      os << px(g.x()) << ',' << py(g.y()) << ' ';
    }
    os << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace hclbf::render
