#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hclbf/field.hpp"

namespace hclbf::render {

/// `<stem>_e<k>.<ext>` next to `base`, where stem is base's filename without extension.
std::filesystem::path epoch_path(const std::filesystem::path& base, std::size_t epoch, const std::string& ext);

/// JSON header with dims, bounds, epoch window and solve stats.
std::string field_header_json(const field::PotentialField& f, const field::Epoch& epoch, std::size_t index);
/// One line per grid row j = 0..H-1, W comma-separated values each (row-major).
std::string values_csv(const field::PotentialField& f);
/// Same layout; each entry is "gx;gy".
std::string gradient_csv(const field::PotentialField& f);

/// Writes <base>_e<k>.json, <base>_e<k>.csv and optionally <base>_e<k>_grad.csv.
std::vector<std::filesystem::path> export_field(const field::PotentialField& f, const field::Epoch& epoch,
                                                std::size_t index, const std::filesystem::path& base,
                                                bool with_gradient);

/// Heatmap color for V in [0, 1].
std::array<std::uint8_t, 3> heat_color(double v);

/// Binary P6 image, `scale` pixels per cell, top row is the highest j.
std::string ppm(const field::PotentialField& f, int scale = 1);

struct SvgOptions {
  int arrow_every = 2;      // draw -grad V on every k-th cell in each axis
  double cell_px = 10.0;
  std::vector<std::vector<Eigen::Vector2d>> trajectories;  // world coordinates
};

std::string svg(const field::PotentialField& f, const SvgOptions& options = {});

void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace hclbf::render
