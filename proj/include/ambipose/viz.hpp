#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "ambipose/geometry.hpp"

namespace ambipose {

struct PlanarBounds {
  double x_min = -1.0, x_max = 1.0;
  double y_min = -1.0, y_max = 1.0;
};

void validate(const PlanarBounds& b);

/// Cell (ix, iy) covers [x_min + ix*w, x_min + (ix+1)*w) along x; the last
/// cell on each axis is closed on the right.
struct Histogram2D {
  PlanarBounds bounds;
  int nx = 1, ny = 1;
  std::vector<std::uint64_t> counts;  // row-major, index iy * nx + ix
  std::uint64_t clamped = 0;          // samples outside bounds folded into edge cells

  Histogram2D() = default;
  Histogram2D(const PlanarBounds& b, int nx, int ny);

  std::uint64_t& at(int ix, int iy) { return counts[static_cast<std::size_t>(iy) * nx + ix]; }
  std::uint64_t at(int ix, int iy) const { return counts[static_cast<std::size_t>(iy) * nx + ix]; }
  std::uint64_t total() const;
  /// Bins one point; out-of-range coordinates go to the nearest edge cell.
  void add(double x, double y);
};

/// xy-plane histogram of sample translations (height marginalized).
Histogram2D position_heatmap(std::span<const Pose> samples, const PlanarBounds& bounds, int nx, int ny);

struct SpherePoint {
  double longitude = 0.0;  // [-pi, pi]
  double latitude = 0.0;   // [-pi/2, pi/2]
};

/// Image of the z axis under R; rotations about z are marginalized.
SpherePoint orientation_to_sphere(const Rotation& R);

struct MollweidePoint {
  double u = 0.0;
  double v = 0.0;
};

/// Auxiliary angle solving 2t + sin 2t = pi sin(latitude).
double mollweide_theta(double latitude);
MollweidePoint mollweide_project(double longitude, double latitude);

/// Histogram over the bounding box of the Mollweide ellipse.
Histogram2D orientation_heatmap(std::span<const Pose> samples, int nx, int ny);

using Rgb = std::array<std::uint8_t, 3>;

/// 256-entry viridis table.
const std::array<Rgb, 256>& colormap();

/// Count -> color: zero maps to entry 0, the maximum count to entry 255,
/// linear in between (rounded to nearest).
Rgb color_for(std::uint64_t count, std::uint64_t max_count);

/// P6 image with each cell drawn as a cell_px square; row iy = ny-1 on top.
void write_ppm(std::ostream& out, const Histogram2D& h, int cell_px = 4);
/// Header ix,iy,count; rows ordered by iy then ix.
void write_counts_csv(std::ostream& out, const Histogram2D& h);

/// Writes `path` and the CSV sidecar (same stem, .csv extension).
void emit_heatmap(const Histogram2D& h, const std::filesystem::path& path, int cell_px = 4);

}  // namespace ambipose
