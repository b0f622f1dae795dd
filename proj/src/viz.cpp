#include "ambipose/viz.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <string>

#include "ambipose/errors.hpp"

namespace ambipose {

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt2 = std::sqrt(2.0);

int bin_index(double value, double lo, double hi, int n, bool& clamped) {
  if (!(value >= lo)) {  // also catches NaN
    clamped = true;
    return 0;
  }
  if (value > hi) {
    clamped = true;
    return n - 1;
  }
  const int i = static_cast<int>(std::floor((value - lo) / (hi - lo) * n));
  return std::min(i, n - 1);
}

const std::array<Rgb, 256> kViridis = {{
    {68, 1, 84}, {68, 2, 86}, {69, 4, 87}, {69, 5, 89}, {70, 7, 90}, {70, 8, 92},
    {70, 10, 93}, {70, 11, 94}, {71, 13, 96}, {71, 14, 97}, {71, 16, 99}, {71, 17, 100},
    {71, 19, 101}, {72, 20, 103}, {72, 22, 104}, {72, 23, 105}, {72, 24, 106}, {72, 26, 108},
    {72, 27, 109}, {72, 28, 110}, {72, 29, 111}, {72, 31, 112}, {72, 32, 113}, {72, 33, 115},
    {72, 35, 116}, {72, 36, 117}, {72, 37, 118}, {72, 38, 119}, {72, 40, 120}, {72, 41, 121},
    {71, 42, 122}, {71, 44, 122}, {71, 45, 123}, {71, 46, 124}, {71, 47, 125}, {70, 48, 126},
    {70, 50, 126}, {70, 51, 127}, {70, 52, 128}, {69, 53, 129}, {69, 55, 129}, {69, 56, 130},
    {68, 57, 131}, {68, 58, 131}, {68, 59, 132}, {67, 61, 132}, {67, 62, 133}, {66, 63, 133},
    {66, 64, 134}, {66, 65, 134}, {65, 66, 135}, {65, 68, 135}, {64, 69, 136}, {64, 70, 136},
    {63, 71, 136}, {63, 72, 137}, {62, 73, 137}, {62, 74, 137}, {62, 76, 138}, {61, 77, 138},
    {61, 78, 138}, {60, 79, 138}, {60, 80, 139}, {59, 81, 139}, {59, 82, 139}, {58, 83, 139},
    {58, 84, 140}, {57, 85, 140}, {57, 86, 140}, {56, 88, 140}, {56, 89, 140}, {55, 90, 140},
    {55, 91, 141}, {54, 92, 141}, {54, 93, 141}, {53, 94, 141}, {53, 95, 141}, {52, 96, 141},
    {52, 97, 141}, {51, 98, 141}, {51, 99, 141}, {50, 100, 142}, {50, 101, 142}, {49, 102, 142},
    {49, 103, 142}, {49, 104, 142}, {48, 105, 142}, {48, 106, 142}, {47, 107, 142}, {47, 108, 142},
    {46, 109, 142}, {46, 110, 142}, {46, 111, 142}, {45, 112, 142}, {45, 113, 142}, {44, 113, 142},
    {44, 114, 142}, {44, 115, 142}, {43, 116, 142}, {43, 117, 142}, {42, 118, 142}, {42, 119, 142},
    {42, 120, 142}, {41, 121, 142}, {41, 122, 142}, {41, 123, 142}, {40, 124, 142}, {40, 125, 142},
    {39, 126, 142}, {39, 127, 142}, {39, 128, 142}, {38, 129, 142}, {38, 130, 142}, {38, 130, 142},
    {37, 131, 142}, {37, 132, 142}, {37, 133, 142}, {36, 134, 142}, {36, 135, 142}, {35, 136, 142},
    {35, 137, 142}, {35, 138, 141}, {34, 139, 141}, {34, 140, 141}, {34, 141, 141}, {33, 142, 141},
    {33, 143, 141}, {33, 144, 141}, {33, 145, 140}, {32, 146, 140}, {32, 146, 140}, {32, 147, 140},
    {31, 148, 140}, {31, 149, 139}, {31, 150, 139}, {31, 151, 139}, {31, 152, 139}, {31, 153, 138},
    {31, 154, 138}, {30, 155, 138}, {30, 156, 137}, {30, 157, 137}, {31, 158, 137}, {31, 159, 136},
    {31, 160, 136}, {31, 161, 136}, {31, 161, 135}, {31, 162, 135}, {32, 163, 134}, {32, 164, 134},
    {33, 165, 133}, {33, 166, 133}, {34, 167, 133}, {34, 168, 132}, {35, 169, 131}, {36, 170, 131},
    {37, 171, 130}, {37, 172, 130}, {38, 173, 129}, {39, 173, 129}, {40, 174, 128}, {41, 175, 127},
    {42, 176, 127}, {44, 177, 126}, {45, 178, 125}, {46, 179, 124}, {47, 180, 124}, {49, 181, 123},
    {50, 182, 122}, {52, 182, 121}, {53, 183, 121}, {55, 184, 120}, {56, 185, 119}, {58, 186, 118},
    {59, 187, 117}, {61, 188, 116}, {63, 188, 115}, {64, 189, 114}, {66, 190, 113}, {68, 191, 112},
    {70, 192, 111}, {72, 193, 110}, {74, 193, 109}, {76, 194, 108}, {78, 195, 107}, {80, 196, 106},
    {82, 197, 105}, {84, 197, 104}, {86, 198, 103}, {88, 199, 101}, {90, 200, 100}, {92, 200, 99},
    {94, 201, 98}, {96, 202, 96}, {99, 203, 95}, {101, 203, 94}, {103, 204, 92}, {105, 205, 91},
    {108, 205, 90}, {110, 206, 88}, {112, 207, 87}, {115, 208, 86}, {117, 208, 84}, {119, 209, 83},
    {122, 209, 81}, {124, 210, 80}, {127, 211, 78}, {129, 211, 77}, {132, 212, 75}, {134, 213, 73},
    {137, 213, 72}, {139, 214, 70}, {142, 214, 69}, {144, 215, 67}, {147, 215, 65}, {149, 216, 64},
    {152, 216, 62}, {155, 217, 60}, {157, 217, 59}, {160, 218, 57}, {162, 218, 55}, {165, 219, 54},
    {168, 219, 52}, {170, 220, 50}, {173, 220, 48}, {176, 221, 47}, {178, 221, 45}, {181, 222, 43},
    {184, 222, 41}, {186, 222, 40}, {189, 223, 38}, {192, 223, 37}, {194, 223, 35}, {197, 224, 33},
    {200, 224, 32}, {202, 225, 31}, {205, 225, 29}, {208, 225, 28}, {210, 226, 27}, {213, 226, 26},
    {216, 226, 25}, {218, 227, 25}, {221, 227, 24}, {223, 227, 24}, {226, 228, 24}, {229, 228, 25},
    {231, 228, 25}, {234, 229, 26}, {236, 229, 27}, {239, 229, 28}, {241, 229, 29}, {244, 230, 30},
    {246, 230, 32}, {248, 230, 33}, {251, 231, 35}, {253, 231, 37},
}};

}  // namespace

void validate(const PlanarBounds& b) {
  if (!(b.x_max > b.x_min) || !(b.y_max > b.y_min)) {
    throw ValidationError("heatmap bounds must satisfy min < max on both axes");
  }
}

Histogram2D::Histogram2D(const PlanarBounds& b, int nx_, int ny_) : bounds(b), nx(nx_), ny(ny_) {
  if (nx < 1 || ny < 1) throw ValidationError("histogram needs nx, ny >= 1");
  validate(b);
  counts.assign(static_cast<std::size_t>(nx) * ny, 0);
}

std::uint64_t Histogram2D::total() const {
  std::uint64_t s = 0;
  for (auto c : counts) s += c;
  return s;
}

void Histogram2D::add(double x, double y) {
  bool cx = false, cy = false;
  const int ix = bin_index(x, bounds.x_min, bounds.x_max, nx, cx);
  const int iy = bin_index(y, bounds.y_min, bounds.y_max, ny, cy);
  ++at(ix, iy);
  if (cx || cy) ++clamped;
}

Histogram2D position_heatmap(std::span<const Pose> samples, const PlanarBounds& bounds, int nx, int ny) {
  Histogram2D h(bounds, nx, ny);
  for (const auto& p : samples) h.add(p.t.x(), p.t.y());
  return h;
}

SpherePoint orientation_to_sphere(const Rotation& R) {
  const Vec3 v = R.matrix().col(2);
  return {std::atan2(v.y(), v.x()), std::asin(std::clamp(v.z(), -1.0, 1.0))};
}

double mollweide_theta(double latitude) {
  if (latitude >= kPi / 2) return kPi / 2;
  if (latitude <= -kPi / 2) return -kPi / 2;
  const double target = kPi * std::sin(latitude);
  double t = latitude;
  for (int it = 0; it < 50; ++it) {
    const double f = 2 * t + std::sin(2 * t) - target;
    const double fp = 2 + 2 * std::cos(2 * t);
    if (fp <= 0.0) break;
    const double step = f / fp;
    t -= step;
    if (std::abs(step) <= 1e-10) {
      if (std::abs(2 * t + std::sin(2 * t) - target) <= 1e-9) return t;
    }
  }
  // Near the poles f' vanishes and Newton stalls; bisection on the monotone
  // residual finishes the job.
  double lo = -kPi / 2, hi = kPi / 2;
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (2 * mid + std::sin(2 * mid) < target ? lo : hi) = mid;
  }
  t = 0.5 * (lo + hi);
  if (!(std::abs(2 * t + std::sin(2 * t) - target) <= 1e-9)) {
    throw NumericalError("mollweide: auxiliary angle did not converge for latitude " +
                         std::to_string(latitude));
  }
  return t;
}

MollweidePoint mollweide_project(double longitude, double latitude) {
  const double t = mollweide_theta(latitude);
  return {2.0 * kSqrt2 / kPi * longitude * std::cos(t), kSqrt2 * std::sin(t)};
}

Histogram2D orientation_heatmap(std::span<const Pose> samples, int nx, int ny) {
  Histogram2D h({-2 * kSqrt2, 2 * kSqrt2, -kSqrt2, kSqrt2}, nx, ny);
  for (const auto& p : samples) {
    const auto s = orientation_to_sphere(p.R);
    const auto m = mollweide_project(s.longitude, s.latitude);
    h.add(m.u, m.v);
  }
  return h;
}

const std::array<Rgb, 256>& colormap() { return kViridis; }

Rgb color_for(std::uint64_t count, std::uint64_t max_count) {
  if (max_count == 0 || count == 0) return kViridis[0];
  const auto idx = (std::min(count, max_count) * 255 + max_count / 2) / max_count;
  return kViridis[static_cast<std::size_t>(idx)];
}

void write_ppm(std::ostream& out, const Histogram2D& h, int cell_px) {
  if (cell_px < 1) throw ValidationError("cell_px must be >= 1");
  const std::uint64_t max_count = h.counts.empty() ? 0 : *std::max_element(h.counts.begin(), h.counts.end());
  const int width = h.nx * cell_px, height = h.ny * cell_px;
  out << "P6\n" << width << ' ' << height << "\n255\n";
  std::string row(static_cast<std::size_t>(width) * 3, '\0');
  for (int iy = h.ny - 1; iy >= 0; --iy) {
    for (int ix = 0; ix < h.nx; ++ix) {
      const Rgb c = color_for(h.at(ix, iy), max_count);
      for (int p = 0; p < cell_px; ++p) {
        const std::size_t o = (static_cast<std::size_t>(ix) * cell_px + p) * 3;
        row[o] = static_cast<char>(c[0]);
        row[o + 1] = static_cast<char>(c[1]);
        row[o + 2] = static_cast<char>(c[2]);
      }
    }
    for (int p = 0; p < cell_px; ++p) out.write(row.data(), static_cast<std::streamsize>(row.size()));
  }
}

void write_counts_csv(std::ostream& out, const Histogram2D& h) {
  out << "ix,iy,count\n";
  for (int iy = 0; iy < h.ny; ++iy) {
    for (int ix = 0; ix < h.nx; ++ix) out << ix << ',' << iy << ',' << h.at(ix, iy) << '\n';
  }
}

void emit_heatmap(const Histogram2D& h, const std::filesystem::path& path, int cell_px) {
  std::ofstream img(path, std::ios::binary);
  if (!img) throw IoError("cannot open " + path.string() + " for writing");
  write_ppm(img, h, cell_px);
  if (!img) throw IoError("failed writing " + path.string());
  auto csv_path = path;
  csv_path.replace_extension(".csv");
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw IoError("cannot open " + csv_path.string() + " for writing");
  write_counts_csv(csv, h);
  if (!csv) throw IoError("failed writing " + csv_path.string());
}

}  // namespace ambipose
