#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"

#include "ambipose/errors.hpp"
#include "ambipose/viz.hpp"

using namespace ambipose;

namespace {

constexpr double kPi = std::numbers::pi;

Pose at_xy(double x, double y) {
  Pose p;
  p.t = Vec3(x, y, 0.0);
  return p;
}

}  // namespace

TEST_CASE("position heatmap binning") {
  const PlanarBounds b{-1, 1, -1, 1};
  std::vector<Pose> centre(50, at_xy(0.05, 0.05));
  const auto h = position_heatmap(centre, b, 5, 5);
  CHECK(h.at(2, 2) == 50);
  CHECK(h.total() == 50);
  CHECK(h.clamped == 0);

  std::vector<Pose> outside{at_xy(5, 0), at_xy(-5, -5), at_xy(0.99, 0.99), at_xy(1.0, -1.0)};
  const auto e = position_heatmap(outside, b, 4, 4);
  CHECK(e.at(3, 2) == 1);
  CHECK(e.at(0, 0) == 1);
  CHECK(e.at(3, 3) == 1);
  CHECK(e.at(3, 0) == 1);
  CHECK(e.clamped == 2);
  CHECK(e.at(1, 2) == 0);
  CHECK_THROWS_AS(position_heatmap(outside, b, 0, 4), ValidationError);
  CHECK_THROWS_AS(position_heatmap(outside, PlanarBounds{1, 1, 0, 1}, 2, 2), ValidationError);
}

TEST_CASE("uniform samples fill four bins within multinomial tolerance") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  const int M = 40000;
  std::vector<Pose> s;
  for (int i = 0; i < M; ++i) s.push_back(at_xy(u(rng), u(rng)));
  const auto h = position_heatmap(s, {-1, 1, -1, 1}, 2, 2);
  const double sd = std::sqrt(M * 0.25 * 0.75);
  for (auto c : h.counts) CHECK(std::abs(double(c) - M / 4.0) <= 4 * sd);
  CHECK(h.total() + 0 == std::uint64_t(M));
}

TEST_CASE("histogram totals plus clamp tally equal the sample count") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 2);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Pose> s;
    for (int i = 0; i < 500; ++i) s.push_back(at_xy(n(rng), n(rng)));
    const auto h = position_heatmap(s, {-1, 1, -1, 1}, 7, 3);
    // Clamped samples are also binned (into edge cells).
    CHECK(h.total() == 500);
    std::size_t inside = 0;
    for (const auto& p : s) inside += std::abs(p.t.x()) <= 1 && std::abs(p.t.y()) <= 1;
    CHECK(inside + h.clamped == 500);
  }
}

TEST_CASE("orientation to sphere") {
  auto sp = orientation_to_sphere(Rotation());
  CHECK(sp.longitude == doctest::Approx(0.0));
  CHECK(sp.latitude == doctest::Approx(kPi / 2));
  sp = orientation_to_sphere(Rotation::about_x(kPi / 2));
  CHECK(sp.longitude == doctest::Approx(-kPi / 2));
  CHECK(std::abs(sp.latitude) < 1e-12);

  std::mt19937_64 rng(6);
  std::normal_distribution<double> n;
  for (int i = 0; i < 500; ++i) {
    const Rotation r = Rotation::from_quaternion(n(rng), n(rng), n(rng), n(rng));
    const auto a = orientation_to_sphere(r);
    const auto b = orientation_to_sphere(r * Rotation::about_z(n(rng) * 3));
    CHECK(std::abs(a.latitude - b.latitude) <= 1e-9);
    CHECK(std::abs(std::remainder(a.longitude - b.longitude, 2 * kPi)) * std::cos(a.latitude) <= 1e-9);
  }
}

TEST_CASE("mollweide examples") {
  auto p = mollweide_project(0, 0);
  CHECK(p.u == 0.0);
  CHECK(p.v == 0.0);
  p = mollweide_project(0, kPi / 2);
  CHECK(p.u == doctest::Approx(0.0));
  CHECK(p.v == doctest::Approx(std::sqrt(2.0)));
  p = mollweide_project(kPi, 0);
  CHECK(p.u == doctest::Approx(2 * std::sqrt(2.0)));
  CHECK(p.v == doctest::Approx(0.0));
}

TEST_CASE("mollweide residual and ellipse bound on the lat/lon grid") {
  double worst = 0.0, worst_ellipse = 0.0;
  for (int i = 0; i <= 180; ++i) {
    const double lat = -kPi / 2 + i * kPi / 180;
    const double t = mollweide_theta(lat);
    worst = std::max(worst, std::abs(2 * t + std::sin(2 * t) - kPi * std::sin(lat)));
    for (int j = 0; j <= 360; ++j) {
      const double lon = -kPi + j * kPi / 180;
      const auto p = mollweide_project(lon, lat);
      worst_ellipse = std::max(worst_ellipse, p.u * p.u / 8 + p.v * p.v / 2);
    }
  }
  CHECK(worst <= 1e-9);
  CHECK(worst_ellipse <= 1.0 + 1e-12);
}

TEST_CASE("ppm golden bytes for a 2x2 histogram") {
  Histogram2D h({0, 1, 0, 1}, 2, 2);
  h.at(0, 0) = 0;
  h.at(1, 0) = 1;
  h.at(0, 1) = 2;
  h.at(1, 1) = 4;
  std::ostringstream out;
  write_ppm(out, h, 2);
  // Colors: 0 -> entry 0, 1 -> round(255/4) = 64, 2 -> 128, 4 -> 255.
  const auto& cm = colormap();
  auto px = [&](int idx) { return std::string{char(cm[idx][0]), char(cm[idx][1]), char(cm[idx][2])}; };
  std::string expected = "P6\n4 4\n255\n";
  const std::string top = px(128) + px(128) + px(255) + px(255);
  const std::string bottom = px(0) + px(0) + px(64) + px(64);
  expected += top + top + bottom + bottom;
  CHECK(out.str() == expected);
  // Viridis endpoints.
  CHECK(cm[0] == Rgb{68, 1, 84});
  CHECK(cm[255] == Rgb{253, 231, 37});

  std::ostringstream csv;
  write_counts_csv(csv, h);
  CHECK(csv.str() == "ix,iy,count\n0,0,0\n1,0,1\n0,1,2\n1,1,4\n");
}

TEST_CASE("colormap is monotone in luminance") {
  const auto& cm = colormap();
  auto lum = [](const Rgb& c) { return 0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2]; };
  // 8-bit rounding leaves dips well under one grey level.
  for (int i = 1; i < 256; ++i) CHECK(lum(cm[i]) >= lum(cm[i - 1]) - 0.5);
  CHECK(lum(cm[255]) > lum(cm[0]) + 100);
}

TEST_CASE("zero histogram renders a uniform background and output is deterministic") {
  Histogram2D h({0, 1, 0, 1}, 3, 2);
  std::ostringstream out;
  write_ppm(out, h, 3);
  const std::string body = out.str().substr(std::string("P6\n9 6\n255\n").size());
  CHECK(body.size() == 9 * 6 * 3);
  for (std::size_t i = 0; i < body.size(); i += 3) CHECK(body.substr(i, 3) == body.substr(0, 3));

  std::vector<Pose> s;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  for (int i = 0; i < 300; ++i) s.push_back(Pose{Vec3::Zero(), Rotation::from_quaternion(n(rng), n(rng), n(rng), n(rng))});
  const auto o = orientation_heatmap(s, 40, 20);
  CHECK(o.total() == 300);
  CHECK(o.clamped == 0);
  const auto dir = std::filesystem::temp_directory_path();
  emit_heatmap(o, dir / "ambipose_viz_a.ppm");
  emit_heatmap(o, dir / "ambipose_viz_b.ppm");
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(f), {});
  };
  CHECK(slurp(dir / "ambipose_viz_a.ppm") == slurp(dir / "ambipose_viz_b.ppm"));
  CHECK(slurp(dir / "ambipose_viz_a.csv").rfind("ix,iy,count\n", 0) == 0);
}
