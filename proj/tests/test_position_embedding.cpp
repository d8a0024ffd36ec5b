#include "support.hpp"

#include "roadlift/position_embedding.hpp"

#include <algorithm>

using namespace roadlift;
using namespace rltest;

TEST_SUITE("position_embedding") {

TEST_CASE("encoding of zero alternates 0 and 1") {
  const auto e = sine_encode(0.0, 16);
  for (std::size_t i = 0; i < e.size(); ++i) CHECK(e[i] == (i % 2 ? 1.0 : 0.0));
}

TEST_CASE("finest frequency has period 2 pi") {
  const auto a = sine_encode(3.7, 8);
  const auto b = sine_encode(3.7 + 2 * kPi, 8);
  CHECK(std::abs(a[0] - b[0]) < 1e-9);
}

TEST_CASE("direct trig values") {
  const auto e = sine_encode(1.0, 4, 10000.0);
  REQUIRE(e.size() == 4);
  CHECK(e[0] == doctest::Approx(std::sin(1.0)).epsilon(1e-15));
  CHECK(e[1] == doctest::Approx(std::cos(1.0)).epsilon(1e-15));
  CHECK(e[2] == doctest::Approx(std::sin(0.01)).epsilon(1e-13));
  CHECK(e[3] == doctest::Approx(std::cos(0.01)).epsilon(1e-15));
}

TEST_CASE("argument checks") {
  CHECK_THROWS_AS(sine_encode(1.0, 3), Error);
  CHECK_THROWS_AS(sine_encode(1.0, 0), Error);
  CHECK_THROWS_AS(sine_encode(1.0, 4, 0.0), Error);
}

TEST_CASE("magnitudes are bounded and depths are separable") {
  std::mt19937_64 rng(51);
  std::vector<double> depths;
  for (int i = 0; i < 1000; ++i) depths.push_back(uniform(rng, 1, 300));
  std::vector<std::vector<double>> emb;
  for (double d : depths) {
    emb.push_back(sine_encode(d, 32));
    for (double v : emb.back()) CHECK(std::abs(v) <= 1.0);
  }
  double closest = 1e9;
  for (std::size_t i = 0; i < emb.size(); ++i) {
    for (std::size_t j = i + 1; j < emb.size(); ++j) {
      double linf = 0;
      for (std::size_t k = 0; k < emb[i].size(); ++k) linf = std::max(linf, std::abs(emb[i][k] - emb[j][k]));
      closest = std::min(closest, linf);
    }
  }
  CHECK(closest > 1e-6);
}

TEST_CASE("nadir depth map is constant") {
  const CameraRig rig = nadir_rig(10);
  const FeatureGrid g = embed_depth_map(rig, ground_plane_from_extrinsics(rig), 8);
  const auto ref = sine_encode(10.0, 8);
  for (std::size_t i = 0; i < g.cells(); ++i) {
    for (int k = 0; k < 8; ++k) CHECK(std::abs(g.cell(i)[k] - ref[k]) < 1e-9);
  }
}

TEST_CASE("cells above the horizon carry the zero sentinel") {
  const CameraRig rig = pitched_rig(7, 1);
  const GroundPlane plane = ground_plane_from_extrinsics(rig);
  const FeatureGrid g = embed_depth_map(rig, plane, 8);
  for (int k = 0; k < 8; ++k) CHECK(g.at(0, 0, k) == 0.0);
  CHECK(g.at(g.rows() - 1, 0, 1) != 0.0);
}

TEST_CASE("per-cell recomputation and monotone columns") {
  const CameraRig rig = pitched_rig(7, 8);
  const GroundPlane plane = ground_plane_from_extrinsics(rig);
  const FeatureGrid g = embed_depth_map(rig, plane, 16);
  for (int c = 0; c < g.cols(); c += 7) {
    double prev = 1e18;
    for (int r = 0; r < g.rows(); ++r) {
      double d = 0;
      try {
        d = depth_to_ground(rig, plane, 8.0 * c + 4, 8.0 * r + 4);
      } catch (const Error&) {
        for (int k = 0; k < 16; ++k) CHECK(g.at(r, c, k) == 0.0);
        continue;
      }
      const auto e = sine_encode(d, 16);
      for (int k = 0; k < 16; ++k) CHECK(std::abs(g.at(r, c, k) - e[k]) < 1e-12);
      CHECK(d < prev);
      prev = d;
    }
  }
}

TEST_CASE("query embedding") {
  const auto zero = embed_query(Box2D{0, 0, 0, 0}, Vec2(0, 0), 4);
  REQUIRE(zero.size() == 24);
  for (std::size_t i = 0; i < zero.size(); ++i) CHECK(zero[i] == (i % 2 ? 1.0 : 0.0));
  CHECK(embed_query(Box2D{0.1, 0.2, 0.3, 0.4}, Vec2(0.2, 0.4), 64).size() == 384);

  std::mt19937_64 rng(52);
  for (int t = 0; t < 50; ++t) {
    const Box2D b{uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1), uniform(rng, 0, 1)};
    const Vec2 bc(uniform(rng, 0, 1), uniform(rng, 0, 1));
    const auto q = embed_query(b, bc, 8);
    const double coords[6] = {b.x1, b.y1, b.x2, b.y2, bc.x(), bc.y()};
    for (int k = 0; k < 6; ++k) {
      const auto e = sine_encode(coords[k], 8);
      for (int j = 0; j < 8; ++j) CHECK(q[8 * k + j] == e[j]);
    }
  }
  CHECK_THROWS_AS(embed_query(Box2D{0, 0, 1920, 1080}, Vec2(0.5, 0.5), 8), Error);
}

}  // TEST_SUITE
