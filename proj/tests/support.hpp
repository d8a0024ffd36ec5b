#pragma once

// Shared fixtures for the unit suites.

#include "roadlift/camera_geometry.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace rltest {

using namespace roadlift;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kDeg = kPi / 180.0;

// Looks straight down from `height`: rotation diag(1, -1, -1).
inline CameraRig nadir_rig(double height = 10.0, double f = 1000.0) {
  RigidTransform t;
  t.rotation = Vec3(1, -1, -1).asDiagonal();
  t.translation = Vec3(0, 0, height);
  return CameraRig(Intrinsics{f, f, 960, 544}, t, 1920, 1088);
}

inline CameraRig pitched_rig(double height, double pitch_deg, double f = 2000.0) {
  return rig_from_pose(Intrinsics{f, f, 960, 540}, 1920, 1080, height, pitch_deg * kDeg);
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Rig anywhere on the ground, height 4-12 m, pitch 5-60 deg, roll +-3 deg.
inline CameraRig random_rig(std::mt19937_64& rng) {
  const double f = uniform(rng, 800, 2600);
  const Intrinsics k{f, f * uniform(rng, 0.95, 1.05), uniform(rng, 900, 1020), uniform(rng, 500, 580)};
  return rig_from_pose(k, 1920, 1080, uniform(rng, 4, 12), uniform(rng, 5, 60) * kDeg,
                       uniform(rng, -kPi, kPi), uniform(rng, -3, 3) * kDeg, uniform(rng, -50, 50),
                       uniform(rng, -50, 50));
}

inline Box3D random_box(std::mt19937_64& rng) {
  Box3D b;
  b.x = uniform(rng, -100, 100);
  b.y = uniform(rng, -100, 100);
  b.z = uniform(rng, -2, 2);
  b.l = uniform(rng, 0.5, 12);
  b.w = uniform(rng, 0.5, 3);
  b.h = uniform(rng, 0.5, 4);
  b.theta = uniform(rng, -kPi, kPi);
  return b;
}

}  // namespace rltest
