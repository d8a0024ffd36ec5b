#pragma once

// Synthetic roadside scenes with analytically known ground truth: a camera
// rig, a smooth road-height field over the virtual ground plane, cuboids
// resting on that surface, and noisy predictions lifted through the same
// height-based path a detector would use.

#include "roadlift/camera_geometry.hpp"
#include "roadlift/scene_cue_bank.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace roadlift {

struct BumpTerm {
  double amplitude = 0;  // meters
  double cx = 0, cy = 0;  // ground frame, meters
  double sigma = 1;       // meters
};

// Road surface height above the virtual plane:
//   sum_{i+j<=3} c_ij (x/s)^i (y/s)^j + sum_k a_k exp(-|p - c_k|^2 / (2 sigma_k^2))
// with s the half-size of the square region of interest centered on the
// origin.
class GroundField {
 public:
  static constexpr std::size_t kNumCoefficients = 10;
  static constexpr double kMaxAbsHeight = 2.0;

  // Coefficient order: 1, x, y, x^2, xy, y^2, x^3, x^2 y, x y^2, y^3.
  // Throws InvalidArgument when |h| exceeds kMaxAbsHeight on the 81 x 81
  // validation lattice over the region of interest.
  GroundField(std::array<double, kNumCoefficients> coefficients, std::vector<BumpTerm> bumps,
              double roi_half_size);

  static GroundField constant(double height, double roi_half_size = 400.0);

  // Rescales the polynomial and bump amplitudes so the lattice maximum of
  // |h| equals max_abs (a flat field stays flat).
  static GroundField normalized(std::array<double, kNumCoefficients> coefficients,
                                std::vector<BumpTerm> bumps, double roi_half_size,
                                double max_abs);

  double operator()(double x, double y) const;
  double roi_half_size() const { return roi_; }
  const std::array<double, kNumCoefficients>& coefficients() const { return coeffs_; }
  const std::vector<BumpTerm>& bumps() const { return bumps_; }
  // Largest |h| over the validation lattice.
  double lattice_max_abs() const;

 private:
  struct Unchecked {};
  GroundField(Unchecked, std::array<double, kNumCoefficients> coefficients,
              std::vector<BumpTerm> bumps, double roi_half_size)
      : coeffs_(coefficients), bumps_(std::move(bumps)), roi_(roi_half_size) {}

  std::array<double, kNumCoefficients> coeffs_;
  std::vector<BumpTerm> bumps_;
  double roi_;
};

struct SceneConfig {
  int object_count = 12;
  double range_min = 5.0;    // horizontal distance from the camera foot, meters
  double range_max = 250.0;
  double height_min = 5.0, height_max = 9.0;        // camera height band, meters
  double pitch_min_deg = 9.0, pitch_max_deg = 15.0;
  double roll_max_deg = 2.0;
  double focal_min = 1800.0, focal_max = 2400.0;  // pixels
  int image_width = 1920;
  int image_height = 1080;
  // Field: either a constant height or a random cubic with bumps scaled so
  // its lattice maximum equals field_max_abs.
  std::optional<double> constant_height;
  int field_degree = 3;
  int bump_count = 2;
  double field_max_abs = 1.5;

  void validate() const;
};

struct NoiseModel {
  double sigma_hr = 0;         // meters
  double sigma_dims = 0;       // relative
  double sigma_yaw = 0;        // radians
  double sigma_center_px = 0;  // pixels
  double drop_rate = 0;
  double false_positive_rate = 0;

  void validate() const;
};

struct SyntheticScene {
  std::string scene_id;
  std::uint64_t seed = 0;       // scene seed: rig, field, cue filler
  std::uint64_t frame_seed = 0; // object placement
  CameraRig rig;
  GroundPlane plane;
  GroundField field;
  SceneConfig config;
  std::vector<ObjectRecord> objects;  // box, 2D box and bottom center filled
};

// Deterministic in (config, seed). The camera foot point is the ground
// origin. Throws Infeasible when an object cannot be placed in view within
// 1000 attempts.
SyntheticScene generate_scene(const SceneConfig& config, std::uint64_t seed);

// Same scene (rig, field, id) with a fresh object set drawn from frame_seed.
SyntheticScene next_frame(const SyntheticScene& scene, std::uint64_t frame_seed);

// Scene with an explicit rig and field; objects drawn from frame_seed.
SyntheticScene make_scene(const CameraRig& rig, GroundField field, const SceneConfig& config,
                          std::uint64_t scene_seed, std::uint64_t frame_seed,
                          std::string scene_id);

// GT observation of a box: bottom-center pixel and the bounding rectangle
// of the 8 projected corners. Throws PointBehindCamera.
ObjectRecord observe(const CameraRig& rig, const Box3D& box);

// Noisy predictions: h_r, dims, yaw and the bottom-center pixel are
// perturbed, then the location is recomputed by lift_to_ground. Every call
// draws the same number of variates regardless of the sigmas, so runs that
// share a seed share their standard-normal draws.
FrameRecord simulate_predictions(const SyntheticScene& scene, const NoiseModel& noise,
                                 std::uint64_t seed);

// Relative height of the road surface imaged at each cell center (channel
// 0) plus seeded smooth filler channels. Depends only on the rig, the
// field, the scene seed and d.
FeatureGrid render_cue_grid(const SyntheticScene& scene, int channels);

// Surface height h solving h = field(lift(u, v, h)); nullopt when the ray
// misses the ground region.
std::optional<double> surface_height_at_pixel(const SyntheticScene& scene, double u, double v);

}  // namespace roadlift
