#pragma once

// Text formats and run configuration.
//
// Calibration document (JSON):
//   {
//     "scene_id": "scene_0",
//     "intrinsics": {"fx": 2000, "fy": 2000, "cx": 960, "cy": 540},
//     "image": {"width": 1920, "height": 1080},
//     "extrinsic": [[r00, r01, r02, tx], [r10, r11, r12, ty],
//                   [r20, r21, r22, tz], [0, 0, 0, 1]]
//   }
// The extrinsic is the row-major 4x4 ground-to-camera matrix; a flat array
// of 16 numbers is accepted as well.
//
// Label file: one object per line,
//   category x y z l w h yaw [score]
// in the ground frame with (x, y, z) the BOTTOM center, meters and radians.
// Blank lines and lines starting with '#' are ignored.

#include "roadlift/camera_geometry.hpp"
#include "roadlift/scene_scheduler.hpp"
#include "roadlift/synthetic_world.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace roadlift {

struct Calibration {
  std::string scene_id;
  CameraRig rig;
};

// Rotation must be orthonormal to 1e-6. Errors name the offending field or
// the JSON line/column.
Calibration parse_calibration(std::string_view text);
std::string write_calibration(const CameraRig& rig, const std::string& scene_id);

// Errors carry the 1-based line number.
std::vector<Box3D> parse_labels(std::string_view text);
std::string write_labels(std::span<const Box3D> boxes);

struct BankSimConfig {
  int channels = 4;
  double lambda = kDefaultMomentum;
  bool masked_only = false;
  int train_frames = 60;
  int infer_frames = 40;
  double cue_noise = 0.05;  // std of additive observation noise, meters

  void validate() const;
};

struct RunConfig {
  std::uint64_t seed = 0;
  int scenes = 2;
  int frames_per_scene = 2;
  SceneConfig scene;
  NoiseModel noise;
  SchedulerConfig scheduler;
  BankSimConfig bank;
};

// JSON run configuration; every block and key is optional:
//   {"seed", "scenes", "frames_per_scene",
//    "scene": {object_count, range_min, range_max, height_min, height_max,
//              pitch_min_deg, pitch_max_deg, roll_max_deg, focal_min,
//              focal_max, image_width, image_height, constant_height,
//              field_degree, bump_count, field_max_abs},
//    "noise": {sigma_hr, sigma_dims, sigma_yaw, sigma_center_px,
//              drop_rate, false_positive_rate},
//    "scheduler": {tau, clamp_lo, clamp_hi, sigma_scale, sigma_roll_deg,
//                  sigma_pitch_deg, seed},
//    "bank": {channels, lambda, masked_only, train_frames, infer_frames,
//             cue_noise}}
// Unknown keys are rejected.
RunConfig parse_run_config(std::string_view json_text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Shortest round-trip decimal form.
std::string format_number(double v);
// Fixed notation with `digits` decimals; negative zero prints as 0.
std::string format_fixed(double v, int digits);

}  // namespace roadlift
