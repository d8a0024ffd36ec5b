#pragma once

// Scene-based camera augmentation schedule: one augmentation is held fixed
// per scene until the scene's frame counter reaches tau, then a new one is
// drawn and the caller resets that scene's bank memory.

#include "roadlift/camera_geometry.hpp"

#include <cstdint>
#include <map>
#include <random>
#include <string>

namespace roadlift {

struct AugmentationParams {
  double intrinsic_scale = 1.0;
  double roll_deg = 0.0;
  double pitch_deg = 0.0;

  bool operator==(const AugmentationParams&) const = default;
};

struct AugmentationConfig {
  double clamp_lo = 0.8;
  double clamp_hi = 0.9;
  double sigma_scale = 0.2;
  double sigma_roll_deg = 2.0;
  double sigma_pitch_deg = 0.67;

  void validate() const;
};

struct SchedulerConfig {
  std::int64_t tau = 1000;
  AugmentationConfig augmentation;
  std::uint64_t seed = 0;

  void validate() const;
};

// scale ~ clamp(N(1, sigma_scale^2)), roll ~ N(0, sigma_roll^2),
// pitch ~ N(0, sigma_pitch^2) degrees. Always draws three normals.
AugmentationParams sample_augmentation(std::mt19937_64& rng, const AugmentationConfig& config);

// Scales intrinsics (and image size, rounded to a multiple of 8) and rotates
// the camera about its own center: roll about the optical axis first, then
// pitch about the camera x axis.
CameraRig apply_augmentation(const CameraRig& rig, const AugmentationParams& params);

struct StepResult {
  AugmentationParams params;
  bool did_reset = false;
};

class SceneScheduler {
 public:
  explicit SceneScheduler(SchedulerConfig config);

  // n += 1; when n reaches tau, draw new params, n = 0, did_reset = true.
  // The first step of an unseen scene draws its initial params.
  StepResult step(const std::string& scene_id);

  std::int64_t frames_seen(const std::string& scene_id) const;
  const SchedulerConfig& config() const { return config_; }
  std::int64_t epoch() const { return epoch_; }
  void next_epoch() { ++epoch_; }

 private:
  struct SceneState {
    AugmentationParams params;
    std::int64_t frames_seen = 0;
    std::mt19937_64 rng;
  };

  SchedulerConfig config_;
  std::int64_t epoch_ = 0;
  std::map<std::string, SceneState> scenes_;
};

}  // namespace roadlift
