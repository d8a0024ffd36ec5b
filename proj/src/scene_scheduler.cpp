#include "roadlift/scene_scheduler.hpp"

#include "roadlift/scene_cue_bank.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace roadlift {

namespace {

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

int scaled_dim(int dim, double scale) {
  const long cells = std::lround(dim * scale / kFeatureStride);
  return static_cast<int>(std::max(1L, cells)) * kFeatureStride;
}

}  // namespace

void AugmentationConfig::validate() const {
  if (!(std::isfinite(clamp_lo) && std::isfinite(clamp_hi) && clamp_lo > 0 &&
        clamp_lo <= clamp_hi)) {
    throw Error(ErrorCode::InvalidArgument, "augmentation clamp interval must satisfy 0 < lo <= hi");
  }
  if (!(sigma_scale >= 0 && sigma_roll_deg >= 0 && sigma_pitch_deg >= 0)) {
    throw Error(ErrorCode::InvalidArgument, "augmentation sigmas must be non-negative");
  }
}

void SchedulerConfig::validate() const {
  if (tau < 1) throw Error(ErrorCode::InvalidArgument, "tau must be at least 1");
  augmentation.validate();
}

AugmentationParams sample_augmentation(std::mt19937_64& rng, const AugmentationConfig& config) {
  std::normal_distribution<double> standard(0.0, 1.0);
  const double z_scale = standard(rng);
  const double z_roll = standard(rng);
  const double z_pitch = standard(rng);
  AugmentationParams p;
  p.intrinsic_scale =
      std::clamp(1.0 + config.sigma_scale * z_scale, config.clamp_lo, config.clamp_hi);
  p.roll_deg = config.sigma_roll_deg * z_roll;
  p.pitch_deg = config.sigma_pitch_deg * z_pitch;
  return p;
}

CameraRig apply_augmentation(const CameraRig& rig, const AugmentationParams& params) {
  if (!(std::isfinite(params.intrinsic_scale) && params.intrinsic_scale > 0 &&
        std::isfinite(params.roll_deg) && std::isfinite(params.pitch_deg))) {
    throw Error(ErrorCode::InvalidArgument, "augmentation parameters must be finite, scale > 0");
  }
  Intrinsics k = rig.intrinsics();
  k.fx *= params.intrinsic_scale;
  k.fy *= params.intrinsic_scale;
  k.cx *= params.intrinsic_scale;
  k.cy *= params.intrinsic_scale;

  const Mat3 delta =
      (Eigen::AngleAxisd(deg2rad(params.pitch_deg), Vec3::UnitX()) *
       Eigen::AngleAxisd(deg2rad(params.roll_deg), Vec3::UnitZ()))
          .toRotationMatrix();
  RigidTransform ext = rig.ground_to_camera();
  ext.rotation = delta * ext.rotation;
  ext.translation = delta * ext.translation;

  return CameraRig(k, ext, scaled_dim(rig.image_width(), params.intrinsic_scale),
                   scaled_dim(rig.image_height(), params.intrinsic_scale));
}

SceneScheduler::SceneScheduler(SchedulerConfig config) : config_(std::move(config)) {
  config_.validate();
}

StepResult SceneScheduler::step(const std::string& scene_id) {
  auto it = scenes_.find(scene_id);
  if (it == scenes_.end()) {
    const std::uint64_t h = fnv1a(scene_id);
    std::seed_seq seq{static_cast<std::uint32_t>(config_.seed),
                      static_cast<std::uint32_t>(config_.seed >> 32),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    SceneState state;
    state.rng.seed(seq);
    state.params = sample_augmentation(state.rng, config_.augmentation);
    it = scenes_.emplace(scene_id, std::move(state)).first;
  }
  SceneState& s = it->second;
  ++s.frames_seen;
  if (s.frames_seen < config_.tau) return {s.params, false};
  s.params = sample_augmentation(s.rng, config_.augmentation);
  s.frames_seen = 0;
  return {s.params, true};
}

std::int64_t SceneScheduler::frames_seen(const std::string& scene_id) const {
  auto it = scenes_.find(scene_id);
  return it == scenes_.end() ? 0 : it->second.frames_seen;
}

}  // namespace roadlift
