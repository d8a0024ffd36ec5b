#pragma once

// Pinhole camera rig, the virtual ground plane seen from it, and
// height-based lifting of a bottom-center pixel back onto the ground.

#include "roadlift/types.hpp"

#include <array>

namespace roadlift {

struct Intrinsics {
  double fx = 1, fy = 1;  // focal lengths, pixels
  double cx = 0, cy = 0;  // principal point, pixels

  bool operator==(const Intrinsics&) const = default;
};

// Rigid transform p_dst = rotation * p_src + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform inverse() const;

  bool operator==(const RigidTransform& o) const {
    return rotation == o.rotation && translation == o.translation;
  }
};

class CameraRig {
 public:
  // Validates: fx, fy > 0, image dims > 0, rotation orthonormal with
  // det +1 to within rotation_tolerance.
  CameraRig(const Intrinsics& intrinsics, const RigidTransform& ground_to_camera,
            int image_width, int image_height, double rotation_tolerance = 1e-9);

  const Intrinsics& intrinsics() const { return intrinsics_; }
  const RigidTransform& ground_to_camera() const { return extrinsic_; }
  int image_width() const { return width_; }
  int image_height() const { return height_; }

  // Camera optical center in ground coordinates.
  Vec3 center_in_ground() const;

  // K^-1 (u, v, 1): the camera-frame ray through a pixel with unit z.
  Vec3 unit_depth_ray(double u, double v) const;

  bool operator==(const CameraRig&) const = default;

 private:
  Intrinsics intrinsics_;
  RigidTransform extrinsic_;
  int width_;
  int height_;
};

// Builds a rig from a physical pose: camera at (foot_x, foot_y, height) in
// the ground frame, looking toward azimuth `yaw` (from +x, CCW), tilted
// down by `pitch` and rolled by `roll` about its optical axis. Radians.
CameraRig rig_from_pose(const Intrinsics& intrinsics, int image_width, int image_height,
                        double height, double pitch, double yaw = 0.0, double roll = 0.0,
                        double foot_x = 0.0, double foot_y = 0.0);

// Plane A x + B y + C z + D = 0 in camera coordinates.
//
// Sign convention: (A, B, C) is the unit normal pointing from the camera
// toward the ground, so D = -camera_height < 0 always. A camera-frame ray r
// heading for the ground has A r_x + B r_y + C r_z > 0.
//
// The virtual camera shares the camera's optical center; its +y axis is the
// same toward-ground normal, so X_v O_v Z_v is parallel to the ground plane
// and y_v of a ground-bound ray is positive.
struct GroundPlane {
  double a = 0, b = 0, c = 1, d = -1;
  double camera_height = 1;
  Mat3 cam_to_virtual = Mat3::Identity();
  RigidTransform virtual_to_ground;

  Vec3 normal() const { return {a, b, c}; }
};

// Throws Error(CameraOnGroundPlane) when the camera center lies within
// 1e-6 m of z = 0, Error(InvalidArgument) when it is below the plane.
GroundPlane ground_plane_from_extrinsics(const CameraRig& rig);

// Camera-frame z depth at which the ray through (u, v) meets the plane.
// Throws RayParallelToGround or PlaneBehindCamera.
double depth_to_ground(const CameraRig& rig, const GroundPlane& plane, double u, double v);

// Ground-frame bottom center for pixel (u_c, v_c) whose bottom surface sits
// h_r above the virtual plane. The returned z equals h_r.
// Throws RayParallelToGround, PlaneBehindCamera, RelativeHeightAboveCamera.
Vec3 lift_to_ground(const CameraRig& rig, const GroundPlane& plane, double u_c, double v_c,
                    double h_r);

// Pinhole projection of a ground-frame point. Throws PointBehindCamera.
Vec2 project_to_image(const CameraRig& rig, const Vec3& p_ground);

// Horizontal location error caused by a relative-height error delta_h at
// horizontal distance `range`: range * delta_h / (camera_height - h_r).
// Throws InvalidArgument unless camera_height > h_r + delta_h.
double height_sensitivity(double camera_height, double h_r, double range, double delta_h);

// Corner order: sign patterns over (l, w, h) enumerated as binary counting
// with the l sign slowest, '-' before '+':
//   0 (-,-,-) 1 (-,-,+) 2 (-,+,-) 3 (-,+,+) 4 (+,-,-) 5 (+,-,+) 6 (+,+,-) 7 (+,+,+)
using Corners = std::array<Vec3, 8>;
Corners corners_of(const Box3D& box);

// Same construction with the rotation given as a (sin, cos) pair that is
// not required to be unit length.
Corners corners_from(const Vec3& bottom_center, const Vec3& dims, double sin_yaw, double cos_yaw);

}  // namespace roadlift
