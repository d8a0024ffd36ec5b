#include "roadlift/camera_geometry.hpp"

#include <Eigen/Geometry>

#include <cmath>

namespace roadlift {

namespace {

constexpr double kMinCameraHeight = 1e-6;
constexpr double kParallelEps = 1e-9;
constexpr double kMinProjectionDepth = 1e-6;

}  // namespace

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

CameraRig::CameraRig(const Intrinsics& intrinsics, const RigidTransform& ground_to_camera,
                     int image_width, int image_height, double rotation_tolerance)
    : intrinsics_(intrinsics),
      extrinsic_(ground_to_camera),
      width_(image_width),
      height_(image_height) {
  const auto& k = intrinsics_;
  if (!(std::isfinite(k.fx) && std::isfinite(k.fy) && k.fx > 0 && k.fy > 0)) {
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  }
  if (!(std::isfinite(k.cx) && std::isfinite(k.cy))) {
    throw Error(ErrorCode::InvalidArgument, "principal point is not finite");
  }
  if (width_ <= 0 || height_ <= 0) {
    throw Error(ErrorCode::InvalidArgument, "image dimensions must be positive");
  }
  const Mat3& r = extrinsic_.rotation;
  if (!r.allFinite() || !extrinsic_.translation.allFinite()) {
    throw Error(ErrorCode::InvalidArgument, "extrinsic is not finite");
  }
  const double ortho_err = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  if (ortho_err > rotation_tolerance || std::abs(r.determinant() - 1.0) > rotation_tolerance) {
    throw Error(ErrorCode::InvalidArgument, "extrinsic rotation is not orthonormal with det +1");
  }
}

Vec3 CameraRig::center_in_ground() const { return extrinsic_.inverse().translation; }

Vec3 CameraRig::unit_depth_ray(double u, double v) const {
  return {(u - intrinsics_.cx) / intrinsics_.fx, (v - intrinsics_.cy) / intrinsics_.fy, 1.0};
}

CameraRig rig_from_pose(const Intrinsics& intrinsics, int image_width, int image_height,
                        double height, double pitch, double yaw, double roll, double foot_x,
                        double foot_y) {
  const Vec3 forward(std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw),
                     -std::sin(pitch));
  const Vec3 right0(std::sin(yaw), -std::cos(yaw), 0.0);
  const Vec3 down0 = forward.cross(right0);
  const Vec3 right = std::cos(roll) * right0 + std::sin(roll) * down0;
  const Vec3 down = -std::sin(roll) * right0 + std::cos(roll) * down0;

  RigidTransform ext;
  ext.rotation.row(0) = right.transpose();
  ext.rotation.row(1) = down.transpose();
  ext.rotation.row(2) = forward.transpose();
  ext.translation = -(ext.rotation * Vec3(foot_x, foot_y, height));
  return CameraRig(intrinsics, ext, image_width, image_height);
}

GroundPlane ground_plane_from_extrinsics(const CameraRig& rig) {
  const RigidTransform& ext = rig.ground_to_camera();
  const double center_z = rig.center_in_ground().z();
  if (std::abs(center_z) < kMinCameraHeight) {
    throw Error(ErrorCode::CameraOnGroundPlane, "camera on ground plane");
  }
  if (center_z < 0) {
    throw Error(ErrorCode::InvalidArgument, "camera below ground plane");
  }

  // Ground +z expressed in camera coordinates is R e_z; the toward-ground
  // normal is its negation.
  const Vec3 n = -ext.rotation.col(2);
  GroundPlane plane;
  plane.a = n.x();
  plane.b = n.y();
  plane.c = n.z();
  plane.d = -center_z;
  plane.camera_height = center_z;

  // Virtual axes in camera coordinates: y along n, z the optical axis
  // projected onto the plane (keeps the forward azimuth), x = y cross z.
  Vec3 x_axis, z_axis;
  const Vec3 forward = Vec3::UnitZ() - n.z() * n;
  if (forward.norm() > 1e-9) {
    z_axis = forward.normalized();
    x_axis = n.cross(z_axis);
  } else {
    // Optical axis along the normal: keep the camera's x axis instead.
    x_axis = (Vec3::UnitX() - n.x() * n).normalized();
    z_axis = x_axis.cross(n);
  }
  plane.cam_to_virtual.row(0) = x_axis.transpose();
  plane.cam_to_virtual.row(1) = n.transpose();
  plane.cam_to_virtual.row(2) = z_axis.transpose();

  const RigidTransform cam_to_ground = ext.inverse();
  plane.virtual_to_ground.rotation = cam_to_ground.rotation * plane.cam_to_virtual.transpose();
  plane.virtual_to_ground.translation = cam_to_ground.translation;
  return plane;
}

double depth_to_ground(const CameraRig& rig, const GroundPlane& plane, double u, double v) {
  const Vec3 ray = rig.unit_depth_ray(u, v);
  const double denom = plane.a * ray.x() + plane.b * ray.y() + plane.c;
  if (std::abs(denom) <= kParallelEps) {
    throw Error(ErrorCode::RayParallelToGround, "ray parallel to ground");
  }
  const double depth = -plane.d / denom;
  if (depth <= 0) throw Error(ErrorCode::PlaneBehindCamera, "plane behind camera");
  return depth;
}

Vec3 lift_to_ground(const CameraRig& rig, const GroundPlane& plane, double u_c, double v_c,
                    double h_r) {
  const Vec3 p_virtual = plane.cam_to_virtual * rig.unit_depth_ray(u_c, v_c);
  const double y_v = p_virtual.y();
  if (std::abs(y_v) <= kParallelEps) {
    throw Error(ErrorCode::RayParallelToGround, "ray parallel to ground");
  }
  if (h_r >= plane.camera_height) {
    throw Error(ErrorCode::RelativeHeightAboveCamera, "relative height above camera");
  }
  const double scale = (plane.camera_height - h_r) / y_v;
  if (scale <= 0) throw Error(ErrorCode::PlaneBehindCamera, "plane behind camera");
  return plane.virtual_to_ground.apply(scale * p_virtual);
}

Vec2 project_to_image(const CameraRig& rig, const Vec3& p_ground) {
  const Vec3 p = rig.ground_to_camera().apply(p_ground);
  if (p.z() <= kMinProjectionDepth) {
    throw Error(ErrorCode::PointBehindCamera, "point behind camera");
  }
  const auto& k = rig.intrinsics();
  return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

double height_sensitivity(double camera_height, double h_r, double range, double delta_h) {
  if (!(camera_height > h_r + delta_h)) {
    throw Error(ErrorCode::InvalidArgument,
                "camera height must exceed the relative height plus its error");
  }
  return range * delta_h / (camera_height - h_r);
}

Corners corners_from(const Vec3& bottom_center, const Vec3& dims, double sin_yaw,
                     double cos_yaw) {
  const Vec3 center = bottom_center + Vec3(0, 0, dims.z() / 2);
  Corners out;
  for (int i = 0; i < 8; ++i) {
    const double sl = (i & 4) ? 0.5 : -0.5;
    const double sw = (i & 2) ? 0.5 : -0.5;
    const double sh = (i & 1) ? 0.5 : -0.5;
    const double lx = sl * dims.x();
    const double ly = sw * dims.y();
    out[i] = center + Vec3(cos_yaw * lx - sin_yaw * ly, sin_yaw * lx + cos_yaw * ly, sh * dims.z());
  }
  return out;
}

Corners corners_of(const Box3D& box) {
  return corners_from(box.bottom_center(), {box.l, box.w, box.h}, std::sin(box.theta),
                      std::cos(box.theta));
}

}  // namespace roadlift
