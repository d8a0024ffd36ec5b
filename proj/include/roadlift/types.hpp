#pragma once

// Core value types shared by every roadlift module.
//
// Frame conventions used throughout the library:
//   ground frame  z-up, the virtual ground plane is z = 0, yaw is measured
//                 counter-clockwise about +z starting from +x.
//   camera frame  x right, y down, z forward (optical axis).
// A Box3D location is the BOTTOM center of the cuboid, not its geometric
// center; the geometric center sits at z + h / 2.

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace roadlift {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

enum class ErrorCode {
  InvalidArgument = 1,
  CameraOnGroundPlane,
  RayParallelToGround,
  PlaneBehindCamera,
  RelativeHeightAboveCamera,
  PointBehindCamera,
  DimensionMismatch,
  Parse,
  Io,
  Infeasible,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class Category { Car, Van, Truck, Bus, Pedestrian, Cyclist, Other };

std::string_view category_name(Category c);
// Throws Error(Parse) for unknown names.
Category parse_category(std::string_view name);

// Wraps an angle into (-pi, pi].
double normalize_angle(double radians);

struct Box3D {
  double x = 0, y = 0, z = 0;  // bottom center, ground frame, meters
  double l = 1, w = 1, h = 1;  // extent along the box's local x, y, z
  double theta = 0;            // yaw about ground +z, radians
  Category category = Category::Car;
  std::optional<double> score;

  Vec3 bottom_center() const { return {x, y, z}; }

  // Throws Error(InvalidArgument) unless l, w, h > 0 and every field is
  // finite. Normalizes theta.
  void validate();
};

// Axis-aligned pixel rectangle.
struct Box2D {
  double x1 = 0, y1 = 0, x2 = 0, y2 = 0;
  double area() const;
};

double iou_2d(const Box2D& a, const Box2D& b);

// One ground-truth or predicted object. Predictions carry box.score.
struct ObjectRecord {
  Box3D box;
  std::optional<Box2D> box2d;
  std::optional<Vec2> bottom_center;  // pixels
};

// One frame flowing through simulation, files and evaluation.
struct FrameRecord {
  std::string scene_id;
  std::int64_t timestamp = 0;
  std::vector<ObjectRecord> gt;
  std::vector<ObjectRecord> predictions;
};

}  // namespace roadlift
