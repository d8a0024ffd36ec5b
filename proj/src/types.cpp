#include "roadlift/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <utility>

namespace roadlift {

namespace {

constexpr std::array<std::pair<Category, std::string_view>, 7> kCategoryNames{{
    {Category::Car, "Car"},
    {Category::Van, "Van"},
    {Category::Truck, "Truck"},
    {Category::Bus, "Bus"},
    {Category::Pedestrian, "Pedestrian"},
    {Category::Cyclist, "Cyclist"},
    {Category::Other, "Other"},
}};

}  // namespace

std::string_view category_name(Category c) {
  for (const auto& [cat, name] : kCategoryNames) {
    if (cat == c) return name;
  }
  return "Other";
}

Category parse_category(std::string_view name) {
  for (const auto& [cat, n] : kCategoryNames) {
    if (n == name) return cat;
  }
  throw Error(ErrorCode::Parse, "unknown category '" + std::string(name) + "'");
}

double normalize_angle(double radians) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  double a = std::fmod(radians, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  if (a > std::numbers::pi) a -= kTwoPi;
  return a;
}

void Box3D::validate() {
  for (double v : {x, y, z, l, w, h, theta}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "box field is not finite");
  }
  if (!(l > 0 && w > 0 && h > 0)) {
    throw Error(ErrorCode::InvalidArgument, "box dimensions must be positive");
  }
  if (score && !std::isfinite(*score)) {
    throw Error(ErrorCode::InvalidArgument, "box score is not finite");
  }
  theta = normalize_angle(theta);
}

double Box2D::area() const { return std::max(0.0, x2 - x1) * std::max(0.0, y2 - y1); }

double iou_2d(const Box2D& a, const Box2D& b) {
  const double iw = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
  const double ih = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
  if (iw <= 0 || ih <= 0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? inter / uni : 0.0;
}

}  // namespace roadlift
