#pragma once

// Corner-based 3D regression losses with location / dimension / yaw
// disentanglement, the relative-height and bottom-center L1 terms, and
// their analytic subgradients.

#include "roadlift/camera_geometry.hpp"

#include <array>
#include <span>
#include <string_view>
#include <vector>

namespace roadlift {

// Predicted box in its regression encoding. The yaw is carried as a
// (sin, cos) pair.
struct Box3DParams {
  Vec3 location = Vec3::Zero();  // bottom center, ground frame
  Vec3 dims = Vec3::Ones();      // l, w, h
  double sin_yaw = 0.0;
  double cos_yaw = 1.0;

  static Box3DParams from_box(const Box3D& box);
  // Throws InvalidArgument unless dims > 0 and sin^2 + cos^2 = 1 within 1e-6.
  void validate() const;
  // Rescales (sin, cos) to unit length.
  Box3DParams normalized() const;
  Box3D to_box(Category category = Category::Car) const;
};

struct LossWeights {
  double lambda1 = 1.0;  // corner regression
  double lambda2 = 1.0;  // relative height
};

struct RegressionParts {
  double location = 0;
  double dims = 0;
  double yaw = 0;
};

struct LossBreakdown {
  double reg_location = 0;
  double reg_dims = 0;
  double reg_yaw = 0;
  double l_hr = 0;
  double l_center_px = 0;
  double total = 0;
};

// Sum of |a_i - b_i| over the 24 paired corner coordinates.
double corner_l1(const Corners& pred, const Corners& gt);
double corner_l1(const Box3D& pred, const Box3D& gt);

// Each part swaps one predicted group into the ground truth box.
RegressionParts disentangled_reg_loss(const Box3DParams& pred, const Box3D& gt);

double relative_height_loss(double pred_hr, double gt_hr);
// Mean over a batch. Throws DimensionMismatch on length mismatch.
double relative_height_loss(std::span<const double> pred_hr, std::span<const double> gt_hr);

// |du| + |dv| in pixels.
double bottom_center_loss(const Vec2& pred_uv, const Vec2& gt_uv);
double bottom_center_loss(std::span<const Vec2> pred_uv, std::span<const Vec2> gt_uv);

// total = lambda1 * mean(reg parts) + lambda2 * l_hr + l_center_px.
// Throws InvalidArgument for negative weights.
LossBreakdown total_loss(const RegressionParts& reg, double l_hr, double l_center_px,
                         const LossWeights& weights = {});

// Flat parameter vector used for gradients:
// x, y, z, l, w, h, sin_yaw, cos_yaw, h_r.
inline constexpr std::size_t kNumLossParams = 9;
using LossParams = std::array<double, kNumLossParams>;
inline constexpr std::array<std::string_view, kNumLossParams> kLossParamNames{
    "x", "y", "z", "l", "w", "h", "sin_yaw", "cos_yaw", "h_r"};

LossParams pack_params(const Box3DParams& box, double h_r);
Box3DParams unpack_box(const LossParams& p);

// Loss of the flat parameters against gt (whose relative height is its
// bottom-center z). The yaw rotation uses the raw (sin, cos) entries, so
// the function is defined off the unit circle too.
LossBreakdown evaluate_loss(const LossParams& p, const Box3D& gt, const LossWeights& weights = {},
                            double l_center_px = 0.0);

// Subgradient of evaluate_loss(...).total; sign(0) is taken as 0.
LossParams loss_gradient(const LossParams& p, const Box3D& gt, const LossWeights& weights = {});

struct FitResult {
  LossParams params{};
  double loss = 0;
  int steps_taken = 0;
  std::vector<double> loss_curve;  // loss before each step, then the final loss
};

// Subgradient descent with step size lr per parameter group (location,
// dims, yaw pair, h_r). After each step (sin, cos) is renormalized. A group
// step that would raise the loss is rejected and that group's lr halves, so
// the loss curve never increases and the final iterate is the best seen.
FitResult gradient_descent_fit(const LossParams& init, const Box3D& gt, int steps, double lr,
                               const LossWeights& weights = {});

}  // namespace roadlift
