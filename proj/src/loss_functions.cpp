#include "roadlift/loss_functions.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace roadlift {

namespace {

double sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

double pair_sum(std::span<const double> pred, std::span<const double> gt, auto&& term) {
  if (pred.size() != gt.size()) {
    throw Error(ErrorCode::DimensionMismatch, "batch sizes differ");
  }
  if (pred.empty()) return 0.0;
  double s = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += term(pred[i], gt[i]);
  return s / static_cast<double>(pred.size());
}

Corners gt_corners(const Box3D& gt) { return corners_of(gt); }

}  // namespace

Box3DParams Box3DParams::from_box(const Box3D& box) {
  return {box.bottom_center(), {box.l, box.w, box.h}, std::sin(box.theta), std::cos(box.theta)};
}

void Box3DParams::validate() const {
  if (!(location.allFinite() && dims.allFinite() && std::isfinite(sin_yaw) &&
        std::isfinite(cos_yaw))) {
    throw Error(ErrorCode::InvalidArgument, "box parameters are not finite");
  }
  if (!(dims.minCoeff() > 0)) throw Error(ErrorCode::InvalidArgument, "dims must be positive");
  if (std::abs(sin_yaw * sin_yaw + cos_yaw * cos_yaw - 1.0) > 1e-6) {
    throw Error(ErrorCode::InvalidArgument, "yaw encoding is not unit length");
  }
}

Box3DParams Box3DParams::normalized() const {
  Box3DParams out = *this;
  const double n = std::hypot(sin_yaw, cos_yaw);
  if (n > 0) {
    out.sin_yaw /= n;
    out.cos_yaw /= n;
  }
  return out;
}

Box3D Box3DParams::to_box(Category category) const {
  Box3D b;
  b.x = location.x();
  b.y = location.y();
  b.z = location.z();
  b.l = dims.x();
  b.w = dims.y();
  b.h = dims.z();
  b.theta = std::atan2(sin_yaw, cos_yaw);
  b.category = category;
  return b;
}

double corner_l1(const Corners& pred, const Corners& gt) {
  double s = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += (pred[i] - gt[i]).cwiseAbs().sum();
  return s;
}

double corner_l1(const Box3D& pred, const Box3D& gt) {
  return corner_l1(corners_of(pred), corners_of(gt));
}

RegressionParts disentangled_reg_loss(const Box3DParams& pred, const Box3D& gt) {
  const Corners target = gt_corners(gt);
  const Vec3 gt_loc = gt.bottom_center();
  const Vec3 gt_dims(gt.l, gt.w, gt.h);
  const double s = std::sin(gt.theta);
  const double c = std::cos(gt.theta);
  RegressionParts parts;
  parts.location = corner_l1(corners_from(pred.location, gt_dims, s, c), target);
  parts.dims = corner_l1(corners_from(gt_loc, pred.dims, s, c), target);
  parts.yaw = corner_l1(corners_from(gt_loc, gt_dims, pred.sin_yaw, pred.cos_yaw), target);
  return parts;
}

double relative_height_loss(double pred_hr, double gt_hr) { return std::abs(pred_hr - gt_hr); }

double relative_height_loss(std::span<const double> pred_hr, std::span<const double> gt_hr) {
  return pair_sum(pred_hr, gt_hr, [](double a, double b) { return std::abs(a - b); });
}

double bottom_center_loss(const Vec2& pred_uv, const Vec2& gt_uv) {
  return (pred_uv - gt_uv).cwiseAbs().sum();
}

double bottom_center_loss(std::span<const Vec2> pred_uv, std::span<const Vec2> gt_uv) {
  if (pred_uv.size() != gt_uv.size()) {
    throw Error(ErrorCode::DimensionMismatch, "batch sizes differ");
  }
  if (pred_uv.empty()) return 0.0;
  double s = 0;
  for (std::size_t i = 0; i < pred_uv.size(); ++i) s += bottom_center_loss(pred_uv[i], gt_uv[i]);
  return s / static_cast<double>(pred_uv.size());
}

LossBreakdown total_loss(const RegressionParts& reg, double l_hr, double l_center_px,
                         const LossWeights& weights) {
  if (!(weights.lambda1 >= 0 && weights.lambda2 >= 0)) {
    throw Error(ErrorCode::InvalidArgument, "loss weights must be non-negative");
  }
  LossBreakdown b;
  b.reg_location = reg.location;
  b.reg_dims = reg.dims;
  b.reg_yaw = reg.yaw;
  b.l_hr = l_hr;
  b.l_center_px = l_center_px;
  b.total = weights.lambda1 * (reg.location + reg.dims + reg.yaw) / 3.0 +
            weights.lambda2 * l_hr + l_center_px;
  return b;
}

LossParams pack_params(const Box3DParams& box, double h_r) {
  return {box.location.x(), box.location.y(), box.location.z(), box.dims.x(), box.dims.y(),
          box.dims.z(),     box.sin_yaw,      box.cos_yaw,      h_r};
}

Box3DParams unpack_box(const LossParams& p) {
  return {{p[0], p[1], p[2]}, {p[3], p[4], p[5]}, p[6], p[7]};
}

LossBreakdown evaluate_loss(const LossParams& p, const Box3D& gt, const LossWeights& weights,
                            double l_center_px) {
  const RegressionParts reg = disentangled_reg_loss(unpack_box(p), gt);
  return total_loss(reg, relative_height_loss(p[8], gt.z), l_center_px, weights);
}

LossParams loss_gradient(const LossParams& p, const Box3D& gt, const LossWeights& weights) {
  const Box3DParams pred = unpack_box(p);
  const Corners target = gt_corners(gt);
  const Vec3 gt_loc = gt.bottom_center();
  const Vec3 gt_dims(gt.l, gt.w, gt.h);
  const double s = std::sin(gt.theta);
  const double c = std::cos(gt.theta);

  const Corners loc_corners = corners_from(pred.location, gt_dims, s, c);
  const Corners dim_corners = corners_from(gt_loc, pred.dims, s, c);
  const Corners yaw_corners = corners_from(gt_loc, gt_dims, pred.sin_yaw, pred.cos_yaw);

  LossParams g{};
  for (int i = 0; i < 8; ++i) {
    const double sl = (i & 4) ? 0.5 : -0.5;
    const double sw = (i & 2) ? 0.5 : -0.5;
    const double sh = (i & 1) ? 0.5 : -0.5;

    // Location part: every corner moves rigidly with the bottom center.
    const Vec3 d_loc = (loc_corners[i] - target[i]).unaryExpr([](double v) { return sign(v); });
    g[0] += d_loc.x();
    g[1] += d_loc.y();
    g[2] += d_loc.z();

    // Dimension part: corner = center + R (sl l, sw w, (sh + 1/2) h).
    const Vec3 d_dim = (dim_corners[i] - target[i]).unaryExpr([](double v) { return sign(v); });
    g[3] += sl * (c * d_dim.x() + s * d_dim.y());
    g[4] += sw * (-s * d_dim.x() + c * d_dim.y());
    g[5] += (sh + 0.5) * d_dim.z();

    // Yaw part: corner_xy = [[cos, -sin], [sin, cos]] (lx, ly).
    const Vec3 d_yaw = (yaw_corners[i] - target[i]).unaryExpr([](double v) { return sign(v); });
    const double lx = sl * gt.l;
    const double ly = sw * gt.w;
    g[6] += -ly * d_yaw.x() + lx * d_yaw.y();
    g[7] += lx * d_yaw.x() + ly * d_yaw.y();
  }
  const double reg_scale = weights.lambda1 / 3.0;
  for (std::size_t k = 0; k < 8; ++k) g[k] *= reg_scale;
  g[8] = weights.lambda2 * sign(p[8] - gt.z);
  return g;
}

FitResult gradient_descent_fit(const LossParams& init, const Box3D& gt, int steps, double lr,
                               const LossWeights& weights) {
  if (steps <= 0) throw Error(ErrorCode::InvalidArgument, "steps must be positive");
  if (!(lr > 0)) throw Error(ErrorCode::InvalidArgument, "learning rate must be positive");

  // The loss is a sum of one term per group, so each group can accept or
  // reject its own step without raising the total.
  struct Group {
    std::size_t begin, end;
    double lr;
  };
  std::array<Group, 4> groups{{{0, 3, lr}, {3, 6, lr}, {6, 8, lr}, {8, 9, lr}}};

  FitResult result;
  result.params = init;
  result.loss = evaluate_loss(init, gt, weights).total;
  result.loss_curve.reserve(static_cast<std::size_t>(steps) + 1);
  for (int it = 0; it < steps && result.loss > 0; ++it) {
    result.loss_curve.push_back(result.loss);
    const LossParams g = loss_gradient(result.params, gt, weights);
    for (Group& grp : groups) {
      LossParams trial = result.params;
      for (std::size_t k = grp.begin; k < grp.end; ++k) trial[k] -= grp.lr * g[k];
      if (grp.begin == 6) {
        const double n = std::hypot(trial[6], trial[7]);
        if (n > 0) {
          trial[6] /= n;
          trial[7] /= n;
        }
      } else if (grp.begin == 3) {
        for (std::size_t k = 3; k < 6; ++k) trial[k] = std::max(trial[k], 1e-3);
      }
      const double trial_loss = evaluate_loss(trial, gt, weights).total;
      if (trial_loss <= result.loss) {
        result.params = trial;
        result.loss = trial_loss;
      } else {
        grp.lr *= 0.5;
      }
    }
    result.steps_taken = it + 1;
  }
  result.loss_curve.push_back(result.loss);
  return result;
}

}  // namespace roadlift
