#include "roadlift/position_embedding.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace roadlift {

namespace {

void encode_into(double value, int d_e, double temperature, std::span<double> out) {
  for (int i = 0; i < d_e / 2; ++i) {
    const double freq = std::pow(temperature, 2.0 * i / d_e);
    out[2 * i] = std::sin(value / freq);
    out[2 * i + 1] = std::cos(value / freq);
  }
}

void check_encoding_args(int d_e, double temperature) {
  if (d_e <= 0 || d_e % 2 != 0) {
    throw Error(ErrorCode::InvalidArgument, "embedding size must be a positive even number");
  }
  if (!(temperature > 0)) throw Error(ErrorCode::InvalidArgument, "temperature must be positive");
}

}  // namespace

std::vector<double> sine_encode(double value, int d_e, double temperature) {
  check_encoding_args(d_e, temperature);
  std::vector<double> out(static_cast<std::size_t>(d_e));
  encode_into(value, d_e, temperature, out);
  return out;
}

FeatureGrid embed_depth_map(const CameraRig& rig, const GroundPlane& plane, int d_e,
                            double temperature) {
  check_encoding_args(d_e, temperature);
  FeatureGrid grid = FeatureGrid::for_image(rig.image_height(), rig.image_width(), d_e);
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      const double u = kFeatureStride * c + kFeatureStride / 2.0;
      const double v = kFeatureStride * r + kFeatureStride / 2.0;
      double depth;
      try {
        depth = depth_to_ground(rig, plane, u, v);
      } catch (const Error&) {
        continue;  // zero sentinel
      }
      encode_into(depth, d_e, temperature,
                  grid.cell(static_cast<std::size_t>(r) * grid.cols() + c));
    }
  }
  return grid;
}

std::vector<double> embed_query(const Box2D& normalized_box, const Vec2& normalized_bottom_center,
                                int d_e, double temperature) {
  check_encoding_args(d_e, temperature);
  const std::array<double, 6> coords{normalized_box.x1, normalized_box.y1,
                                     normalized_box.x2, normalized_box.y2,
                                     normalized_bottom_center.x(), normalized_bottom_center.y()};
  for (double v : coords) {
    if (!(v >= -0.1 && v <= 1.1)) {
      throw Error(ErrorCode::InvalidArgument, "query coordinates must be normalized to [0, 1]");
    }
  }
  std::vector<double> out(coords.size() * static_cast<std::size_t>(d_e));
  for (std::size_t k = 0; k < coords.size(); ++k) {
    encode_into(coords[k], d_e, temperature,
                std::span<double>(out).subspan(k * static_cast<std::size_t>(d_e),
                                               static_cast<std::size_t>(d_e)));
  }
  return out;
}

}  // namespace roadlift
