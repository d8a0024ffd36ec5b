#pragma once

#include "roadlift/camera_geometry.hpp"
#include "roadlift/scene_cue_bank.hpp"

#include <vector>

namespace roadlift {

inline constexpr double kDefaultTemperature = 10000.0;

// Entry 2i = sin(value / T^(2i/d_e)), entry 2i+1 = cos(same).
// Throws InvalidArgument for odd or non-positive d_e or temperature <= 0.
std::vector<double> sine_encode(double value, int d_e, double temperature = kDefaultTemperature);

// Sine encoding of the depth-to-ground d(u, v), in raw meters, at the
// center pixel (8 col + 4, 8 row + 4) of every feature cell. Cells whose
// ray never meets the ground carry all zeros.
FeatureGrid embed_depth_map(const CameraRig& rig, const GroundPlane& plane, int d_e,
                            double temperature = kDefaultTemperature);

// Pre-MLP query features: sine_encode of (x1, y1, x2, y2, u_c, v_c), each
// already divided by the image width or height. Length 6 d_e.
// Throws InvalidArgument when a coordinate lies outside [-0.1, 1.1].
std::vector<double> embed_query(const Box2D& normalized_box, const Vec2& normalized_bottom_center,
                                int d_e, double temperature = kDefaultTemperature);

}  // namespace roadlift
