#include "roadlift/synthetic_world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace roadlift {

namespace {

constexpr int kLatticeSize = 81;
constexpr int kPlacementAttempts = 1000;
constexpr double kFieldRoiFactor = 1.6;  // region of interest vs range_max

enum class Stream : std::uint32_t { Rig = 1, Field, Objects, Noise, Filler };

std::mt19937_64 make_rng(std::uint64_t seed, Stream stream, std::uint32_t extra = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), extra};
  return std::mt19937_64(seq);
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double deg2rad(double d) { return d * std::numbers::pi / 180.0; }

struct CategoryPrior {
  Category category;
  double weight;
  double l, w, h;
};

constexpr std::array<CategoryPrior, 6> kCategoryPriors{{
    {Category::Car, 0.60, 4.5, 1.8, 1.5},
    {Category::Van, 0.10, 5.0, 2.0, 2.0},
    {Category::Truck, 0.08, 8.0, 2.5, 3.2},
    {Category::Bus, 0.05, 11.0, 2.6, 3.2},
    {Category::Pedestrian, 0.10, 0.6, 0.6, 1.7},
    {Category::Cyclist, 0.07, 1.8, 0.6, 1.7},
}};

const CategoryPrior& sample_category(std::mt19937_64& rng) {
  double u = uniform(rng, 0.0, 1.0);
  for (const auto& prior : kCategoryPriors) {
    if (u < prior.weight) return prior;
    u -= prior.weight;
  }
  return kCategoryPriors.front();
}

GroundField random_field(const SceneConfig& config, std::uint64_t seed) {
  const double roi = kFieldRoiFactor * config.range_max;
  if (config.constant_height) return GroundField::constant(*config.constant_height, roi);

  auto rng = make_rng(seed, Stream::Field);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::array<double, GroundField::kNumCoefficients> coeffs{};
  constexpr std::array<int, GroundField::kNumCoefficients> kDegree{0, 1, 1, 2, 2, 2, 3, 3, 3, 3};
  for (std::size_t k = 0; k < coeffs.size(); ++k) {
    const double z = normal(rng);
    if (kDegree[k] <= config.field_degree) coeffs[k] = z;
  }
  std::vector<BumpTerm> bumps;
  for (int b = 0; b < config.bump_count; ++b) {
    BumpTerm t;
    t.amplitude = normal(rng);
    t.cx = uniform(rng, -0.5 * roi, 0.5 * roi);
    t.cy = uniform(rng, -0.5 * roi, 0.5 * roi);
    t.sigma = uniform(rng, 20.0, 80.0);
    bumps.push_back(t);
  }

  return GroundField::normalized(coeffs, std::move(bumps), roi, config.field_max_abs);
}

CameraRig random_rig(const SceneConfig& config, std::uint64_t seed) {
  auto rng = make_rng(seed, Stream::Rig);
  const double height = uniform(rng, config.height_min, config.height_max);
  const double pitch = deg2rad(uniform(rng, config.pitch_min_deg, config.pitch_max_deg));
  const double roll = deg2rad(uniform(rng, -config.roll_max_deg, config.roll_max_deg));
  const double yaw = uniform(rng, -std::numbers::pi, std::numbers::pi);
  const double focal = uniform(rng, config.focal_min, config.focal_max);
  const Intrinsics k{focal, focal, config.image_width / 2.0, config.image_height / 2.0};
  return rig_from_pose(k, config.image_width, config.image_height, height, pitch, yaw, roll);
}

bool inside_image(const CameraRig& rig, const Vec2& uv) {
  return uv.x() >= 0 && uv.x() < rig.image_width() && uv.y() >= 0 && uv.y() < rig.image_height();
}

std::vector<ObjectRecord> place_objects(const CameraRig& rig, const GroundField& field,
                                        const SceneConfig& config, std::uint64_t frame_seed) {
  auto rng = make_rng(frame_seed, Stream::Objects);
  const Vec3 foot = rig.center_in_ground();
  const Vec3 forward = rig.ground_to_camera().rotation.row(2).transpose();
  const double heading = std::atan2(forward.y(), forward.x());
  const double half_fov =
      std::atan(rig.image_width() / (2.0 * rig.intrinsics().fx)) + deg2rad(2.0);

  std::vector<ObjectRecord> objects;
  for (int n = 0; n < config.object_count; ++n) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementAttempts && !placed; ++attempt) {
      const CategoryPrior& prior = sample_category(rng);
      const double range = uniform(rng, config.range_min, config.range_max);
      const double azimuth = heading + uniform(rng, -half_fov, half_fov);
      Box3D box;
      box.category = prior.category;
      box.l = prior.l * uniform(rng, 0.9, 1.1);
      box.w = prior.w * uniform(rng, 0.9, 1.1);
      box.h = prior.h * uniform(rng, 0.9, 1.1);
      box.theta = uniform(rng, -std::numbers::pi, std::numbers::pi);
      box.x = foot.x() + range * std::cos(azimuth);
      box.y = foot.y() + range * std::sin(azimuth);
      box.z = field(box.x, box.y);
      box.validate();

      const double radius = std::hypot(box.l, box.w) / 2;
      const bool overlaps = std::any_of(objects.begin(), objects.end(), [&](const ObjectRecord& o) {
        const double other = std::hypot(o.box.l, o.box.w) / 2;
        return std::hypot(o.box.x - box.x, o.box.y - box.y) < radius + other + 0.5;
      });
      if (overlaps) continue;

      try {
        ObjectRecord rec = observe(rig, box);
        if (!inside_image(rig, *rec.bottom_center)) continue;
        objects.push_back(std::move(rec));
        placed = true;
      } catch (const Error&) {
        continue;  // some corner behind the camera
      }
    }
    if (!placed) {
      throw Error(ErrorCode::Infeasible, "no in-view placement found after 1000 attempts");
    }
  }
  return objects;
}

}  // namespace

GroundField::GroundField(std::array<double, kNumCoefficients> coefficients,
                         std::vector<BumpTerm> bumps, double roi_half_size)
    : coeffs_(coefficients), bumps_(std::move(bumps)), roi_(roi_half_size) {
  if (!(roi_ > 0)) throw Error(ErrorCode::InvalidArgument, "field region must be positive");
  for (double c : coeffs_) {
    if (!std::isfinite(c)) throw Error(ErrorCode::InvalidArgument, "field coefficient not finite");
  }
  for (const auto& b : bumps_) {
    if (!(std::isfinite(b.amplitude) && std::isfinite(b.cx) && std::isfinite(b.cy) && b.sigma > 0)) {
      throw Error(ErrorCode::InvalidArgument, "invalid bump term");
    }
  }
  if (lattice_max_abs() > kMaxAbsHeight) {
    throw Error(ErrorCode::InvalidArgument, "ground field exceeds the 2 m height bound");
  }
}

GroundField GroundField::normalized(std::array<double, kNumCoefficients> coefficients,
                                    std::vector<BumpTerm> bumps, double roi_half_size,
                                    double max_abs) {
  const double peak =
      GroundField(Unchecked{}, coefficients, bumps, roi_half_size).lattice_max_abs();
  if (!(peak > 0)) return GroundField::constant(0.0, roi_half_size);
  const double s = max_abs / peak;
  for (double& c : coefficients) c *= s;
  for (auto& b : bumps) b.amplitude *= s;
  return GroundField(coefficients, std::move(bumps), roi_half_size);
}

GroundField GroundField::constant(double height, double roi_half_size) {
  std::array<double, kNumCoefficients> c{};
  c[0] = height;
  return GroundField(c, {}, roi_half_size);
}

double GroundField::operator()(double x, double y) const {
  const double u = x / roi_;
  const double v = y / roi_;
  const auto& c = coeffs_;
  double h = c[0] + c[1] * u + c[2] * v + c[3] * u * u + c[4] * u * v + c[5] * v * v +
             c[6] * u * u * u + c[7] * u * u * v + c[8] * u * v * v + c[9] * v * v * v;
  for (const auto& b : bumps_) {
    const double dx = x - b.cx;
    const double dy = y - b.cy;
    h += b.amplitude * std::exp(-(dx * dx + dy * dy) / (2 * b.sigma * b.sigma));
  }
  return h;
}

double GroundField::lattice_max_abs() const {
  double peak = 0;
  for (int i = 0; i < kLatticeSize; ++i) {
    for (int j = 0; j < kLatticeSize; ++j) {
      const double x = -roi_ + 2 * roi_ * i / (kLatticeSize - 1);
      const double y = -roi_ + 2 * roi_ * j / (kLatticeSize - 1);
      peak = std::max(peak, std::abs((*this)(x, y)));
    }
  }
  return peak;
}

void SceneConfig::validate() const {
  if (object_count < 0) throw Error(ErrorCode::InvalidArgument, "object_count must be >= 0");
  if (!(range_min > 0 && range_min < range_max)) {
    throw Error(ErrorCode::InvalidArgument, "range band must satisfy 0 < min < max");
  }
  if (!(height_min > GroundField::kMaxAbsHeight && height_min <= height_max)) {
    throw Error(ErrorCode::InvalidArgument, "camera height band must lie above 2 m");
  }
  if (!(pitch_min_deg <= pitch_max_deg && roll_max_deg >= 0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid pitch or roll band");
  }
  if (!(focal_min > 0 && focal_min <= focal_max)) {
    throw Error(ErrorCode::InvalidArgument, "invalid focal band");
  }
  if (image_width <= 0 || image_height <= 0 || image_width % kFeatureStride != 0 ||
      image_height % kFeatureStride != 0) {
    throw Error(ErrorCode::InvalidArgument, "image size must be positive multiples of 8");
  }
  if (constant_height && std::abs(*constant_height) > GroundField::kMaxAbsHeight) {
    throw Error(ErrorCode::InvalidArgument, "constant field exceeds the 2 m bound");
  }
  if (field_degree < 0 || field_degree > 3 || bump_count < 0 ||
      !(field_max_abs >= 0 && field_max_abs <= GroundField::kMaxAbsHeight)) {
    throw Error(ErrorCode::InvalidArgument, "invalid field settings");
  }
}

void NoiseModel::validate() const {
  for (double s : {sigma_hr, sigma_dims, sigma_yaw, sigma_center_px}) {
    if (!(s >= 0 && std::isfinite(s))) throw Error(ErrorCode::InvalidArgument, "noise sigmas must be >= 0");
  }
  for (double p : {drop_rate, false_positive_rate}) {
    if (!(p >= 0 && p <= 1)) throw Error(ErrorCode::InvalidArgument, "rates must lie in [0, 1]");
  }
}

ObjectRecord observe(const CameraRig& rig, const Box3D& box) {
  ObjectRecord rec;
  rec.box = box;
  rec.bottom_center = project_to_image(rig, box.bottom_center());
  Box2D rect{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
             -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  for (const Vec3& corner : corners_of(box)) {
    const Vec2 uv = project_to_image(rig, corner);
    rect.x1 = std::min(rect.x1, uv.x());
    rect.y1 = std::min(rect.y1, uv.y());
    rect.x2 = std::max(rect.x2, uv.x());
    rect.y2 = std::max(rect.y2, uv.y());
  }
  rec.box2d = rect;
  return rec;
}

SyntheticScene make_scene(const CameraRig& rig, GroundField field, const SceneConfig& config,
                          std::uint64_t scene_seed, std::uint64_t frame_seed,
                          std::string scene_id) {
  config.validate();
  GroundPlane plane = ground_plane_from_extrinsics(rig);
  std::vector<ObjectRecord> objects = place_objects(rig, field, config, frame_seed);
  return SyntheticScene{std::move(scene_id), scene_seed, frame_seed, rig,
                        std::move(plane),    std::move(field), config, std::move(objects)};
}

SyntheticScene generate_scene(const SceneConfig& config, std::uint64_t seed) {
  config.validate();
  return make_scene(random_rig(config, seed), random_field(config, seed), config, seed, seed,
                    "scene_" + std::to_string(seed));
}

SyntheticScene next_frame(const SyntheticScene& scene, std::uint64_t frame_seed) {
  SyntheticScene out = scene;
  out.frame_seed = frame_seed;
  out.objects = place_objects(scene.rig, scene.field, scene.config, frame_seed);
  return out;
}

FrameRecord simulate_predictions(const SyntheticScene& scene, const NoiseModel& noise,
                                 std::uint64_t seed) {
  noise.validate();
  auto rng = make_rng(seed, Stream::Noise);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto unit = [&] { return uniform(rng, 0.0, 1.0); };

  FrameRecord frame;
  frame.scene_id = scene.scene_id;
  frame.timestamp = static_cast<std::int64_t>(scene.frame_seed);
  frame.gt = scene.objects;

  for (const ObjectRecord& gt : scene.objects) {
    // Fixed draw order per object, independent of the sigmas.
    const double u_drop = unit();
    const double z_hr = normal(rng);
    const double z_l = normal(rng), z_w = normal(rng), z_h = normal(rng);
    const double z_yaw = normal(rng);
    const double z_u = normal(rng), z_v = normal(rng);
    const double u_fp = unit();
    const double fp_u = unit(), fp_v = unit(), fp_yaw = unit(), fp_score = unit();

    if (u_drop >= noise.drop_rate) {
      const double d_hr = noise.sigma_hr * z_hr;
      const Vec2 d_uv(noise.sigma_center_px * z_u, noise.sigma_center_px * z_v);
      const Vec3 rel(noise.sigma_dims * z_l, noise.sigma_dims * z_w, noise.sigma_dims * z_h);
      const double d_yaw = noise.sigma_yaw * z_yaw;
      const Vec2 uv = *gt.bottom_center + d_uv;
      try {
        const Vec3 loc = lift_to_ground(scene.rig, scene.plane, uv.x(), uv.y(), gt.box.z + d_hr);
        ObjectRecord pred;
        pred.box = gt.box;
        pred.box.x = loc.x();
        pred.box.y = loc.y();
        pred.box.z = loc.z();
        pred.box.l = gt.box.l * std::max(0.05, 1.0 + rel.x());
        pred.box.w = gt.box.w * std::max(0.05, 1.0 + rel.y());
        pred.box.h = gt.box.h * std::max(0.05, 1.0 + rel.z());
        pred.box.theta = normalize_angle(gt.box.theta + d_yaw);
        const double perturbation = std::abs(d_hr) / 0.25 + rel.cwiseAbs().sum() / 0.1 +
                                    std::abs(d_yaw) / 0.2 + d_uv.cwiseAbs().sum() / 4.0;
        pred.box.score = std::exp(-perturbation);
        pred.bottom_center = uv;
        pred.box2d = Box2D{gt.box2d->x1 + d_uv.x(), gt.box2d->y1 + d_uv.y(),
                           gt.box2d->x2 + d_uv.x(), gt.box2d->y2 + d_uv.y()};
        frame.predictions.push_back(std::move(pred));
      } catch (const Error&) {
        // Noisy h_r above the camera or a ray off the ground: no prediction.
      }
    }

    if (u_fp < noise.false_positive_rate) {
      const Vec2 uv(fp_u * scene.rig.image_width(), fp_v * scene.rig.image_height());
      try {
        const Vec3 loc = lift_to_ground(scene.rig, scene.plane, uv.x(), uv.y(), 0.0);
        const Vec3 foot = scene.rig.center_in_ground();
        const double range = std::hypot(loc.x() - foot.x(), loc.y() - foot.y());
        if (range >= scene.config.range_min && range <= scene.config.range_max) {
          Box3D box;
          box.category = Category::Car;
          box.x = loc.x();
          box.y = loc.y();
          box.z = loc.z();
          box.l = 4.5;
          box.w = 1.8;
          box.h = 1.5;
          box.theta = normalize_angle((2 * fp_yaw - 1) * std::numbers::pi);
          box.score = std::exp(-1.0 - 3.0 * fp_score);
          ObjectRecord pred = observe(scene.rig, box);
          pred.bottom_center = uv;
          frame.predictions.push_back(std::move(pred));
        }
      } catch (const Error&) {
        // Sampled pixel above the horizon.
      }
    }
  }
  return frame;
}

std::optional<double> surface_height_at_pixel(const SyntheticScene& scene, double u, double v) {
  const CameraRig& rig = scene.rig;
  const GroundPlane& plane = scene.plane;
  Vec3 on_plane;
  try {
    on_plane = lift_to_ground(rig, plane, u, v, 0.0);
  } catch (const Error&) {
    return std::nullopt;
  }
  const Vec3 foot = rig.center_in_ground();
  if (std::hypot(on_plane.x() - foot.x(), on_plane.y() - foot.y()) > scene.config.range_max) {
    return std::nullopt;
  }

  // g(h) = field(lift(h)) - h is >= 0 at lo and <= 0 at hi because the
  // field stays inside [-2, 2] over the region of interest.
  const auto g = [&](double h) {
    const Vec3 p = lift_to_ground(rig, plane, u, v, h);
    return scene.field(p.x(), p.y()) - h;
  };
  double lo = -GroundField::kMaxAbsHeight;
  double hi = std::min(GroundField::kMaxAbsHeight, plane.camera_height - 0.05);
  double g_lo = g(lo);
  const double g_hi = g(hi);
  if (g_lo < 0 || g_hi > 0) return std::nullopt;
  for (int it = 0; it < 100 && hi - lo > 1e-13; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g_mid = g(mid);
    if (g_mid == 0) return mid;
    if ((g_mid > 0) == (g_lo > 0)) {
      lo = mid;
      g_lo = g_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

FeatureGrid render_cue_grid(const SyntheticScene& scene, int channels) {
  if (channels < 1) throw Error(ErrorCode::InvalidArgument, "cue grid needs at least one channel");
  FeatureGrid grid =
      FeatureGrid::for_image(scene.rig.image_height(), scene.rig.image_width(), channels);

  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) {
      const double u = kFeatureStride * c + kFeatureStride / 2.0;
      const double v = kFeatureStride * r + kFeatureStride / 2.0;
      if (auto h = surface_height_at_pixel(scene, u, v)) grid.at(r, c, 0) = *h;
    }
  }

  for (int ch = 1; ch < channels; ++ch) {
    auto rng = make_rng(scene.seed, Stream::Filler, static_cast<std::uint32_t>(ch));
    std::array<double, 9> p;
    for (double& x : p) x = uniform(rng, 0.0, 1.0);
    for (int r = 0; r < grid.rows(); ++r) {
      for (int c = 0; c < grid.cols(); ++c) {
        double val = 0;
        for (int k = 0; k < 3; ++k) {
          val += std::sin(0.2 * p[3 * k] * r + 0.2 * p[3 * k + 1] * c +
                          2 * std::numbers::pi * p[3 * k + 2]) /
                 3.0;
        }
        grid.at(r, c, ch) = val;
      }
    }
  }
  return grid;
}

}  // namespace roadlift
