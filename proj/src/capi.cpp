#include "roadlift/roadlift.h"

#include "roadlift/cli_io.hpp"
#include "roadlift/experiments.hpp"
#include "roadlift/scene_cue_bank.hpp"
#include "roadlift/scene_scheduler.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <numbers>
#include <sstream>

struct rl_rig {
  roadlift::CameraRig rig;
};

struct rl_bank {
  roadlift::SceneBank bank;
};

struct rl_scheduler {
  roadlift::SceneScheduler scheduler;
};

namespace {

using roadlift::Error;
using roadlift::ErrorCode;

thread_local std::string g_last_error;

rl_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return RL_ERR_INVALID_ARGUMENT;
    case ErrorCode::CameraOnGroundPlane: return RL_ERR_CAMERA_ON_GROUND_PLANE;
    case ErrorCode::RayParallelToGround: return RL_ERR_RAY_PARALLEL_TO_GROUND;
    case ErrorCode::PlaneBehindCamera: return RL_ERR_PLANE_BEHIND_CAMERA;
    case ErrorCode::RelativeHeightAboveCamera: return RL_ERR_RELATIVE_HEIGHT_ABOVE_CAMERA;
    case ErrorCode::PointBehindCamera: return RL_ERR_POINT_BEHIND_CAMERA;
    case ErrorCode::DimensionMismatch: return RL_ERR_DIMENSION_MISMATCH;
    case ErrorCode::Parse: return RL_ERR_PARSE;
    case ErrorCode::Io: return RL_ERR_IO;
    case ErrorCode::Infeasible: return RL_ERR_INFEASIBLE;
  }
  return RL_ERR_INTERNAL;
}

template <typename F>
rl_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return RL_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return RL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RL_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size() + 1);
  return out;
}

roadlift::Intrinsics intrinsics_from(const double k[4]) { return {k[0], k[1], k[2], k[3]}; }

roadlift::FeatureGrid grid_from(const roadlift::SceneBank& bank, const double* values, std::size_t n) {
  roadlift::FeatureGrid g(bank.rows(), bank.cols(), bank.channels());
  if (n != g.values().size()) {
    throw Error(ErrorCode::DimensionMismatch, "grid has " + std::to_string(g.values().size()) +
                                                  " values, got " + std::to_string(n));
  }
  require(values != nullptr, "null values");
  std::copy(values, values + n, g.values().begin());
  return g;
}

roadlift::CueMask mask_from(const roadlift::SceneBank& bank, const std::uint8_t* bits, std::size_t n) {
  roadlift::CueMask m(bank.rows(), bank.cols());
  if (n != m.cells()) {
    throw Error(ErrorCode::DimensionMismatch, "mask has " + std::to_string(m.cells()) +
                                                  " cells, got " + std::to_string(n));
  }
  require(bits != nullptr, "null mask");
  for (int r = 0; r < bank.rows(); ++r) {
    for (int c = 0; c < bank.cols(); ++c) {
      m.at(r, c) = bits[static_cast<std::size_t>(r) * bank.cols() + c] ? 1 : 0;
    }
  }
  return m;
}

roadlift::RunConfig config_from(const char* json, std::uint64_t seed, int override_seed) {
  roadlift::RunConfig cfg = json ? roadlift::parse_run_config(json) : roadlift::RunConfig{};
  if (override_seed) {
    cfg.seed = seed;
    cfg.scheduler.seed = seed;
  }
  return cfg;
}

roadlift::CameraRig load_rig(const char* path) {
  require(path != nullptr, "null calibration path");
  return roadlift::parse_calibration(roadlift::read_text_file(path)).rig;
}

}  // namespace

extern "C" {

const char* rl_version(void) { return "0.1.0"; }

const char* rl_status_name(rl_status status) {
  switch (status) {
    case RL_OK: return "ok";
    case RL_ERR_INVALID_ARGUMENT: return "invalid argument";
    case RL_ERR_CAMERA_ON_GROUND_PLANE: return "camera on ground plane";
    case RL_ERR_RAY_PARALLEL_TO_GROUND: return "ray parallel to ground";
    case RL_ERR_PLANE_BEHIND_CAMERA: return "plane behind camera";
    case RL_ERR_RELATIVE_HEIGHT_ABOVE_CAMERA: return "relative height above camera";
    case RL_ERR_POINT_BEHIND_CAMERA: return "point behind camera";
    case RL_ERR_DIMENSION_MISMATCH: return "dimension mismatch";
    case RL_ERR_PARSE: return "parse error";
    case RL_ERR_IO: return "i/o error";
    case RL_ERR_INFEASIBLE: return "infeasible";
    case RL_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* rl_last_error(void) { return g_last_error.c_str(); }

void rl_string_free(char* s) { std::free(s); }

rl_status rl_rig_create(const double intrinsics[4], const double extrinsic[16], int image_width,
                        int image_height, rl_rig** out) {
  return guarded([&] {
    require(intrinsics && extrinsic && out, "null argument");
    require(extrinsic[12] == 0 && extrinsic[13] == 0 && extrinsic[14] == 0 && extrinsic[15] == 1,
            "extrinsic bottom row must be (0, 0, 0, 1)");
    roadlift::RigidTransform t;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) t.rotation(r, c) = extrinsic[4 * r + c];
      t.translation(r) = extrinsic[4 * r + 3];
    }
    *out = new rl_rig{roadlift::CameraRig(intrinsics_from(intrinsics), t, image_width, image_height, 1e-6)};
  });
}

rl_status rl_rig_from_calibration(const char* text, rl_rig** out) {
  return guarded([&] {
    require(text && out, "null argument");
    *out = new rl_rig{roadlift::parse_calibration(text).rig};
  });
}

rl_status rl_rig_load(const char* path, rl_rig** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = new rl_rig{load_rig(path)};
  });
}

rl_status rl_rig_from_pose(const double intrinsics[4], int image_width, int image_height,
                           double height_m, double pitch_deg, double yaw_deg, double roll_deg,
                           rl_rig** out) {
  return guarded([&] {
    require(intrinsics && out, "null argument");
    constexpr double kDeg = std::numbers::pi / 180.0;
    *out = new rl_rig{roadlift::rig_from_pose(intrinsics_from(intrinsics), image_width, image_height,
                                              height_m, pitch_deg * kDeg, yaw_deg * kDeg,
                                              roll_deg * kDeg)};
  });
}

void rl_rig_destroy(rl_rig* rig) { delete rig; }

rl_status rl_rig_to_calibration(const rl_rig* rig, const char* scene_id, char** out_text) {
  return guarded([&] {
    require(rig && out_text, "null argument");
    *out_text = dup_string(roadlift::write_calibration(rig->rig, scene_id ? scene_id : ""));
  });
}

rl_status rl_ground_plane(const rl_rig* rig, double out_abcd[4], double* out_camera_height) {
  return guarded([&] {
    require(rig && out_abcd, "null argument");
    const auto plane = roadlift::ground_plane_from_extrinsics(rig->rig);
    out_abcd[0] = plane.a;
    out_abcd[1] = plane.b;
    out_abcd[2] = plane.c;
    out_abcd[3] = plane.d;
    if (out_camera_height) *out_camera_height = plane.camera_height;
  });
}

rl_status rl_depth_to_ground(const rl_rig* rig, double u, double v, double* out_depth) {
  return guarded([&] {
    require(rig && out_depth, "null argument");
    const auto plane = roadlift::ground_plane_from_extrinsics(rig->rig);
    *out_depth = roadlift::depth_to_ground(rig->rig, plane, u, v);
  });
}

rl_status rl_lift_to_ground(const rl_rig* rig, double u, double v, double h_r, double out_xyz[3]) {
  return guarded([&] {
    require(rig && out_xyz, "null argument");
    const auto plane = roadlift::ground_plane_from_extrinsics(rig->rig);
    const auto p = roadlift::lift_to_ground(rig->rig, plane, u, v, h_r);
    out_xyz[0] = p.x();
    out_xyz[1] = p.y();
    out_xyz[2] = p.z();
  });
}

rl_status rl_project_to_image(const rl_rig* rig, const double xyz[3], double out_uv[2]) {
  return guarded([&] {
    require(rig && xyz && out_uv, "null argument");
    const auto uv = roadlift::project_to_image(rig->rig, roadlift::Vec3(xyz[0], xyz[1], xyz[2]));
    out_uv[0] = uv.x();
    out_uv[1] = uv.y();
  });
}

rl_status rl_height_sensitivity(double camera_height, double h_r, double range, double delta_h,
                                double* out_error) {
  return guarded([&] {
    require(out_error != nullptr, "null argument");
    *out_error = roadlift::height_sensitivity(camera_height, h_r, range, delta_h);
  });
}

rl_status rl_bank_memory_elements(int64_t image_height, int64_t image_width, int64_t channels,
                                  int64_t* out_elements) {
  return guarded([&] {
    require(out_elements != nullptr, "null argument");
    *out_elements = roadlift::bank_memory_elements(image_height, image_width, channels);
  });
}

rl_status rl_bank_create(int rows, int cols, int channels, rl_bank** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    *out = new rl_bank{roadlift::SceneBank(rows, cols, channels)};
  });
}

void rl_bank_destroy(rl_bank* bank) { delete bank; }

rl_status rl_bank_shape(const rl_bank* bank, int* rows, int* cols, int* channels,
                        size_t* scene_count) {
  return guarded([&] {
    require(bank != nullptr, "null bank");
    if (rows) *rows = bank->bank.rows();
    if (cols) *cols = bank->bank.cols();
    if (channels) *channels = bank->bank.channels();
    if (scene_count) *scene_count = bank->bank.scene_count();
  });
}

rl_status rl_bank_update_momentum(rl_bank* bank, const char* scene_id, const double* cues,
                                  size_t cue_count, double lambda, const uint8_t* mask,
                                  size_t mask_count) {
  return guarded([&] {
    require(bank && scene_id, "null argument");
    const auto grid = grid_from(bank->bank, cues, cue_count);
    if (mask) {
      const auto m = mask_from(bank->bank, mask, mask_count);
      bank->bank.update_momentum(scene_id, grid, lambda, roadlift::MomentumMode::MaskedOnly, &m);
    } else {
      bank->bank.update_momentum(scene_id, grid, lambda);
    }
  });
}

rl_status rl_bank_update_running_average(rl_bank* bank, const char* scene_id, const double* cues,
                                         size_t cue_count, const uint8_t* mask, size_t mask_count) {
  return guarded([&] {
    require(bank && scene_id, "null argument");
    const auto grid = grid_from(bank->bank, cues, cue_count);
    const auto m = mask_from(bank->bank, mask, mask_count);
    bank->bank.update_running_average(scene_id, grid, m);
  });
}

rl_status rl_bank_reset_scene(rl_bank* bank, const char* scene_id, const double* init, size_t count) {
  return guarded([&] {
    require(bank && scene_id, "null argument");
    bank->bank.reset_scene(scene_id, grid_from(bank->bank, init, count));
  });
}

rl_status rl_bank_read(const rl_bank* bank, const char* scene_id, double* values,
                       size_t value_count, uint32_t* counters, size_t counter_count,
                       uint64_t* frames_seen) {
  return guarded([&] {
    require(bank && scene_id, "null argument");
    const auto& mem = bank->bank.scene(scene_id);
    if (values) {
      if (value_count != mem.memorized.values().size()) {
        throw Error(ErrorCode::DimensionMismatch, "value buffer has the wrong length");
      }
      std::copy(mem.memorized.values().begin(), mem.memorized.values().end(), values);
    }
    if (counters) {
      if (counter_count != mem.counter.size()) {
        throw Error(ErrorCode::DimensionMismatch, "counter buffer has the wrong length");
      }
      std::copy(mem.counter.begin(), mem.counter.end(), counters);
    }
    if (frames_seen) *frames_seen = mem.frames_seen;
  });
}

rl_status rl_bank_save(const rl_bank* bank, const char* path) {
  return guarded([&] {
    require(bank && path, "null argument");
    std::ostringstream out;
    bank->bank.save(out);
    roadlift::write_text_file(path, out.str());
  });
}

rl_status rl_bank_load(const char* path, rl_bank** out) {
  return guarded([&] {
    require(path && out, "null argument");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, std::string("cannot read '") + path + "'");
    *out = new rl_bank{roadlift::SceneBank::load(in)};
  });
}

rl_status rl_make_mask(const double* points, size_t point_count, int rows, int cols,
                       uint8_t* out_mask, size_t mask_count, size_t* out_skipped) {
  return guarded([&] {
    require(out_mask != nullptr && (points != nullptr || point_count == 0), "null argument");
    require(rows > 0 && cols > 0, "grid dimensions must be positive");
    if (mask_count != static_cast<std::size_t>(rows) * cols) {
      throw Error(ErrorCode::DimensionMismatch, "mask buffer has the wrong length");
    }
    std::vector<roadlift::Vec2> pts;
    pts.reserve(point_count);
    for (std::size_t i = 0; i < point_count; ++i) pts.emplace_back(points[2 * i], points[2 * i + 1]);
    const auto result = roadlift::make_mask(pts, rows, cols);
    for (std::size_t i = 0; i < mask_count; ++i) out_mask[i] = result.mask[i];
    if (out_skipped) *out_skipped = result.skipped;
  });
}

rl_status rl_scheduler_create(int64_t tau, uint64_t seed, rl_scheduler** out) {
  return guarded([&] {
    require(out != nullptr, "null argument");
    roadlift::SchedulerConfig cfg;
    cfg.tau = tau;
    cfg.seed = seed;
    *out = new rl_scheduler{roadlift::SceneScheduler(cfg)};
  });
}

void rl_scheduler_destroy(rl_scheduler* scheduler) { delete scheduler; }

rl_status rl_scheduler_step(rl_scheduler* scheduler, const char* scene_id, double out_params[3],
                            int* out_did_reset) {
  return guarded([&] {
    require(scheduler && scene_id && out_params, "null argument");
    const auto step = scheduler->scheduler.step(scene_id);
    out_params[0] = step.params.intrinsic_scale;
    out_params[1] = step.params.roll_deg;
    out_params[2] = step.params.pitch_deg;
    if (out_did_reset) *out_did_reset = step.did_reset ? 1 : 0;
  });
}

rl_status rl_run_plane(const char* calibration_path, char** out_text) {
  return guarded([&] {
    require(out_text != nullptr, "null argument");
    *out_text = dup_string(roadlift::run_plane(load_rig(calibration_path)));
  });
}

rl_status rl_run_lift(const char* calibration_path, double u, double v, double h_r, char** out_text) {
  return guarded([&] {
    require(out_text != nullptr, "null argument");
    *out_text = dup_string(roadlift::run_lift(load_rig(calibration_path), u, v, h_r));
  });
}

rl_status rl_run_sensitivity(double camera_height, double h_r, double range, double delta_h,
                             char** out_text) {
  return guarded([&] {
    require(out_text != nullptr, "null argument");
    *out_text = dup_string(roadlift::run_sensitivity(camera_height, h_r, range, delta_h));
  });
}

rl_status rl_run_sensitivity_sweep(double camera_height, double h_r, double max_range,
                                   double delta_h, double step, char** out_csv) {
  return guarded([&] {
    require(out_csv != nullptr, "null argument");
    *out_csv = dup_string(roadlift::run_sensitivity_sweep(camera_height, h_r, max_range, delta_h, step));
  });
}

rl_status rl_run_simulate(const char* config_json, uint64_t seed, int override_seed,
                          const char* out_dir, char** out_summary) {
  return guarded([&] {
    require(out_dir && out_summary, "null argument");
    const auto cfg = config_from(config_json, seed, override_seed);
    *out_summary = dup_string(roadlift::run_simulate(cfg, out_dir));
  });
}

rl_status rl_run_evaluate(const char* gt_path, const char* pred_path, double iou_threshold,
                          rl_iou_kind kind, char** out_csv) {
  return guarded([&] {
    require(gt_path && pred_path && out_csv, "null argument");
    require(kind == RL_IOU_BEV || kind == RL_IOU_3D, "unknown IoU kind");
    *out_csv = dup_string(roadlift::run_evaluate(
        gt_path, pred_path, iou_threshold,
        kind == RL_IOU_BEV ? roadlift::IouKind::Bev : roadlift::IouKind::ThreeD));
  });
}

rl_status rl_run_bank_sim(const char* config_json, uint64_t seed, int override_seed,
                          const char* bank_out_path, char** out_csv) {
  return guarded([&] {
    require(out_csv != nullptr, "null argument");
    const auto cfg = config_from(config_json, seed, override_seed);
    std::optional<std::filesystem::path> bank_out;
    if (bank_out_path) bank_out = bank_out_path;
    *out_csv = dup_string(roadlift::run_bank_sim(cfg, bank_out));
  });
}

rl_status rl_run_gradcheck(uint64_t seed, int samples, char** out_csv) {
  return guarded([&] {
    require(out_csv != nullptr, "null argument");
    *out_csv = dup_string(roadlift::run_gradcheck(seed, samples));
  });
}

}  // extern "C"
