#ifndef ROADLIFT_ROADLIFT_H
#define ROADLIFT_ROADLIFT_H

/* C interface to the roadlift library.
 *
 * Every call returns an rl_status. On failure the message of the most
 * recent error on the calling thread is available from rl_last_error().
 * Strings returned through char** out-parameters are owned by the caller
 * and released with rl_string_free(). Output pointers are left untouched
 * on failure. */

#include <stddef.h>
#include <stdint.h>

#if defined(ROADLIFT_BUILDING_LIBRARY)
#define RL_API __attribute__((visibility("default")))
#else
#define RL_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum rl_status {
  RL_OK = 0,
  RL_ERR_INVALID_ARGUMENT = 1,
  RL_ERR_CAMERA_ON_GROUND_PLANE = 2,
  RL_ERR_RAY_PARALLEL_TO_GROUND = 3,
  RL_ERR_PLANE_BEHIND_CAMERA = 4,
  RL_ERR_RELATIVE_HEIGHT_ABOVE_CAMERA = 5,
  RL_ERR_POINT_BEHIND_CAMERA = 6,
  RL_ERR_DIMENSION_MISMATCH = 7,
  RL_ERR_PARSE = 8,
  RL_ERR_IO = 9,
  RL_ERR_INFEASIBLE = 10,
  RL_ERR_INTERNAL = 99
} rl_status;

typedef enum rl_iou_kind { RL_IOU_BEV = 0, RL_IOU_3D = 1 } rl_iou_kind;

RL_API const char* rl_version(void);
RL_API const char* rl_status_name(rl_status status);
RL_API const char* rl_last_error(void);
RL_API void rl_string_free(char* s);

/* Camera rig. intrinsics = {fx, fy, cx, cy}; extrinsic is the row-major 4x4
 * ground-to-camera matrix. */
typedef struct rl_rig rl_rig;

RL_API rl_status rl_rig_create(const double intrinsics[4], const double extrinsic[16],
                               int image_width, int image_height, rl_rig** out);
RL_API rl_status rl_rig_from_calibration(const char* text, rl_rig** out);
RL_API rl_status rl_rig_load(const char* path, rl_rig** out);
/* Angles in degrees. */
RL_API rl_status rl_rig_from_pose(const double intrinsics[4], int image_width, int image_height,
                                  double height_m, double pitch_deg, double yaw_deg,
                                  double roll_deg, rl_rig** out);
RL_API void rl_rig_destroy(rl_rig* rig);
RL_API rl_status rl_rig_to_calibration(const rl_rig* rig, const char* scene_id, char** out_text);

RL_API rl_status rl_ground_plane(const rl_rig* rig, double out_abcd[4], double* out_camera_height);
RL_API rl_status rl_depth_to_ground(const rl_rig* rig, double u, double v, double* out_depth);
RL_API rl_status rl_lift_to_ground(const rl_rig* rig, double u, double v, double h_r,
                                   double out_xyz[3]);
RL_API rl_status rl_project_to_image(const rl_rig* rig, const double xyz[3], double out_uv[2]);

RL_API rl_status rl_height_sensitivity(double camera_height, double h_r, double range,
                                       double delta_h, double* out_error);
RL_API rl_status rl_bank_memory_elements(int64_t image_height, int64_t image_width,
                                         int64_t channels, int64_t* out_elements);

/* Scene cue bank. Grids are row-major with channels innermost
 * (rows * cols * channels doubles); masks hold rows * cols bytes. */
typedef struct rl_bank rl_bank;

RL_API rl_status rl_bank_create(int rows, int cols, int channels, rl_bank** out);
RL_API void rl_bank_destroy(rl_bank* bank);
RL_API rl_status rl_bank_shape(const rl_bank* bank, int* rows, int* cols, int* channels,
                               size_t* scene_count);
/* mask == NULL applies the momentum update to every cell. */
RL_API rl_status rl_bank_update_momentum(rl_bank* bank, const char* scene_id, const double* cues,
                                         size_t cue_count, double lambda, const uint8_t* mask,
                                         size_t mask_count);
RL_API rl_status rl_bank_update_running_average(rl_bank* bank, const char* scene_id,
                                                const double* cues, size_t cue_count,
                                                const uint8_t* mask, size_t mask_count);
RL_API rl_status rl_bank_reset_scene(rl_bank* bank, const char* scene_id, const double* init,
                                     size_t count);
/* counters may be NULL. */
RL_API rl_status rl_bank_read(const rl_bank* bank, const char* scene_id, double* values,
                              size_t value_count, uint32_t* counters, size_t counter_count,
                              uint64_t* frames_seen);
RL_API rl_status rl_bank_save(const rl_bank* bank, const char* path);
RL_API rl_status rl_bank_load(const char* path, rl_bank** out);

/* points = {u0, v0, u1, v1, ...}; out_mask holds rows * cols bytes. */
RL_API rl_status rl_make_mask(const double* points, size_t point_count, int rows, int cols,
                              uint8_t* out_mask, size_t mask_count, size_t* out_skipped);

/* Augmentation scheduler. */
typedef struct rl_scheduler rl_scheduler;

RL_API rl_status rl_scheduler_create(int64_t tau, uint64_t seed, rl_scheduler** out);
RL_API void rl_scheduler_destroy(rl_scheduler* scheduler);
/* out_params = {intrinsic_scale, roll_deg, pitch_deg}. */
RL_API rl_status rl_scheduler_step(rl_scheduler* scheduler, const char* scene_id,
                                   double out_params[3], int* out_did_reset);

/* Experiment runners; see the command-line tool for the output formats.
 * config_json may be NULL for defaults. */
RL_API rl_status rl_run_plane(const char* calibration_path, char** out_text);
RL_API rl_status rl_run_lift(const char* calibration_path, double u, double v, double h_r,
                             char** out_text);
RL_API rl_status rl_run_sensitivity(double camera_height, double h_r, double range,
                                    double delta_h, char** out_text);
RL_API rl_status rl_run_sensitivity_sweep(double camera_height, double h_r, double max_range,
                                          double delta_h, double step, char** out_csv);
RL_API rl_status rl_run_simulate(const char* config_json, uint64_t seed, int override_seed,
                                 const char* out_dir, char** out_summary);
RL_API rl_status rl_run_evaluate(const char* gt_path, const char* pred_path, double iou_threshold,
                                 rl_iou_kind kind, char** out_csv);
RL_API rl_status rl_run_bank_sim(const char* config_json, uint64_t seed, int override_seed,
                                 const char* bank_out_path, char** out_csv);
RL_API rl_status rl_run_gradcheck(uint64_t seed, int samples, char** out_csv);

#ifdef __cplusplus
}
#endif

#endif /* ROADLIFT_ROADLIFT_H */
