#pragma once

// Reproducible experiment runners behind the command-line surface. Each
// returns its textual output; all are deterministic in their arguments.

#include "roadlift/cli_io.hpp"
#include "roadlift/evaluation.hpp"
#include "roadlift/loss_functions.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>

namespace roadlift {

// Independent 64-bit seed for sub-stream (a, b) of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

// "A B C D\nheight H\n"
std::string run_plane(const CameraRig& rig);
// "x y z\n"
std::string run_lift(const CameraRig& rig, double u, double v, double h_r);
// Location error in meters, two decimals.
std::string run_sensitivity(double camera_height, double h_r, double range, double delta_h);

// CSV range_m,formula_error_m,lifted_error_m over ranges step, 2 step, ...
// up to max_range. The lifted column projects a ground point seen by a
// camera at camera_height pitched 10 degrees and lifts it back with
// h_r + delta_h.
std::string run_sensitivity_sweep(double camera_height, double h_r, double max_range,
                                  double delta_h, double step);

// Writes calib/<scene>.json, gt/<scene>_<frame>.txt, pred/<scene>_<frame>.txt
// and summary.txt under out_dir. Returns the summary.
std::string run_simulate(const RunConfig& config, const std::filesystem::path& out_dir);

// Label files or directories of label files paired by file name (a GT file
// without a prediction file counts as a frame with no predictions). The
// camera foot is taken as the ground origin for ranges.
// CSV: metric,class,threshold,value.
std::string run_evaluate(const std::filesystem::path& gt_path,
                         const std::filesystem::path& pred_path, double iou_threshold,
                         IouKind kind);

// Momentum phase under the augmentation schedule, then a running-average
// phase on the unaugmented camera, over one synthetic scene with noisy cue
// observations. CSV, one row per frame:
//   phase,frame,aug_epoch,did_reset,covered_cells,mean_abs_err_ch0,
//   mean_sq_err_ch0,mean_counter,expected_var_ch0
// When bank_out is set the running-average bank is saved there.
std::string run_bank_sim(const RunConfig& config,
                         const std::optional<std::filesystem::path>& bank_out);

// Random box/prediction pair whose corner and height residuals all exceed
// `margin`, so the loss is differentiable in a neighbourhood of the sample.
struct GradSample {
  Box3D gt;
  LossParams params{};
};
GradSample sample_smooth_config(std::mt19937_64& rng, double margin = 1e-4);

// CSV sample,parameter,analytic,finite_difference,relative_error with
// central differences of step 1e-5 and relative error
// |a - f| / max(|a|, |f|, 1e-3).
std::string run_gradcheck(std::uint64_t seed, int samples);

}  // namespace roadlift
