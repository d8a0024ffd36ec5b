// Command-line front end. Links against the C interface only.

#include "roadlift/roadlift.h"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace {

struct CommonOptions {
  std::optional<std::uint64_t> seed;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOptions& opts, const char* out_help) {
  cmd->add_option("--seed", opts.seed, "Random seed (overrides the config file)");
  cmd->add_option("--out", opts.out, out_help);
}

class Failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void check(rl_status status) {
  if (status != RL_OK) {
    throw Failure(std::string(rl_status_name(status)) + ": " + rl_last_error());
  }
}

std::string take(char* s) {
  std::string out(s);
  rl_string_free(s);
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw Failure("cannot write '" + out + "'");
  f << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Height-based monocular 3D lifting, scene cue banks and evaluation"};
  app.require_subcommand(1);

  CommonOptions common;

  std::string calib;
  auto* plane = app.add_subcommand("plane", "Ground plane (A B C D) and camera height from a calibration");
  plane->add_option("--calib", calib, "Calibration JSON")->required();
  add_common(plane, common, "Output file (default stdout)");

  double u = 0, v = 0, hr = 0;
  auto* lift = app.add_subcommand("lift", "Lift a bottom-center pixel to the ground frame");
  lift->add_option("--calib", calib, "Calibration JSON")->required();
  lift->add_option("--u", u, "Pixel column")->required();
  lift->add_option("--v", v, "Pixel row")->required();
  lift->add_option("--hr", hr, "Relative height above the ground plane, meters")->required();
  add_common(lift, common, "Output file (default stdout)");

  double height = 0, range = 0, dh = 0, sens_hr = 0, step = 10;
  bool sweep = false;
  auto* sens = app.add_subcommand("sensitivity", "Location error caused by a relative-height error");
  sens->add_option("--height", height, "Camera height, meters")->required();
  sens->add_option("--range", range, "Horizontal distance, meters (sweep maximum with --sweep)")->required();
  sens->add_option("--dh", dh, "Relative-height error, meters")->required();
  sens->add_option("--hr", sens_hr, "Relative height of the object, meters");
  sens->add_flag("--sweep", sweep, "Emit a CSV curve over range");
  sens->add_option("--step", step, "Sweep step, meters");
  add_common(sens, common, "Output file (default stdout)");

  std::string config;
  auto* sim = app.add_subcommand("simulate", "Synthetic scenes, ground truth and noisy predictions");
  sim->add_option("--config", config, "Run configuration JSON")->required();
  add_common(sim, common, "Output directory (default ./simulation)");

  std::string gt, pred, kind = "bev";
  double iou = 0.5;
  auto* eval = app.add_subcommand("evaluate", "AP R40, detection ratio and distance error as CSV");
  eval->add_option("--gt", gt, "GT label file or directory")->required();
  eval->add_option("--pred", pred, "Prediction label file or directory")->required();
  eval->add_option("--iou", iou, "IoU threshold");
  eval->add_option("--kind", kind, "IoU kind")->check(CLI::IsMember({"bev", "3d"}));
  add_common(eval, common, "Output file (default stdout)");

  std::string bank_path;
  auto* bank = app.add_subcommand("bank-sim", "Scene cue bank convergence over a simulated stream");
  bank->add_option("--config", config, "Run configuration JSON")->required();
  bank->add_option("--bank", bank_path, "Also save the final bank container here");
  add_common(bank, common, "Output file (default stdout)");

  int samples = 20;
  auto* grad = app.add_subcommand("gradcheck", "Analytic vs finite-difference loss gradients as CSV");
  grad->add_option("--samples", samples, "Number of random configurations");
  add_common(grad, common, "Output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    char* text = nullptr;
    if (*plane) {
      check(rl_run_plane(calib.c_str(), &text));
      emit(take(text), common.out);
    } else if (*lift) {
      check(rl_run_lift(calib.c_str(), u, v, hr, &text));
      emit(take(text), common.out);
    } else if (*sens) {
      if (sweep) {
        check(rl_run_sensitivity_sweep(height, sens_hr, range, dh, step, &text));
      } else {
        check(rl_run_sensitivity(height, sens_hr, range, dh, &text));
      }
      emit(take(text), common.out);
    } else if (*sim) {
      const std::string json = slurp(config);
      const std::string dir = common.out.empty() ? "simulation" : common.out;
      check(rl_run_simulate(json.c_str(), common.seed.value_or(0), common.seed.has_value(),
                            dir.c_str(), &text));
      std::cout << take(text);
    } else if (*eval) {
      check(rl_run_evaluate(gt.c_str(), pred.c_str(), iou, kind == "bev" ? RL_IOU_BEV : RL_IOU_3D, &text));
      emit(take(text), common.out);
    } else if (*bank) {
      const std::string json = slurp(config);
      check(rl_run_bank_sim(json.c_str(), common.seed.value_or(0), common.seed.has_value(),
                            bank_path.empty() ? nullptr : bank_path.c_str(), &text));
      emit(take(text), common.out);
    } else if (*grad) {
      check(rl_run_gradcheck(common.seed.value_or(0), samples, &text));
      emit(take(text), common.out);
    }
  } catch (const std::exception& e) {
    std::cerr << "roadlift: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
