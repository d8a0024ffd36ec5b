#include "roadlift/experiments.hpp"

#include "roadlift/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace roadlift {

namespace fs = std::filesystem;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string frame_name(const std::string& scene_id, int frame) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "_%04d", frame);
  return scene_id + buf;
}

std::vector<Box3D> boxes_of(const std::vector<ObjectRecord>& objects) {
  std::vector<Box3D> out;
  out.reserve(objects.size());
  for (const auto& o : objects) out.push_back(o.box);
  return out;
}

std::vector<ObjectRecord> records_of(const std::vector<Box3D>& boxes) {
  std::vector<ObjectRecord> out;
  out.reserve(boxes.size());
  for (const auto& b : boxes) out.push_back({b, std::nullopt, std::nullopt});
  return out;
}

std::vector<FrameRecord> load_frames(const fs::path& gt_path, const fs::path& pred_path) {
  std::vector<FrameRecord> frames;
  if (!fs::exists(gt_path)) throw Error(ErrorCode::Io, "cannot read '" + gt_path.string() + "'");
  if (!fs::exists(pred_path)) throw Error(ErrorCode::Io, "cannot read '" + pred_path.string() + "'");

  const auto load_pair = [](const fs::path& g, const std::optional<fs::path>& p) {
    FrameRecord f;
    f.scene_id = g.stem().string();
    try {
      f.gt = records_of(parse_labels(read_text_file(g)));
    } catch (const Error& e) {
      throw Error(e.code(), g.string() + ": " + e.what());
    }
    if (p) {
      try {
        f.predictions = records_of(parse_labels(read_text_file(*p)));
      } catch (const Error& e) {
        throw Error(e.code(), p->string() + ": " + e.what());
      }
    }
    return f;
  };

  if (fs::is_directory(gt_path)) {
    if (!fs::is_directory(pred_path)) {
      throw Error(ErrorCode::InvalidArgument, "--gt is a directory but --pred is not");
    }
    std::set<fs::path> names;
    for (const auto& entry : fs::directory_iterator(gt_path)) {
      if (entry.is_regular_file()) names.insert(entry.path().filename());
    }
    for (const auto& name : names) {
      const fs::path p = pred_path / name;
      frames.push_back(load_pair(gt_path / name, fs::exists(p) ? std::optional(p) : std::nullopt));
    }
  } else {
    if (fs::is_directory(pred_path)) {
      throw Error(ErrorCode::InvalidArgument, "--pred is a directory but --gt is not");
    }
    frames.push_back(load_pair(gt_path, pred_path));
  }
  return frames;
}

std::vector<FrameRecord> filter_category(const std::vector<FrameRecord>& frames, Category cat) {
  std::vector<FrameRecord> out = frames;
  const auto other = [cat](const ObjectRecord& o) { return o.box.category != cat; };
  for (auto& f : out) {
    std::erase_if(f.gt, other);
    std::erase_if(f.predictions, other);
  }
  return out;
}

// Mean of |mem - truth| and (mem - truth)^2 on channel 0 over flagged cells.
struct ErrorStats {
  std::size_t cells = 0;
  double mean_abs = 0;
  double mean_sq = 0;
};

ErrorStats channel0_error(const FeatureGrid& mem, const FeatureGrid& truth,
                          const std::vector<std::uint8_t>& flagged) {
  ErrorStats s;
  for (std::size_t i = 0; i < flagged.size(); ++i) {
    if (!flagged[i]) continue;
    const double e = mem.cell(i)[0] - truth.cell(i)[0];
    s.mean_abs += std::abs(e);
    s.mean_sq += e * e;
    ++s.cells;
  }
  if (s.cells > 0) {
    s.mean_abs /= static_cast<double>(s.cells);
    s.mean_sq /= static_cast<double>(s.cells);
  }
  return s;
}

FeatureGrid noisy_observation(const FeatureGrid& truth, double sigma, std::uint64_t seed) {
  FeatureGrid out = truth;
  if (sigma == 0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (double& v : out.values()) v += normal(rng);
  return out;
}

std::vector<Vec2> bottom_centers(const SyntheticScene& scene) {
  std::vector<Vec2> pts;
  for (const auto& o : scene.objects) {
    if (o.bottom_center) pts.push_back(*o.bottom_center);
  }
  return pts;
}

SyntheticScene with_rig(const SyntheticScene& scene, const CameraRig& rig) {
  SyntheticScene out = scene;
  out.rig = rig;
  out.plane = ground_plane_from_extrinsics(rig);
  return out;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::string run_plane(const CameraRig& rig) {
  const GroundPlane plane = ground_plane_from_extrinsics(rig);
  std::ostringstream ss;
  ss << format_number(plane.a) << ' ' << format_number(plane.b) << ' ' << format_number(plane.c)
     << ' ' << format_number(plane.d) << "\nheight " << format_number(plane.camera_height) << '\n';
  return ss.str();
}

std::string run_lift(const CameraRig& rig, double u, double v, double h_r) {
  const GroundPlane plane = ground_plane_from_extrinsics(rig);
  const Vec3 p = lift_to_ground(rig, plane, u, v, h_r);
  return format_fixed(p.x(), 6) + ' ' + format_fixed(p.y(), 6) + ' ' + format_fixed(p.z(), 6) + '\n';
}

std::string run_sensitivity(double camera_height, double h_r, double range, double delta_h) {
  return format_fixed(height_sensitivity(camera_height, h_r, range, delta_h), 2) + '\n';
}

std::string run_sensitivity_sweep(double camera_height, double h_r, double max_range,
                                  double delta_h, double step) {
  if (!(step > 0) || !(max_range >= step)) {
    throw Error(ErrorCode::InvalidArgument, "sweep needs step > 0 and range >= step");
  }
  const CameraRig rig = rig_from_pose(Intrinsics{2000, 2000, 960, 540}, 1920, 1080,
                                      camera_height, 10.0 * kDeg);
  const GroundPlane plane = ground_plane_from_extrinsics(rig);
  std::string out = "range_m,formula_error_m,lifted_error_m\n";
  const auto n = static_cast<long>(std::floor(max_range / step + 1e-9));
  for (long i = 1; i <= n; ++i) {
    const double range = step * static_cast<double>(i);
    const double formula = height_sensitivity(camera_height, h_r, range, delta_h);
    const Vec3 truth(range, 0.0, h_r);
    const Vec2 uv = project_to_image(rig, truth);
    const Vec3 lifted = lift_to_ground(rig, plane, uv.x(), uv.y(), h_r + delta_h);
    const double lifted_err = std::hypot(lifted.x() - truth.x(), lifted.y() - truth.y());
    out += format_fixed(range, 3) + ',' + format_fixed(formula, 6) + ',' +
           format_fixed(lifted_err, 6) + '\n';
  }
  return out;
}

std::string run_simulate(const RunConfig& config, const fs::path& out_dir) {
  config.scene.validate();
  config.noise.validate();
  std::size_t gt_total = 0, pred_total = 0, frames_total = 0;
  std::ostringstream index;
  index << "frame,scene_id,camera_height_m,objects,predictions\n";
  for (int s = 0; s < config.scenes; ++s) {
    const std::uint64_t scene_seed = derive_seed(config.seed, 1, static_cast<std::uint64_t>(s));
    const SyntheticScene scene = generate_scene(config.scene, scene_seed);
    write_text_file(out_dir / "calib" / (scene.scene_id + ".json"),
                    write_calibration(scene.rig, scene.scene_id));
    for (int f = 0; f < config.frames_per_scene; ++f) {
      const SyntheticScene frame =
          next_frame(scene, derive_seed(scene_seed, 2, static_cast<std::uint64_t>(f)));
      const FrameRecord rec =
          simulate_predictions(frame, config.noise, derive_seed(scene_seed, 3, static_cast<std::uint64_t>(f)));
      const std::string name = frame_name(scene.scene_id, f);
      write_text_file(out_dir / "gt" / (name + ".txt"), write_labels(boxes_of(rec.gt)));
      write_text_file(out_dir / "pred" / (name + ".txt"), write_labels(boxes_of(rec.predictions)));
      index << name << ',' << scene.scene_id << ',' << format_fixed(scene.plane.camera_height, 4)
            << ',' << rec.gt.size() << ',' << rec.predictions.size() << '\n';
      gt_total += rec.gt.size();
      pred_total += rec.predictions.size();
      ++frames_total;
    }
  }
  write_text_file(out_dir / "frames.csv", index.str());
  std::ostringstream summary;
  summary << "scenes " << config.scenes << "\nframes " << frames_total << "\nground_truth "
          << gt_total << "\npredictions " << pred_total << '\n';
  write_text_file(out_dir / "summary.txt", summary.str());
  return summary.str();
}

std::string run_evaluate(const fs::path& gt_path, const fs::path& pred_path, double iou_threshold,
                         IouKind kind) {
  if (!(iou_threshold > 0 && iou_threshold <= 1)) {
    throw Error(ErrorCode::InvalidArgument, "IoU threshold must lie in (0, 1]");
  }
  if (kind == IouKind::Image) {
    throw Error(ErrorCode::InvalidArgument, "label files carry no 2D boxes; use bev or 3d");
  }
  const std::vector<FrameRecord> frames = load_frames(gt_path, pred_path);
  const std::string metric = kind == IouKind::Bev ? "AP_R40_bev" : "AP_R40_3d";
  const std::string thr = format_number(iou_threshold);

  std::set<Category> present;
  for (const auto& f : frames) {
    for (const auto& g : f.gt) present.insert(g.box.category);
  }

  std::string out = "metric,class,threshold,value\n";
  for (Category c : present) {
    const auto subset = filter_category(frames, c);
    const PRCurve curve = average_precision_r40(subset, iou_threshold, kind);
    out += metric + ',' + std::string(category_name(c)) + ',' + thr + ',' + format_fixed(curve.ap, 4) + '\n';
  }
  const PRCurve all = average_precision_r40(frames, iou_threshold, kind);
  out += metric + ",All," + thr + ',' + (all.no_ground_truth ? "NA" : format_fixed(all.ap, 4)) + '\n';

  const std::array<double, 5> thresholds{0.5, 1.0, 2.0, 4.0, 8.0};
  const auto ratios = detection_ratio_curve(frames, thresholds);
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    out += "detection_ratio,All," + format_number(thresholds[i]) + ',' + format_fixed(ratios[i], 4) + '\n';
  }

  std::vector<DepthPair> depths;
  for (const auto& f : frames) {
    const MatchResult m = match(f.gt, f.predictions, iou_threshold, kind);
    const auto d = matched_depths(m, f.gt, f.predictions);
    depths.insert(depths.end(), d.begin(), d.end());
  }
  const DistanceErrorTable table = distance_error(depths);
  for (const auto& bin : table.bins) {
    const std::string label = format_number(bin.lo) + '-' + format_number(bin.hi);
    out += "distance_error_pct,All," + label + ',' +
           (bin.mean_error_pct ? format_fixed(*bin.mean_error_pct, 4) : std::string("NA")) + '\n';
    out += "distance_pairs,All," + label + ',' + std::to_string(bin.count) + '\n';
  }
  return out;
}

std::string run_bank_sim(const RunConfig& config, const std::optional<fs::path>& bank_out) {
  config.bank.validate();
  config.scheduler.validate();
  const BankSimConfig& bc = config.bank;
  const SyntheticScene base = generate_scene(config.scene, derive_seed(config.seed, 10));
  const int rows = base.rig.image_height() / kFeatureStride;
  const int cols = base.rig.image_width() / kFeatureStride;
  // Frame ids differ per phase so observations never repeat.
  const auto frame_seed = [&](int phase, int frame) {
    return derive_seed(config.seed, 20 + static_cast<std::uint64_t>(phase), static_cast<std::uint64_t>(frame));
  };
  const auto noise_seed = [&](int phase, int frame) {
    return derive_seed(config.seed, 30 + static_cast<std::uint64_t>(phase), static_cast<std::uint64_t>(frame));
  };
  const MomentumMode mode = bc.masked_only ? MomentumMode::MaskedOnly : MomentumMode::Global;

  std::string out =
      "phase,frame,aug_epoch,did_reset,covered_cells,mean_abs_err_ch0,mean_sq_err_ch0,"
      "mean_counter,expected_var_ch0\n";
  const auto row = [&](const char* phase, int frame, int epoch, bool reset, const ErrorStats& e,
                       double mean_counter, double expected_var) {
    out += std::string(phase) + ',' + std::to_string(frame) + ',' + std::to_string(epoch) + ',' +
           (reset ? "1" : "0") + ',' + std::to_string(e.cells) + ',' + format_fixed(e.mean_abs, 8) +
           ',' + format_fixed(e.mean_sq, 10) + ',' + format_fixed(mean_counter, 4) + ',' +
           format_fixed(expected_var, 10) + '\n';
  };

  // Momentum phase. Augmented views are rendered at the base resolution
  // (resize then crop/pad), so the bank shape stays fixed.
  SceneBank train_bank(rows, cols, bc.channels);
  SceneScheduler scheduler(config.scheduler);
  SyntheticScene view = base;
  FeatureGrid truth;
  std::vector<std::uint8_t> observed(static_cast<std::size_t>(rows) * cols, 0);
  int epoch = -1;
  for (int t = 0; t < bc.train_frames; ++t) {
    const StepResult step = scheduler.step(base.scene_id);
    const bool fresh = t == 0 || step.did_reset;
    if (fresh) {
      const CameraRig aug = apply_augmentation(base.rig, step.params);
      view = with_rig(base, CameraRig(aug.intrinsics(), aug.ground_to_camera(),
                                      base.rig.image_width(), base.rig.image_height()));
      truth = render_cue_grid(view, bc.channels);
      std::fill(observed.begin(), observed.end(), 0);
      ++epoch;
    }
    const SyntheticScene frame = next_frame(view, frame_seed(0, t));
    const MaskResult mask = make_mask(bottom_centers(frame), rows, cols);
    const FeatureGrid cues =
        extract_cues(noisy_observation(truth, bc.cue_noise, noise_seed(0, t)), mask.mask);
    if (fresh) {
      train_bank.reset_scene(base.scene_id, cues);
    } else {
      train_bank.update_momentum(base.scene_id, cues, bc.lambda, mode, &mask.mask);
    }
    for (std::size_t i = 0; i < observed.size(); ++i) observed[i] |= mask.mask[i];
    const ErrorStats e = channel0_error(train_bank.scene(base.scene_id).memorized, truth, observed);
    row("momentum", t, epoch, step.did_reset, e, 0.0, 0.0);
  }

  // Running-average phase on the unaugmented camera.
  SceneBank infer_bank(rows, cols, bc.channels);
  const FeatureGrid base_truth = render_cue_grid(base, bc.channels);
  const double var = bc.cue_noise * bc.cue_noise;
  for (int t = 0; t < bc.infer_frames; ++t) {
    const SyntheticScene frame = next_frame(base, frame_seed(1, t));
    const MaskResult mask = make_mask(bottom_centers(frame), rows, cols);
    const FeatureGrid cues =
        extract_cues(noisy_observation(base_truth, bc.cue_noise, noise_seed(1, t)), mask.mask);
    infer_bank.update_running_average(base.scene_id, cues, mask.mask);
    const SceneMemory& mem = infer_bank.scene(base.scene_id);
    std::vector<std::uint8_t> covered(mem.counter.size());
    double counter_sum = 0, expected = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < covered.size(); ++i) {
      if (mem.counter[i] == 0) continue;
      covered[i] = 1;
      counter_sum += mem.counter[i];
      expected += var / mem.counter[i];
      ++n;
    }
    const ErrorStats e = channel0_error(mem.memorized, base_truth, covered);
    row("running_average", t, 0, false, e, n ? counter_sum / n : 0.0, n ? expected / n : 0.0);
  }

  if (bank_out) {
    std::ostringstream bin;
    infer_bank.save(bin);
    write_text_file(*bank_out, bin.str());
  }
  return out;
}

GradSample sample_smooth_config(std::mt19937_64& rng, double margin) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  for (;;) {
    GradSample s;
    s.gt.x = uniform(-60, 60);
    s.gt.y = uniform(-60, 60);
    s.gt.z = uniform(-1.5, 1.5);
    s.gt.l = uniform(1.0, 12.0);
    s.gt.w = uniform(0.5, 3.0);
    s.gt.h = uniform(1.0, 4.0);
    s.gt.theta = uniform(-std::numbers::pi, std::numbers::pi);

    Box3DParams p;
    p.location = Vec3(s.gt.x + 0.5 * normal(rng), s.gt.y + 0.5 * normal(rng), s.gt.z + 0.3 * normal(rng));
    p.dims = Vec3(s.gt.l * (1 + 0.1 * normal(rng)), s.gt.w * (1 + 0.1 * normal(rng)),
                  s.gt.h * (1 + 0.1 * normal(rng)));
    const double yaw = s.gt.theta + 0.3 * normal(rng);
    p.sin_yaw = std::sin(yaw);
    p.cos_yaw = std::cos(yaw);
    const double h_r = s.gt.z + 0.3 * normal(rng);
    if ((p.dims.array() <= 0.1).any()) continue;
    s.params = pack_params(p, h_r);

    // Every residual that depends on the parameters must be away from its
    // kink; residuals that are structurally zero stay zero under perturbation.
    const Corners g = corners_of(s.gt);
    const double gs = std::sin(s.gt.theta), gc = std::cos(s.gt.theta);
    const Vec3 gb = s.gt.bottom_center();
    const Vec3 gd(s.gt.l, s.gt.w, s.gt.h);
    const std::array<Corners, 3> swapped{corners_from(p.location, gd, gs, gc),
                                         corners_from(gb, p.dims, gs, gc),
                                         corners_from(gb, gd, p.sin_yaw, p.cos_yaw)};
    bool smooth = std::abs(h_r - s.gt.z) > margin;
    for (const Corners& c : swapped) {
      for (std::size_t k = 0; k < 8 && smooth; ++k) {
        for (int a = 0; a < 3; ++a) {
          const double r = std::abs(c[k][a] - g[k][a]);
          if (r > 1e-9 && r <= margin) smooth = false;
        }
      }
    }
    if (smooth) return s;
  }
}

std::string run_gradcheck(std::uint64_t seed, int samples) {
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "samples must be >= 1");
  constexpr double kStep = 1e-5;
  std::mt19937_64 rng(seed);
  std::string out = "sample,parameter,analytic,finite_difference,relative_error\n";
  for (int s = 0; s < samples; ++s) {
    const GradSample sample = sample_smooth_config(rng);
    const LossParams grad = loss_gradient(sample.params, sample.gt);
    for (std::size_t i = 0; i < kNumLossParams; ++i) {
      LossParams plus = sample.params, minus = sample.params;
      plus[i] += kStep;
      minus[i] -= kStep;
      const double fd =
          (evaluate_loss(plus, sample.gt).total - evaluate_loss(minus, sample.gt).total) / (2 * kStep);
      const double rel = std::abs(grad[i] - fd) / std::max({std::abs(grad[i]), std::abs(fd), 1e-3});
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%d,%s,%.10e,%.10e,%.3e\n", s,
                    std::string(kLossParamNames[i]).c_str(), grad[i], fd, rel);
      out += buf;
    }
  }
  return out;
}

}  // namespace roadlift
