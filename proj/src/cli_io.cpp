#include "roadlift/cli_io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace roadlift {

using nlohmann::json;

namespace {

std::string describe_parse(const std::string& where, const std::string& what) {
  return where.empty() ? what : where + ": " + what;
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::Parse, describe_parse(where, std::string("missing field '") + key + "'"));
  }
  return obj.at(key);
}

double require_number(const json& obj, const char* key, const std::string& where) {
  const json& v = require(obj, key, where);
  if (!v.is_number()) {
    throw Error(ErrorCode::Parse, describe_parse(where, std::string("field '") + key + "' must be a number"));
  }
  const double d = v.get<double>();
  if (!std::isfinite(d)) {
    throw Error(ErrorCode::Parse, describe_parse(where, std::string("field '") + key + "' is not finite"));
  }
  return d;
}

json parse_json(std::string_view text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string(what) + ": " + e.what());
  }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::Parse, where + ": expected an object");
  std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.contains(key)) throw Error(ErrorCode::Parse, where + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read_opt(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::Parse, where + ": field '" + key + "' has the wrong type");
  }
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_double(std::string_view token, std::size_t line_no, const char* field) {
  double v = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": field '" + field +
                                      "' is not a finite number: '" + std::string(token) + "'");
  }
  return v;
}

}  // namespace

Calibration parse_calibration(std::string_view text) {
  const json doc = parse_json(text, "calibration");
  if (!doc.is_object()) throw Error(ErrorCode::Parse, "calibration: expected a JSON object");

  Calibration calib{"", CameraRig(Intrinsics{}, RigidTransform{}, 1, 1)};
  if (doc.contains("scene_id")) {
    if (!doc["scene_id"].is_string()) throw Error(ErrorCode::Parse, "calibration: 'scene_id' must be a string");
    calib.scene_id = doc["scene_id"].get<std::string>();
  }

  const json& intr = require(doc, "intrinsics", "calibration");
  Intrinsics k;
  k.fx = require_number(intr, "fx", "calibration.intrinsics");
  k.fy = require_number(intr, "fy", "calibration.intrinsics");
  k.cx = require_number(intr, "cx", "calibration.intrinsics");
  k.cy = require_number(intr, "cy", "calibration.intrinsics");

  const json& image = require(doc, "image", "calibration");
  const double width = require_number(image, "width", "calibration.image");
  const double height = require_number(image, "height", "calibration.image");
  if (width != std::floor(width) || height != std::floor(height)) {
    throw Error(ErrorCode::Parse, "calibration.image: width and height must be integers");
  }

  const json& ext = require(doc, "extrinsic", "calibration");
  std::vector<double> m;
  if (ext.is_array() && ext.size() == 4 && ext[0].is_array()) {
    for (const json& row : ext) {
      if (!row.is_array() || row.size() != 4) {
        throw Error(ErrorCode::Parse, "calibration.extrinsic: each row must hold 4 numbers");
      }
      for (const json& v : row) {
        if (!v.is_number()) throw Error(ErrorCode::Parse, "calibration.extrinsic: non-numeric entry");
        m.push_back(v.get<double>());
      }
    }
  } else if (ext.is_array() && ext.size() == 16) {
    for (const json& v : ext) {
      if (!v.is_number()) throw Error(ErrorCode::Parse, "calibration.extrinsic: non-numeric entry");
      m.push_back(v.get<double>());
    }
  } else {
    throw Error(ErrorCode::Parse, "calibration.extrinsic: expected a 4x4 matrix");
  }
  if (m[12] != 0 || m[13] != 0 || m[14] != 0 || m[15] != 1) {
    throw Error(ErrorCode::Parse, "calibration.extrinsic: bottom row must be (0, 0, 0, 1)");
  }
  RigidTransform t;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) t.rotation(r, c) = m[4 * r + c];
    t.translation(r) = m[4 * r + 3];
  }
  try {
    calib.rig = CameraRig(k, t, static_cast<int>(width), static_cast<int>(height), 1e-6);
  } catch (const Error& e) {
    throw Error(e.code(), std::string("calibration: ") + e.what());
  }
  return calib;
}

std::string write_calibration(const CameraRig& rig, const std::string& scene_id) {
  const auto& k = rig.intrinsics();
  const auto& t = rig.ground_to_camera();
  json ext = json::array();
  for (int r = 0; r < 3; ++r) {
    ext.push_back({t.rotation(r, 0), t.rotation(r, 1), t.rotation(r, 2), t.translation(r)});
  }
  ext.push_back({0.0, 0.0, 0.0, 1.0});
  json doc;
  doc["scene_id"] = scene_id;
  doc["intrinsics"] = {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}};
  doc["image"] = {{"width", rig.image_width()}, {"height", rig.image_height()}};
  doc["extrinsic"] = ext;
  return doc.dump(2) + "\n";
}

std::vector<Box3D> parse_labels(std::string_view text) {
  std::vector<Box3D> boxes;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto fields = split_ws(line);
    if (fields.empty() || fields.front().starts_with('#')) {
      if (end == text.size()) break;
      continue;
    }
    if (fields.size() != 8 && fields.size() != 9) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": expected 8 or 9 fields, got " +
                                        std::to_string(fields.size()));
    }
    Box3D b;
    try {
      b.category = parse_category(fields[0]);
    } catch (const Error& e) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    b.x = parse_double(fields[1], line_no, "x");
    b.y = parse_double(fields[2], line_no, "y");
    b.z = parse_double(fields[3], line_no, "z");
    b.l = parse_double(fields[4], line_no, "l");
    b.w = parse_double(fields[5], line_no, "w");
    b.h = parse_double(fields[6], line_no, "h");
    b.theta = parse_double(fields[7], line_no, "yaw");
    if (fields.size() == 9) b.score = parse_double(fields[8], line_no, "score");
    try {
      b.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": " + e.what());
    }
    boxes.push_back(b);
    if (end == text.size()) break;
  }
  return boxes;
}

std::string write_labels(std::span<const Box3D> boxes) {
  std::string out;
  for (const Box3D& b : boxes) {
    out += category_name(b.category);
    for (double v : {b.x, b.y, b.z, b.l, b.w, b.h, b.theta}) {
      out += ' ';
      out += format_number(v);
    }
    if (b.score) {
      out += ' ';
      out += format_number(*b.score);
    }
    out += '\n';
  }
  return out;
}

void BankSimConfig::validate() const {
  if (channels < 1) throw Error(ErrorCode::InvalidArgument, "bank.channels must be >= 1");
  if (!(lambda >= 0 && lambda <= 1)) throw Error(ErrorCode::InvalidArgument, "bank.lambda must lie in [0, 1]");
  if (train_frames < 0 || infer_frames < 0) {
    throw Error(ErrorCode::InvalidArgument, "bank frame counts must be >= 0");
  }
  if (!(cue_noise >= 0)) throw Error(ErrorCode::InvalidArgument, "bank.cue_noise must be >= 0");
}

RunConfig parse_run_config(std::string_view json_text) {
  const json doc = parse_json(json_text, "run config");
  RunConfig cfg;
  reject_unknown(doc, {"seed", "scenes", "frames_per_scene", "scene", "noise", "scheduler", "bank"},
                 "run config");
  read_opt(doc, "seed", cfg.seed, "run config");
  read_opt(doc, "scenes", cfg.scenes, "run config");
  read_opt(doc, "frames_per_scene", cfg.frames_per_scene, "run config");
  cfg.scheduler.seed = cfg.seed;

  if (doc.contains("scene")) {
    const json& s = doc["scene"];
    const std::string w = "run config.scene";
    reject_unknown(s, {"object_count", "range_min", "range_max", "height_min", "height_max",
                       "pitch_min_deg", "pitch_max_deg", "roll_max_deg", "focal_min", "focal_max",
                       "image_width", "image_height", "constant_height", "field_degree",
                       "bump_count", "field_max_abs"},
                   w);
    auto& sc = cfg.scene;
    read_opt(s, "object_count", sc.object_count, w);
    read_opt(s, "range_min", sc.range_min, w);
    read_opt(s, "range_max", sc.range_max, w);
    read_opt(s, "height_min", sc.height_min, w);
    read_opt(s, "height_max", sc.height_max, w);
    read_opt(s, "pitch_min_deg", sc.pitch_min_deg, w);
    read_opt(s, "pitch_max_deg", sc.pitch_max_deg, w);
    read_opt(s, "roll_max_deg", sc.roll_max_deg, w);
    read_opt(s, "focal_min", sc.focal_min, w);
    read_opt(s, "focal_max", sc.focal_max, w);
    read_opt(s, "image_width", sc.image_width, w);
    read_opt(s, "image_height", sc.image_height, w);
    if (s.contains("constant_height") && !s["constant_height"].is_null()) {
      double c = 0;
      read_opt(s, "constant_height", c, w);
      sc.constant_height = c;
    }
    read_opt(s, "field_degree", sc.field_degree, w);
    read_opt(s, "bump_count", sc.bump_count, w);
    read_opt(s, "field_max_abs", sc.field_max_abs, w);
  }
  if (doc.contains("noise")) {
    const json& n = doc["noise"];
    const std::string w = "run config.noise";
    reject_unknown(n, {"sigma_hr", "sigma_dims", "sigma_yaw", "sigma_center_px", "drop_rate",
                       "false_positive_rate"},
                   w);
    read_opt(n, "sigma_hr", cfg.noise.sigma_hr, w);
    read_opt(n, "sigma_dims", cfg.noise.sigma_dims, w);
    read_opt(n, "sigma_yaw", cfg.noise.sigma_yaw, w);
    read_opt(n, "sigma_center_px", cfg.noise.sigma_center_px, w);
    read_opt(n, "drop_rate", cfg.noise.drop_rate, w);
    read_opt(n, "false_positive_rate", cfg.noise.false_positive_rate, w);
  }
  if (doc.contains("scheduler")) {
    const json& s = doc["scheduler"];
    const std::string w = "run config.scheduler";
    reject_unknown(s, {"tau", "clamp_lo", "clamp_hi", "sigma_scale", "sigma_roll_deg",
                       "sigma_pitch_deg", "seed"},
                   w);
    read_opt(s, "tau", cfg.scheduler.tau, w);
    read_opt(s, "clamp_lo", cfg.scheduler.augmentation.clamp_lo, w);
    read_opt(s, "clamp_hi", cfg.scheduler.augmentation.clamp_hi, w);
    read_opt(s, "sigma_scale", cfg.scheduler.augmentation.sigma_scale, w);
    read_opt(s, "sigma_roll_deg", cfg.scheduler.augmentation.sigma_roll_deg, w);
    read_opt(s, "sigma_pitch_deg", cfg.scheduler.augmentation.sigma_pitch_deg, w);
    read_opt(s, "seed", cfg.scheduler.seed, w);
  }
  if (doc.contains("bank")) {
    const json& b = doc["bank"];
    const std::string w = "run config.bank";
    reject_unknown(b, {"channels", "lambda", "masked_only", "train_frames", "infer_frames",
                       "cue_noise"},
                   w);
    read_opt(b, "channels", cfg.bank.channels, w);
    read_opt(b, "lambda", cfg.bank.lambda, w);
    read_opt(b, "masked_only", cfg.bank.masked_only, w);
    read_opt(b, "train_frames", cfg.bank.train_frames, w);
    read_opt(b, "infer_frames", cfg.bank.infer_frames, w);
    read_opt(b, "cue_noise", cfg.bank.cue_noise, w);
  }

  if (cfg.scenes < 0 || cfg.frames_per_scene < 0) {
    throw Error(ErrorCode::InvalidArgument, "scenes and frames_per_scene must be >= 0");
  }
  cfg.scene.validate();
  cfg.noise.validate();
  cfg.scheduler.validate();
  cfg.bank.validate();
  return cfg;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::Io, "failed writing '" + path.string() + "'");
}

std::string format_number(double v) {
  if (v == 0) v = 0.0;  // drop the sign of -0
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, digits);
  std::string s(buf, ptr);
  if (s.starts_with('-') && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
  return s;
}

}  // namespace roadlift
