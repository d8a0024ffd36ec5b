#include "roadlift/scene_cue_bank.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <istream>
#include <mutex>
#include <ostream>

namespace roadlift {

namespace {

constexpr std::array<char, 4> kBankMagic{'R', 'L', 'C', 'B'};
constexpr std::uint32_t kBankVersion = 1;

void require_same_cells(const FeatureGrid& g, int rows, int cols, const char* what) {
  if (g.rows() != rows || g.cols() != cols) {
    throw Error(ErrorCode::DimensionMismatch, std::string(what) + ": grid dimension mismatch");
  }
}

template <typename T>
void write_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  std::array<char, sizeof(U)> buf;
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(buf.data(), buf.size());
}

template <typename T>
T read_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  std::array<unsigned char, sizeof(U)> buf;
  if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size())) {
    throw Error(ErrorCode::Parse, "bank container truncated");
  }
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(buf[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

FeatureGrid::FeatureGrid(int rows, int cols, int channels, double fill)
    : rows_(rows), cols_(cols), channels_(channels) {
  if (rows <= 0 || cols <= 0 || channels <= 0) {
    throw Error(ErrorCode::InvalidArgument, "feature grid dimensions must be positive");
  }
  values_.assign(static_cast<std::size_t>(rows) * cols * channels, fill);
}

FeatureGrid FeatureGrid::for_image(int image_height, int image_width, int channels) {
  if (image_height <= 0 || image_width <= 0 || image_height % kFeatureStride != 0 ||
      image_width % kFeatureStride != 0) {
    throw Error(ErrorCode::DimensionMismatch, "image dimensions must be positive multiples of 8");
  }
  return FeatureGrid(image_height / kFeatureStride, image_width / kFeatureStride, channels);
}

bool FeatureGrid::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

CueMask::CueMask(int rows, int cols, std::uint8_t fill) : rows_(rows), cols_(cols) {
  if (rows <= 0 || cols <= 0) {
    throw Error(ErrorCode::InvalidArgument, "mask dimensions must be positive");
  }
  bits_.assign(static_cast<std::size_t>(rows) * cols, fill ? 1 : 0);
}

std::size_t CueMask::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

MaskResult make_mask(std::span<const Vec2> points, int grid_rows, int grid_cols) {
  MaskResult result{CueMask(grid_rows, grid_cols), 0};
  const double max_u = static_cast<double>(grid_cols) * kFeatureStride;
  const double max_v = static_cast<double>(grid_rows) * kFeatureStride;
  for (const Vec2& p : points) {
    if (!(p.x() >= 0 && p.x() < max_u && p.y() >= 0 && p.y() < max_v)) {
      ++result.skipped;
      continue;
    }
    const int col = static_cast<int>(std::floor(p.x() / kFeatureStride));
    const int row = static_cast<int>(std::floor(p.y() / kFeatureStride));
    for (int r = std::max(0, row - 1); r <= std::min(grid_rows - 1, row + 1); ++r) {
      for (int c = std::max(0, col - 1); c <= std::min(grid_cols - 1, col + 1); ++c) {
        result.mask.at(r, c) = 1;
      }
    }
  }
  return result;
}

FeatureGrid extract_cues(const FeatureGrid& features, const CueMask& mask) {
  require_same_cells(features, mask.rows(), mask.cols(), "extract_cues");
  FeatureGrid out = features;
  for (std::size_t i = 0; i < out.cells(); ++i) {
    if (!mask[i]) std::ranges::fill(out.cell(i), 0.0);
  }
  return out;
}

FeatureGrid fuse_for_decoder(const FeatureGrid& current, const FeatureGrid& memorized) {
  require_same_cells(memorized, current.rows(), current.cols(), "fuse_for_decoder");
  if (current.channels() != memorized.channels()) {
    throw Error(ErrorCode::DimensionMismatch, "fuse_for_decoder: channel mismatch");
  }
  const int d = current.channels();
  FeatureGrid out(current.rows(), current.cols(), 2 * d);
  for (std::size_t i = 0; i < out.cells(); ++i) {
    auto dst = out.cell(i);
    std::ranges::copy(current.cell(i), dst.begin());
    std::ranges::copy(memorized.cell(i), dst.begin() + d);
  }
  return out;
}

std::int64_t bank_memory_elements(std::int64_t image_height, std::int64_t image_width,
                                  std::int64_t channels) {
  if (image_height <= 0 || image_width <= 0 || channels <= 0 ||
      image_height % kFeatureStride != 0 || image_width % kFeatureStride != 0) {
    throw Error(ErrorCode::DimensionMismatch,
                "bank dimensions must be positive and image dims multiples of 8");
  }
  return (image_height / kFeatureStride) * (image_width / kFeatureStride) * channels;
}

SceneBank::SceneBank(int rows, int cols, int channels)
    : rows_(rows), cols_(cols), channels_(channels) {
  if (rows <= 0 || cols <= 0 || channels <= 0) {
    throw Error(ErrorCode::InvalidArgument, "bank dimensions must be positive");
  }
}

SceneBank::SceneBank(const SceneBank& other)
    : rows_(other.rows_), cols_(other.cols_), channels_(other.channels_) {
  std::shared_lock lock(other.map_mutex_);
  scenes_ = other.scenes_;
}

SceneBank::SceneBank(SceneBank&& other) noexcept
    : rows_(other.rows_),
      cols_(other.cols_),
      channels_(other.channels_),
      scenes_(std::move(other.scenes_)) {}

SceneBank& SceneBank::operator=(SceneBank other) noexcept {
  rows_ = other.rows_;
  cols_ = other.cols_;
  channels_ = other.channels_;
  std::unique_lock lock(map_mutex_);
  scenes_.swap(other.scenes_);
  return *this;
}

bool SceneBank::contains(const std::string& scene_id) const {
  std::shared_lock lock(map_mutex_);
  return scenes_.contains(scene_id);
}

std::size_t SceneBank::scene_count() const {
  std::shared_lock lock(map_mutex_);
  return scenes_.size();
}

std::vector<std::string> SceneBank::scene_ids() const {
  std::shared_lock lock(map_mutex_);
  std::vector<std::string> ids;
  ids.reserve(scenes_.size());
  for (const auto& [id, _] : scenes_) ids.push_back(id);
  return ids;
}

const SceneMemory& SceneBank::scene(const std::string& scene_id) const {
  std::shared_lock lock(map_mutex_);
  auto it = scenes_.find(scene_id);
  if (it == scenes_.end()) throw Error(ErrorCode::InvalidArgument, "unknown scene '" + scene_id + "'");
  return it->second;
}

void SceneBank::check_shape(const FeatureGrid& g) const {
  if (g.rows() != rows_ || g.cols() != cols_ || g.channels() != channels_) {
    throw Error(ErrorCode::DimensionMismatch, "feature grid does not match bank dimensions");
  }
}

SceneMemory* SceneBank::find(const std::string& scene_id) {
  std::shared_lock lock(map_mutex_);
  auto it = scenes_.find(scene_id);
  return it == scenes_.end() ? nullptr : &it->second;
}

SceneMemory& SceneBank::insert(const std::string& scene_id, SceneMemory memory) {
  std::unique_lock lock(map_mutex_);
  auto& slot = scenes_[scene_id];
  slot = std::move(memory);
  return slot;
}

void SceneBank::update_momentum(const std::string& scene_id, const FeatureGrid& cues,
                                double lambda, MomentumMode mode, const CueMask* mask) {
  check_shape(cues);
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "momentum lambda must lie in [0, 1]");
  }
  if (mode == MomentumMode::MaskedOnly) {
    if (mask == nullptr) throw Error(ErrorCode::InvalidArgument, "masked momentum needs a mask");
    if (mask->rows() != rows_ || mask->cols() != cols_) {
      throw Error(ErrorCode::DimensionMismatch, "mask does not match bank dimensions");
    }
  }

  SceneMemory* mem = find(scene_id);
  if (mem == nullptr) {
    SceneMemory fresh{cues, std::vector<std::uint32_t>(cues.cells(), 0), 1};
    insert(scene_id, std::move(fresh));
    return;
  }

  for (std::size_t i = 0; i < cues.cells(); ++i) {
    if (mode == MomentumMode::MaskedOnly && !(*mask)[i]) continue;
    auto dst = mem->memorized.cell(i);
    auto src = cues.cell(i);
    for (std::size_t k = 0; k < dst.size(); ++k) {
      dst[k] = (1.0 - lambda) * dst[k] + lambda * src[k];
    }
  }
  ++mem->frames_seen;
}

void SceneBank::update_running_average(const std::string& scene_id, const FeatureGrid& cues,
                                       const CueMask& mask) {
  check_shape(cues);
  if (mask.rows() != rows_ || mask.cols() != cols_) {
    throw Error(ErrorCode::DimensionMismatch, "mask does not match bank dimensions");
  }
  SceneMemory* mem = find(scene_id);
  if (mem == nullptr) {
    mem = &insert(scene_id, SceneMemory{FeatureGrid(rows_, cols_, channels_),
                                        std::vector<std::uint32_t>(cues.cells(), 0), 0});
  }
  for (std::size_t i = 0; i < cues.cells(); ++i) {
    if (!mask[i]) continue;
    const double n = static_cast<double>(++mem->counter[i]);
    auto dst = mem->memorized.cell(i);
    auto src = cues.cell(i);
    for (std::size_t k = 0; k < dst.size(); ++k) {
      dst[k] = ((n - 1.0) / n) * dst[k] + src[k] / n;
    }
  }
  ++mem->frames_seen;
}

void SceneBank::reset_scene(const std::string& scene_id, const FeatureGrid& init) {
  check_shape(init);
  SceneMemory mem{init, std::vector<std::uint32_t>(init.cells(), 0), 0};
  for (std::size_t i = 0; i < init.cells(); ++i) {
    const auto c = init.cell(i);
    mem.counter[i] = std::ranges::any_of(c, [](double v) { return v != 0.0; }) ? 1 : 0;
  }
  SceneMemory* existing = find(scene_id);
  if (existing != nullptr) {
    *existing = std::move(mem);
  } else {
    insert(scene_id, std::move(mem));
  }
}

void SceneBank::save(std::ostream& out) const {
  std::shared_lock lock(map_mutex_);
  out.write(kBankMagic.data(), kBankMagic.size());
  write_le<std::uint32_t>(out, kBankVersion);
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(scenes_.size()));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(rows_));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(cols_));
  write_le<std::uint32_t>(out, static_cast<std::uint32_t>(channels_));
  for (const auto& [id, mem] : scenes_) {
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    write_le<std::uint64_t>(out, mem.frames_seen);
    for (double v : mem.memorized.values()) write_le<double>(out, v);
    for (std::uint32_t n : mem.counter) write_le<std::uint32_t>(out, n);
  }
  if (!out) throw Error(ErrorCode::Io, "failed to write bank container");
}

SceneBank SceneBank::load(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kBankMagic) {
    throw Error(ErrorCode::Parse, "not a scene bank container (bad magic)");
  }
  const auto version = read_le<std::uint32_t>(in);
  if (version != kBankVersion) {
    throw Error(ErrorCode::Parse, "unsupported bank container version " + std::to_string(version));
  }
  const auto scenes = read_le<std::uint32_t>(in);
  const auto rows = read_le<std::uint32_t>(in);
  const auto cols = read_le<std::uint32_t>(in);
  const auto channels = read_le<std::uint32_t>(in);
  constexpr std::uint32_t kMaxDim = 1u << 16;
  if (rows == 0 || cols == 0 || channels == 0 || rows > kMaxDim || cols > kMaxDim ||
      channels > kMaxDim) {
    throw Error(ErrorCode::Parse, "bank container has invalid dimensions");
  }
  SceneBank bank(static_cast<int>(rows), static_cast<int>(cols), static_cast<int>(channels));
  for (std::uint32_t s = 0; s < scenes; ++s) {
    const auto id_len = read_le<std::uint32_t>(in);
    if (id_len > 4096) throw Error(ErrorCode::Parse, "bank container scene id too long");
    std::string id(id_len, '\0');
    if (!in.read(id.data(), id_len)) throw Error(ErrorCode::Parse, "bank container truncated");
    SceneMemory mem{FeatureGrid(bank.rows_, bank.cols_, bank.channels_),
                    std::vector<std::uint32_t>(static_cast<std::size_t>(rows) * cols), 0};
    mem.frames_seen = read_le<std::uint64_t>(in);
    for (double& v : mem.memorized.values()) {
      v = read_le<double>(in);
      if (!std::isfinite(v)) throw Error(ErrorCode::Parse, "bank container holds non-finite value");
    }
    for (auto& n : mem.counter) n = read_le<std::uint32_t>(in);
    bank.scenes_.emplace(std::move(id), std::move(mem));
  }
  return bank;
}

}  // namespace roadlift
