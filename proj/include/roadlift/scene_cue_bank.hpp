#pragma once

// Per-scene memory of scene cues at 1/8 image resolution.
//
// Training frames fold their cues in with a momentum update; inference
// frames fold them in as a per-cell running mean driven by an observation
// counter.

#include "roadlift/types.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

namespace roadlift {

inline constexpr int kFeatureStride = 8;

// rows x cols x channels tensor, row-major with channels innermost.
class FeatureGrid {
 public:
  FeatureGrid() = default;
  FeatureGrid(int rows, int cols, int channels, double fill = 0.0);

  // Grid for an image; throws DimensionMismatch unless both image
  // dimensions are multiples of kFeatureStride.
  static FeatureGrid for_image(int image_height, int image_width, int channels);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int channels() const { return channels_; }
  std::size_t cells() const { return static_cast<std::size_t>(rows_) * cols_; }

  double& at(int r, int c, int ch) { return values_[index(r, c, ch)]; }
  double at(int r, int c, int ch) const { return values_[index(r, c, ch)]; }

  std::span<double> cell(std::size_t i) { return {values_.data() + i * channels_, static_cast<std::size_t>(channels_)}; }
  std::span<const double> cell(std::size_t i) const { return {values_.data() + i * channels_, static_cast<std::size_t>(channels_)}; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  bool same_shape(const FeatureGrid& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && channels_ == o.channels_;
  }
  bool all_finite() const;

  bool operator==(const FeatureGrid&) const = default;

 private:
  std::size_t index(int r, int c, int ch) const {
    return (static_cast<std::size_t>(r) * cols_ + c) * channels_ + ch;
  }

  int rows_ = 0;
  int cols_ = 0;
  int channels_ = 0;
  std::vector<double> values_;
};

class CueMask {
 public:
  CueMask() = default;
  CueMask(int rows, int cols, std::uint8_t fill = 0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t cells() const { return bits_.size(); }

  std::uint8_t& at(int r, int c) { return bits_[static_cast<std::size_t>(r) * cols_ + c]; }
  std::uint8_t at(int r, int c) const { return bits_[static_cast<std::size_t>(r) * cols_ + c]; }
  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }

  std::size_t count() const;

  bool operator==(const CueMask&) const = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

struct MaskResult {
  CueMask mask;
  std::size_t skipped = 0;  // reference points outside the image
};

// Activates the cell under each reference pixel and its 8 neighbours,
// clipped at the grid border. Points outside [0, 8*cols) x [0, 8*rows) are
// skipped and counted.
MaskResult make_mask(std::span<const Vec2> points, int grid_rows, int grid_cols);

// Cue features f * M. Throws DimensionMismatch.
FeatureGrid extract_cues(const FeatureGrid& features, const CueMask& mask);

// Channel concatenation, current frame first. Throws DimensionMismatch.
FeatureGrid fuse_for_decoder(const FeatureGrid& current, const FeatureGrid& memorized);

// (H/8) * (W/8) * d. Throws DimensionMismatch for dims not divisible by 8.
std::int64_t bank_memory_elements(std::int64_t image_height, std::int64_t image_width,
                                  std::int64_t channels);

struct SceneMemory {
  FeatureGrid memorized;
  std::vector<std::uint32_t> counter;  // one per cell
  std::uint64_t frames_seen = 0;

  bool operator==(const SceneMemory&) const = default;
};

enum class MomentumMode {
  Global,      // every cell, as the update is written
  MaskedOnly,  // only cells active in the supplied mask
};

// Thread-safety: one writer per scene at a time. Distinct scenes may be
// mutated concurrently; reads between mutations are safe.
class SceneBank {
 public:
  SceneBank(int rows, int cols, int channels);
  SceneBank(const SceneBank& other);
  SceneBank(SceneBank&& other) noexcept;
  SceneBank& operator=(SceneBank other) noexcept;

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  int channels() const { return channels_; }

  bool contains(const std::string& scene_id) const;
  std::size_t scene_count() const;
  std::vector<std::string> scene_ids() const;

  // Throws InvalidArgument for unknown scenes.
  const SceneMemory& scene(const std::string& scene_id) const;

  // memorized <- (1 - lambda) memorized + lambda cues. An unknown scene is
  // initialized to `cues`. MaskedOnly requires `mask`. Advances frames_seen.
  void update_momentum(const std::string& scene_id, const FeatureGrid& cues, double lambda,
                       MomentumMode mode = MomentumMode::Global,
                       const CueMask* mask = nullptr);

  // Per masked cell: N += 1, memorized = ((N-1)/N) memorized + cues/N.
  // An unknown scene starts from zeros with zero counters.
  void update_running_average(const std::string& scene_id, const FeatureGrid& cues,
                              const CueMask& mask);

  // memorized <- init, counter <- nonzero support of init, frames_seen <- 0.
  void reset_scene(const std::string& scene_id, const FeatureGrid& init);

  // Little-endian container:
  //   "RLCB" u32 version u32 S u32 rows u32 cols u32 channels
  //   per scene: u32 id_length, id bytes, u64 frames_seen,
  //              rows*cols*channels f64 values (row-major, channels
  //              innermost), rows*cols u32 counters
  // Scenes appear in lexicographic id order.
  void save(std::ostream& out) const;
  // Throws Parse on a malformed or truncated container.
  static SceneBank load(std::istream& in);

  bool operator==(const SceneBank& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && channels_ == o.channels_ &&
           scenes_ == o.scenes_;
  }

 private:
  void check_shape(const FeatureGrid& g) const;
  SceneMemory* find(const std::string& scene_id);
  SceneMemory& insert(const std::string& scene_id, SceneMemory memory);

  int rows_;
  int cols_;
  int channels_;
  mutable std::shared_mutex map_mutex_;  // guards the map structure only
  std::map<std::string, SceneMemory> scenes_;
};

inline constexpr double kDefaultMomentum = 0.1;

}  // namespace roadlift
