#pragma once

// Detection metrics: rotated BEV / 3D IoU, greedy matching, AP at 40
// recall points, binned distance error and the detection-ratio curve.

#include "roadlift/types.hpp"

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace roadlift {

// Footprint rectangle of a box in the ground plane, counter-clockwise.
std::array<Vec2, 4> bev_footprint(const Box3D& box);

// Shoelace area; positive for counter-clockwise polygons.
double polygon_area(std::span<const Vec2> polygon);

// Sutherland-Hodgman: clips `subject` against convex counter-clockwise
// `clip`. Returns the (possibly empty) intersection polygon.
std::vector<Vec2> clip_convex_polygon(std::span<const Vec2> subject, std::span<const Vec2> clip);

double bev_intersection_area(const Box3D& a, const Box3D& b);
double bev_iou(const Box3D& a, const Box3D& b);
// Vertical extent of each box is [z, z + h].
double iou3d(const Box3D& a, const Box3D& b);

enum class IouKind { Bev, ThreeD, Image };

// Image IoU needs box2d on both objects; throws InvalidArgument otherwise.
double object_iou(const ObjectRecord& a, const ObjectRecord& b, IouKind kind);

struct MatchPair {
  std::size_t gt = 0;
  std::size_t pred = 0;
  double iou = 0;
  double center_distance = 0;  // BEV, meters
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<std::size_t> unmatched_gt;
  std::vector<std::size_t> unmatched_pred;
};

// Predictions in descending score order (ties by index) each take the
// still-free GT with the highest IoU >= threshold; IoU ties go to the lower
// GT index. Missing scores count as 0.
MatchResult match(std::span<const ObjectRecord> gts, std::span<const ObjectRecord> preds,
                  double iou_threshold, IouKind kind);

inline constexpr int kRecallPoints = 40;

struct PRCurve {
  std::array<double, kRecallPoints> recall{};
  std::array<double, kRecallPoints> precision{};
  double ap = 0;  // percent
  bool no_ground_truth = false;
};

struct ScoredOutcome {
  double score = 0;
  bool true_positive = false;
};

// R40 interpolation over a score-sorted sweep. Predictions with equal
// scores enter the sweep together.
PRCurve r40_curve(std::vector<ScoredOutcome> outcomes, std::size_t num_gt);

// Optional GT predicate (difficulty tier, category). GTs failing it are
// ignored: predictions matched to them count as neither TP nor FP.
using GtFilter = std::function<bool(const Box3D&)>;

PRCurve average_precision_r40(std::span<const FrameRecord> frames, double iou_threshold,
                              IouKind kind, const GtFilter& gt_filter = {});

struct DepthPair {
  double d_gt = 0;
  double d_pred = 0;
};

// Ranges of matched pairs: BEV distance of each bottom center from the
// camera foot point.
std::vector<DepthPair> matched_depths(const MatchResult& matches,
                                      std::span<const ObjectRecord> gts,
                                      std::span<const ObjectRecord> preds,
                                      const Vec2& camera_foot = Vec2::Zero());

struct DistanceBin {
  double lo = 0;
  double hi = 0;
  std::size_t count = 0;
  std::optional<double> mean_error_pct;  // empty when no pair fell in the bin
};

struct DistanceErrorTable {
  std::vector<DistanceBin> bins;
  std::size_t skipped = 0;  // pairs with d_gt <= 0
};

using BinEdges = std::vector<std::pair<double, double>>;
BinEdges default_distance_bins();

// Mean of |d_p - d_g| / d_g * 100 per bin. Bins are [lo, hi) except the
// last, which is closed.
DistanceErrorTable distance_error(std::span<const DepthPair> pairs,
                                  const BinEdges& bins = default_distance_bins());

// Fraction of GT whose nearest same-frame prediction (BEV center distance)
// lies within each threshold.
std::vector<double> detection_ratio_curve(std::span<const FrameRecord> frames,
                                          std::span<const double> thresholds);

}  // namespace roadlift
