#include "roadlift/evaluation.hpp"

#include "roadlift/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace roadlift {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double score_of(const ObjectRecord& o) { return o.box.score.value_or(0.0); }

double bev_distance(const Box3D& a, const Box3D& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace

std::array<Vec2, 4> bev_footprint(const Box3D& box) {
  const double c = std::cos(box.theta);
  const double s = std::sin(box.theta);
  const double hl = box.l / 2;
  const double hw = box.w / 2;
  const std::array<Vec2, 4> local{Vec2(-hl, -hw), Vec2(hl, -hw), Vec2(hl, hw), Vec2(-hl, hw)};
  std::array<Vec2, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = Vec2(box.x + c * local[i].x() - s * local[i].y(),
                  box.y + s * local[i].x() + c * local[i].y());
  }
  return out;
}

double polygon_area(std::span<const Vec2> polygon) {
  if (polygon.size() < 3) return 0.0;
  double twice = 0;
  for (std::size_t i = 0; i < polygon.size(); ++i) {
    twice += cross2(polygon[i], polygon[(i + 1) % polygon.size()]);
  }
  return twice / 2;
}

std::vector<Vec2> clip_convex_polygon(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> output(subject.begin(), subject.end());
  for (std::size_t e = 0; e < clip.size() && !output.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2 edge = clip[(e + 1) % clip.size()] - a;
    const auto side = [&](const Vec2& p) { return cross2(edge, p - a); };

    std::vector<Vec2> input;
    input.swap(output);
    Vec2 prev = input.back();
    double prev_side = side(prev);
    for (const Vec2& cur : input) {
      const double cur_side = side(cur);
      if (cur_side >= 0) {
        if (prev_side < 0) output.push_back(prev + (prev_side / (prev_side - cur_side)) * (cur - prev));
        output.push_back(cur);
      } else if (prev_side >= 0) {
        output.push_back(prev + (prev_side / (prev_side - cur_side)) * (cur - prev));
      }
      prev = cur;
      prev_side = cur_side;
    }
  }
  return output;
}

double bev_intersection_area(const Box3D& a, const Box3D& b) {
  const auto fa = bev_footprint(a);
  const auto fb = bev_footprint(b);
  // Cheap reject on circumscribed circles.
  const double ra = std::hypot(a.l, a.w) / 2;
  const double rb = std::hypot(b.l, b.w) / 2;
  if (bev_distance(a, b) >= ra + rb) return 0.0;
  const auto poly = clip_convex_polygon(fa, fb);
  return std::max(0.0, polygon_area(poly));
}

double bev_iou(const Box3D& a, const Box3D& b) {
  const double inter = bev_intersection_area(a, b);
  const double uni = a.l * a.w + b.l * b.w - inter;
  if (uni <= 0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou3d(const Box3D& a, const Box3D& b) {
  const double overlap_h = std::min(a.z + a.h, b.z + b.h) - std::max(a.z, b.z);
  if (overlap_h <= 0) return 0.0;
  const double inter = bev_intersection_area(a, b) * overlap_h;
  const double uni = a.l * a.w * a.h + b.l * b.w * b.h - inter;
  if (uni <= 0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double object_iou(const ObjectRecord& a, const ObjectRecord& b, IouKind kind) {
  switch (kind) {
    case IouKind::Bev:
      return bev_iou(a.box, b.box);
    case IouKind::ThreeD:
      return iou3d(a.box, b.box);
    case IouKind::Image:
      if (!a.box2d || !b.box2d) {
        throw Error(ErrorCode::InvalidArgument, "image IoU requires 2D boxes on both objects");
      }
      return iou_2d(*a.box2d, *b.box2d);
  }
  return 0.0;
}

MatchResult match(std::span<const ObjectRecord> gts, std::span<const ObjectRecord> preds,
                  double iou_threshold, IouKind kind) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return score_of(preds[a]) > score_of(preds[b]);
  });

  std::vector<bool> taken(gts.size(), false);
  MatchResult result;
  for (std::size_t p : order) {
    std::size_t best = gts.size();
    double best_iou = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double iou = object_iou(gts[g], preds[p], kind);
      if (iou >= iou_threshold && iou > best_iou) {
        best = g;
        best_iou = iou;
      }
    }
    if (best == gts.size()) {
      result.unmatched_pred.push_back(p);
      continue;
    }
    taken[best] = true;
    result.pairs.push_back({best, p, best_iou, bev_distance(gts[best].box, preds[p].box)});
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!taken[g]) result.unmatched_gt.push_back(g);
  }
  std::sort(result.unmatched_pred.begin(), result.unmatched_pred.end());
  return result;
}

PRCurve r40_curve(std::vector<ScoredOutcome> outcomes, std::size_t num_gt) {
  PRCurve curve;
  for (int k = 0; k < kRecallPoints; ++k) curve.recall[k] = (k + 1.0) / kRecallPoints;
  if (num_gt == 0) {
    curve.no_ground_truth = true;
    return curve;
  }
  std::stable_sort(outcomes.begin(), outcomes.end(),
                   [](const ScoredOutcome& a, const ScoredOutcome& b) { return a.score > b.score; });

  // (recall, precision) after each distinct score threshold.
  std::vector<std::pair<double, double>> sweep;
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < outcomes.size();) {
    std::size_t j = i;
    while (j < outcomes.size() && outcomes[j].score == outcomes[i].score) {
      outcomes[j].true_positive ? ++tp : ++fp;
      ++j;
    }
    sweep.emplace_back(static_cast<double>(tp) / num_gt, static_cast<double>(tp) / (tp + fp));
    i = j;
  }

  constexpr double kRecallEps = 1e-12;
  double sum = 0;
  for (int k = 0; k < kRecallPoints; ++k) {
    double best = 0;
    for (const auto& [r, p] : sweep) {
      if (r >= curve.recall[k] - kRecallEps) best = std::max(best, p);
    }
    curve.precision[k] = best;
    sum += best;
  }
  curve.ap = 100.0 * sum / kRecallPoints;
  return curve;
}

PRCurve average_precision_r40(std::span<const FrameRecord> frames, double iou_threshold,
                              IouKind kind, const GtFilter& gt_filter) {
  std::vector<std::vector<ScoredOutcome>> per_frame(frames.size());
  std::vector<std::size_t> gt_counts(frames.size(), 0);
  parallel_for(frames.size(), [&](std::size_t f) {
    const FrameRecord& frame = frames[f];
    const MatchResult m = match(frame.gt, frame.predictions, iou_threshold, kind);
    std::vector<bool> ignored(frame.gt.size(), false);
    if (gt_filter) {
      for (std::size_t g = 0; g < frame.gt.size(); ++g) ignored[g] = !gt_filter(frame.gt[g].box);
    }
    gt_counts[f] = static_cast<std::size_t>(std::count(ignored.begin(), ignored.end(), false));
    auto& out = per_frame[f];
    for (const auto& pair : m.pairs) {
      if (!ignored[pair.gt]) out.push_back({score_of(frame.predictions[pair.pred]), true});
    }
    for (std::size_t p : m.unmatched_pred) out.push_back({score_of(frame.predictions[p]), false});
  });

  std::vector<ScoredOutcome> all;
  std::size_t num_gt = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    all.insert(all.end(), per_frame[f].begin(), per_frame[f].end());
    num_gt += gt_counts[f];
  }
  return r40_curve(std::move(all), num_gt);
}

std::vector<DepthPair> matched_depths(const MatchResult& matches,
                                      std::span<const ObjectRecord> gts,
                                      std::span<const ObjectRecord> preds,
                                      const Vec2& camera_foot) {
  std::vector<DepthPair> out;
  out.reserve(matches.pairs.size());
  for (const auto& pair : matches.pairs) {
    const Box3D& g = gts[pair.gt].box;
    const Box3D& p = preds[pair.pred].box;
    out.push_back({std::hypot(g.x - camera_foot.x(), g.y - camera_foot.y()),
                   std::hypot(p.x - camera_foot.x(), p.y - camera_foot.y())});
  }
  return out;
}

BinEdges default_distance_bins() { return {{0, 50}, {50, 100}, {100, 150}, {150, 200}}; }

DistanceErrorTable distance_error(std::span<const DepthPair> pairs, const BinEdges& bins) {
  DistanceErrorTable table;
  std::vector<double> sums(bins.size(), 0.0);
  for (const auto& [lo, hi] : bins) table.bins.push_back({lo, hi, 0, std::nullopt});
  for (const DepthPair& pair : pairs) {
    if (!(pair.d_gt > 0)) {
      ++table.skipped;
      continue;
    }
    for (std::size_t b = 0; b < bins.size(); ++b) {
      const bool last = b + 1 == bins.size();
      if (pair.d_gt >= bins[b].first &&
          (pair.d_gt < bins[b].second || (last && pair.d_gt == bins[b].second))) {
        sums[b] += std::abs(pair.d_pred - pair.d_gt) / pair.d_gt * 100.0;
        ++table.bins[b].count;
        break;
      }
    }
  }
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (table.bins[b].count > 0) table.bins[b].mean_error_pct = sums[b] / table.bins[b].count;
  }
  return table;
}

std::vector<double> detection_ratio_curve(std::span<const FrameRecord> frames,
                                          std::span<const double> thresholds) {
  std::vector<double> nearest;
  for (const FrameRecord& frame : frames) {
    for (const ObjectRecord& g : frame.gt) {
      double best = std::numeric_limits<double>::infinity();
      for (const ObjectRecord& p : frame.predictions) best = std::min(best, bev_distance(g.box, p.box));
      nearest.push_back(best);
    }
  }
  std::vector<double> ratios;
  ratios.reserve(thresholds.size());
  for (double t : thresholds) {
    if (nearest.empty()) {
      ratios.push_back(0.0);
      continue;
    }
    const auto hits = std::count_if(nearest.begin(), nearest.end(), [t](double d) { return d <= t; });
    ratios.push_back(static_cast<double>(hits) / nearest.size());
  }
  return ratios;
}

}  // namespace roadlift
