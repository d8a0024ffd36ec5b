#include "support.hpp"

#include "roadlift/evaluation.hpp"

#include <algorithm>
#include <functional>

using namespace roadlift;
using namespace rltest;

namespace {

Box3D flat_box(double x, double y, double l, double w, double theta = 0, double z = 0, double h = 1) {
  Box3D b;
  b.x = x;
  b.y = y;
  b.z = z;
  b.l = l;
  b.w = w;
  b.h = h;
  b.theta = theta;
  return b;
}

ObjectRecord rec(const Box3D& b, std::optional<double> score = std::nullopt) {
  ObjectRecord r;
  r.box = b;
  r.box.score = score;
  return r;
}

bool inside(const Box3D& b, double px, double py) {
  const double dx = px - b.x, dy = py - b.y;
  const double c = std::cos(b.theta), s = std::sin(b.theta);
  const double lx = c * dx + s * dy, ly = -s * dx + c * dy;
  return std::abs(lx) <= b.l / 2 && std::abs(ly) <= b.w / 2;
}

double monte_carlo_iou(const Box3D& a, const Box3D& b, int samples, std::uint64_t seed) {
  const double ra = std::hypot(a.l, a.w) / 2, rb = std::hypot(b.l, b.w) / 2;
  const double x0 = std::min(a.x - ra, b.x - rb), x1 = std::max(a.x + ra, b.x + rb);
  const double y0 = std::min(a.y - ra, b.y - rb), y1 = std::max(a.y + ra, b.y + rb);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1);
  long inter = 0, uni = 0;
  for (int i = 0; i < samples; ++i) {
    const double px = ux(rng), py = uy(rng);
    const bool ia = inside(a, px, py), ib = inside(b, px, py);
    inter += ia && ib;
    uni += ia || ib;
  }
  return static_cast<double>(inter) / uni;
}

// Lexicographic optimum over every injective assignment: predictions in
// score order, each preferring a higher IoU and then a lower GT index.
std::vector<long> brute_force_assignment(const std::vector<ObjectRecord>& gts,
                                         const std::vector<ObjectRecord>& preds, double thr) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return preds[a].box.score.value_or(0) > preds[b].box.score.value_or(0);
  });
  using Key = std::vector<std::pair<double, long>>;
  Key best_key;
  std::vector<long> best, cur(preds.size(), -1);
  std::vector<bool> used(gts.size(), false);
  std::function<void(std::size_t)> rec_fn = [&](std::size_t k) {
    if (k == order.size()) {
      Key key;
      for (std::size_t p : order) {
        key.emplace_back(cur[p] < 0 ? -1.0 : bev_iou(gts[cur[p]].box, preds[p].box),
                         cur[p] < 0 ? 0 : -cur[p]);
      }
      if (best.empty() || key > best_key) {
        best_key = key;
        best = cur;
      }
      return;
    }
    const std::size_t p = order[k];
    cur[p] = -1;
    rec_fn(k + 1);
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || bev_iou(gts[g].box, preds[p].box) < thr) continue;
      used[g] = true;
      cur[p] = static_cast<long>(g);
      rec_fn(k + 1);
      used[g] = false;
      cur[p] = -1;
    }
  };
  rec_fn(0);
  return best;
}

FrameRecord frame_with(std::vector<ObjectRecord> gt, std::vector<ObjectRecord> preds) {
  FrameRecord f;
  f.gt = std::move(gt);
  f.predictions = std::move(preds);
  return f;
}

}  // namespace

TEST_SUITE("evaluation") {

TEST_CASE("IoU examples") {
  const Box3D a = flat_box(0, 0, 4, 2, 0.3);
  CHECK(bev_iou(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(iou3d(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(bev_iou(a, flat_box(10, 0, 4, 2)) == 0.0);
  CHECK(bev_iou(flat_box(0, 0, 1, 1), flat_box(0.5, 0, 1, 1)) == doctest::Approx(1.0 / 3).epsilon(1e-12));
  CHECK(iou3d(flat_box(0, 0, 2, 2, 0, 0, 1), flat_box(0, 0, 2, 2, 0, 1.5, 1)) == 0.0);
  CHECK(iou3d(flat_box(0, 0, 2, 2, 0, 0, 2), flat_box(0, 0, 2, 2, 0, 1, 2)) ==
        doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("rotated IoU agrees with Monte Carlo") {
  const Box3D a = flat_box(0, 0, 4, 2);
  const Box3D b = flat_box(0.5, 0.3, 4, 2, kPi / 4);
  CHECK(std::abs(bev_iou(a, b) - monte_carlo_iou(a, b, 10'000'000, 61)) < 1e-3);

  std::mt19937_64 rng(62);
  for (int i = 0; i < 10; ++i) {
    const Box3D p = flat_box(0, 0, uniform(rng, 1, 5), uniform(rng, 1, 3), uniform(rng, -kPi, kPi));
    const Box3D q = flat_box(uniform(rng, -1.5, 1.5), uniform(rng, -1, 1), uniform(rng, 1, 5),
                             uniform(rng, 1, 3), uniform(rng, -kPi, kPi));
    CHECK(std::abs(bev_iou(p, q) - monte_carlo_iou(p, q, 1'000'000, 63 + i)) < 3e-3);
  }
}

TEST_CASE("axis-aligned IoU has a closed form") {
  std::mt19937_64 rng(64);
  for (int i = 0; i < 2000; ++i) {
    const Box3D a = flat_box(uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, 0.5, 5), uniform(rng, 0.5, 5));
    const Box3D b = flat_box(uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, 0.5, 5), uniform(rng, 0.5, 5));
    const double ox = std::max(0.0, std::min(a.x + a.l / 2, b.x + b.l / 2) - std::max(a.x - a.l / 2, b.x - b.l / 2));
    const double oy = std::max(0.0, std::min(a.y + a.w / 2, b.y + b.w / 2) - std::max(a.y - a.w / 2, b.y - b.w / 2));
    const double inter = ox * oy;
    const double expected = inter / (a.l * a.w + b.l * b.w - inter);
    CHECK(std::abs(bev_iou(a, b) - expected) < 1e-12);
    CHECK(bev_iou(a, b) == doctest::Approx(bev_iou(b, a)).epsilon(1e-12));
  }
}

TEST_CASE("polygon helpers") {
  const std::vector<Vec2> sq{Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
  CHECK(polygon_area(sq) == 1.0);
  const std::vector<Vec2> shifted{Vec2(2, 2), Vec2(3, 2), Vec2(3, 3), Vec2(2, 3)};
  CHECK(clip_convex_polygon(sq, shifted).empty());
  const std::vector<Vec2> half{Vec2(0.5, -1), Vec2(2, -1), Vec2(2, 2), Vec2(0.5, 2)};
  CHECK(polygon_area(clip_convex_polygon(sq, half)) == doctest::Approx(0.5));
}

TEST_CASE("greedy matching examples") {
  const std::vector<ObjectRecord> gts{rec(flat_box(0, 0, 4, 2)), rec(flat_box(10, 0, 4, 2))};
  const std::vector<ObjectRecord> preds{rec(flat_box(0.2, 0, 4, 2), 0.5), rec(flat_box(0.1, 0, 4, 2), 0.9),
                                        rec(flat_box(50, 0, 4, 2), 0.7)};
  const MatchResult m = match(gts, preds, 0.5, IouKind::Bev);
  REQUIRE(m.pairs.size() == 1);
  CHECK(m.pairs[0].gt == 0);
  CHECK(m.pairs[0].pred == 1);
  CHECK(m.pairs[0].center_distance == doctest::Approx(0.1));
  CHECK(m.unmatched_gt == std::vector<std::size_t>{1});
  CHECK(m.unmatched_pred == std::vector<std::size_t>{0, 2});

  CHECK(match({}, preds, 0.5, IouKind::Bev).unmatched_pred.size() == 3);
  CHECK(match(gts, {}, 0.5, IouKind::Bev).unmatched_gt.size() == 2);
  CHECK_THROWS_AS(match(gts, preds, 0.5, IouKind::Image), Error);
}

TEST_CASE("greedy matching equals the lexicographic assignment") {
  std::mt19937_64 rng(65);
  for (int trial = 0; trial < 300; ++trial) {
    const int ng = static_cast<int>(uniform(rng, 0, 5.99));
    const int np = static_cast<int>(uniform(rng, 0, 5.99));
    std::vector<ObjectRecord> gts, preds;
    for (int i = 0; i < ng; ++i) gts.push_back(rec(flat_box(uniform(rng, 0, 6), uniform(rng, 0, 3), 4, 2, uniform(rng, -0.3, 0.3))));
    for (int i = 0; i < np; ++i) {
      // Coarse scores force ties.
      preds.push_back(rec(flat_box(uniform(rng, 0, 6), uniform(rng, 0, 3), 4, 2, uniform(rng, -0.3, 0.3)),
                          std::round(uniform(rng, 0, 3))));
    }
    const double thr = uniform(rng, 0.1, 0.6);
    const MatchResult m = match(gts, preds, thr, IouKind::Bev);
    const std::vector<long> oracle = brute_force_assignment(gts, preds, thr);
    std::vector<long> got(preds.size(), -1);
    std::vector<int> gt_uses(gts.size(), 0);
    for (const auto& pr : m.pairs) {
      got[pr.pred] = static_cast<long>(pr.gt);
      ++gt_uses[pr.gt];
      CHECK(pr.iou >= thr);
    }
    CHECK(got == oracle);
    for (int u : gt_uses) CHECK(u <= 1);
    CHECK(m.pairs.size() + m.unmatched_gt.size() == gts.size());
    CHECK(m.pairs.size() + m.unmatched_pred.size() == preds.size());
  }
}

TEST_CASE("R40 examples") {
  const PRCurve none = r40_curve({}, 0);
  CHECK(none.no_ground_truth);
  CHECK(none.ap == 0.0);
  CHECK(r40_curve({}, 3).ap == 0.0);
  CHECK(r40_curve({{0.9, true}, {0.8, true}}, 2).ap == doctest::Approx(100.0));
  CHECK(r40_curve({{0.9, true}, {0.8, false}}, 2).ap == doctest::Approx(50.0));
  // FP ranked first: precision 1/2 over the whole recall range.
  CHECK(r40_curve({{0.9, false}, {0.8, true}}, 1).ap == doctest::Approx(50.0));
  // Tied scores enter together.
  CHECK(r40_curve({{0.5, false}, {0.5, true}}, 1).ap == doctest::Approx(50.0));
  CHECK(r40_curve({{0.5, true}, {0.5, false}}, 1).ap == doctest::Approx(50.0));
}

TEST_CASE("R40 against hand-unrolled interpolation") {
  std::mt19937_64 rng(66);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t num_gt = 1 + static_cast<std::size_t>(uniform(rng, 0, 20));
    std::vector<ScoredOutcome> outs;
    std::size_t tps = 0;
    const int n = static_cast<int>(uniform(rng, 0, 30));
    for (int i = 0; i < n; ++i) {
      const bool tp = tps < num_gt && uniform(rng, 0, 1) < 0.6;
      tps += tp;
      outs.push_back({uniform(rng, 0, 1), tp});
    }
    std::vector<ScoredOutcome> sorted = outs;
    std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.score > b.score; });
    std::vector<double> rec_at, prec_at;
    std::size_t tp = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      tp += sorted[i].true_positive;
      rec_at.push_back(double(tp) / num_gt);
      prec_at.push_back(double(tp) / (i + 1));
    }
    double sum = 0;
    for (int k = 1; k <= 40; ++k) {
      double best = 0;
      for (std::size_t i = 0; i < rec_at.size(); ++i) {
        if (rec_at[i] >= k / 40.0 - 1e-12) best = std::max(best, prec_at[i]);
      }
      sum += best;
    }
    CHECK(r40_curve(outs, num_gt).ap == doctest::Approx(100 * sum / 40).epsilon(1e-12));
  }
}

TEST_CASE("average precision over frames") {
  std::vector<FrameRecord> frames;
  std::mt19937_64 rng(67);
  for (int f = 0; f < 10; ++f) {
    std::vector<ObjectRecord> gts, preds;
    for (int i = 0; i < 4; ++i) {
      const Box3D b = flat_box(12.0 * i, 8.0 * f, 4, 2, uniform(rng, -1, 1));
      gts.push_back(rec(b));
      preds.push_back(rec(b, uniform(rng, 0, 1)));
    }
    frames.push_back(frame_with(gts, preds));
  }
  CHECK(average_precision_r40(frames, 0.7, IouKind::ThreeD).ap == doctest::Approx(100.0));
  CHECK(average_precision_r40(frames, 0.7, IouKind::Bev).ap == doctest::Approx(100.0));

  // Two GTs, one TP at 0.9, one FP at 0.8.
  const std::vector<FrameRecord> half{frame_with({rec(flat_box(0, 0, 4, 2)), rec(flat_box(20, 0, 4, 2))},
                                                 {rec(flat_box(0, 0, 4, 2), 0.9), rec(flat_box(50, 0, 4, 2), 0.8)})};
  CHECK(average_precision_r40(half, 0.5, IouKind::Bev).ap == doctest::Approx(50.0));

  const std::vector<FrameRecord> empty_preds{frame_with({rec(flat_box(0, 0, 4, 2))}, {})};
  CHECK(average_precision_r40(empty_preds, 0.5, IouKind::Bev).ap == 0.0);

  // A lowest-ranked FP never changes the result; a top-ranked one never raises it.
  std::vector<FrameRecord> noisy = frames;
  noisy[0].predictions[0].box.x += 1.5;
  const double base = average_precision_r40(noisy, 0.5, IouKind::Bev).ap;
  std::vector<FrameRecord> low = noisy, high = noisy;
  low[3].predictions.push_back(rec(flat_box(500, 0, 4, 2), -1.0));
  high[3].predictions.push_back(rec(flat_box(500, 0, 4, 2), 2.0));
  CHECK(average_precision_r40(low, 0.5, IouKind::Bev).ap == doctest::Approx(base).epsilon(1e-12));
  CHECK(average_precision_r40(high, 0.5, IouKind::Bev).ap <= base);

  // Frame order does not matter.
  std::vector<FrameRecord> reversed(noisy.rbegin(), noisy.rend());
  CHECK(average_precision_r40(reversed, 0.5, IouKind::Bev).ap == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("ignored ground truth") {
  Box3D ped = flat_box(20, 0, 0.8, 0.8);
  ped.category = Category::Pedestrian;
  const std::vector<FrameRecord> frames{frame_with({rec(flat_box(0, 0, 4, 2)), rec(ped)},
                                                   {rec(ped, 0.95), rec(flat_box(0, 0, 4, 2), 0.5)})};
  const GtFilter cars = [](const Box3D& b) { return b.category == Category::Car; };
  CHECK(average_precision_r40(frames, 0.5, IouKind::Bev, cars).ap == doctest::Approx(100.0));
  CHECK(average_precision_r40(frames, 0.5, IouKind::Bev).ap == doctest::Approx(100.0));
  const GtFilter nothing = [](const Box3D&) { return false; };
  CHECK(average_precision_r40(frames, 0.5, IouKind::Bev, nothing).no_ground_truth);
}

TEST_CASE("distance error") {
  const std::vector<DepthPair> one{{100, 110}};
  const DistanceErrorTable t = distance_error(one);
  REQUIRE(t.bins.size() == 4);
  CHECK(t.bins[2].count == 1);
  CHECK(*t.bins[2].mean_error_pct == doctest::Approx(10.0));
  CHECK_FALSE(t.bins[0].mean_error_pct);

  const std::vector<DepthPair> edges{{200, 190}, {50, 50}, {0, 3}, {250, 1}};
  const DistanceErrorTable e = distance_error(edges);
  CHECK(e.bins[3].count == 1);
  CHECK(e.bins[1].count == 1);
  CHECK(e.skipped == 1);

  std::mt19937_64 rng(68);
  std::vector<DepthPair> pairs;
  for (int i = 0; i < 5000; ++i) {
    const double d = uniform(rng, 0.1, 200);
    pairs.push_back({d, d + uniform(rng, -10, 10)});
  }
  const DistanceErrorTable r = distance_error(pairs);
  for (const DistanceBin& bin : r.bins) {
    double sum = 0;
    std::size_t n = 0;
    for (const DepthPair& p : pairs) {
      if (p.d_gt >= bin.lo && p.d_gt < bin.hi) {
        sum += std::abs(p.d_pred - p.d_gt) / p.d_gt * 100;
        ++n;
      }
    }
    CHECK(bin.count == n);
    CHECK(*bin.mean_error_pct == doctest::Approx(sum / n).epsilon(1e-12));
  }

  MatchResult m;
  m.pairs.push_back({0, 0, 1.0, 0.0});
  const std::vector<ObjectRecord> g{rec(flat_box(3, 4, 1, 1))}, p{rec(flat_box(6, 8, 1, 1))};
  const auto depths = matched_depths(m, g, p);
  CHECK(depths[0].d_gt == 5.0);
  CHECK(depths[0].d_pred == 10.0);
  CHECK(matched_depths(m, g, p, Vec2(3, 0))[0].d_gt == 4.0);
}

TEST_CASE("detection ratio") {
  std::vector<FrameRecord> frames;
  for (double off : {0.2, 0.7, 3.0}) {
    frames.push_back(frame_with({rec(flat_box(0, 0, 4, 2))}, {rec(flat_box(off, 0, 4, 2), 1.0)}));
  }
  const std::vector<double> thresholds{0.5, 1, 5};
  const auto r = detection_ratio_curve(frames, thresholds);
  CHECK(r[0] == doctest::Approx(1.0 / 3));
  CHECK(r[1] == doctest::Approx(2.0 / 3));
  CHECK(r[2] == 1.0);

  std::mt19937_64 rng(69);
  std::vector<FrameRecord> many;
  for (int f = 0; f < 20; ++f) {
    FrameRecord fr;
    for (int i = 0; i < 5; ++i) fr.gt.push_back(rec(flat_box(uniform(rng, 0, 100), uniform(rng, 0, 100), 4, 2)));
    for (int i = 0; i < 3; ++i) fr.predictions.push_back(rec(flat_box(uniform(rng, 0, 100), uniform(rng, 0, 100), 4, 2)));
    many.push_back(fr);
  }
  std::vector<double> ts;
  for (int i = 0; i <= 50; ++i) ts.push_back(i * 2.0);
  const auto curve = detection_ratio_curve(many, ts);
  for (std::size_t i = 1; i < curve.size(); ++i) CHECK(curve[i] >= curve[i - 1]);
  CHECK(detection_ratio_curve({}, ts)[3] == 0.0);
}

}  // TEST_SUITE
