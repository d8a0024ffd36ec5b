#include "support.hpp"

#include "roadlift/scene_cue_bank.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

using namespace roadlift;
using namespace rltest;

namespace {

FeatureGrid random_grid(std::mt19937_64& rng, int rows, int cols, int channels) {
  FeatureGrid g(rows, cols, channels);
  for (double& v : g.values()) v = uniform(rng, -3, 3);
  return g;
}

CueMask random_mask(std::mt19937_64& rng, int rows, int cols, double p = 0.5) {
  CueMask m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m.at(r, c) = uniform(rng, 0, 1) < p ? 1 : 0;
  }
  return m;
}

Vec2 pixel_of_cell(int row, int col) { return {8.0 * col + 3.5, 8.0 * row + 3.5}; }

}  // namespace

TEST_SUITE("scene_cue_bank") {

TEST_CASE("mask of an interior point is a 3x3 block") {
  const std::vector<Vec2> pts{pixel_of_cell(10, 10)};
  const MaskResult m = make_mask(pts, 40, 40);
  CHECK(m.mask.count() == 9);
  CHECK(m.skipped == 0);
  for (int r = 9; r <= 11; ++r) {
    for (int c = 9; c <= 11; ++c) CHECK(m.mask.at(r, c) == 1);
  }
}

TEST_CASE("mask clips at the border") {
  const std::vector<Vec2> pts{Vec2(0.0, 0.0)};
  CHECK(make_mask(pts, 40, 40).mask.count() == 4);
}

TEST_CASE("overlapping blocks count their union") {
  // Blocks centered at (10,10) and (10,12) share column 11: 3 cells.
  const std::vector<Vec2> pts{pixel_of_cell(10, 10), pixel_of_cell(10, 12)};
  CHECK(make_mask(pts, 40, 40).mask.count() == 15);
}

TEST_CASE("out-of-image points are skipped and counted") {
  const std::vector<Vec2> pts{Vec2(-1, 5), Vec2(5, 320), Vec2(3, 3)};
  const MaskResult m = make_mask(pts, 40, 40);
  CHECK(m.skipped == 2);
  CHECK(m.mask.count() == 4);
}

TEST_CASE("mask count bounds") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Vec2> pts;
    const int n = static_cast<int>(uniform(rng, 1, 20));
    for (int i = 0; i < n; ++i) pts.emplace_back(uniform(rng, 0, 320), uniform(rng, 0, 240));
    CHECK(make_mask(pts, 30, 40).mask.count() <= 9 * pts.size());
  }
  // Interior, pairwise at least 3 cells apart in some axis.
  std::vector<Vec2> spread;
  for (int r = 2; r < 28; r += 4) {
    for (int c = 2; c < 38; c += 4) spread.push_back(pixel_of_cell(r, c));
  }
  CHECK(make_mask(spread, 30, 40).mask.count() == 9 * spread.size());
}

TEST_CASE("extract cues") {
  std::mt19937_64 rng(22);
  const FeatureGrid f = random_grid(rng, 4, 4, 2);
  CHECK(extract_cues(f, CueMask(4, 4, 1)) == f);
  const FeatureGrid zero = extract_cues(f, CueMask(4, 4, 0));
  for (double v : zero.values()) CHECK(v == 0.0);

  const CueMask m = random_mask(rng, 4, 4);
  const FeatureGrid e = extract_cues(f, m);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      for (int ch = 0; ch < 2; ++ch) CHECK(e.at(r, c, ch) == f.at(r, c, ch) * m.at(r, c));
    }
  }
  CHECK(extract_cues(e, m) == e);
  CHECK_THROWS_AS(extract_cues(f, CueMask(4, 5)), Error);
}

TEST_CASE("momentum update") {
  std::mt19937_64 rng(23);
  const FeatureGrid g0 = random_grid(rng, 3, 5, 2);
  const FeatureGrid g1 = random_grid(rng, 3, 5, 2);
  const FeatureGrid g2 = random_grid(rng, 3, 5, 2);

  SceneBank bank(3, 5, 2);
  bank.update_momentum("s", g0, 0.3);
  CHECK(bank.scene("s").memorized == g0);  // lazy init
  CHECK(bank.scene("s").frames_seen == 1);

  SceneBank one(3, 5, 2);
  one.reset_scene("s", g0);
  one.update_momentum("s", g1, 1.0);
  CHECK(one.scene("s").memorized == g1);

  SceneBank none(3, 5, 2);
  none.reset_scene("s", g0);
  none.update_momentum("s", g1, 0.0);
  CHECK(none.scene("s").memorized == g0);

  SceneBank half(3, 5, 2);
  half.reset_scene("s", FeatureGrid(3, 5, 2));
  half.update_momentum("s", g1, 0.5);
  half.update_momentum("s", g2, 0.5);
  const auto& mem = half.scene("s").memorized;
  for (std::size_t i = 0; i < mem.values().size(); ++i) {
    CHECK(mem.values()[i] == doctest::Approx(0.25 * g1.values()[i] + 0.5 * g2.values()[i]).epsilon(1e-15));
  }

  CHECK_THROWS_AS(bank.update_momentum("s", g1, 1.5), Error);
  CHECK_THROWS_AS(bank.update_momentum("s", g1, -0.1), Error);
  CHECK_THROWS_AS(bank.update_momentum("s", FeatureGrid(3, 4, 2), 0.1), Error);
}

TEST_CASE("momentum stays on the segment between old and new") {
  std::mt19937_64 rng(24);
  SceneBank bank(6, 7, 3);
  bank.update_momentum("s", random_grid(rng, 6, 7, 3), 0.1);
  for (int step = 0; step < 50; ++step) {
    const FeatureGrid before = bank.scene("s").memorized;
    const FeatureGrid cues = random_grid(rng, 6, 7, 3);
    const double lambda = uniform(rng, 0, 1);
    bank.update_momentum("s", cues, lambda);
    const auto& after = bank.scene("s").memorized;
    for (std::size_t i = 0; i < cues.values().size(); ++i) {
      const double lo = std::min(before.values()[i], cues.values()[i]);
      const double hi = std::max(before.values()[i], cues.values()[i]);
      CHECK(after.values()[i] >= lo - 1e-12);
      CHECK(after.values()[i] <= hi + 1e-12);
    }
  }
}

TEST_CASE("masked-only momentum leaves unmasked cells alone") {
  std::mt19937_64 rng(25);
  const FeatureGrid init = random_grid(rng, 4, 4, 1);
  const FeatureGrid cues = random_grid(rng, 4, 4, 1);
  const CueMask m = random_mask(rng, 4, 4);
  SceneBank bank(4, 4, 1);
  bank.reset_scene("s", init);
  bank.update_momentum("s", cues, 0.5, MomentumMode::MaskedOnly, &m);
  const auto& mem = bank.scene("s").memorized;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      const double expected = m.at(r, c) ? 0.5 * init.at(r, c, 0) + 0.5 * cues.at(r, c, 0) : init.at(r, c, 0);
      CHECK(mem.at(r, c, 0) == doctest::Approx(expected));
    }
  }
  CHECK_THROWS_AS(bank.update_momentum("s", cues, 0.5, MomentumMode::MaskedOnly, nullptr), Error);
}

TEST_CASE("running average") {
  SceneBank bank(2, 2, 1);
  CueMask only(2, 2);
  only.at(0, 1) = 1;
  FeatureGrid a(2, 2, 1), b(2, 2, 1);
  a.at(0, 1, 0) = 4.0;
  b.at(0, 1, 0) = 7.0;
  bank.update_running_average("s", a, only);
  CHECK(bank.scene("s").memorized.at(0, 1, 0) == 4.0);
  CHECK(bank.scene("s").counter[1] == 1);
  bank.update_running_average("s", b, only);
  CHECK(bank.scene("s").memorized.at(0, 1, 0) == 5.5);
  CHECK(bank.scene("s").counter[1] == 2);
  CHECK(bank.scene("s").counter[0] == 0);
  CHECK(bank.scene("s").memorized.at(0, 0, 0) == 0.0);
}

TEST_CASE("running average equals the direct mean") {
  std::mt19937_64 rng(26);
  std::vector<double> obs;
  SceneBank bank(1, 1, 1);
  for (int i = 0; i < 5; ++i) {
    obs.push_back(uniform(rng, -10, 10));
    FeatureGrid g(1, 1, 1, obs.back());
    bank.update_running_average("s", g, CueMask(1, 1, 1));
  }
  const double direct = std::accumulate(obs.begin(), obs.end(), 0.0) / 5.0;
  CHECK(std::abs(bank.scene("s").memorized.at(0, 0, 0) - direct) < 1e-12);
}

TEST_CASE("running average is permutation invariant") {
  std::mt19937_64 rng(27);
  std::vector<std::pair<FeatureGrid, CueMask>> seq;
  for (int i = 0; i < 12; ++i) seq.emplace_back(random_grid(rng, 5, 6, 2), random_mask(rng, 5, 6, 0.4));
  SceneBank ref(5, 6, 2);
  for (const auto& [g, m] : seq) ref.update_running_average("s", extract_cues(g, m), m);
  for (int trial = 0; trial < 30; ++trial) {
    std::shuffle(seq.begin(), seq.end(), rng);
    SceneBank bank(5, 6, 2);
    for (const auto& [g, m] : seq) bank.update_running_average("s", extract_cues(g, m), m);
    const auto& a = bank.scene("s");
    const auto& b = ref.scene("s");
    CHECK(a.counter == b.counter);
    for (std::size_t i = 0; i < a.memorized.values().size(); ++i) {
      CHECK(std::abs(a.memorized.values()[i] - b.memorized.values()[i]) < 1e-9);
    }
  }
}

TEST_CASE("untouched cells keep their initial value") {
  std::mt19937_64 rng(28);
  const FeatureGrid init = random_grid(rng, 4, 4, 2);
  SceneBank bank(4, 4, 2);
  bank.reset_scene("s", init);
  CueMask m(4, 4);
  m.at(1, 1) = m.at(2, 3) = 1;
  for (int i = 0; i < 10; ++i) bank.update_running_average("s", random_grid(rng, 4, 4, 2), m);
  const auto& mem = bank.scene("s").memorized;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      if (m.at(r, c)) continue;
      for (int ch = 0; ch < 2; ++ch) CHECK(mem.at(r, c, ch) == init.at(r, c, ch));
    }
  }
}

TEST_CASE("reset") {
  std::mt19937_64 rng(29);
  const FeatureGrid init = random_grid(rng, 3, 3, 2);
  SceneBank bank(3, 3, 2);
  bank.update_momentum("s", random_grid(rng, 3, 3, 2), 0.1);
  bank.reset_scene("s", init);
  CHECK(bank.scene("s").memorized == init);
  CHECK(bank.scene("s").frames_seen == 0);

  bank.reset_scene("z", FeatureGrid(3, 3, 2));
  for (auto n : bank.scene("z").counter) CHECK(n == 0);

  // Reset mid-stream, one update: same as a fresh bank given that update.
  const FeatureGrid cues = random_grid(rng, 3, 3, 2);
  const CueMask m = random_mask(rng, 3, 3);
  SceneBank stream(3, 3, 2);
  for (int i = 0; i < 4; ++i) stream.update_running_average("s", random_grid(rng, 3, 3, 2), random_mask(rng, 3, 3));
  stream.reset_scene("s", FeatureGrid(3, 3, 2));
  stream.update_running_average("s", cues, m);
  SceneBank fresh(3, 3, 2);
  fresh.update_running_average("s", cues, m);
  CHECK(stream.scene("s").memorized == fresh.scene("s").memorized);
  CHECK(stream.scene("s").counter == fresh.scene("s").counter);
}

TEST_CASE("fuse for decoder") {
  FeatureGrid a(1, 1, 1, 2.0), b(1, 1, 1, 5.0);
  const FeatureGrid f = fuse_for_decoder(a, b);
  CHECK(f.channels() == 2);
  CHECK(f.at(0, 0, 0) == 2.0);
  CHECK(f.at(0, 0, 1) == 5.0);

  std::mt19937_64 rng(30);
  for (int trial = 0; trial < 20; ++trial) {
    const int r = static_cast<int>(uniform(rng, 1, 6)), c = static_cast<int>(uniform(rng, 1, 6));
    const int d = static_cast<int>(uniform(rng, 1, 5));
    const FeatureGrid cur = random_grid(rng, r, c, d);
    const FeatureGrid fused = fuse_for_decoder(cur, FeatureGrid(r, c, d));
    CHECK(fused.rows() == r);
    CHECK(fused.cols() == c);
    CHECK(fused.channels() == 2 * d);
    for (int i = 0; i < r; ++i) {
      for (int j = 0; j < c; ++j) {
        for (int ch = 0; ch < d; ++ch) {
          CHECK(fused.at(i, j, ch) == cur.at(i, j, ch));
          CHECK(fused.at(i, j, d + ch) == 0.0);
        }
      }
    }
  }
  CHECK_THROWS_AS(fuse_for_decoder(FeatureGrid(2, 2, 1), FeatureGrid(2, 3, 1)), Error);
}

TEST_CASE("bank memory elements") {
  CHECK(bank_memory_elements(1024, 1536, 256) == 6291456);
  CHECK(bank_memory_elements(8, 8, 1) == 1);
  CHECK(bank_memory_elements(2048, 1536, 256) == 2 * bank_memory_elements(1024, 1536, 256));
  CHECK_THROWS_AS(bank_memory_elements(1001, 1536, 256), Error);
  CHECK_THROWS_AS(FeatureGrid::for_image(1080, 1921, 4), Error);
  CHECK(FeatureGrid::for_image(1080, 1920, 4).rows() == 135);
}

TEST_CASE("bank container round trip") {
  std::mt19937_64 rng(31);
  SceneBank bank(3, 4, 2);
  bank.update_momentum("b_scene", random_grid(rng, 3, 4, 2), 0.1);
  bank.update_running_average("a_scene", random_grid(rng, 3, 4, 2), random_mask(rng, 3, 4));
  bank.update_running_average("a_scene", random_grid(rng, 3, 4, 2), random_mask(rng, 3, 4));
  std::stringstream buf;
  bank.save(buf);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 4) == "RLCB");
  // Scenes in lexicographic order: "a_scene" is written first.
  CHECK(bytes.find("a_scene") < bytes.find("b_scene"));
  std::stringstream in(bytes);
  const SceneBank loaded = SceneBank::load(in);
  CHECK(loaded == bank);

  std::stringstream truncated(bytes.substr(0, bytes.size() - 3));
  CHECK_THROWS_AS(SceneBank::load(truncated), Error);
  std::string bad = bytes;
  bad[0] = 'X';
  std::stringstream bad_magic(bad);
  CHECK_THROWS_AS(SceneBank::load(bad_magic), Error);
}

TEST_CASE("unknown scene lookup") {
  SceneBank bank(1, 1, 1);
  CHECK_FALSE(bank.contains("x"));
  CHECK_THROWS_AS(bank.scene("x"), Error);
}

}  // TEST_SUITE
