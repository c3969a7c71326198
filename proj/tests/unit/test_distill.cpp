#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "support.hpp"
#include "tomdistill/distill.hpp"
#include "tomdistill/errors.hpp"
#include "tomdistill/formats.hpp"

using namespace tomdistill;
using testing::TempDir;

namespace {

ScalarMap column(MapSpace s, std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return ScalarMap(n, 1, s, std::move(v));
}

ScalarMap pixel_stack_map(double v) { return ScalarMap::filled(1, 1, MapSpace::kDepthMm, v); }

double selected_sse(const ScalarMap& p, const ScalarMap& t, double a, double b) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.extent().pixels(); ++i) {
    if (!p.is_valid(i) || !t.is_valid(i)) continue;
    const double r = a * p.value(i) + b - t.value(i);
    s += r * r;
  }
  return s;
}

struct Instance {
  ScalarMap pred;
  ScalarMap target;
};

Instance random_instance(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> val(0.01, 100.0);
  std::uniform_real_distribution<double> a(-5.0, 5.0);
  std::uniform_real_distribution<double> b(-50.0, 50.0);
  std::normal_distribution<double> noise(0.0, 0.5);
  const double alpha = a(rng);
  const double beta = b(rng);
  std::vector<double> p(n);
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) {
    p[i] = val(rng);
    t[i] = alpha * p[i] + beta + noise(rng);
  }
  return {column(MapSpace::kAffineInverseDepth, p), column(MapSpace::kAffineInverseDepth, t)};
}

// Plane disparity exactly representable in float32.
double plane(int x, int y) { return 20.0 + 0.25 * x + 0.125 * y; }

}  // namespace

// ------------------------------------------------------------------- median

TEST_CASE("median of one map is that map") {
  std::mt19937_64 rng(1);
  const ScalarMap m = testing::random_map(rng, 6, 4, MapSpace::kDepthMm, 1, 10, 0.3);
  const std::vector<ScalarMap> stack{m};
  const ScalarMap out = median_aggregate(stack);
  for (std::size_t i = 0; i < m.extent().pixels(); ++i) {
    CHECK(out.is_valid(i) == m.is_valid(i));
    if (m.is_valid(i)) CHECK(out.value(i) == m.value(i));
  }
}

TEST_CASE("median odd and even stacks") {
  std::vector<ScalarMap> odd;
  for (double v : {4, 1, 3, 2, 5}) odd.push_back(pixel_stack_map(v));
  CHECK(median_aggregate(odd).at(0, 0) == 3.0);
  std::vector<ScalarMap> even;
  for (double v : {1, 2, 4, 8}) even.push_back(pixel_stack_map(v));
  CHECK(median_aggregate(even).at(0, 0) == 3.0);
}

TEST_CASE("median quorum") {
  auto m = [](double v, bool ok) {
    return ScalarMap(1, 1, MapSpace::kDepthMm, {v}, {static_cast<std::uint8_t>(ok)});
  };
  // N=4 needs 2 valid, N=5 needs 3.
  std::vector<ScalarMap> four{m(1, true), m(9, true), m(5, false), m(5, false)};
  ScalarMap out = median_aggregate(four);
  CHECK(out.valid_at(0, 0));
  CHECK(out.at(0, 0) == 5.0);
  std::vector<ScalarMap> five{m(1, true), m(9, true), m(5, false), m(5, false), m(5, false)};
  out = median_aggregate(five);
  CHECK_FALSE(out.valid_at(0, 0));
  CHECK(out.at(0, 0) == 0.0);
}

TEST_CASE("median errors") {
  CHECK_THROWS_AS(median_aggregate(std::vector<ScalarMap>{}), AggregationError);
  std::vector<ScalarMap> dims{ScalarMap::filled(2, 2, MapSpace::kDepthMm, 1),
                              ScalarMap::filled(2, 3, MapSpace::kDepthMm, 1)};
  CHECK_THROWS_AS(median_aggregate(dims), AggregationError);
  std::vector<ScalarMap> spaces{ScalarMap::filled(2, 2, MapSpace::kDepthMm, 1),
                                ScalarMap::filled(2, 2, MapSpace::kDisparityPx, 1)};
  CHECK_THROWS_AS(median_aggregate(spaces), AggregationError);
}

TEST_CASE("median matches the sort oracle, is order free and bounded") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 40; ++t) {
    const int n = 1 + t % 7;
    std::vector<ScalarMap> stack;
    for (int k = 0; k < n; ++k) {
      stack.push_back(testing::random_map(rng, 9, 7, MapSpace::kDisparityPx, 0, 64, 0.35));
    }
    const ScalarMap out = median_aggregate(stack);
    CHECK(out == testing::median_oracle(stack));
    std::shuffle(stack.begin(), stack.end(), rng);
    CHECK(median_aggregate(stack) == out);
    for (std::size_t i = 0; i < out.extent().pixels(); ++i) {
      if (!out.is_valid(i)) continue;
      double lo = INFINITY;
      double hi = -INFINITY;
      for (const auto& m : stack) {
        if (!m.is_valid(i)) continue;
        lo = std::min(lo, m.value(i));
        hi = std::max(hi, m.value(i));
      }
      CHECK(out.value(i) >= lo);
      CHECK(out.value(i) <= hi);
    }
  }
}

// ---------------------------------------------------------------------- LSE

TEST_CASE("lse through two points and self fit") {
  const AffineAlignment a = fit_affine_lse(column(MapSpace::kAffineInverseDepth, {1, 2}),
                                           column(MapSpace::kDisparityPx, {3, 5}));
  CHECK(a.scale == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(a.shift == doctest::Approx(1.0).epsilon(1e-15));
  std::mt19937_64 rng(3);
  const ScalarMap m = testing::random_map(rng, 8, 8, MapSpace::kDisparityPx, 1, 90, 0.2);
  const AffineAlignment self = fit_affine_lse(m, m);
  CHECK(self.scale == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(self.shift) < 1e-12);
}

TEST_CASE("lse respects the fit mask and validity") {
  const ScalarMap p = column(MapSpace::kAffineInverseDepth, {1, 2, 3, 4});
  const ScalarMap t(4, 1, MapSpace::kDisparityPx, {3, 5, 100, 1000}, {1, 1, 1, 0});
  const std::vector<std::uint8_t> mask{1, 1, 0, 1};
  const AffineAlignment a = fit_affine_lse(p, t, mask);
  CHECK(a.scale == doctest::Approx(2.0));
  CHECK(a.shift == doctest::Approx(1.0));
}

TEST_CASE("lse errors") {
  const ScalarMap p = column(MapSpace::kAffineInverseDepth, {1, 2, 3});
  const ScalarMap t = column(MapSpace::kDisparityPx, {1, 2, 3});
  CHECK_THROWS_AS(fit_affine_lse(p, t, std::vector<std::uint8_t>{0, 1, 0}), InsufficientSupport);
  CHECK_THROWS_AS(fit_affine_lse(p, t, std::vector<std::uint8_t>{0, 0, 0}), InsufficientSupport);
  CHECK_THROWS_AS(fit_affine_lse(column(MapSpace::kAffineInverseDepth, {7, 7, 7}), t),
                  DegenerateFit);
  CHECK_THROWS_AS(fit_affine_lse(p, t, std::vector<std::uint8_t>{1, 1}), DimensionError);
  CHECK_THROWS_AS(fit_affine_lse(p, ScalarMap::filled(2, 1, MapSpace::kDisparityPx, 1)),
                  DimensionError);
}

TEST_CASE("lse on ten pixels matches the brute-force oracle") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const Instance inst = random_instance(rng, 10);
    const AffineAlignment got = fit_affine_lse(inst.pred, inst.target);
    const auto ref = testing::lse_oracle({inst.pred.values().begin(), inst.pred.values().end()},
                                         {inst.target.values().begin(), inst.target.values().end()});
    CHECK(std::abs(got.scale - ref.scale) <= 1e-9 * std::abs(ref.scale));
    CHECK(std::abs(got.shift - ref.shift) <= 1e-9 * std::abs(ref.shift));
  }
}

TEST_CASE("lse optimality, orthogonality and target-scale equivariance") {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 25; ++t) {
    const Instance inst = random_instance(rng, 10 + t * 37);
    const AffineAlignment a = fit_affine_lse(inst.pred, inst.target);
    const double best = selected_sse(inst.pred, inst.target, a.scale, a.shift);
    for (double eps : {1e-3, 1e-6}) {
      for (double da : {-eps, 0.0, eps}) {
        for (double db : {-eps, 0.0, eps}) {
          CHECK(selected_sse(inst.pred, inst.target, a.scale + da, a.shift + db) >= best);
        }
      }
    }
    double sum_r = 0.0;
    double sum_rp = 0.0;
    const std::size_t n = inst.pred.extent().pixels();
    for (std::size_t i = 0; i < n; ++i) {
      const double r = a.scale * inst.pred.value(i) + a.shift - inst.target.value(i);
      sum_r += r;
      sum_rp += r * inst.pred.value(i);
    }
    const double scale = 100.0 * std::max(1.0, std::abs(a.scale) * 100.0);
    CHECK(std::abs(sum_r) <= 1e-7 * n * scale);
    CHECK(std::abs(sum_rp) <= 1e-7 * n * scale * 100.0);

    for (double s : {0.5, 3.0, 1e3}) {
      std::vector<double> scaled(inst.target.values().begin(), inst.target.values().end());
      for (auto& v : scaled) v *= s;
      const AffineAlignment b = fit_affine_lse(
          inst.pred, column(MapSpace::kAffineInverseDepth, scaled));
      CHECK(std::abs(b.scale - s * a.scale) <= 1e-9 * std::abs(s * a.scale));
      CHECK(std::abs(b.shift - s * a.shift) <= 1e-9 * std::abs(s * a.shift));
    }
  }
}

TEST_CASE("apply affine") {
  ScalarMap m(3, 1, MapSpace::kAffineInverseDepth, {3.0, -1.0, 5.0}, {1, 1, 0});
  const ScalarMap id = apply_affine(m, {1.0, 0.0}, MapSpace::kAffineInverseDepth);
  CHECK(id == m);
  const ScalarMap out = apply_affine(m, {2.0, 1.0}, MapSpace::kAffineInverseDepth);
  CHECK(out.at(0, 0) == 7.0);
  CHECK(out.at(1, 0) == -1.0);
  CHECK_FALSE(out.valid_at(2, 0));
  CHECK(out.at(2, 0) == 5.0);
  // A negative disparity cannot be stored as valid.
  const ScalarMap disp = apply_affine(m, {2.0, 1.0}, MapSpace::kDisparityPx);
  CHECK(disp.valid_at(0, 0));
  CHECK_FALSE(disp.valid_at(1, 0));
}

TEST_CASE("strategy tokens") {
  for (Strategy s : {Strategy::kMonoVirtualDepth, Strategy::kStereoMerged,
                     Strategy::kStereoVirtualDisparity}) {
    CHECK(parse_strategy(to_string(s)) == s);
  }
  CHECK_THROWS_AS(parse_strategy("merged"), FormatError);
}

// ------------------------------------------------------------ strategies

namespace {

constexpr int kW = 24;
constexpr int kH = 16;

ScalarMap gt_plane() {
  std::vector<double> v(kW * kH);
  for (int y = 0; y < kH; ++y)
    for (int x = 0; x < kW; ++x) v[y * kW + x] = plane(x, y);
  return ScalarMap(kW, kH, MapSpace::kDisparityPx, v);
}

TomMask box_mask(int x0, int y0, int x1, int y1) {
  std::vector<std::uint8_t> l(kW * kH, 0);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) l[y * kW + x] = 1;
  return TomMask(kW, kH, l);
}

ScalarMap affine_of(const ScalarMap& m, double a, double b, MapSpace s) {
  std::vector<double> v(m.values().begin(), m.values().end());
  for (auto& x : v) x = a * x + b;
  return ScalarMap(m.width(), m.height(), s, v);
}

struct Scene {
  TempDir mono_dir;
  TempDir stereo_dir;
  RgbImage left = RgbImage::filled(kW, kH, {90, 90, 90});
  RgbImage right = RgbImage::filled(kW, kH, {80, 80, 80});
  DistillConfig cfg{3, 0, Strategy::kStereoMerged};

  void mono_colors(const std::string& id, const ScalarMap& m) {
    for (std::size_t i = 0; i < cfg.num_colors; ++i)
      write_pfm(m, mono_dir / (color_key(id, i) + ".pfm"));
  }
  BackendSpec mono(MapSpace s = MapSpace::kAffineInverseDepth) const {
    return BackendSpec::precomputed_dir(mono_dir.path(), s);
  }
  BackendSpec stereo() const {
    return BackendSpec::precomputed_dir(stereo_dir.path(), MapSpace::kDisparityPx);
  }
};

}  // namespace

TEST_CASE("mono distillation of identical predictions returns that map") {
  Scene sc;
  const ScalarMap gt = gt_plane();
  sc.mono_colors("s", gt.with_space(MapSpace::kAffineInverseDepth));
  const DistillResult r = distill_mono("s", sc.left, box_mask(4, 4, 10, 10), sc.mono(), sc.cfg);
  CHECK(r.label.space() == MapSpace::kAffineInverseDepth);
  for (std::size_t i = 0; i < gt.extent().pixels(); ++i)
    CHECK(std::abs(r.label.value(i) - gt.value(i)) <= 1e-6);
  CHECK(r.palette == sample_palette(0, "s", 3));
  CHECK(r.backend_keys == std::vector<std::string>{"s_c0", "s_c1", "s_c2"});
}

TEST_CASE("mono distillation with one color uses one prediction") {
  Scene sc;
  sc.cfg.num_colors = 1;
  write_pfm(ScalarMap::filled(kW, kH, MapSpace::kAffineInverseDepth, 0.25), sc.mono_dir / "s_c0.pfm");
  const DistillResult r = distill_mono("s", sc.left, box_mask(0, 0, 1, 1), sc.mono(), sc.cfg);
  CHECK(r.label == ScalarMap::filled(kW, kH, MapSpace::kAffineInverseDepth, 0.25));
  CHECK(r.palette.colors.size() == 1);
}

TEST_CASE("mono distillation names the failing color") {
  Scene sc;
  write_pfm(ScalarMap::filled(kW, kH, MapSpace::kAffineInverseDepth, 1.0), sc.mono_dir / "s_c0.pfm");
  try {
    distill_mono("s", sc.left, box_mask(0, 0, 2, 2), sc.mono(), sc.cfg);
    FAIL("missing color prediction accepted");
  } catch (const BackendError& e) {
    const std::string what = e.what();
    CHECK(what.find("color 1") != std::string::npos);
    CHECK(what.find("s_c1") != std::string::npos);
  }
}

TEST_CASE("merged labels recover gt from an affine mono prediction") {
  Scene sc;
  const ScalarMap gt = gt_plane();
  const TomMask mask = box_mask(6, 3, 15, 11);
  std::vector<double> base(gt.values().begin(), gt.values().end());
  for (int i = 0; i < kW * kH; ++i)
    if (mask.labels()[i]) base[i] = 3.0 + (i % 7);
  write_pfm(ScalarMap(kW, kH, MapSpace::kDisparityPx, base), sc.stereo_dir / "s_base.pfm");
  sc.mono_colors("s", affine_of(gt, 0.5, 2.0, MapSpace::kAffineInverseDepth));

  const DistillResult r =
      distill_stereo_merged("s", sc.left, sc.right, mask, sc.mono(), sc.stereo(), sc.cfg);
  REQUIRE(r.alignment.has_value());
  CHECK(r.alignment->scale == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.alignment->shift == doctest::Approx(-4.0).epsilon(1e-12));
  CHECK(r.fit_pixels == kW * kH - mask.count());
  CHECK(r.backend_keys.front() == "s_base");
  CHECK(r.backend_keys.size() == 4);
  const ScalarMap stored = read_pfm(sc.stereo_dir / "s_base.pfm", MapSpace::kDisparityPx);
  for (std::size_t i = 0; i < gt.extent().pixels(); ++i) {
    CHECK(std::abs(r.label.value(i) - gt.value(i)) <= 1e-6);
    if (!mask.labels()[i]) CHECK(r.label.value(i) == stored.value(i));
  }
}

TEST_CASE("merged labels triangulate metric mono depth") {
  Scene sc;
  const StereoCalibration calib(400.0, 50.0);
  const ScalarMap gt = gt_plane();
  const TomMask mask = box_mask(2, 2, 8, 8);
  write_pfm(gt, sc.stereo_dir / "s_base.pfm");
  sc.mono_colors("s", disparity_to_depth(gt, calib));
  CHECK_THROWS_AS(distill_stereo_merged("s", sc.left, sc.right, mask,
                                        sc.mono(MapSpace::kDepthMm), sc.stereo(), sc.cfg),
                  DomainError);
  const DistillResult r = distill_stereo_merged("s", sc.left, sc.right, mask,
                                                sc.mono(MapSpace::kDepthMm), sc.stereo(),
                                                sc.cfg, calib);
  CHECK(r.alignment->scale == doctest::Approx(1.0).epsilon(1e-6));
  for (std::size_t i = 0; i < gt.extent().pixels(); ++i)
    CHECK(std::abs(r.label.value(i) - gt.value(i)) <= 1e-4);
}

TEST_CASE("merged labels with an empty mask equal the base map") {
  Scene sc;
  std::mt19937_64 rng(6);
  const ScalarMap base = testing::random_map(rng, kW, kH, MapSpace::kDisparityPx, 0, 50, 0.1);
  write_pfm(base, sc.stereo_dir / "s_base.pfm");
  sc.mono_colors("s", testing::random_map(rng, kW, kH, MapSpace::kAffineInverseDepth, -1, 1));
  const DistillResult r = distill_stereo_merged("s", sc.left, sc.right, TomMask::filled(kW, kH, 0),
                                                sc.mono(), sc.stereo(), sc.cfg);
  CHECK(encode_pfm(r.label) == encode_pfm(base));
}

TEST_CASE("merged labels with a full mask have no support") {
  Scene sc;
  write_pfm(gt_plane(), sc.stereo_dir / "s_base.pfm");
  sc.mono_colors("s", gt_plane().with_space(MapSpace::kAffineInverseDepth));
  CHECK_THROWS_AS(distill_stereo_merged("s", sc.left, sc.right, TomMask::filled(kW, kH, 1),
                                        sc.mono(), sc.stereo(), sc.cfg),
                  InsufficientSupport);
}

TEST_CASE("virtual disparity with an empty mask is the stereo prediction") {
  Scene sc;
  sc.cfg.num_colors = 1;
  const ScalarMap gt = gt_plane();
  write_pfm(gt, sc.stereo_dir / "s_c0.pfm");
  const DistillResult r = distill_stereo_virtual_disparity(
      "s", sc.left, sc.right, TomMask::filled(kW, kH, 0), gt, sc.stereo(), sc.cfg);
  CHECK(r.label == gt);
  CHECK(r.dropped_warp_pixels == 0);
  CHECK_FALSE(r.alignment.has_value());
}

TEST_CASE("virtual disparity in-paints the warped right mask") {
  Scene sc;
  sc.cfg.num_colors = 1;
  const ScalarMap gt = ScalarMap::filled(kW, kH, MapSpace::kDisparityPx, 4.0);
  const TomMask mask = box_mask(10, 5, 13, 7);
  const InpaintColor c = sample_palette(0, "s", 1).colors[0];
  write_pfm(gt, sc.stereo_dir / "s_c0.pfm");
  const BackendSpec spy = BackendSpec::external_exec(
      "cp {left} '" + (sc.mono_dir / "l.png").string() + "' && cp {right} '" +
          (sc.mono_dir / "r.png").string() + "' && cp '" +
          (sc.stereo_dir / "s_c0.pfm").string() + "' {output}",
      MapSpace::kDisparityPx);
  const DistillResult r =
      distill_stereo_virtual_disparity("s", sc.left, sc.right, mask, gt, spy, sc.cfg);
  CHECK(r.label == gt);
  const RgbImage l = read_rgb(sc.mono_dir / "l.png");
  const RgbImage rr = read_rgb(sc.mono_dir / "r.png");
  CHECK(l == inpaint(sc.left, mask, c));
  CHECK(rr == inpaint(sc.right, box_mask(6, 5, 9, 7), c));
}
