#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "oracles.hpp"
#include "spatialcc/eval.hpp"
#include "spatialcc/field_io.hpp"
#include "spatialcc/pipeline.hpp"
#include "spatialcc/synth.hpp"

using namespace spatialcc;

namespace {

LinearImage uniform(std::size_t w, std::size_t h, const Vec3& c) {
  LinearImage img(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) img.set(x, y, c);
  return img;
}

SparseField random_sparse(std::mt19937_64& rng, std::size_t w, std::size_t h, std::size_t beta) {
  SparseField s{w, h, {}};
  for (const auto& b : blockify(w, h, beta).blocks) {
    SparseEntry e;
    e.x = b.cx;
    e.y = b.cy;
    e.illuminant = normalize_to_unit(oracle::random_unit(rng));
    s.entries.push_back(e);
  }
  return s;
}

double max_field_error(const IlluminantField& f, const SparseField& s, double sigma, double radius = -1) {
  double worst = 0;
  for (std::size_t y = 0; y < f.height(); ++y)
    for (std::size_t x = 0; x < f.width(); ++x)
      if (!f.flagged.test(x, y))
        worst = std::max(worst, oracle::angle_deg(f.at(x, y), oracle::interpolate_at(s, sigma, x, y, radius)));
  return worst;
}

}  // namespace

TEST(Blockify, Examples) {
  const auto g = blockify(16, 16, 8);
  ASSERT_EQ(g.blocks.size(), 4u);
  const std::vector<std::pair<std::size_t, std::size_t>> centers{{4, 4}, {12, 4}, {4, 12}, {12, 12}};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(g.blocks[i].cx, centers[i].first);
    EXPECT_EQ(g.blocks[i].cy, centers[i].second);
  }
  const auto r = blockify(17, 8, 8);
  ASSERT_EQ(r.blocks.size(), 3u);
  EXPECT_EQ(r.blocks[2].rect.width, 1u);
  EXPECT_EQ(r.blocks[2].rect.height, 8u);
  EXPECT_EQ(r.blocks[2].cx, 16u);
  const auto one = blockify(8, 8, 8);
  ASSERT_EQ(one.blocks.size(), 1u);
  EXPECT_EQ(one.blocks[0].cx, 4u);
  EXPECT_THROW(blockify(8, 8, 1), ConfigError);
}

TEST(Blockify, TilesExactlyForManySizes) {
  for (std::size_t w = 1; w <= 30; w += 3) {
    for (std::size_t h = 1; h <= 30; h += 4) {
      for (std::size_t beta : {2u, 3u, 8u, 13u}) {
        const auto g = blockify(w, h, beta);
        std::vector<int> cover(w * h, 0);
        for (const auto& b : g.blocks) {
          EXPECT_LE(b.rect.width, beta);
          EXPECT_LE(b.rect.height, beta);
          EXPECT_GE(b.cx, b.rect.x);
          EXPECT_LT(b.cx, b.rect.x + b.rect.width);
          EXPECT_GE(b.cy, b.rect.y);
          EXPECT_LT(b.cy, b.rect.y + b.rect.height);
          for (std::size_t y = b.rect.y; y < b.rect.y + b.rect.height; ++y)
            for (std::size_t x = b.rect.x; x < b.rect.x + b.rect.width; ++x) ++cover[y * w + x];
        }
        EXPECT_TRUE(std::all_of(cover.begin(), cover.end(), [](int c) { return c == 1; }));
      }
    }
  }
}

TEST(SparseEstimates, UniformTwoIlluminantAndBlack) {
  const Vec3 c{0.2, 0.5, 0.3};
  const auto s = sparse_estimates(uniform(20, 12, c), blockify(20, 12, 8), EstimatorId::gray_world(), Illuminant::white());
  for (const auto& e : s.entries) {
    EXPECT_NEAR(oracle::angle_deg(e.illuminant.rgb(), c), 0.0, 1e-6);
    EXPECT_EQ(e.weight, 1.0);
  }

  const Vec3 l1 = oracle::unit({0.9, 0.5, 0.2}), l2 = oracle::unit({0.2, 0.5, 0.9});
  LinearImage split(32, 16);
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x < 32; ++x) split.set(x, y, x < 16 ? Vec3{0.4 * l1[0], 0.4 * l1[1], 0.4 * l1[2]} : Vec3{0.4 * l2[0], 0.4 * l2[1], 0.4 * l2[2]});
  for (const auto& e : sparse_estimates(split, blockify(32, 16, 8), EstimatorId::gray_world(), Illuminant::white()).entries) {
    EXPECT_LT(oracle::angle_deg(e.illuminant.rgb(), e.x < 16 ? l1 : l2), 1e-6);
  }

  const auto black = sparse_estimates(LinearImage(16, 16), blockify(16, 16, 8), EstimatorId::gray_world(), Illuminant::white());
  EXPECT_EQ(black.degenerate_count(), black.entries.size());
  for (const auto& e : black.entries) EXPECT_EQ(e.illuminant.rgb(), Illuminant::white().rgb());
}

TEST(SparseEstimates, GrayEdgeThinBorderBlockFallsBack) {
  std::mt19937_64 rng(5);
  const auto img = oracle::random_image(rng, 17, 16);
  const auto s = sparse_estimates(img, blockify(17, 16, 8), EstimatorId::gray_edge(), Illuminant::white());
  std::size_t thin = 0;
  for (const auto& e : s.entries) {
    if (e.x == 16) {
      ++thin;
      EXPECT_TRUE(e.degenerate);
    } else {
      EXPECT_FALSE(e.degenerate);
    }
  }
  EXPECT_EQ(thin, 2u);
}

TEST(Interpolate, SingleEntryGivesConstantField) {
  SparseField s{40, 30, {SparseEntry{7, 3, normalize_to_unit({0.1, 0.7, 0.2})}}};
  const auto f = gaussian_interpolate(s, 2.0);
  for (std::size_t y = 0; y < 30; ++y)
    for (std::size_t x = 0; x < 40; ++x)
      for (int c = 0; c < 3; ++c) EXPECT_NEAR(f.at(x, y)[c], s.entries[0].illuminant[c], 1e-12);
  // Far pixels are outside the support and take the nearest entry; they are flagged.
  EXPECT_GT(f.flagged.count(), 0u);
  EXPECT_FALSE(f.flagged.test(7, 3));
}

TEST(Interpolate, SymmetricPairMeetsInTheMiddle) {
  SparseField s{21, 5, {SparseEntry{4, 2, normalize_to_unit({1, 0, 0})}, SparseEntry{16, 2, normalize_to_unit({0, 1, 0})}}};
  const auto f = gaussian_interpolate(s, 6.0);
  const auto mid = f.at(10, 2);
  EXPECT_NEAR(mid[0], std::sqrt(0.5), 1e-12);
  EXPECT_NEAR(mid[1], std::sqrt(0.5), 1e-12);
  EXPECT_EQ(mid[2], 0.0);
}

TEST(Interpolate, MatchesUntruncatedOracle) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 3; ++t) {
    const auto s = random_sparse(rng, 40, 32, 8);
    EXPECT_LE(max_field_error(gaussian_interpolate(s, 24.0), s, 24.0), 1e-6);
    EXPECT_LE(max_field_error(gaussian_interpolate(s, 4.0), s, 4.0, 12), 1e-6);
    EXPECT_GT(max_field_error(gaussian_interpolate(s, 4.0), s, 4.0), 1e-3);
  }
}

TEST(Interpolate, WeightsAndErrors) {
  SparseField s{9, 1, {SparseEntry{0, 0, normalize_to_unit({1, 0, 0}), 3.0}, SparseEntry{8, 0, normalize_to_unit({0, 1, 0}), 1.0}}};
  const auto f = gaussian_interpolate(s, 5.0);
  EXPECT_GT(f.at(4, 0)[0], f.at(4, 0)[1]);
  EXPECT_THROW(gaussian_interpolate(SparseField{4, 4, {}}, 2.0), EmptyFieldError);
  EXPECT_THROW(gaussian_interpolate(s, 0.0), ConfigError);
}

TEST(Interpolate, FieldIsUnitAndInsideEntryCone) {
  std::mt19937_64 rng(7);
  const auto s = random_sparse(rng, 33, 27, 5);
  Vec3 lo{1, 1, 1}, hi{0, 0, 0};
  for (const auto& e : s.entries) {
    const double sum = e.illuminant[0] + e.illuminant[1] + e.illuminant[2];
    for (int c = 0; c < 3; ++c) {
      lo[c] = std::min(lo[c], e.illuminant[c] / sum);
      hi[c] = std::max(hi[c], e.illuminant[c] / sum);
    }
  }
  const auto f = gaussian_interpolate(s, 3.0);
  for (std::size_t y = 0; y < f.height(); ++y) {
    for (std::size_t x = 0; x < f.width(); ++x) {
      const auto v = f.at(x, y);
      EXPECT_NEAR(norm(v), 1.0, 1e-6);
      const double sum = v[0] + v[1] + v[2];
      for (int c = 0; c < 3; ++c) {
        EXPECT_GE(v[c], 0.0);
        EXPECT_GE(v[c] / sum, lo[c] - 1e-12);
        EXPECT_LE(v[c] / sum, hi[c] + 1e-12);
      }
    }
  }
}

TEST(Whiteness, Examples) {
  const auto w = whiteness_map(uniform(5, 5, {0.3, 0.6, 0.1}));
  for (double v : w.angle.values()) EXPECT_NEAR(v, 0.0, 1e-7);

  LinearImage img(2, 1);
  img.set(0, 0, {0.8, 0.0, 0.0});
  img.set(1, 0, {0.0, 0.4, 0.6});
  const auto m = whiteness_map(img);
  // channel means are (0.4, 0.2, 0.3); pixel 0 scales to (2,0,0).
  EXPECT_NEAR(m.angle.at(0, 0), std::acos(1.0 / std::sqrt(3.0)), 1e-12);
  EXPECT_NEAR(m.angle.at(0, 0), 0.9553, 1e-4);

  LinearImage with_black = uniform(3, 1, {0.5, 0.5, 0.5});
  with_black.set(1, 0, {0, 0, 0});
  const auto b = whiteness_map(with_black);
  EXPECT_DOUBLE_EQ(b.angle.at(1, 0), oracle::kPi / 2);
  EXPECT_TRUE(b.zero_pixels.test(1, 0));
  EXPECT_EQ(b.zero_pixels.count(), 1u);

  LinearImage no_blue = uniform(3, 3, {0.5, 0.5, 0.0});
  EXPECT_THROW(whiteness_map(no_blue), DegenerateImageError);
}

TEST(Whiteness, MatchesOracleOnRandomImages) {
  std::mt19937_64 rng(8);
  const auto img = oracle::random_image(rng, 20, 14);
  Vec3 means = oracle::channel_sums(img);
  for (double& m : means) m /= 280.0;
  const auto w = whiteness_map(img);
  for (std::size_t y = 0; y < 14; ++y)
    for (std::size_t x = 0; x < 20; ++x) {
      EXPECT_NEAR(w.angle.at(x, y), oracle::whiteness(img.get(x, y), means), 1e-9);
      EXPECT_LE(w.angle.at(x, y), oracle::kPi / 2);
    }
}

TEST(Confidence, Examples) {
  const auto flat = confidence_map(ScalarMap(4, 4, 0.7));
  EXPECT_TRUE(flat.degenerate);
  for (double v : flat.value.values()) EXPECT_EQ(v, 1.0);

  ScalarMap two(2, 2);
  two.values()[0] = two.values()[1] = 0.0;
  two.values()[2] = two.values()[3] = 1.0;
  const auto c = confidence_map(two);
  const double want = 1.0 / (2 * oracle::kPi * 0.25) * std::exp(-0.25 / 0.5);
  for (double v : c.value.values()) EXPECT_NEAR(v, want, 1e-12);

  ScalarMap three(3, 1);
  three.values()[0] = 0.1;
  three.values()[1] = 0.2;
  three.values()[2] = 0.3;
  const auto p = confidence_map(three);
  const double sd = std::sqrt(2.0 / 300.0);
  EXPECT_NEAR(p.value.at(1, 0), 1.0 / (2 * oracle::kPi * sd * sd), 1e-9);
  EXPECT_GT(p.value.at(1, 0), p.value.at(0, 0));
  EXPECT_NEAR(p.value.at(0, 0), oracle::confidence(0.1, 0.2, sd), 1e-9);
}

TEST(GlobalEstimate, Examples) {
  SparseField pair{4, 4, {SparseEntry{0, 0, normalize_to_unit({1, 0, 0})}, SparseEntry{2, 2, normalize_to_unit({0, 1, 0})}}};
  const auto g = global_estimate(pair);
  EXPECT_NEAR(g[0], std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(g[1], std::sqrt(0.5), 1e-15);
  const auto l = normalize_to_unit({0.3, 0.2, 0.9});
  EXPECT_EQ(global_estimate(SparseField{4, 4, {SparseEntry{1, 1, l}, SparseEntry{3, 3, l}}}).rgb(), l.rgb());
  EXPECT_THROW(global_estimate(SparseField{4, 4, {}}), EmptyFieldError);
}

TEST(GlobalEstimate, MatchesRasterMeanOracle) {
  std::mt19937_64 rng(9);
  SparseField s = random_sparse(rng, 100, 80, 8);
  s.entries.resize(100);
  for (auto& e : s.entries) e.weight = 0.3;  // weights do not enter the global reduction
  const auto g = global_estimate(s);
  const auto o = oracle::raster_mean_global(s);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(g[c], o[c], 1e-12);
}

TEST(Correction, InvertsImageFormation) {
  std::mt19937_64 rng(10);
  const auto refl = oracle::random_image(rng, 12, 9);
  const auto l = normalize_to_unit({0.8, 0.5, 0.3});
  LinearImage img = refl;
  for (std::size_t y = 0; y < 9; ++y)
    for (std::size_t x = 0; x < 12; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) *= l[c];
  const auto out = apply_correction(img, l);
  for (std::size_t i = 0; i < out.values().size(); ++i) EXPECT_NEAR(out.values()[i] * std::sqrt(3.0), refl.values()[i], 1e-9);
  EXPECT_EQ(apply_correction(img, Illuminant::white()), img);
  EXPECT_EQ(apply_correction(img, IlluminantField(12, 9)), img);
}

TEST(Correction, ClampsTinyComponents) {
  IlluminantField f(2, 1, normalize_to_unit({1, 0, 0}));
  EXPECT_EQ(count_clamped_components(f), 4u);
  const auto out = apply_correction(LinearImage(2, 1, 1e-3), f);
  for (double v : out.values()) EXPECT_TRUE(std::isfinite(v));
}

TEST(Pipeline, UniformImageGivesConstantField) {
  const Vec3 c{0.2, 0.3, 0.6};
  PipelineParams p;
  const auto f = pixelwise_estimate(uniform(37, 29, c), p);
  for (std::size_t y = 0; y < 29; ++y)
    for (std::size_t x = 0; x < 37; ++x) EXPECT_LT(oracle::angle_deg(f.at(x, y), c), 1e-6);
}

TEST(Pipeline, HalfSplitFarFromSeam) {
  SynthConfig cfg;
  cfg.width = 256;
  cfg.height = 64;
  cfg.first = normalize_to_unit({0.8, 0.5, 0.3});
  cfg.second = normalize_to_unit({0.3, 0.5, 0.8});
  cfg.uniform_reflectance = 0.5;
  const auto scene = synth_scene(1, cfg);
  const auto r = run_pipeline(scene.image, PipelineParams{});
  EXPECT_LE(max_field_error(r.field, r.sparse, 24.0, 72), 1e-6);
  // Pixels further than the support radius from the seam only see one illuminant.
  for (std::size_t y = 0; y < 64; ++y) {
    EXPECT_LT(angular_error(r.field.at(0, y), cfg.first.rgb()), 0.2);
    EXPECT_LT(angular_error(r.field.at(255, y), cfg.second.rgb()), 0.2);
  }
}

TEST(Pipeline, ConfidenceWithUniformWhitenessChangesNothing) {
  const auto img = uniform(40, 24, {0.3, 0.4, 0.2});
  PipelineParams off, on;
  on.confidence = Confidence::whiteness;
  const auto a = run_pipeline(img, off);
  const auto b = run_pipeline(img, on);
  EXPECT_TRUE(b.confidence_degenerate);
  for (std::size_t y = 0; y < 24; ++y)
    for (std::size_t x = 0; x < 40; ++x) EXPECT_LE(angular_error(a.field.at(x, y), b.field.at(x, y)), 1e-9);
}

TEST(Pipeline, ConfidenceWeightsAreSampledAtCenters) {
  std::mt19937_64 rng(13);
  const auto img = oracle::random_image(rng, 24, 16, 0.05, 0.9);
  PipelineParams p;
  p.confidence = Confidence::whiteness;
  const auto r = run_pipeline(img, p);
  const auto conf = confidence_map(whiteness_map(img).angle);
  for (const auto& e : r.sparse.entries) EXPECT_EQ(e.weight, conf.value.at(e.x, e.y));
}

TEST(Pipeline, ScaleInvariant) {
  std::mt19937_64 rng(14);
  const auto img = oracle::random_image(rng, 40, 32, 0.0, 0.09);
  for (auto conf : {Confidence::off, Confidence::whiteness}) {
    PipelineParams p;
    p.confidence = conf;
    const auto base = pixelwise_estimate(img, p);
    for (double k : {0.1, 0.5, 2.0, 10.0}) {
      const auto other = pixelwise_estimate(scaled(img, k), p);
      for (std::size_t y = 0; y < 32; ++y)
        for (std::size_t x = 0; x < 40; ++x) EXPECT_LE(angular_error(base.at(x, y), other.at(x, y)), 1e-5);
    }
  }
}

TEST(Pipeline, SaturatedPixelsAreIgnoredInBlocks) {
  LinearImage img = uniform(8, 8, {0.2, 0.4, 0.4});
  img.set(3, 3, {1.0, 0.1, 0.1});
  PipelineParams p;
  const auto r = run_pipeline(img, p);
  EXPECT_LT(angular_error(r.global.rgb(), {0.2, 0.4, 0.4}), 1e-9);
  p.saturation_threshold = 0.0;
  EXPECT_GT(angular_error(run_pipeline(img, p).global.rgb(), {0.2, 0.4, 0.4}), 0.1);
}

TEST(Pipeline, CorrectedSceneLooksWhite) {
  SynthConfig cfg;
  cfg.width = cfg.height = 128;
  cfg.mean_gray = true;
  cfg.first = cfg.second = normalize_to_unit({0.9, 0.6, 0.3});
  const auto scene = synth_scene(3, cfg);
  PipelineParams p;
  const auto corrected = apply_correction(scene.image, pixelwise_estimate(scene.image, p));
  const auto again = pixelwise_estimate(corrected, p);
  std::size_t close = 0;
  for (std::size_t y = 0; y < 128; ++y)
    for (std::size_t x = 0; x < 128; ++x) close += angular_error(again.at(x, y), Illuminant::white().rgb()) <= 1.0;
  EXPECT_GE(close, static_cast<std::size_t>(0.95 * 128 * 128));
  const auto global_corrected = apply_correction(scene.image, run_pipeline(scene.image, p).global);
  EXPECT_LT(angular_error(gray_world(Region::whole(global_corrected)), Illuminant::white()), 1.0);
}

TEST(FieldIo, RoundTripWithinQuantization) {
  std::mt19937_64 rng(15);
  const auto s = random_sparse(rng, 30, 20, 6);
  const auto f = gaussian_interpolate(s, 5.0);
  const auto path = (std::filesystem::temp_directory_path() / "spatialcc_field_rt.png").string();
  save_field_png(f, path);
  const auto back = load_field_png(path);
  for (std::size_t y = 0; y < 20; ++y)
    for (std::size_t x = 0; x < 30; ++x) EXPECT_LT(angular_error(f.at(x, y), back.at(x, y)), 0.01);
  EXPECT_EQ(back.flagged.count(), 0u);
}
