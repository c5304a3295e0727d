#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "spatialcc/estimators.hpp"
#include "spatialcc/eval.hpp"

using namespace spatialcc;

namespace {

LinearImage from_pixels(std::initializer_list<Vec3> px) {
  LinearImage img(px.size(), 1);
  std::size_t x = 0;
  for (const auto& p : px) img.set(x++, 0, p);
  return img;
}

void expect_direction(const Illuminant& got, const Vec3& want, double tol = 1e-12) {
  const Vec3 u = oracle::unit(want);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(got[c], u[c], tol) << "channel " << c;
}

LinearImage uniform(std::size_t w, std::size_t h, const Vec3& c) {
  LinearImage img(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) img.set(x, y, c);
  return img;
}

}  // namespace

TEST(GrayWorld, Examples) {
  const auto img = from_pixels({{0.2, 0.4, 0.6}, {0.6, 0.4, 0.2}});
  expect_direction(gray_world(Region::whole(img)), {1, 1, 1});
  const Vec3 c{0.3, 0.1, 0.7};
  expect_direction(gray_world(Region::whole(uniform(5, 4, c))), c);
  EXPECT_THROW(gray_world(Region::whole(LinearImage(3, 3))), DegenerateVectorError);
}

TEST(GrayWorld, MatchesChannelSumOracle) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const auto img = oracle::random_image(rng, 8, 8);
    expect_direction(gray_world(Region::whole(img)), oracle::channel_sums(img));
  }
}

TEST(WhitePatch, Examples) {
  const auto img = from_pixels({{0.1, 0.5, 0.2}, {0.9, 0.3, 0.3}});
  const auto l = white_patch(Region::whole(img));
  EXPECT_NEAR(l[0], 0.8393, 1e-4);
  EXPECT_NEAR(l[1], 0.4663, 1e-4);
  EXPECT_NEAR(l[2], 0.2798, 1e-4);
  expect_direction(l, {0.9, 0.5, 0.3});
  expect_direction(white_patch(Region::whole(from_pixels({{1, 1, 1}, {0.2, 0.9, 0.1}}))), {1, 1, 1});
  const Vec3 c{0.3, 0.1, 0.7};
  expect_direction(white_patch(Region::whole(uniform(3, 3, c))), c);
}

TEST(ShadesOfGray, Examples) {
  std::mt19937_64 rng(2);
  const auto img = oracle::random_image(rng, 9, 7);
  const auto a = shades_of_gray(Region::whole(img), 1.0);
  const auto b = gray_world(Region::whole(img));
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(a[c], b[c], 1e-12);
  const Vec3 c{0.3, 0.1, 0.7};
  expect_direction(shades_of_gray(Region::whole(uniform(4, 4, c)), 6.0), c);
  EXPECT_THROW(shades_of_gray(Region::whole(img), 0.5), ConfigError);
}

TEST(GrayEdge, StepEdgeIsProportionalToStep) {
  LinearImage img(10, 6);
  for (std::size_t y = 0; y < 6; ++y)
    for (std::size_t x = 5; x < 10; ++x) img.set(x, y, {0.8, 0.4, 0.2});
  expect_direction(gray_edge(Region::whole(img), 1.0, 1.0), {0.8, 0.4, 0.2}, 1e-9);
}

TEST(GrayEdge, ConstantAndTinyRegions) {
  EXPECT_THROW(gray_edge(Region::whole(uniform(6, 6, {0.4, 0.2, 0.1}))), DegenerateVectorError);
  EXPECT_THROW(gray_edge(Region::whole(LinearImage(2, 5, 0.3))), ConfigError);
}

TEST(GrayEdge, MatchesLoopOracle) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto img = oracle::random_image(rng, 16, 16);
    expect_direction(gray_edge(Region::whole(img), 6.0, 1.0), oracle::gray_edge(img, 6.0, 1.0), 1e-9);
  }
  const auto img = oracle::random_image(rng, 8, 8);
  expect_direction(gray_edge(Region::whole(img), 2.0, 2.5), oracle::gray_edge(img, 2.0, 2.5), 1e-9);
}

TEST(GrayEdge, KernelIsTruncatedAndNormalized) {
  const auto k = truncated_gaussian_kernel(1.0);
  EXPECT_EQ(k.size(), 7u);
  double s = 0;
  for (double v : k) s += v;
  EXPECT_NEAR(s, 1.0, 1e-15);
  EXPECT_EQ(k[0], k[6]);
}

TEST(Region, SubRectAndExclusion) {
  LinearImage img(4, 4, 0.1);
  img.set(3, 3, {0.9, 0.1, 0.1});
  PixelMask ex(4, 4);
  ex.set(3, 3);
  expect_direction(gray_world(Region(img, Rect{2, 2, 2, 2}, &ex)), {1, 1, 1});
  PixelMask all(4, 4, true);
  // Excluding everything falls back to the full region.
  expect_direction(white_patch(Region(img, Rect{2, 2, 2, 2}, &all)), {0.9, 0.1, 0.1});
  EXPECT_THROW(Region(img, Rect{3, 3, 2, 1}), ConfigError);
}

TEST(Registry, NamesRoundTripAndDispatch) {
  const std::vector<std::string> names{"gray-world", "white-patch", "shades-of-gray:p=6", "gray-edge:p=6,sigma=1"};
  const auto reg = estimator_registry();
  ASSERT_EQ(reg.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(to_string(reg[i]), names[i]);
    EXPECT_EQ(to_string(parse_estimator(names[i])), names[i]);
  }
  EXPECT_EQ(to_string(parse_estimator("shades-of-gray")), "shades-of-gray:p=6");
  EXPECT_EQ(to_string(parse_estimator("gray-edge:sigma=2.5,p=3")), "gray-edge:p=3,sigma=2.5");
  for (const char* bad : {"grey-world", "gray-world:p=2", "shades-of-gray:p=0.5", "gray-edge:sigma=0", "white-patch:", "shades-of-gray:p"}) {
    EXPECT_THROW(parse_estimator(bad), ConfigError) << bad;
  }

  const auto img = from_pixels({{0.1, 0.5, 0.2}, {0.9, 0.3, 0.3}});
  EXPECT_EQ(estimate(EstimatorId::white_patch(), Region::whole(img)).rgb(), white_patch(Region::whole(img)).rgb());
  expect_direction(estimate(parse_estimator("gray-world"), Region::whole(uniform(3, 3, {0.5, 0.5, 0.5}))), {1, 1, 1});
}

// Properties over random images.
class EstimatorProperties : public ::testing::TestWithParam<EstimatorId> {};

TEST_P(EstimatorProperties, ScaleInvariant) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 20; ++t) {
    const auto img = oracle::random_image(rng, 16, 16);
    const auto base = estimate(GetParam(), Region::whole(img));
    for (double k : {0.1, 0.5, 2.0, 10.0}) {
      EXPECT_LE(angular_error(base, estimate(GetParam(), Region::whole(scaled(img, k)))), 1e-6);
    }
  }
}

TEST_P(EstimatorProperties, ChannelEquivariant) {
  std::mt19937_64 rng(22);
  std::array<int, 3> perm{0, 1, 2};
  const auto img = oracle::random_image(rng, 12, 12);
  const auto base = estimate(GetParam(), Region::whole(img));
  do {
    LinearImage p(img.width(), img.height());
    for (std::size_t y = 0; y < img.height(); ++y)
      for (std::size_t x = 0; x < img.width(); ++x)
        for (int c = 0; c < 3; ++c) p.at(x, y, c) = img.at(x, y, perm[c]);
    const auto out = estimate(GetParam(), Region::whole(p));
    for (int c = 0; c < 3; ++c) EXPECT_EQ(out[c], base[perm[c]]);
  } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_P(EstimatorProperties, OutputIsUnitAndNonNegative) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 20; ++t) {
    const auto l = estimate(GetParam(), Region::whole(oracle::random_image(rng, 8, 8)));
    EXPECT_NEAR(norm(l.rgb()), 1.0, 1e-9);
    for (int c = 0; c < 3; ++c) EXPECT_GE(l[c], 0.0);
  }
}

INSTANTIATE_TEST_SUITE_P(All, EstimatorProperties, ::testing::ValuesIn(estimator_registry()),
                         [](const auto& info) {
                           std::string n = to_string(info.param);
                           std::replace_if(n.begin(), n.end(), [](char c) { return !std::isalnum(static_cast<unsigned char>(c)); }, '_');
                           return n;
                         });

// Gradients depend on layout, so gray edge is left out.
TEST(EstimatorShuffle, LayoutIndependentEstimators) {
  std::mt19937_64 rng(24);
  const auto img = oracle::random_image(rng, 10, 10);
  std::vector<std::size_t> order(100);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  LinearImage s(10, 10);
  for (std::size_t i = 0; i < 100; ++i) s.set(i % 10, i / 10, img.get(order[i] % 10, order[i] / 10));
  for (const auto& id : {EstimatorId::gray_world(), EstimatorId::white_patch(), EstimatorId::shades_of_gray()})
    EXPECT_LE(angular_error(estimate(id, Region::whole(img)), estimate(id, Region::whole(s))), 1e-9) << to_string(id);
}

TEST(ShadesOfGray, LargeExponentApproachesWhitePatch) {
  std::mt19937_64 rng(25);
  for (int t = 0; t < 50; ++t) {
    const auto img = oracle::random_image(rng, 16, 16, 0.01, 1.0);
    EXPECT_LE(angular_error(shades_of_gray(Region::whole(img), 64.0), white_patch(Region::whole(img))), 0.5);
  }
}
