#include <gtest/gtest.h>

#include "spatialcc/illusion.hpp"

using namespace spatialcc;

namespace {

void expect_masks_consistent(const IllusionStimulus& s) {
  for (std::size_t y = 0; y < s.image.height(); ++y)
    for (std::size_t x = 0; x < s.image.width(); ++x) {
      EXPECT_FALSE(s.target_mask.test(x, y) && s.inducer_mask.test(x, y));
      if (s.target_mask.test(x, y)) ASSERT_EQ(s.image.get(x, y), s.spec.target_color);
    }
}

}  // namespace

TEST(Illusion, LadderSpecsAreValidAndDeterministic) {
  for (const auto& spec : default_illusion_ladder()) {
    const auto a = generate_illusion(spec);
    const auto b = generate_illusion(spec);
    EXPECT_EQ(a.image, b.image) << to_string(spec.pattern);
    EXPECT_GT(a.target_mask.count(), 0u);
    EXPECT_GT(a.inducer_mask.count(), 0u);
    expect_masks_consistent(a);
  }
}

TEST(Illusion, ZeroThicknessHasNoInducers) {
  for (auto spec : default_illusion_ladder()) {
    spec.inducer_thickness = 0;
    const auto s = generate_illusion(spec);
    EXPECT_EQ(s.inducer_mask.count(), 0u);
    for (std::size_t y = 0; y < s.image.height(); ++y)
      for (std::size_t x = 0; x < s.image.width(); ++x)
        if (!s.target_mask.test(x, y)) ASSERT_EQ(s.image.get(x, y), spec.background);
  }
}

TEST(Illusion, InducerMatchingBackgroundIsInvisible) {
  auto spec = default_illusion_ladder()[4];
  ASSERT_EQ(spec.pattern, Pattern::concentric_disks);
  spec.inducer_colors = {spec.background, {0.9, 0.1, 0.1}};
  const auto s = generate_illusion(spec);
  expect_masks_consistent(s);
  std::size_t invisible = 0;
  for (std::size_t y = 0; y < s.image.height(); ++y)
    for (std::size_t x = 0; x < s.image.width(); ++x)
      if (s.inducer_mask.test(x, y) && s.image.get(x, y) == spec.background) ++invisible;
  EXPECT_GT(invisible, 0u);
}

TEST(Illusion, ExtractTargetMatchesZeroThicknessRendering) {
  for (const auto& spec : default_illusion_ladder()) {
    const auto s = generate_illusion(spec);
    auto plain = spec;
    plain.inducer_thickness = 0;
    EXPECT_EQ(extract_target(s, spec.background), generate_illusion(plain).image) << to_string(spec.pattern);
    EXPECT_EQ(masked_variance(extract_target(s, spec.background), s.target_mask), 0.0);
  }
}

TEST(Illusion, StripeBandsFollowPeriod) {
  auto spec = ladder_stripe_spec(10.0);  // period 10 px
  spec.geometry.rects = {{0, 0, 512, 512}};
  const auto s = generate_illusion(spec);
  // Along one column, the target/inducer pattern repeats every 10 rows.
  for (std::size_t y = 20; y < 480; ++y) {
    EXPECT_EQ(s.target_mask.test(100, y), s.target_mask.test(100, y + 10)) << y;
    EXPECT_EQ(s.inducer_mask.test(100, y), s.inducer_mask.test(100, y + 10)) << y;
  }
}

TEST(Illusion, SpecValidation) {
  IllusionSpec spec = ladder_stripe_spec(8);
  spec.inducer_frequency = 0;
  EXPECT_THROW(generate_illusion(spec), SpecError);
  spec = ladder_stripe_spec(8);
  spec.width = 32;
  EXPECT_THROW(validate(spec), SpecError);
  spec = ladder_stripe_spec(8);
  spec.inducer_colors = {{1.2, 0, 0}};
  EXPECT_THROW(validate(spec), SpecError);
  spec = ladder_stripe_spec(8);
  spec.geometry.rects = {{600, 600, 10, 10}};
  EXPECT_THROW(generate_illusion(spec), SpecError);
  spec = ladder_stripe_spec(8);
  spec.inducer_thickness = -1;
  spec.inducer_colors.clear();
  try {
    validate(spec);
    FAIL();
  } catch (const SpecError& e) {
    const std::string m = e.what();
    EXPECT_NE(m.find("inducerThickness"), std::string::npos);
    EXPECT_NE(m.find("inducerColors"), std::string::npos);
  }
}

TEST(Components, FourConnected) {
  PixelMask m(5, 3);
  m.set(0, 0);
  m.set(1, 0);
  m.set(2, 1);  // diagonal only: separate
  m.set(4, 2);
  const auto c = connected_components(m);
  EXPECT_EQ(c.count, 3u);
  EXPECT_EQ(c.labels.at(0, 0), c.labels.at(1, 0));
  EXPECT_NE(c.labels.at(1, 0), c.labels.at(2, 1));
  EXPECT_EQ(c.labels.at(3, 0), 0u);
}

TEST(Shift, IdentityIsExactlyZero) {
  for (const auto& spec : default_illusion_ladder()) {
    const auto s = generate_illusion(spec);
    const auto r = assimilation_shift(s, s.image);
    ASSERT_FALSE(r.regions.empty());
    for (const auto& reg : r.regions) EXPECT_EQ(reg.delta, 0.0);
  }
}

TEST(Shift, CompleteAssimilationReachesTheBound) {
  const auto s = generate_illusion(default_illusion_ladder()[5]);
  const auto base = assimilation_shift(s, s.image);
  const auto comps = connected_components(s.target_mask);
  LinearImage out = s.image;
  for (std::size_t y = 0; y < out.height(); ++y)
    for (std::size_t x = 0; x < out.width(); ++x)
      if (const auto l = comps.labels.at(x, y)) out.set(x, y, base.regions[l - 1].inducer);
  const auto r = assimilation_shift(s, out);
  for (const auto& reg : r.regions) {
    ASSERT_TRUE(reg.has_inducer);
    EXPECT_NEAR(reg.delta, reg.angle_before, 1e-6);
    EXPECT_GT(reg.delta, 0.0);
  }
}

TEST(Shift, Errors) {
  const auto s = generate_illusion(ladder_stripe_spec(8));
  EXPECT_THROW(assimilation_shift(s, LinearImage(10, 10)), ConfigError);
  EXPECT_EQ(local_inducer_radius(2.0), 6u);
  EXPECT_EQ(local_inducer_radius(2.5), 7u);
}

TEST(Reproduce, DiskIllusionShiftsTowardInducers) {
  const auto s = generate_illusion(default_illusion_ladder()[4]);
  const auto run = reproduce_illusion(s, PipelineParams{});
  for (const auto& r : run.shift.regions) EXPECT_GT(r.delta, 0.0);
  EXPECT_GT(masked_variance(run.estimates, s.target_mask), 0.0);
  EXPECT_EQ(run.corrected.width(), s.image.width());
}
