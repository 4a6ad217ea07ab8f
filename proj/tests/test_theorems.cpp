#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "stathm/error.hpp"
#include "stathm/theorems.hpp"

namespace stathm {
namespace {

TEST(Schedule, AlphaTwo) {
  const auto s = schedule_params(2.0, 1);
  EXPECT_DOUBLE_EQ(s.beta, 0.8);
  EXPECT_DOUBLE_EQ(s.gamma, 0.4);
  EXPECT_DOUBLE_EQ(s.alpha1, 1.2);
  EXPECT_EQ(s.k_height, 2);
  EXPECT_EQ(s.k_ratio, 10);
  EXPECT_EQ(s.k_slope, 15);
  EXPECT_EQ(s.k0, 15);
  EXPECT_EQ(s.k(3), 18);
}

TEST(Schedule, HeightBoundIsTheSmallestK) {
  for (const double alpha : {1.5, 2.0, 3.0, 7.0}) {
    for (const std::int64_t h0 : {1, 2, 5, 40, 1000}) {
      const auto s = schedule_params(alpha, h0);
      const auto ok = [&](std::int64_t k) { return std::pow(2.0, s.beta * k) > 2.0 * h0; };
      EXPECT_TRUE(ok(s.k_height)) << alpha << " " << h0;
      EXPECT_FALSE(ok(s.k_height - 1)) << alpha << " " << h0;
      EXPECT_EQ(s.k0, std::max({s.k_height, s.k_ratio, s.k_slope}));
    }
  }
}

TEST(Schedule, WedgeMembership) {
  const auto s = schedule_params(2.0, 1);
  const double lift = std::ceil(std::pow(2.0, s.beta * s.k(0)));
  const Site y{0, 0};
  EXPECT_TRUE(s.in_wedge(0, y, {0, static_cast<std::int64_t>(lift)}));
  EXPECT_FALSE(s.in_wedge(0, y, {0, static_cast<std::int64_t>(lift) - 1}));
  EXPECT_GT(s.strip_half_width(2), s.strip_half_width(1));
  EXPECT_DOUBLE_EQ(s.strip_half_width(0), 0.0);
}

TEST(Calculus, HoldsOnRandomSamples) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 50.0), a(1.0001, 6.0);
  std::vector<CalculusSample> samples;
  for (int i = 0; i < 2000; ++i) samples.push_back({u(gen), u(gen), a(gen)});
  EXPECT_TRUE(calculus_check(samples).passed());
  EXPECT_THROW(calculus_check({{1.0, 1.0, 0.5}}), Error);
}

TEST(Rectangle, SquareCenterIsOneHalf) {
  for (const std::int64_t k : {1, 2, 4, 8}) EXPECT_NEAR(rectangle_escape(k, 1, 0), 0.5, 1e-12) << k;
}

TEST(Rectangle, TableChecksPass) {
  const auto r = rectangle_escape_table({2, 4, 8}, {1, 2, 3, 4});
  EXPECT_TRUE(r.passed());
  for (const auto& row : r.levels) {
    const auto k = row["k"].get<std::int64_t>();
    const auto n = row["n"].get<std::int64_t>();
    EXPECT_LE(row["p_max"].get<double>(), 1.0);
    if (n == 1) EXPECT_NEAR(rectangle_escape(k, 1, 0), 0.5, 1e-12);
  }
}

TEST(Rectangle, MonteCarloAgrees) {
  RectangleOptions o;
  o.method = Method::kMc;
  o.mc.chains = 40000;
  const double exact = rectangle_escape(2, 2, 2);
  const double mc = rectangle_escape(2, 2, 2, o);
  EXPECT_NEAR(mc, exact, 4 * std::sqrt(exact * (1 - exact) / 40000));
}

TEST(Thm1, WedgeSlopeOne) {
  const auto r = verify_thm1({1, 1}, 4, 5);
  EXPECT_TRUE(r.passed());
  ASSERT_EQ(r.levels.size(), 5U);
  EXPECT_LE(r.bounds["max_escape"].get<double>(), 0.49);
  std::ostringstream os;
  r.write_text(os);
  EXPECT_NE(os.str().find("passed"), std::string::npos);
  const auto j = r.to_json();
  EXPECT_EQ(j["name"], r.name);
  EXPECT_TRUE(j.contains("assertions"));
}

TEST(Thm1, FailsWhenTheMarginIsImpossible) {
  Thm1Options o;
  o.escape_margin = 0.49;
  EXPECT_FALSE(verify_thm1({1, 1}, 2, 3, o).passed());
}

TEST(EnvelopeCore, NoExtras) {
  const auto c = envelope_core(2.0, {});
  EXPECT_TRUE(c.exceptional.empty());
  EXPECT_EQ(c.h0, 1);
  EXPECT_EQ(c.d0, (Rect{-1, 1, 0, 1}));
  EXPECT_EQ(c.b0, (std::vector<Site>{{-1, 1}, {1, 1}}));
}

TEST(EnvelopeCore, ExtraRaisesTheCore) {
  const auto c = envelope_core(2.0, {{0, 5}});
  EXPECT_EQ(c.exceptional, (std::vector<Site>{{0, 5}}));
  EXPECT_EQ(c.h0, 5);
  EXPECT_EQ(c.d0, (Rect{-25, 25, 0, 5}));
  for (const Site s : c.b0) EXPECT_TRUE(c.d0.contains(s));
  EXPECT_NE(std::find(c.b0.begin(), c.b0.end(), Site{0, 5}), c.b0.end());
}

TEST(Thm2, PersistenceAtSmallScale) {
  Thm2Options o;
  o.schedule = {16, 32, 64};
  const auto r = verify_thm2(2.0, {}, o);
  EXPECT_TRUE(r.passed());
  double prev = INFINITY;
  for (const auto& row : r.levels) {
    const double v = row["measure_B0"].get<double>();
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, prev);
    prev = v;
  }
}

TEST(Visits, ExactIdentity) {
  const auto r = visits_identity_check({1, 4, 8, 16});
  EXPECT_TRUE(r.passed());
  for (const auto& row : r.levels) {
    EXPECT_NEAR(row["value"].get<double>(), 4.0 * row["N"].get<double>(), 1e-6);
  }
}

TEST(Visits, MonteCarloIdentity) {
  VisitsOptions o;
  o.method = Method::kMc;
  o.mc.chains = 20000;
  o.mc.threads = 2;
  EXPECT_TRUE(visits_identity_check({1, 4}, o).passed());
}

TEST(Method, Parse) {
  EXPECT_EQ(parse_method("exact"), Method::kExact);
  EXPECT_EQ(parse_method("mc"), Method::kMc);
  EXPECT_EQ(to_string(Method::kMc), "mc");
  EXPECT_THROW(parse_method("sor"), Error);
}

}  // namespace
}  // namespace stathm
