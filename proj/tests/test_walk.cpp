#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "stathm/rng.hpp"
#include "stathm/walk.hpp"

namespace stathm {
namespace {

bool within(const Estimate& e, double expect, double sigmas = 4.0) {
  return std::abs(e.mean - expect) <= sigmas * e.std_error + 1e-12;
}

TEST(Rng, StreamsAreReproducibleAndDistinct) {
  RngStream a(5, 0), b(5, 0), c(5, 1), d(6, 0);
  std::set<std::uint64_t> firsts;
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
  firsts.insert(RngStream(5, 0)());
  firsts.insert(c());
  firsts.insert(d());
  EXPECT_EQ(firsts.size(), 3U);
}

TEST(Rng, DirectionIsUniform) {
  RngStream r(1, 0);
  std::array<int, 4> count{};
  const int n = 400000;
  for (int i = 0; i < n; ++i) ++count[static_cast<std::size_t>(r.direction())];
  for (const int c : count) EXPECT_NEAR(c / static_cast<double>(n), 0.25, 5 * std::sqrt(0.1875 / n));
}

TEST(Rng, UniformPosInUnitInterval) {
  RngStream r(2, 3);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = r.uniform_pos();
    ASSERT_GT(u, 0.0);
    ASSERT_LE(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}

TEST(FoldReflect, MatchesStayPutWalls) {
  const std::int64_t w = 3;
  for (std::int64_t x = -40; x <= 40; ++x) {
    const auto f = fold_reflect(x, w);
    const auto g = fold_reflect(x + 1, w);
    ASSERT_GE(f, -w);
    ASSERT_LE(f, w);
    ASSERT_LE(std::abs(g - f), 1);
    if (g == f) ASSERT_TRUE(f == w || f == -w) << x;
    if (x >= -w && x <= w) ASSERT_EQ(f, x);
  }
}

// Excursion above a line sampled in one shot against step-by-step walks,
// compared on the events {steps <= horizon, dx = k}.
TEST(Excursion, MatchesDirectSimulation) {
  RngStream fast(3, 0), slow(3, 1);
  const int n = 200000;
  const std::uint64_t horizon = 64;
  std::map<std::int64_t, int> fast_hist, slow_hist;
  for (int i = 0; i < n; ++i) {
    const auto e = sample_excursion(fast);
    if (e.steps <= horizon) ++fast_hist[std::clamp<std::int64_t>(e.dx, -3, 3) * 1000 + e.steps / 8];
    Site p{0, 1};
    std::uint64_t steps = 1;
    while (p.x2 > 0 && steps < horizon) {
      p = step(slow, p);
      ++steps;
    }
    if (p.x2 == 0) ++slow_hist[std::clamp<std::int64_t>(p.x1, -3, 3) * 1000 + steps / 8];
  }
  for (const auto& [key, c] : slow_hist) {
    const double ps = c / double(n), pf = fast_hist[key] / double(n);
    EXPECT_NEAR(pf, ps, 5 * std::sqrt(2 * ps * (1 - ps) / n) + 2.0 / n) << key;
  }
  // P(steps == 2): the move after the up step goes straight back down.
  RngStream r(4, 0);
  int two = 0;
  for (int i = 0; i < n; ++i) two += sample_excursion(r).steps == 2;
  EXPECT_NEAR(two / double(n), 0.25, 5 * std::sqrt(0.1875 / n));
}

TEST(Walk, AbsorberMustContainFloor) {
  RngStream r(1, 0);
  EXPECT_THROW(run_until_absorbed(r, {0, 3}, [](Site) { return false; }), Error);
}

TEST(Walk, StartOnAbsorberStopsAtOnce) {
  RngStream r(1, 0);
  const auto rec = run_until_absorbed(r, {2, 0}, [](Site s) { return s.x2 <= 0; });
  EXPECT_EQ(rec.absorbed_at, (Site{2, 0}));
  EXPECT_FALSE(rec.previous.has_value());
  EXPECT_EQ(rec.steps, 0U);
}

TEST(Walk, StepCapRaises) {
  RngStream r(1, 0);
  WalkOptions o;
  o.step_cap = 3;
  try {
    run_until_absorbed(r, {0, 50}, [](Site s) { return s.x2 <= 0; }, o);
    FAIL();
  } catch (const CapExceeded& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCapExceeded);
    EXPECT_EQ(e.partial().steps, 3U);
  }
}

// Absorption law with and without the excursion shortcut above the obstacle.
TEST(Walk, FreeAboveShortcutKeepsTheLaw) {
  const auto absorbed = [](Site s) { return s.x2 <= 0 || (s.x2 <= 2 && std::abs(s.x1) <= 1); };
  const int n = 40000;
  std::map<std::int64_t, int> hist[2];
  int done[2] = {0, 0};
  for (int mode = 0; mode < 2; ++mode) {
    WalkOptions o;
    o.reflect_half_width = 4;
    // Step-by-step walks have heavy-tailed return times; the rare capped
    // walk is dropped from the reference histogram.
    o.step_cap = 1'000'000;
    if (mode == 1) o.free_above = 2;
    for (int i = 0; i < n; ++i) {
      RngStream r(9, static_cast<std::uint64_t>(i) + mode * 1000000ULL);
      try {
        const auto rec = run_until_absorbed(r, {3, 3}, absorbed, o);
        ++hist[mode][rec.absorbed_at.x1 * 10 + rec.absorbed_at.x2];
        ++done[mode];
      } catch (const CapExceeded&) {
        ASSERT_EQ(mode, 0);
      }
    }
  }
  EXPECT_GT(done[0], n - n / 100);
  for (const auto& [key, c] : hist[0]) {
    const double p0 = c / double(done[0]), p1 = hist[1][key] / double(done[1]);
    EXPECT_NEAR(p0, p1, 5 * std::sqrt(2 * p0 * (1 - p0) / n) + 3e-3) << key;
  }
}

TEST(RunChains, IndependentOfThreadCount) {
  const auto fn = [](std::uint64_t i) {
    RngStream r(77, i);
    return static_cast<double>(r() % 1000);
  };
  EXPECT_EQ(run_chains(1000, 1, fn), run_chains(1000, 4, fn));
}

TEST(Summarize, BatchMeans) {
  std::vector<double> s(4096);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<double>(i % 2);
  const auto e = summarize_scores(s, 1);
  EXPECT_DOUBLE_EQ(e.mean, 0.5);
  EXPECT_EQ(e.n_batches, 64U);
  EXPECT_EQ(e.n_chains, 4096U);
  const auto c = summarize_scores(std::vector<double>(100, 2.0), 1);
  EXPECT_EQ(c.std_error, 0.0);
  EXPECT_EQ(c.n_batches, 100U);
}

TEST(McEstimators, FlatFloorUnitMeasure) {
  McOptions o;
  o.chains = 40000;
  o.reflect_half_width = 32;
  o.threads = 2;
  const auto e = mc_point_measure(SiteSet{}, {0, 0}, 4, o);
  EXPECT_TRUE(within(e, 1.0)) << e.mean << " +- " << e.std_error;
}

TEST(McEstimators, ThreadCountDoesNotChangeResults) {
  McOptions o;
  o.chains = 5000;
  o.reflect_half_width = 16;
  const auto b = SiteSet::from_sites({{0, 1}, {0, 2}});
  o.threads = 1;
  const auto one = mc_point_and_edges(b, {0, 2}, 4, o);
  o.threads = 3;
  const auto three = mc_point_and_edges(b, {0, 2}, 4, o);
  EXPECT_EQ(one.point.mean, three.point.mean);
  EXPECT_EQ(one.point.std_error, three.point.std_error);
  for (int d = 0; d < 4; ++d) EXPECT_EQ(one.edge[d].mean, three.edge[d].mean);
}

TEST(McEstimators, PointIsSumOfEdges) {
  McOptions o;
  o.chains = 5000;
  o.reflect_half_width = 16;
  const auto b = SiteSet::from_sites({{0, 1}});
  const auto pe = mc_point_and_edges(b, {0, 1}, 6, o);
  double sum = 0.0;
  for (const auto& e : pe.edge) sum += e.mean;
  EXPECT_NEAR(sum, pe.point.mean, 1e-12);
  EXPECT_EQ(pe.edge[3].mean, 0.0);
}

TEST(McEstimators, GamblersRuin) {
  McOptions o;
  o.chains = 40000;
  const auto e = mc_escape_probability({0, 4}, [](Site s) { return s.x2 >= 8; },
                                       [](Site s) { return s.x2 <= 2; }, o);
  EXPECT_TRUE(within(e, 1.0 / 3.0)) << e.mean;
}

TEST(McEstimators, VisitsToLine) {
  McOptions o;
  o.chains = 40000;
  const auto e = mc_visits_to_line({0, 5}, 5, o);
  EXPECT_TRUE(within(e, 20.0)) << e.mean << " +- " << e.std_error;
}

TEST(McEstimators, Preconditions) {
  McOptions o;
  o.chains = 10;
  const auto b = SiteSet::from_sites({{0, 1}});
  EXPECT_THROW(mc_point_measure(b, {1, 1}, 4, o), Error);
  EXPECT_THROW(mc_point_measure(b, {0, 1}, 1, o), Error);
  EXPECT_THROW(mc_hat_measure(b, {3, 1}, 4, o), Error);
  EXPECT_THROW(mc_edge_measure(b, {{1, 1}, {2, 1}}, 4, o), Error);
  EXPECT_THROW(mc_edge_measure(b, {{0, 1}, {0, 0}}, 1, o), Error);
  o.chains = 0;
  EXPECT_THROW(mc_point_measure(b, {0, 1}, 4, o), Error);
}

}  // namespace
}  // namespace stathm
