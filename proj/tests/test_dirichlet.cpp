#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "stathm/dirichlet.hpp"
#include "stathm/error.hpp"
#include "stathm/walk.hpp"

namespace stathm {
namespace {

ScalarField field_for(const SiteSet& b, std::int64_t N, std::int64_t W = 0) {
  TruncatedDomain d;
  d.N = N;
  d.W = W;
  d.obstacle = b;
  return green_field(d);
}

template <class Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIo;
}

TEST(Domain, WindowHeight) {
  TruncatedDomain d;
  d.N = 8;
  EXPECT_EQ(d.height(), 8);
  EXPECT_EQ(d.half_width(), 64);
  d.obstacle = SiteSet::from_sites({{0, 20}});
  EXPECT_EQ(d.height(), 20);
  d.obstacle = SiteSet::from_sites({{0, 100}});
  EXPECT_EQ(d.height(), 40);
  d.top_margin = 2;
  EXPECT_EQ(d.height(), 10);
}

TEST(PointMeasure, FlatFloorIsOne) {
  for (const std::int64_t N : {1, 8, 16}) {
    const auto f = field_for(SiteSet{}, N, 128);
    EXPECT_NEAR(exact_point_measure(f, {0, 0}), 1.0, 1e-9) << N;
    EXPECT_NEAR(exact_point_measure(f, {17, 0}), 1.0, 1e-9) << N;
  }
}

TEST(PointMeasure, SumOfIncomingEdges) {
  const auto f = field_for(SiteSet{}, 8, 64);
  const Site x{0, 0};
  double sum = 0.0;
  for (const Site y : {Site{1, 0}, Site{-1, 0}, Site{0, 1}}) {
    sum += exact_edge_measure(f, make_edge(x, y));
  }
  EXPECT_DOUBLE_EQ(sum, exact_point_measure(f, x));
}

TEST(PointMeasure, MassBalance) {
  const auto b = make_counterexample(3).united(SiteSet::from_sites({{10, 2}, {11, 2}}));
  const auto f = field_for(b, 16);
  const auto r = measure_report(f);
  double total = 0.0;
  for (const auto& p : r.point) total += p.value;
  EXPECT_NEAR(total + r.leaked, r.sources, 1e-9 * r.sources);
  double hat_total = 0.0;
  for (const auto& h : r.hat) hat_total += h.value;
  double b_total = 0.0;
  for (const auto& p : r.point) {
    if (p.site.x2 > 0) b_total += p.value;
  }
  // Outer measure over the vacant sites next to B collects the same flux as
  // B itself.
  EXPECT_NEAR(hat_total, b_total, 1e-9 * r.sources);
}

TEST(PointMeasure, MirrorSymmetry) {
  const auto b = SiteSet::from_sites({{2, 1}, {2, 2}, {3, 1}, {-4, 1}});
  const auto f = field_for(b, 12);
  const auto g = field_for(b.mirrored(), 12);
  for (const Site x : {Site{2, 2}, Site{3, 1}, Site{-4, 1}, Site{0, 0}}) {
    EXPECT_NEAR(exact_point_measure(f, x), exact_point_measure(g, {-x.x1, x.x2}), 1e-10);
  }
}

TEST(PointMeasure, CounterexampleDecays) {
  const auto b = make_counterexample(8);
  const double v8 = exact_point_measure(field_for(b, 8), {0, 1});
  const double v64 = exact_point_measure(field_for(b, 64), {0, 1});
  EXPECT_GT(v8, 0.0);
  EXPECT_LE(v64, 0.5 * v8);
}

TEST(PointMeasure, Preconditions) {
  const auto b = SiteSet::from_sites({{0, 1}});
  const auto f = field_for(b, 4, 8);
  EXPECT_EQ(code_of([&] { exact_point_measure(f, {1, 1}); }), ErrorCode::kInvalidTarget);
  EXPECT_EQ(code_of([&] { exact_point_measure(f, {20, 0}); }), ErrorCode::kOutOfWindow);
  EXPECT_EQ(code_of([&] { exact_edge_measure(f, {{1, 1}, {2, 1}}); }), ErrorCode::kInvalidEdge);
  EXPECT_EQ(code_of([&] { exact_hat_measure(f, {3, 1}); }), ErrorCode::kInvalidSite);
  EXPECT_EQ(code_of([&] { exact_hat_measure(f, {0, 1}); }), ErrorCode::kInvalidSite);
  EXPECT_EQ(code_of([&] { field_for(b, 0); }), ErrorCode::kInvalidArgument);
}

TEST(HatMeasure, DegreeWeighted) {
  const auto b = SiteSet::from_sites({{-1, 1}, {1, 1}});
  const auto f = field_for(b, 8);
  // (0,1) sits between two sites of B.
  EXPECT_DOUBLE_EQ(exact_hat_measure(f, {0, 1}), 2.0 * f.value({0, 1}) / 4.0);
}

// Exact and MC estimators on small random obstacles.
TEST(McAgreement, RandomSmallConfigs) {
  std::mt19937_64 gen(2024);
  int violations = 0, checks = 0;
  for (int trial = 0; trial < 6; ++trial) {
    std::vector<Site> sites;
    std::uniform_int_distribution<int> x(-4, 4), y(1, 3);
    for (int i = 0; i < 5; ++i) sites.push_back({x(gen), y(gen)});
    const auto b = SiteSet::from_sites(sites);
    const std::int64_t N = 6, W = 16;
    const auto f = field_for(b, N, W);
    McOptions o;
    o.chains = 20000;
    o.seed = 100 + static_cast<std::uint64_t>(trial);
    o.reflect_half_width = W;
    o.threads = 2;
    const Site x0 = b.sites_in({-8, 8, 0, 8}).back();
    const auto pe = mc_point_and_edges(b, x0, N, o);
    ++checks;
    violations += std::abs(pe.point.mean - exact_point_measure(f, x0)) > 4 * pe.point.std_error + 1e-12;
    for (int d = 0; d < 4; ++d) {
      const Site y = neighbor(x0, d);
      if (b.contains(y) || y.x2 <= 0) continue;
      ++checks;
      violations += std::abs(pe.edge[d].mean - exact_edge_measure(f, make_edge(x0, y))) >
                    4 * pe.edge[d].std_error + 1e-12;
    }
    const auto hat_sites = outer_boundary(b, {-8, 8, 0, 8});
    const auto h = mc_hat_measure(b, hat_sites.front(), N, o);
    ++checks;
    violations += std::abs(h.mean - exact_hat_measure(f, hat_sites.front())) > 4 * h.std_error + 1e-12;
  }
  EXPECT_LE(violations, 1) << "of " << checks;
}

TEST(Hitting, GamblersRuin) {
  HittingOptions o;
  o.reflect_half_width = 4;
  const auto above = [](std::int64_t h) { return [h](Site s) { return s.x2 >= h; }; };
  const auto below = [](std::int64_t h) { return [h](Site s) { return s.x2 <= h; }; };
  EXPECT_NEAR(hitting_probability(above(8), below(2), {0, 4}, o), 1.0 / 3.0, 1e-9);
  std::mt19937_64 gen(7);
  for (int i = 0; i < 10; ++i) {
    std::uniform_int_distribution<int> d(1, 20);
    const std::int64_t a = d(gen), b = a + d(gen), c = b + d(gen);
    const double p = hitting_probability(above(c), below(a), {1, b}, o);
    EXPECT_NEAR(p, double(b - a) / double(c - a), 1e-9) << a << " " << b << " " << c;
  }
}

TEST(Hitting, Conventions) {
  HittingOptions o;
  o.reflect_half_width = 3;
  const auto a = [](Site s) { return s.x2 >= 4; };
  const auto b = [](Site s) { return s.x2 <= 0; };
  const HittingField f(a, b, {{0, 2}}, o);
  EXPECT_DOUBLE_EQ(f.probability({0, 4}, TimeConvention::kHitting), 1.0);
  EXPECT_DOUBLE_EQ(f.probability({0, 0}, TimeConvention::kHitting), 0.0);
  // Exit convention from the line x2 = 4: one step down lands at height 3.
  // Exit convention: the first step from the line decides among neighbors.
  EXPECT_NEAR(f.probability({0, 4}, TimeConvention::kExit), 0.25 + 0.5 + 0.25 * 0.75, 1e-9);
  EXPECT_NEAR(f.probability({0, 0}, TimeConvention::kExit), 0.25 * 0.25, 1e-9);
}

TEST(Hitting, NotEnclosed) {
  const auto a = [](Site s) { return s.x2 >= 4; };
  const auto b = [](Site s) { return s.x2 <= 0; };
  HittingOptions o;
  o.max_sites = 10000;
  EXPECT_EQ(code_of([&] { hitting_probability(a, b, {0, 2}, o); }), ErrorCode::kNotEnclosed);
}

// Lazy vertical walk killed at 0 and L: 4 N (L - N) / L visits to level N.
TEST(Hitting, VisitCountsInABoundedStrip) {
  for (const std::int64_t N : {1, 4, 8}) {
    const std::int64_t L = 12;
    HittingOptions o;
    o.reflect_half_width = 2;
    const HittingField f([L](Site s) { return s.x2 >= L; }, [](Site s) { return s.x2 <= 0; },
                         {{0, N}}, o, [N](Site s) { return s.x2 == N; });
    EXPECT_NEAR(f.expected_visits({0, N}), 4.0 * N * (L - N) / L, 1e-9) << N;
    EXPECT_NEAR(f.expected_visits({2, N}), 4.0 * N * (L - N) / L, 1e-9) << N;
  }
}

TEST(Hitting, StartsOutsideTheSeedsAndAtWalls) {
  HittingOptions o;
  o.reflect_half_width = 3;
  const HittingField f([](Site s) { return s.x2 >= 6; }, [](Site s) { return s.x2 <= 0; }, {{0, 3}}, o);
  EXPECT_NEAR(f.probability({3, 3}), 0.5, 1e-9);
  EXPECT_NEAR(f.probability({-3, 5}), 5.0 / 6.0, 1e-9);
}

// Walkers from a higher line first hit L_N one per site, so below the
// source line the field of a finite set does not depend on N.
TEST(PointMeasure, IndependentOfNAboveAFiniteSet) {
  const auto b = SiteSet::from_sites({{0, 1}, {0, 2}, {3, 1}});
  for (const std::int64_t W : {32, 96}) {
    const double v4 = exact_point_measure(field_for(b, 4, W), {0, 2});
    const double v16 = exact_point_measure(field_for(b, 16, W), {0, 2});
    EXPECT_NEAR(v4, v16, 1e-9);
  }
}

TEST(Converge, SingleSiteDifferencesShrink) {
  ConvergeOptions o;
  o.schedule = {16, 32, 64};
  const auto t = converge_measure(SetFamily::fixed(SiteSet::from_sites({{0, 1}})), {0, 1}, o);
  ASSERT_EQ(t.rows.size(), 3U);
  double prev = INFINITY;
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    const double diff = std::abs(t.rows[i].value - t.rows[i - 1].value);
    EXPECT_LT(diff, prev);
    prev = diff;
  }
  EXPECT_THROW(converge_measure(SetFamily{}, {0, 0}, ConvergeOptions{{16, 8}}), Error);
}

}  // namespace
}  // namespace stathm
