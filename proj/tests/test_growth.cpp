#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "stathm/error.hpp"
#include "stathm/growth.hpp"

namespace stathm {
namespace {

TEST(Window, Canonical) {
  GrowthWindow w{8, LateralPolicy::kPeriodic};
  EXPECT_EQ(w.x_lo(), -4);
  EXPECT_EQ(w.x_hi(), 3);
  EXPECT_EQ(w.canonical({4, 2}), (Site{-4, 2}));
  EXPECT_EQ(w.canonical({-5, 2}), (Site{3, 2}));
  EXPECT_EQ(w.canonical({0, -1}), std::nullopt);
  w.policy = LateralPolicy::kFrozen;
  EXPECT_EQ(w.canonical({4, 2}), std::nullopt);
  EXPECT_EQ(w.canonical({3, 2}), (Site{3, 2}));
  EXPECT_THROW(parse_lateral_policy("open"), Error);
}

TEST(ClockSet, MatchesNaiveSampling) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> coord(-20, 20);
  std::uniform_real_distribution<double> rate(0.0, 3.0), unit(0.0, 1.0);
  ClockSet c;
  std::map<Site, double> naive;
  for (int it = 0; it < 5000; ++it) {
    const Site s{coord(gen), coord(gen) + 20};
    if (unit(gen) < 0.3) {
      c.erase(s);
      naive.erase(s);
    } else {
      const double r = rate(gen);
      c.set(s, r);
      naive[s] = r;
    }
    if (it % 97 != 0) continue;
    double total = 0.0;
    for (const auto& [_, r] : naive) total += r;
    ASSERT_NEAR(c.total(), total, 1e-9);
    ASSERT_EQ(c.size(), naive.size());
    if (naive.empty()) continue;
    // Fenwick order is slot order, so check the sampled site's interval.
    for (int k = 0; k < 5; ++k) {
      const Site y = c.sample(unit(gen) * c.total());
      ASSERT_TRUE(naive.count(y));
      ASSERT_GT(naive[y], 0.0);
    }
  }
  for (const auto& [s, r] : naive) EXPECT_DOUBLE_EQ(c.rate(s), r);
  const double before = c.total();
  c.rebuild();
  EXPECT_NEAR(c.total(), before, 1e-9);
}

TEST(ClockSet, SamplingFrequencies) {
  ClockSet c;
  c.set({0, 1}, 1.0);
  c.set({1, 1}, 2.0);
  c.set({2, 1}, 3.0);
  c.set({3, 1}, 4.0);
  c.erase({3, 1});
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::map<Site, int> hits;
  const int n = 60000;
  for (int i = 0; i < n; ++i) ++hits[c.sample(unit(gen) * c.total())];
  EXPECT_EQ(hits.size(), 3U);
  for (int k = 0; k < 3; ++k) {
    const double p = (k + 1) / 6.0;
    EXPECT_NEAR((hits[Site{k, 1}] / double(n)), p, 5 * std::sqrt(p * (1 - p) / n));
  }
  ClockSet empty;
  EXPECT_THROW(empty.sample(0.0), Error);
}

TEST(Growth, FirstEventIsExponentialWithRateWidth) {
  GrowthOptions o;
  o.window = {32, LateralPolicy::kPeriodic};
  o.t_end = 0.5;
  std::vector<double> t;
  for (std::uint64_t r = 0; r < 2000; ++r) {
    o.stream = r;
    const auto s = simulate_sqrt_process(o);
    ASSERT_FALSE(s.log.empty());
    t.push_back(s.log.front().t);
  }
  std::sort(t.begin(), t.end());
  double d = 0.0;
  const double n = static_cast<double>(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double f = 1.0 - std::exp(-32.0 * t[i]);
    d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
  }
  // Kolmogorov-Smirnov at the 0.1% level.
  EXPECT_LT(d, 1.95 / std::sqrt(n));
}

void expect_valid_log(const GrowthState& s) {
  std::unordered_set<Site, SiteHash> occ;
  for (std::int64_t x = s.window.x_lo(); x <= s.window.x_hi(); ++x) occ.insert({x, 0});
  for (const Site x : s.initial) occ.insert(x);
  double prev = 0.0;
  for (const auto& e : s.log) {
    ASSERT_GT(e.t, prev);
    ASSERT_LE(e.t, s.t);
    prev = e.t;
    ASSERT_FALSE(occ.count(e.site)) << e.site.x1 << "," << e.site.x2;
    ASSERT_GE(e.site.x2, 1);
    ASSERT_GE(e.site.x1, s.window.x_lo());
    ASSERT_LE(e.site.x1, s.window.x_hi());
    bool adjacent = false;
    for (int d = 0; d < 4; ++d) {
      const auto c = s.window.canonical(neighbor(e.site, d));
      if (c && occ.count(*c)) adjacent = true;
    }
    ASSERT_TRUE(adjacent);
    occ.insert(e.site);
  }
  EXPECT_EQ(occ, s.occupied);
}

TEST(Growth, EventLogIsValid) {
  for (const auto policy : {LateralPolicy::kPeriodic, LateralPolicy::kFrozen}) {
    GrowthOptions o;
    o.window = {16, policy};
    o.t_end = 2.0;
    o.check_every = 50;
    const auto s = simulate_sqrt_process(o, {{0, 1}, {0, 2}});
    EXPECT_GT(s.log.size(), 10U);
    expect_valid_log(s);
    EXPECT_EQ(s.snapshot().size(), s.occupied_at(s.t).size());
    EXPECT_LE(s.occupied_at(0.0).size(), s.snapshot().size());
    std::ostringstream os;
    write_event_log_csv(os, s);
    const std::string csv = os.str();
    EXPECT_EQ(static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n')),
              s.log.size() + 1);
  }
}

TEST(Growth, ClocksMatchRebuild) {
  GrowthOptions o;
  o.window = {16, LateralPolicy::kPeriodic};
  o.t_end = 1.5;
  const auto s = simulate_sqrt_process(o);
  const ClockSet c = rebuild_clocks(s);
  double total = 0.0;
  for (const auto& [y, slot] : c.slots()) {
    double r = 0.0;
    for (int d = 0; d < 4; ++d) {
      const auto cx = s.window.canonical(neighbor(y, d));
      if (cx && s.occupied.count(*cx)) r += birth_rate(*cx);
    }
    EXPECT_NEAR(c.rate(y), r, 1e-12);
    total += r;
  }
  EXPECT_NEAR(c.total(), total, 1e-9);
}

double total_rate(const GrowthState& s, const std::unordered_set<Site, SiteHash>& occ) {
  double r = 0.0;
  for (const Site x : occ) {
    for (int d = 0; d < 4; ++d) {
      const auto y = s.window.canonical(neighbor(x, d));
      if (y && !occ.count(*y)) r += birth_rate(x);
    }
  }
  return r;
}

TEST(Growth, EventCountMatchesCompensator) {
  GrowthOptions o;
  o.window = {16, LateralPolicy::kPeriodic};
  o.t_end = 1.0;
  const auto runs = simulate_replicas(o, 100, 2);
  std::vector<double> m;
  for (const auto& s : runs) {
    std::unordered_set<Site, SiteHash> occ;
    for (std::int64_t x = s.window.x_lo(); x <= s.window.x_hi(); ++x) occ.insert({x, 0});
    double prev = 0.0, a = 0.0;
    for (const auto& e : s.log) {
      a += total_rate(s, occ) * (e.t - prev);
      prev = e.t;
      occ.insert(e.site);
    }
    a += total_rate(s, occ) * (s.t - prev);
    m.push_back(static_cast<double>(s.log.size()) - a);
  }
  double mean = 0.0, var = 0.0;
  for (const double x : m) mean += x / m.size();
  for (const double x : m) var += (x - mean) * (x - mean) / (m.size() - 1);
  EXPECT_LT(std::abs(mean), 3 * std::sqrt(var / m.size()));
}

TEST(Growth, ColumnHeightsAreExchangeable) {
  GrowthOptions o;
  o.window = {16, LateralPolicy::kPeriodic};
  o.t_end = 2.0;
  const auto runs = simulate_replicas(o, 200, 2);
  std::vector<std::vector<std::int64_t>> h(16);
  for (const auto& s : runs) {
    const auto b = s.snapshot();
    for (std::int64_t x = -8; x < 8; ++x) h[x + 8].push_back(b.column_height(x));
  }
  for (auto& v : h) std::sort(v.begin(), v.end());
  const double n = 200.0;
  // Two-sample Kolmogorov-Smirnov at the 1% level against column 0.
  const double crit = 1.628 * std::sqrt(2.0 / n);
  for (std::size_t c = 1; c < h.size(); ++c) {
    double d = 0.0;
    for (std::int64_t v = 0; v <= std::max(h[0].back(), h[c].back()); ++v) {
      const auto fa = std::upper_bound(h[0].begin(), h[0].end(), v) - h[0].begin();
      const auto fb = std::upper_bound(h[c].begin(), h[c].end(), v) - h[c].begin();
      d = std::max(d, std::abs(fa - fb) / n);
    }
    EXPECT_LT(d, crit) << "column " << c;
  }
}

TEST(Growth, FrozenWindowStaysInside) {
  GrowthOptions o;
  o.window = {8, LateralPolicy::kFrozen};
  o.t_end = 3.0;
  const auto s = simulate_sqrt_process(o);
  for (const Site x : s.occupied) {
    EXPECT_GE(x.x1, -4);
    EXPECT_LE(x.x1, 3);
  }
}

TEST(Growth, EventBudget) {
  GrowthOptions o;
  o.t_end = 100.0;
  o.max_events = 10;
  try {
    simulate_sqrt_process(o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEventBudget);
  }
}

TEST(Growth, ReplicasIndependentOfThreads) {
  GrowthOptions o;
  o.window = {16, LateralPolicy::kPeriodic};
  o.t_end = 1.0;
  const auto a = simulate_replicas(o, 6, 1);
  const auto b = simulate_replicas(o, 6, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    ASSERT_EQ(a[i].log.size(), b[i].log.size());
    for (std::size_t j = 0; j < a[i].log.size(); ++j) {
      EXPECT_EQ(a[i].log[j].t, b[i].log[j].t);
      EXPECT_EQ(a[i].log[j].site, b[i].log[j].site);
    }
  }
  EXPECT_NE(a[0].log.front().t, a[1].log.front().t);
}

TEST(Growth, TiledObstacleRepeats) {
  GrowthOptions o;
  o.window = {8, LateralPolicy::kPeriodic};
  o.t_end = 0.01;
  const auto s = simulate_sqrt_process(o, {{1, 1}});
  const auto tiled = tiled_obstacle(s, s.occupied_at(0.0), 20);
  EXPECT_TRUE(tiled.contains({1, 1}));
  EXPECT_TRUE(tiled.contains({9, 1}));
  EXPECT_TRUE(tiled.contains({-7, 1}));
  EXPECT_FALSE(tiled.contains({2, 1}));
}

TEST(HarmonicStep, SingleSiteIsSymmetricAndDeterministic) {
  const auto B = SiteSet::from_sites({{0, 1}});
  HarmonicStepOptions o;
  o.N = 16;
  const auto a = harmonic_growth_step(B, o);
  const auto b = harmonic_growth_step(B, o);
  EXPECT_EQ(a.site, b.site);
  std::map<Site, double> v;
  double total = 0.0;
  for (const auto& e : a.table) v[e.site] = e.value, total += e.value;
  EXPECT_NEAR(total, a.total, 1e-12);
  ASSERT_TRUE(v.count({1, 1}) && v.count({-1, 1}) && v.count({0, 2}));
  EXPECT_NEAR((v[Site{1, 1}]), (v[Site{-1, 1}]), 1e-9);
  EXPECT_GT((v[Site{0, 2}]), (v[Site{1, 1}]));
  EXPECT_TRUE(v.count(a.site));
}

TEST(HarmonicStep, DrawFrequenciesFollowTheTable) {
  const auto B = SiteSet::from_sites({{0, 1}});
  HarmonicStepOptions o;
  o.N = 16;
  const auto ref = harmonic_growth_step(B, o);
  std::map<Site, int> hits;
  const int n = 400;
  for (int i = 0; i < n; ++i) {
    o.seed = 100 + i;
    ++hits[harmonic_growth_step(B, o).site];
  }
  for (const auto& e : ref.table) {
    const double p = e.value / ref.total;
    EXPECT_NEAR(hits[e.site] / double(n), p, 5 * std::sqrt(p * (1 - p) / n) + 1e-3);
  }
}

TEST(HarmonicStep, EmptySetIsFrozen) {
  HarmonicStepOptions o;
  o.N = 8;
  try {
    harmonic_growth_step(SiteSet{}, o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFrozenState);
  }
}

TEST(Probe, PositiveOnAGrownCluster) {
  GrowthOptions o;
  o.window = {16, LateralPolicy::kPeriodic};
  o.t_end = 1.0;
  const auto s = simulate_sqrt_process(o);
  const auto p = positivity_probe(s, std::int64_t{64}, 128);
  EXPECT_GT(p.max_measure, 0.0);
  EXPECT_GT(p.sites, 0U);
  const auto p0 = positivity_probe(s, 0.0, 64, 128);
  EXPECT_NEAR(p0.max_measure, 1.0, 1e-6);
  EXPECT_THROW(positivity_probe(s, std::int64_t{64}, 4), Error);
}

TEST(HeightBound, SingleSite) {
  const auto B = SiteSet::from_sites({{0, 4}});
  const auto h = height_bound_check(B, 64);
  ASSERT_TRUE(h.C.has_value());
  EXPECT_GT(*h.C, 0.0);
  EXPECT_EQ(h.argmax, (Site{0, 4}));
  EXPECT_FALSE(height_bound_check(SiteSet{}, 16).C.has_value());
}

}  // namespace
}  // namespace stathm
