#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "stathm/error.hpp"
#include "stathm/lattice.hpp"

namespace stathm {
namespace {

SiteSet column(std::int64_t x1, std::int64_t h, bool floor = false) {
  SiteSet::Builder b;
  b.add_column(x1, h, floor);
  return std::move(b).build();
}

TEST(Site, OrderingIsRowMajor) {
  std::vector<Site> v{{2, 1}, {-1, 1}, {5, 0}, {0, 2}};
  std::sort(v.begin(), v.end());
  EXPECT_EQ(v, (std::vector<Site>{{5, 0}, {-1, 1}, {2, 1}, {0, 2}}));
}

TEST(Site, NeighborOrderAndDirections) {
  const Site o{3, 4};
  EXPECT_EQ(neighbor(o, 0), (Site{4, 4}));
  EXPECT_EQ(neighbor(o, 1), (Site{3, 5}));
  EXPECT_EQ(neighbor(o, 2), (Site{2, 4}));
  EXPECT_EQ(neighbor(o, 3), (Site{3, 3}));
  for (int d = 0; d < 4; ++d) EXPECT_EQ(direction_between(o, neighbor(o, d)), d);
  EXPECT_EQ(direction_between(o, {4, 5}), -1);
  EXPECT_TRUE(adjacent(o, {3, 5}));
  EXPECT_EQ(l1_distance({0, 0}, {-3, 2}), 5);
}

TEST(Site, MakeEdgeRejectsNonNeighbors) {
  EXPECT_NO_THROW(make_edge({0, 0}, {0, 1}));
  try {
    make_edge({0, 0}, {1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidEdge);
  }
}

TEST(SiteSet, ColumnRunsAndExtras) {
  SiteSet::Builder b;
  b.add_column(0, 3).add_site({0, 5}).add_site({2, 1}).add_site({2, 2});
  const auto s = std::move(b).build();
  EXPECT_TRUE(s.contains({0, 1}));
  EXPECT_TRUE(s.contains({0, 3}));
  EXPECT_FALSE(s.contains({0, 4}));
  EXPECT_FALSE(s.contains({0, 0}));
  EXPECT_TRUE(s.contains({0, 5}));
  EXPECT_EQ(s.column_height(0), 3);
  EXPECT_EQ(s.column_height(2), 2);
  EXPECT_EQ(s.column_height(7), 0);
  EXPECT_EQ(s.size(), 6U);
  EXPECT_EQ(s.max_height(), 5);
}

TEST(SiteSet, RepresentationIsCanonical) {
  SiteSet::Builder a;
  a.add_column(1, 3);
  SiteSet::Builder b;
  b.add_sites({{1, 2}, {1, 3}, {1, 1}});
  EXPECT_EQ(std::move(a).build(), std::move(b).build());
}

TEST(SiteSet, UnboundedColumn) {
  const auto s = column(4, SiteSet::kUnbounded);
  EXPECT_TRUE(s.column_unbounded(4));
  EXPECT_TRUE(s.contains({4, 1'000'000'000'000}));
  EXPECT_TRUE(s.has_unbounded_column());
  try {
    s.column_height(4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnboundedColumn);
  }
  EXPECT_THROW(s.size(), Error);
}

TEST(SiteSet, FloorAnchoredColumn) {
  const auto s = column(0, 2, true);
  EXPECT_TRUE(s.contains({0, 0}));
  EXPECT_EQ(s.column_height(0), 2);
}

TEST(SiteSet, ShiftMirrorUnionClip) {
  SiteSet::Builder b;
  b.add_column(1, 2).add_site({3, 4});
  const auto s = std::move(b).build();
  EXPECT_TRUE(s.shifted(-1).contains({0, 2}));
  EXPECT_TRUE(s.mirrored().contains({-3, 4}));
  EXPECT_EQ(s.mirrored().mirrored(), s);
  const auto u = s.united(column(-5, 1));
  EXPECT_EQ(u.size(), 4U);
  EXPECT_EQ(u.clipped(2).size(), 2U);
  EXPECT_EQ(u.clipped(5, 1).size(), 2U);
}

TEST(SiteSet, SitesInWindowSorted) {
  SiteSet::Builder b;
  b.add_column(0, 3).add_column(2, 1).add_site({-4, 2});
  const auto s = std::move(b).build();
  const auto v = s.sites_in({-1, 2, 0, 2});
  EXPECT_EQ(v, (std::vector<Site>{{0, 1}, {2, 1}, {0, 2}}));
}

TEST(OuterBoundary, SingleSite) {
  const auto s = SiteSet::from_sites({{0, 1}});
  EXPECT_EQ(outer_boundary(s, {-5, 5, 0, 5}),
            (std::vector<Site>{{-1, 1}, {1, 1}, {0, 2}}));
  EXPECT_EQ(outer_boundary(s, {-5, 5, 0, 5}, true),
            (std::vector<Site>{{0, 0}, {-1, 1}, {1, 1}, {0, 2}}));
  EXPECT_EQ(neighbors_in(s, {1, 1}), 1);
}

TEST(OuterBoundary, MatchesBruteForce) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Site> sites;
    std::uniform_int_distribution<int> x(-6, 6), y(0, 5), n(1, 25);
    for (int i = n(gen); i > 0; --i) sites.push_back({x(gen), y(gen)});
    const auto s = SiteSet::from_sites(sites);
    const Rect window{-4, 4, 0, 4};
    std::vector<Site> expect;
    for (auto x2 = window.x2_lo; x2 <= window.x2_hi; ++x2) {
      for (auto x1 = window.x1_lo; x1 <= window.x1_hi; ++x1) {
        const Site y{x1, x2};
        if (y.x2 >= 1 && !s.contains(y) && neighbors_in(s, y) > 0) expect.push_back(y);
      }
    }
    EXPECT_EQ(outer_boundary(s, window), expect);
  }
}

TEST(SetText, RoundTrip) {
  SiteSet::Builder b;
  b.add_column(-2, 5).add_column(3, SiteSet::kUnbounded).add_site({0, 7}).add_site({1, 0});
  const auto s = std::move(b).build();
  std::stringstream ss;
  write_set_text(ss, s);
  EXPECT_EQ(read_set_text(ss), s);
}

TEST(SetText, RejectsGarbage) {
  std::stringstream ss("col 1\n");
  try {
    read_set_text(ss);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
}

}  // namespace
}  // namespace stathm
