#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace stathm {

// A lattice point of Z^2. Sites of the upper half-plane have x2 >= 0; a walk
// step may produce x2 == -1, which callers treat as having left the domain.
struct Site {
  std::int64_t x1 = 0;
  std::int64_t x2 = 0;

  friend constexpr bool operator==(const Site&, const Site&) = default;
  // Lexicographic by (x2, x1): row-major order used for all listings.
  friend constexpr std::strong_ordering operator<=>(const Site& a, const Site& b) {
    if (auto c = a.x2 <=> b.x2; c != 0) return c;
    return a.x1 <=> b.x1;
  }
};

constexpr bool in_half_plane(Site s) { return s.x2 >= 0; }

constexpr std::int64_t l1_distance(Site a, Site b) {
  const auto d1 = a.x1 > b.x1 ? a.x1 - b.x1 : b.x1 - a.x1;
  const auto d2 = a.x2 > b.x2 ? a.x2 - b.x2 : b.x2 - a.x2;
  return d1 + d2;
}

constexpr bool adjacent(Site a, Site b) { return l1_distance(a, b) == 1; }

// Neighbor order is fixed: right, up, left, down.
inline constexpr std::int64_t kDx[4] = {1, 0, -1, 0};
inline constexpr std::int64_t kDy[4] = {0, 1, 0, -1};

constexpr Site neighbor(Site s, int dir) { return {s.x1 + kDx[dir], s.x2 + kDy[dir]}; }

// Direction index d with neighbor(a, d) == b; -1 if not adjacent.
int direction_between(Site a, Site b);

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept {
    auto h = static_cast<std::uint64_t>(s.x1) * 0x9E3779B97F4A7C15ULL;
    h ^= static_cast<std::uint64_t>(s.x2) + 0x632BE59BD9B4E019ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
  }
};

// Oriented nearest-neighbor edge from -> to.
struct DirectedEdge {
  Site from;
  Site to;

  friend constexpr bool operator==(const DirectedEdge&, const DirectedEdge&) = default;
};

DirectedEdge make_edge(Site from, Site to);

// Inclusive rectangle [x1_lo, x1_hi] x [x2_lo, x2_hi].
struct Rect {
  std::int64_t x1_lo = 0;
  std::int64_t x1_hi = -1;
  std::int64_t x2_lo = 0;
  std::int64_t x2_hi = -1;

  bool empty() const { return x1_hi < x1_lo || x2_hi < x2_lo; }
  bool contains(Site s) const {
    return s.x1 >= x1_lo && s.x1 <= x1_hi && s.x2 >= x2_lo && s.x2 <= x2_hi;
  }
  std::int64_t width() const { return empty() ? 0 : x1_hi - x1_lo + 1; }
  std::int64_t height() const { return empty() ? 0 : x2_hi - x2_lo + 1; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

// Set of half-plane sites stored as vertical runs per column plus sparse
// extras. A column run covers {x1} x [1, top], or {x1} x [0, top] when the
// column is floor-anchored. The representation is canonical, so structural
// equality is set equality.
class SiteSet {
 public:
  static constexpr std::int64_t kUnbounded = std::numeric_limits<std::int64_t>::max();

  struct Column {
    std::int64_t top = 0;  // 0 means no run
    bool floor = false;
  };

  class Builder {
   public:
    // {x1} x [1, h], plus (x1, 0) when floor_anchored. h may be kUnbounded.
    Builder& add_column(std::int64_t x1, std::int64_t h, bool floor_anchored = false);
    Builder& add_site(Site s);
    Builder& add_sites(const std::vector<Site>& sites);
    Builder& add_set(const SiteSet& other);
    SiteSet build() &&;

   private:
    std::vector<std::pair<std::int64_t, Column>> columns_;
    std::vector<Site> sites_;
  };

  SiteSet() = default;

  static SiteSet from_sites(const std::vector<Site>& sites);

  bool contains(Site s) const;
  bool empty() const { return columns_.empty() && extras_.empty(); }

  // Largest h with {x1} x [1, h] inside the set; 0 when (x1, 1) is absent.
  // Throws kUnboundedColumn for an infinite column.
  std::int64_t column_height(std::int64_t x1) const;
  bool column_unbounded(std::int64_t x1) const;

  Column column(std::int64_t x1) const;
  // Columns with a run, ascending x1.
  std::vector<std::pair<std::int64_t, Column>> columns() const;
  // Sites outside every column run, sorted by (x2, x1).
  const std::vector<Site>& extras() const { return extras_sorted_; }

  // Smallest rectangle holding every site; heights may be kUnbounded.
  Rect bounds() const;
  std::int64_t max_height() const;
  bool has_unbounded_column() const;

  // Number of sites (throws for unbounded columns).
  std::uint64_t size() const;
  // Sites inside `window`, sorted by (x2, x1).
  std::vector<Site> sites_in(const Rect& window) const;

  SiteSet shifted(std::int64_t dx) const;
  // Reflection x1 -> -x1.
  SiteSet mirrored() const;
  SiteSet united(const SiteSet& other) const;
  // Sites with |x1| <= half_width (and x2 <= max_x2 if given).
  SiteSet clipped(std::int64_t half_width,
                  std::int64_t max_x2 = kUnbounded) const;

  friend bool operator==(const SiteSet& a, const SiteSet& b);

 private:
  std::unordered_map<std::int64_t, Column> columns_;
  std::vector<std::int64_t> column_keys_;  // ascending
  std::unordered_set<Site, SiteHash> extras_;
  std::vector<Site> extras_sorted_;
};

// Sites y in `window` with y not in B and at least one neighbor in B, sorted
// by (x2, x1). Floor sites are skipped unless include_floor is set.
std::vector<Site> outer_boundary(const SiteSet& set, const Rect& window,
                                 bool include_floor = false);

// Number of neighbors of y that lie in the set.
int neighbors_in(const SiteSet& set, Site y);

// Line-oriented text format: "col <x1> <h>", "site <x1> <x2>", "# comment".
void write_set_text(std::ostream& os, const SiteSet& set);
SiteSet read_set_text(std::istream& is);

}  // namespace stathm
