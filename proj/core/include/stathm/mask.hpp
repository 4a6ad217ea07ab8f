#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "stathm/lattice.hpp"

namespace stathm {

// Dense occupancy bitmap of a set restricted to a rectangle.
class DenseMask {
 public:
  DenseMask() = default;
  DenseMask(const SiteSet& set, const Rect& box) : box_(box) {
    if (box.empty()) return;
    cells_.assign(static_cast<std::size_t>(box.width() * box.height()), 0);
    for (const auto& [x1, c] : set.columns()) {
      if (x1 < box.x1_lo || x1 > box.x1_hi) continue;
      const std::int64_t lo = std::max<std::int64_t>(box.x2_lo, c.floor ? 0 : 1);
      const std::int64_t hi = std::min(box.x2_hi, c.top);
      for (auto h = lo; h <= hi; ++h) cells_[index(x1, h)] = 1;
    }
    for (const auto& s : set.extras()) {
      if (box.contains(s)) cells_[index(s.x1, s.x2)] = 1;
    }
  }

  const Rect& box() const { return box_; }

  bool contains(Site s) const {
    return box_.contains(s) && cells_[index(s.x1, s.x2)] != 0;
  }

 private:
  std::size_t index(std::int64_t x1, std::int64_t x2) const {
    return static_cast<std::size_t>((x2 - box_.x2_lo) * box_.width() + (x1 - box_.x1_lo));
  }

  Rect box_{};
  std::vector<std::uint8_t> cells_;
};

}  // namespace stathm
