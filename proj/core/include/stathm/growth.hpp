#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "stathm/lattice.hpp"

namespace stathm {

enum class LateralPolicy { kPeriodic, kFrozen };

std::string_view to_string(LateralPolicy p);
LateralPolicy parse_lateral_policy(std::string_view text);

// Columns x_lo .. x_lo + width - 1 of the half-plane. Periodic windows wrap
// x1; frozen windows drop every site outside.
struct GrowthWindow {
  std::int64_t width = 64;
  LateralPolicy policy = LateralPolicy::kPeriodic;

  std::int64_t x_lo() const { return -(width / 2); }
  std::int64_t x_hi() const { return x_lo() + width - 1; }
  std::optional<Site> canonical(Site s) const;
};

// Birth rate of an occupied site toward each vacant neighbor.
inline double birth_rate(Site x) { return x.x2 > 0 ? std::sqrt(static_cast<double>(x.x2)) : 1.0; }

// Aggregate birth rate into each vacant site (sum over its occupied
// neighbors), kept in a Fenwick tree for O(log n) sampling.
class ClockSet {
 public:
  void set(Site y, double rate);
  void erase(Site y);
  double rate(Site y) const;
  double total() const;
  std::size_t size() const { return slot_of_.size(); }
  // The vacant site whose cumulative rate interval holds u, 0 <= u < total().
  Site sample(double u) const;
  // Recomputes the tree sums from the stored rates.
  void rebuild();
  const std::unordered_map<Site, std::size_t, SiteHash>& slots() const { return slot_of_; }

 private:
  void add(std::size_t slot, double delta);

  std::unordered_map<Site, std::size_t, SiteHash> slot_of_;
  std::vector<Site> site_;
  std::vector<double> value_;
  std::vector<double> tree_;  // 1-based Fenwick sums over value_
  std::vector<std::size_t> free_;
  std::size_t updates_ = 0;
};

struct GrowthEvent {
  double t = 0.0;
  Site site;
};

struct GrowthState {
  GrowthWindow window;
  std::unordered_set<Site, SiteHash> occupied;
  std::vector<Site> initial;  // initial sites above the floor
  double t = 0.0;
  std::vector<GrowthEvent> log;

  // B_s for s <= t, rebuilt from the floor, the initial sites and the log.
  SiteSet occupied_at(double s) const;
  SiteSet snapshot() const { return occupied_at(t); }
  std::int64_t max_height() const;
};

// Clock set of a state rebuilt from scratch.
ClockSet rebuild_clocks(const GrowthState& state);

struct GrowthOptions {
  GrowthWindow window;
  double t_end = 1.0;
  std::uint64_t seed = 1;
  std::uint64_t stream = 0;
  std::uint64_t max_events = 10'000'000;
  // Compare the incremental clocks with a rebuild every this many events
  // (0 disables the check).
  std::uint64_t check_every = 0;
};

// Exact event-driven simulation of the sqrt-height birth process started from
// the floor of the window plus `initial`. Throws kEventBudget when the event
// count exceeds max_events.
GrowthState simulate_sqrt_process(const GrowthOptions& opt, const std::vector<Site>& initial = {});

// Independent replicas on streams 0..count-1; the result does not depend on
// the worker count.
std::vector<GrowthState> simulate_replicas(const GrowthOptions& opt, std::uint64_t count, int threads);

void write_event_log_csv(std::ostream& os, const GrowthState& state);

// Occupied sites above the floor repeated with period `width` over
// [-half_width, half_width] (periodic windows) or taken as is (frozen).
SiteSet tiled_obstacle(const GrowthState& state, const SiteSet& occupied, std::int64_t half_width);

struct Intensity {
  Site site;
  double value = 0.0;
};

struct GrowthStep {
  Site site;
  double total = 0.0;
  std::vector<Intensity> table;
};

struct HarmonicStepOptions {
  std::int64_t N = 64;
  std::int64_t W = 0;  // solve half-width, 0 selects 8N
  std::int64_t candidate_half_width = 0;  // 0 uses the solve window
  std::uint64_t seed = 1;
  double frozen_threshold = 1e-12;
};

// Outer measure of B at every site of its outer boundary inside the candidate
// window (x2 >= 1) and one site drawn proportionally to it. Floor sites count
// as part of B only when B holds them. Throws kFrozenState when the
// total is below the threshold.
GrowthStep harmonic_growth_step(const SiteSet& B, const HarmonicStepOptions& opt);

struct ProbeResult {
  double max_measure = 0.0;
  Site argmax;
  std::size_t sites = 0;
};

// Max point measure over the occupied sites of the window at time s.
ProbeResult positivity_probe(const GrowthState& state, double s, std::int64_t N, std::int64_t W = 0);
ProbeResult positivity_probe(const GrowthState& state, std::int64_t N, std::int64_t W = 0);

struct HeightBound {
  std::optional<double> C;  // empty when B has no site with x2 >= 1
  Site argmax;
  std::size_t sites = 0;
  std::int64_t N = 0;
};

// C = max over x in B with x2 >= 1 and |x1| <= report_half_width of
// H(x) / sqrt(x2).
HeightBound height_bound_check(const SiteSet& B, std::int64_t N, std::int64_t W = 0,
                               std::optional<std::int64_t> report_half_width = std::nullopt);

}  // namespace stathm
