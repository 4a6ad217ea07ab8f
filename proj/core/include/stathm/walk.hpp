#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "stathm/error.hpp"
#include "stathm/lattice.hpp"
#include "stathm/rng.hpp"

namespace stathm {

// Where a walk was absorbed and how it got there.
struct AbsorptionRecord {
  Site absorbed_at;
  std::optional<Site> previous;  // empty when the start site was absorbing
  std::uint64_t steps = 0;       // walk time, saturating at UINT64_MAX
  std::uint64_t visits_to_target_line = 0;
};

class CapExceeded : public Error {
 public:
  CapExceeded(const std::string& what, AbsorptionRecord partial)
      : Error(ErrorCode::kCapExceeded, what), partial_(partial) {}
  const AbsorptionRecord& partial() const { return partial_; }

 private:
  AbsorptionRecord partial_;
};

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::uint64_t n_chains = 0;
  std::uint64_t seed = 0;
  std::uint64_t n_batches = 0;
};

// Mean of per-chain scores with a batch-means standard error. With at least
// 1024 chains the scores are cut (in chain order) into floor(sqrt(n)) >= 16
// contiguous batches; smaller runs use the plain sample standard error.
Estimate summarize_scores(const std::vector<double>& scores, std::uint64_t seed);

struct McOptions {
  std::uint64_t chains = 100000;
  std::uint64_t seed = 1;
  int threads = 1;
  // Cap on simulated moves per chain. An accelerated excursion counts once.
  std::uint64_t step_cap = 1'000'000'000ULL;
  // Optional reflecting side walls at |x1| = half_width (the walk stays put
  // when it would leave), matching the exact solver's default truncation.
  std::optional<std::int64_t> reflect_half_width;
};

// Runs fn(chain) for chain in [0, n) on `threads` workers and returns the
// per-chain results in chain order. Results do not depend on the worker count.
std::vector<double> run_chains(std::uint64_t n, int threads,
                               const std::function<double(std::uint64_t)>& fn);

// An excursion of the walk strictly above a line: the walk steps up from the
// line and comes back to it after `steps` moves, shifted by `dx`.
struct Excursion {
  std::int64_t dx = 0;
  std::uint64_t steps = 0;
};

// Exact sample of an excursion above a horizontal line in the free plane.
// The vertical part is a 1D first-passage time and the horizontal part a
// sum of fair +-1 moves interleaved with it.
Excursion sample_excursion(RngStream& rng);

// Fold x into [-w, w] as seen by a walk with stay-put walls at |x1| = w.
std::int64_t fold_reflect(std::int64_t x, std::int64_t w);

struct WalkOptions {
  std::optional<std::int64_t> target_line;
  std::uint64_t step_cap = 1'000'000'000ULL;
  // No absorbing site lies strictly above this height; excursions above it
  // are sampled in one shot instead of step by step.
  std::optional<std::int64_t> free_above;
  std::optional<std::int64_t> reflect_half_width;
};

namespace detail {
inline std::uint64_t sat_add(std::uint64_t a, std::uint64_t b) {
  return a > UINT64_MAX - b ? UINT64_MAX : a + b;
}
}  // namespace detail

// Walks from `start` until the first time n >= 0 with S_n in the absorber.
// The absorber must contain the floor line so the walk stops almost surely.
template <class Absorber>
AbsorptionRecord run_until_absorbed(RngStream& rng, Site start, const Absorber& absorbed,
                                    const WalkOptions& opt = {}) {
  if (opt.step_cap == 0) throw Error(ErrorCode::kInvalidArgument, "step_cap must be > 0");
  if (!absorbed(Site{start.x1, 0})) {
    throw Error(ErrorCode::kInvalidArgument, "absorber must contain the floor line");
  }
  const std::int64_t line = opt.target_line.value_or(-1);
  std::optional<std::int64_t> top;
  if (opt.free_above) top = std::max(*opt.free_above, line);
  AbsorptionRecord rec{start, std::nullopt, 0, 0};
  Site pos = start;
  Site prev = start;
  std::uint64_t moves = 0;
  if (top && pos.x2 == *top + 1 && !absorbed(pos)) {
    // Starting one above the free line is the tail of an excursion.
    const auto exc = sample_excursion(rng);
    pos = Site{pos.x1 + exc.dx, *top};
    if (opt.reflect_half_width) pos.x1 = fold_reflect(pos.x1, *opt.reflect_half_width);
    prev = Site{pos.x1, pos.x2 + 1};
    rec.steps = exc.steps - 1;
    moves = 1;
  }
  while (true) {
    if (absorbed(pos)) break;
    if (pos.x2 == line) ++rec.visits_to_target_line;
    if (++moves > opt.step_cap) {
      rec.absorbed_at = pos;
      rec.previous = prev;
      throw CapExceeded("walk exceeded the step cap", rec);
    }
    const int d = rng.direction();
    prev = pos;
    if (top && pos.x2 == *top && d == 1) {
      const auto exc = sample_excursion(rng);
      pos.x1 += exc.dx;
      rec.steps = detail::sat_add(rec.steps, exc.steps);
      // The last move of an excursion comes down from directly above.
      prev = Site{pos.x1, pos.x2 + 1};
    } else {
      pos = neighbor(pos, d);
      rec.steps = detail::sat_add(rec.steps, 1);
    }
    if (opt.reflect_half_width) {
      pos.x1 = fold_reflect(pos.x1, *opt.reflect_half_width);
      prev.x1 = fold_reflect(prev.x1, *opt.reflect_half_width);
    }
  }
  rec.absorbed_at = pos;
  if (rec.steps > 0) rec.previous = prev;
  return rec;
}

std::optional<std::int64_t> max_finite_height(const SiteSet& set);

// Unbiased estimators. Chain i uses RngStream(seed, i).

// Point measure of x in B or on the floor: walk from x; the score is the
// number of visits to L_N before absorption in B u L_0.
Estimate mc_point_measure(const SiteSet& set, Site x, std::int64_t N, const McOptions& opt);

// Edge measure of e = x -> y: point-measure chains scored only when the
// first step goes from x to y. Shares chains with mc_point_measure.
Estimate mc_edge_measure(const SiteSet& set, const DirectedEdge& e, std::int64_t N,
                         const McOptions& opt);

// Point measure together with the four edge measures from one chain set.
struct PointEdgeEstimates {
  Estimate point;
  Estimate edge[4];  // indexed by direction x -> neighbor(x, d)
};
PointEdgeEstimates mc_point_and_edges(const SiteSet& set, Site x, std::int64_t N,
                                      const McOptions& opt);

// Outer measure of y (not in B, with a neighbor in B).
Estimate mc_hat_measure(const SiteSet& set, Site y, std::int64_t N, const McOptions& opt);

// Expected number of time indices spent on L_N before reaching L_0, from y
// on L_N.
Estimate mc_visits_to_line(Site y, std::int64_t N, const McOptions& opt);

// P_start(tau_A < tau_B) with the exit-time convention (n >= 1). A site in
// both targets counts as B. The walk must terminate almost surely.
using SitePredicate = std::function<bool(Site)>;
Estimate mc_escape_probability(Site start, const SitePredicate& target_a,
                               const SitePredicate& target_b, const McOptions& opt,
                               std::optional<std::int64_t> free_above = std::nullopt);

}  // namespace stathm
