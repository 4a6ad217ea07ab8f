#include "stathm/walk.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <random>
#include <thread>

#include "stathm/mask.hpp"

namespace stathm {

Estimate summarize_scores(const std::vector<double>& scores, std::uint64_t seed) {
  Estimate est;
  est.seed = seed;
  est.n_chains = scores.size();
  const std::size_t n = scores.size();
  if (n == 0) return est;
  double sum = 0.0;
  for (double s : scores) sum += s;
  est.mean = sum / static_cast<double>(n);
  if (n >= 1024) {
    const std::size_t nb = std::max<std::size_t>(
        16, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n)))));
    std::vector<double> means(nb);
    for (std::size_t b = 0; b < nb; ++b) {
      const std::size_t lo = b * n / nb;
      const std::size_t hi = (b + 1) * n / nb;
      double s = 0.0;
      for (std::size_t i = lo; i < hi; ++i) s += scores[i];
      means[b] = s / static_cast<double>(hi - lo);
    }
    double m = 0.0;
    for (double v : means) m += v;
    m /= static_cast<double>(nb);
    double ss = 0.0;
    for (double v : means) ss += (v - m) * (v - m);
    est.std_error = std::sqrt(ss / static_cast<double>(nb - 1) / static_cast<double>(nb));
    est.n_batches = nb;
  } else if (n >= 2) {
    double ss = 0.0;
    for (double s : scores) ss += (s - est.mean) * (s - est.mean);
    est.std_error = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    est.n_batches = n;
  } else {
    est.n_batches = 1;
  }
  return est;
}

std::vector<double> run_chains(std::uint64_t n, int threads,
                               const std::function<double(std::uint64_t)>& fn) {
  std::vector<double> out(n);
  const auto workers = static_cast<std::uint64_t>(std::max(threads, 1));
  if (workers == 1 || n < 2) {
    for (std::uint64_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  constexpr std::uint64_t kChunk = 256;
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr err;
  std::mutex err_mutex;
  auto work = [&] {
    while (true) {
      const std::uint64_t lo = next.fetch_add(kChunk);
      if (lo >= n) return;
      const std::uint64_t hi = std::min(n, lo + kChunk);
      try {
        for (std::uint64_t i = lo; i < hi; ++i) out[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!err) err = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (std::uint64_t t = 0; t < std::min(workers, n); ++t) pool.emplace_back(work);
  }
  if (err) std::rethrow_exception(err);
  return out;
}

namespace {

// u_n = C(2n, n) / 4^n = P(first passage of a 1D walk from 0 to -1 takes
// at least 2n + 1 moves).
constexpr std::uint64_t kPassageTable = 4096;
constexpr std::uint64_t kPassageMax = std::uint64_t{1} << 62;

const std::vector<double>& passage_table() {
  static const std::vector<double> table = [] {
    std::vector<double> u(kPassageTable + 1);
    u[0] = 1.0;
    for (std::uint64_t n = 1; n <= kPassageTable; ++n) {
      u[n] = u[n - 1] * (2.0 * static_cast<double>(n) - 1.0) / (2.0 * static_cast<double>(n));
    }
    return u;
  }();
  return table;
}

double log_passage_tail(std::uint64_t n) {
  const double x = static_cast<double>(n);
  return -0.5 * std::log(std::numbers::pi * x) - 1.0 / (8.0 * x) + 1.0 / (192.0 * x * x * x);
}

// Number of vertical moves of an excursion: one up step plus the first
// passage back down, V = 2 n* + 1 with n* = max{n : u_n >= U}.
std::uint64_t sample_vertical_moves(RngStream& rng) {
  const double U = rng.uniform_pos();
  const auto& u = passage_table();
  std::uint64_t n_star;
  if (U > u.back()) {
    // u is decreasing; first index with u[i] < U, minus one.
    const auto it = std::upper_bound(u.begin(), u.end(), U, std::greater<>());
    n_star = static_cast<std::uint64_t>(it - u.begin()) - 1;
  } else {
    const double log_u = std::log(U);
    std::uint64_t lo = kPassageTable;  // u_lo >= U
    std::uint64_t hi = 2 * kPassageTable;
    while (hi < kPassageMax && log_passage_tail(hi) >= log_u) {
      lo = hi;
      hi *= 2;
    }
    if (hi >= kPassageMax && log_passage_tail(kPassageMax) >= log_u) {
      n_star = kPassageMax;
    } else {
      while (hi - lo > 1) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (log_passage_tail(mid) >= log_u) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      n_star = lo;
    }
  }
  return 2 * n_star + 1;
}

}  // namespace

Excursion sample_excursion(RngStream& rng) {
  const std::uint64_t v = sample_vertical_moves(rng);
  Excursion exc;
  if (v <= 32) {
    std::uint64_t remaining = v;
    std::uint64_t horizontal = 0;
    while (remaining > 0) {
      const int d = rng.direction();
      if (d == 1 || d == 3) {
        --remaining;
      } else {
        exc.dx += kDx[d];
        ++horizontal;
      }
    }
    exc.steps = 1 + v + horizontal;
    return exc;
  }
  std::negative_binomial_distribution<std::int64_t> horiz(static_cast<std::int64_t>(v), 0.5);
  const std::int64_t k = horiz(rng);
  std::binomial_distribution<std::int64_t> right(k, 0.5);
  exc.dx = 2 * right(rng) - k;
  exc.steps = detail::sat_add(detail::sat_add(1, v), static_cast<std::uint64_t>(k));
  return exc;
}

std::int64_t fold_reflect(std::int64_t x, std::int64_t w) {
  const std::int64_t width = 2 * w + 1;
  const std::int64_t period = 2 * width;
  std::int64_t y = (x + w) % period;
  if (y < 0) y += period;
  if (y < width) return y - w;
  return (period - 1 - y) - w;
}

std::optional<std::int64_t> max_finite_height(const SiteSet& set) {
  if (set.has_unbounded_column()) return std::nullopt;
  return set.max_height();
}

namespace {

// Absorption on B u L_0 for walks in the half-plane.
struct HalfPlaneAbsorber {
  const DenseMask* mask;
  bool operator()(Site s) const { return s.x2 <= 0 || mask->contains(s); }
};

void check_finite(const SiteSet& set) {
  if (set.has_unbounded_column()) {
    throw Error(ErrorCode::kInvalidArgument, "set has an unbounded column");
  }
}

void check_options(const McOptions& opt) {
  if (opt.chains == 0) throw Error(ErrorCode::kInvalidArgument, "chains must be >= 1");
  if (opt.step_cap == 0) throw Error(ErrorCode::kInvalidArgument, "step_cap must be > 0");
  if (opt.reflect_half_width && *opt.reflect_half_width < 0) {
    throw Error(ErrorCode::kInvalidArgument, "reflect half-width must be >= 0");
  }
}

class MeasureChains {
 public:
  MeasureChains(const SiteSet& set, std::int64_t N, const McOptions& opt)
      : mask_(set, set.bounds()), N_(N), opt_(opt) {
    wopt_.target_line = N;
    wopt_.step_cap = opt.step_cap;
    wopt_.free_above = std::max(N, set.max_height());
    wopt_.reflect_half_width = opt.reflect_half_width;
  }

  bool absorbing(Site s) const { return HalfPlaneAbsorber{&mask_}(s); }

  // Visits to L_N of a walk started at y, zero if y is absorbing.
  double visits_from(RngStream& rng, Site y) const {
    if (y.x2 < 0 || absorbing(y)) return 0.0;
    const auto rec = run_until_absorbed(rng, y, HalfPlaneAbsorber{&mask_}, wopt_);
    return static_cast<double>(rec.visits_to_target_line);
  }

  // First step out of x and the score of the continuation.
  std::pair<int, double> point_chain(RngStream& rng, Site x) const {
    const int d = rng.direction();
    Site y = neighbor(x, d);
    if (opt_.reflect_half_width) y.x1 = fold_reflect(y.x1, *opt_.reflect_half_width);
    return {d, visits_from(rng, y)};
  }

 private:
  DenseMask mask_;
  std::int64_t N_;
  McOptions opt_;
  WalkOptions wopt_;
};

void check_point_target(const SiteSet& set, Site x, std::int64_t N) {
  if (x.x2 < 0 || (x.x2 > 0 && !set.contains(x))) {
    throw Error(ErrorCode::kInvalidTarget, "target site is not in B or on the floor");
  }
  if (N <= x.x2) throw Error(ErrorCode::kHeight, "N must exceed the target height");
}

}  // namespace

PointEdgeEstimates mc_point_and_edges(const SiteSet& set, Site x, std::int64_t N,
                                      const McOptions& opt) {
  check_finite(set);
  check_options(opt);
  check_point_target(set, x, N);
  const MeasureChains chains(set, N, opt);
  std::vector<int> dirs(opt.chains);
  const auto scores = run_chains(opt.chains, opt.threads, [&](std::uint64_t i) {
    RngStream rng(opt.seed, i);
    const auto [d, s] = chains.point_chain(rng, x);
    dirs[i] = d;
    return s;
  });
  PointEdgeEstimates out;
  out.point = summarize_scores(scores, opt.seed);
  std::vector<double> edge(scores.size());
  for (int d = 0; d < 4; ++d) {
    for (std::size_t i = 0; i < scores.size(); ++i) edge[i] = dirs[i] == d ? scores[i] : 0.0;
    out.edge[d] = summarize_scores(edge, opt.seed);
  }
  return out;
}

Estimate mc_point_measure(const SiteSet& set, Site x, std::int64_t N, const McOptions& opt) {
  check_finite(set);
  check_options(opt);
  check_point_target(set, x, N);
  const MeasureChains chains(set, N, opt);
  const auto scores = run_chains(opt.chains, opt.threads, [&](std::uint64_t i) {
    RngStream rng(opt.seed, i);
    return chains.point_chain(rng, x).second;
  });
  return summarize_scores(scores, opt.seed);
}

Estimate mc_edge_measure(const SiteSet& set, const DirectedEdge& e, std::int64_t N,
                         const McOptions& opt) {
  check_finite(set);
  check_options(opt);
  const int dir = direction_between(e.from, e.to);
  const bool from_ok = e.from.x2 == 0 || (e.from.x2 > 0 && set.contains(e.from));
  if (dir < 0 || !from_ok || e.to.x2 < 0 || set.contains(e.to)) {
    throw Error(ErrorCode::kInvalidEdge, "edge must lead from B u L_0 to a site outside B");
  }
  if (N <= e.from.x2) throw Error(ErrorCode::kHeight, "N must exceed the target height");
  const MeasureChains chains(set, N, opt);
  const auto scores = run_chains(opt.chains, opt.threads, [&](std::uint64_t i) {
    RngStream rng(opt.seed, i);
    const auto [d, s] = chains.point_chain(rng, e.from);
    return d == dir ? s : 0.0;
  });
  return summarize_scores(scores, opt.seed);
}

Estimate mc_hat_measure(const SiteSet& set, Site y, std::int64_t N, const McOptions& opt) {
  check_finite(set);
  check_options(opt);
  if (y.x2 < 0 || set.contains(y)) {
    throw Error(ErrorCode::kInvalidSite, "site must lie in the half-plane outside B");
  }
  const int deg = neighbors_in(set, y);
  if (deg == 0) throw Error(ErrorCode::kInvalidSite, "site has no neighbor in B");
  if (N < 1) throw Error(ErrorCode::kHeight, "N must be >= 1");
  const MeasureChains chains(set, N, opt);
  const double weight = deg / 4.0;
  const auto scores = run_chains(opt.chains, opt.threads, [&](std::uint64_t i) {
    RngStream rng(opt.seed, i);
    return weight * chains.visits_from(rng, y);
  });
  return summarize_scores(scores, opt.seed);
}

Estimate mc_visits_to_line(Site y, std::int64_t N, const McOptions& opt) {
  check_options(opt);
  if (N < 1 || y.x2 != N) throw Error(ErrorCode::kInvalidArgument, "start must lie on L_N, N >= 1");
  const MeasureChains chains(SiteSet{}, N, opt);
  const auto scores = run_chains(opt.chains, opt.threads, [&](std::uint64_t i) {
    RngStream rng(opt.seed, i);
    return chains.visits_from(rng, y);
  });
  return summarize_scores(scores, opt.seed);
}

Estimate mc_escape_probability(Site start, const SitePredicate& target_a,
                               const SitePredicate& target_b, const McOptions& opt,
                               std::optional<std::int64_t> free_above) {
  check_options(opt);
  const auto scores = run_chains(opt.chains, opt.threads, [&](std::uint64_t i) {
    RngStream rng(opt.seed, i);
    Site pos = start;
    std::uint64_t moves = 0;
    AbsorptionRecord rec{start, std::nullopt, 0, 0};
    while (true) {
      if (++moves > opt.step_cap) {
        rec.absorbed_at = pos;
        throw CapExceeded("walk exceeded the step cap", rec);
      }
      const int d = rng.direction();
      if (free_above && pos.x2 == *free_above && d == 1) {
        const auto exc = sample_excursion(rng);
        pos.x1 += exc.dx;
        rec.steps = detail::sat_add(rec.steps, exc.steps);
      } else {
        pos = neighbor(pos, d);
        rec.steps = detail::sat_add(rec.steps, 1);
      }
      if (opt.reflect_half_width) pos.x1 = fold_reflect(pos.x1, *opt.reflect_half_width);
      if (target_b(pos)) return 0.0;
      if (target_a(pos)) return 1.0;
      if (pos.x2 < 0) {
        throw Error(ErrorCode::kNotEnclosed, "walk left the half-plane without hitting a target");
      }
    }
  });
  return summarize_scores(scores, opt.seed);
}

}  // namespace stathm
