#include "stathm/growth.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "stathm/dirichlet.hpp"
#include "stathm/error.hpp"
#include "stathm/rng.hpp"

namespace stathm {

std::string_view to_string(LateralPolicy p) {
  return p == LateralPolicy::kPeriodic ? "periodic" : "frozen";
}

LateralPolicy parse_lateral_policy(std::string_view text) {
  if (text == "periodic") return LateralPolicy::kPeriodic;
  if (text == "frozen") return LateralPolicy::kFrozen;
  throw Error(ErrorCode::kParse, "lateral policy must be periodic or frozen");
}

std::optional<Site> GrowthWindow::canonical(Site s) const {
  if (s.x2 < 0) return std::nullopt;
  const std::int64_t lo = x_lo();
  if (s.x1 >= lo && s.x1 <= x_hi()) return s;
  if (policy == LateralPolicy::kFrozen) return std::nullopt;
  std::int64_t r = (s.x1 - lo) % width;
  if (r < 0) r += width;
  return Site{lo + r, s.x2};
}

// ---------------------------------------------------------------------------

void ClockSet::add(std::size_t slot, double delta) {
  for (std::size_t i = slot + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
}

void ClockSet::rebuild() {
  const std::size_t n = value_.size();
  tree_.assign(n + 1, 0.0);
  for (std::size_t i = 1; i <= n; ++i) {
    tree_[i] += value_[i - 1];
    const std::size_t parent = i + (i & (~i + 1));
    if (parent <= n) tree_[parent] += tree_[i];
  }
  updates_ = 0;
}

void ClockSet::set(Site y, double rate) {
  if (rate < 0) throw Error(ErrorCode::kInvalidArgument, "negative rate");
  auto it = slot_of_.find(y);
  if (it == slot_of_.end()) {
    if (rate == 0.0) return;
    if (free_.empty()) {
      const std::size_t old = value_.size();
      const std::size_t cap = std::max<std::size_t>(64, 2 * old);
      value_.resize(cap, 0.0);
      site_.resize(cap);
      for (std::size_t i = cap; i-- > old;) free_.push_back(i);
      rebuild();
    }
    const std::size_t slot = free_.back();
    free_.pop_back();
    it = slot_of_.emplace(y, slot).first;
    site_[slot] = y;
  }
  const std::size_t slot = it->second;
  const double delta = rate - value_[slot];
  value_[slot] = rate;
  if (rate == 0.0) {
    free_.push_back(slot);
    slot_of_.erase(it);
  }
  add(slot, delta);
  if (++updates_ >= (std::size_t{1} << 16)) rebuild();
}

void ClockSet::erase(Site y) { set(y, 0.0); }

double ClockSet::rate(Site y) const {
  const auto it = slot_of_.find(y);
  return it == slot_of_.end() ? 0.0 : value_[it->second];
}

double ClockSet::total() const {
  double s = 0.0;
  for (std::size_t i = value_.size(); i > 0; i -= i & (~i + 1)) s += tree_[i];
  return std::max(s, 0.0);
}

Site ClockSet::sample(double u) const {
  if (slot_of_.empty()) throw Error(ErrorCode::kFrozenState, "no vacant site has a positive rate");
  const std::size_t n = value_.size();
  std::size_t pos = 0;
  for (std::size_t step = std::bit_floor(n); step > 0; step >>= 1) {
    if (pos + step <= n && tree_[pos + step] <= u) {
      pos += step;
      u -= tree_[pos];
    }
  }
  // Rounding can land on an empty slot; take the nearest occupied one.
  if (pos >= n || value_[pos] <= 0.0) {
    std::size_t best = n;
    for (std::size_t i = std::min(pos, n - 1) + 1; i-- > 0;) {
      if (value_[i] > 0.0) {
        best = i;
        break;
      }
    }
    if (best == n) {
      for (std::size_t i = pos; i < n; ++i) {
        if (value_[i] > 0.0) {
          best = i;
          break;
        }
      }
    }
    pos = best;
  }
  return site_[pos];
}

// ---------------------------------------------------------------------------

namespace {

template <class Fn>
void for_each_neighbor(const GrowthWindow& w, Site s, Fn&& fn) {
  for (int d = 0; d < 4; ++d) {
    if (const auto c = w.canonical(neighbor(s, d))) fn(*c);
  }
}

double incoming_rate(const GrowthState& st, Site y) {
  double r = 0.0;
  for_each_neighbor(st.window, y, [&](Site x) {
    if (st.occupied.contains(x)) r += birth_rate(x);
  });
  return r;
}

void initialize(GrowthState& st, const GrowthWindow& w, const std::vector<Site>& initial) {
  if (w.width < 1) throw Error(ErrorCode::kInvalidArgument, "window width must be >= 1");
  st.window = w;
  for (auto x = w.x_lo(); x <= w.x_hi(); ++x) st.occupied.insert(Site{x, 0});
  for (const auto& s : initial) {
    const auto c = w.canonical(s);
    if (!c) throw Error(ErrorCode::kOutOfWindow, "initial site outside the window");
    if (c->x2 > 0 && st.occupied.insert(*c).second) st.initial.push_back(*c);
  }
}

}  // namespace

SiteSet GrowthState::occupied_at(double s) const {
  SiteSet::Builder b;
  for (auto x = window.x_lo(); x <= window.x_hi(); ++x) b.add_site(Site{x, 0});
  b.add_sites(initial);
  for (const auto& e : log) {
    if (e.t > s) break;
    b.add_site(e.site);
  }
  return std::move(b).build();
}

std::int64_t GrowthState::max_height() const {
  std::int64_t h = 0;
  for (const auto& s : occupied) h = std::max(h, s.x2);
  return h;
}

ClockSet rebuild_clocks(const GrowthState& st) {
  ClockSet clocks;
  std::vector<Site> targets;
  for (const auto& x : st.occupied) {
    for_each_neighbor(st.window, x, [&](Site y) {
      if (!st.occupied.contains(y)) targets.push_back(y);
    });
  }
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  for (const auto& y : targets) clocks.set(y, incoming_rate(st, y));
  return clocks;
}

GrowthState simulate_sqrt_process(const GrowthOptions& opt, const std::vector<Site>& initial) {
  if (!(opt.t_end > 0)) throw Error(ErrorCode::kInvalidArgument, "t_end must be > 0");
  GrowthState st;
  initialize(st, opt.window, initial);
  ClockSet clocks = rebuild_clocks(st);
  RngStream rng(opt.seed, opt.stream);

  std::uint64_t events = 0;
  while (true) {
    const double total = clocks.total();
    if (!(total > 0.0)) {
      st.t = opt.t_end;
      break;
    }
    const double dt = -std::log(rng.uniform_pos()) / total;
    if (st.t + dt > opt.t_end) {
      st.t = opt.t_end;
      break;
    }
    if (++events > opt.max_events) {
      throw Error(ErrorCode::kEventBudget,
                  "event budget of " + std::to_string(opt.max_events) + " exceeded");
    }
    st.t += dt;
    const double u = (1.0 - rng.uniform_pos()) * total;
    const Site y = clocks.sample(u);
    st.occupied.insert(y);
    st.log.push_back({st.t, y});
    clocks.erase(y);
    for_each_neighbor(st.window, y, [&](Site z) {
      if (!st.occupied.contains(z)) clocks.set(z, incoming_rate(st, z));
    });

    if (opt.check_every && events % opt.check_every == 0) {
      const ClockSet fresh = rebuild_clocks(st);
      const double scale = std::max(1.0, fresh.total());
      bool same = fresh.size() == clocks.size() &&
                  std::abs(fresh.total() - clocks.total()) <= 1e-9 * scale;
      for (const auto& [site, slot] : fresh.slots()) {
        if (std::abs(fresh.rate(site) - clocks.rate(site)) > 1e-12 * scale) same = false;
      }
      if (!same) throw std::logic_error("incremental clocks differ from a rebuild");
    }
  }
  return st;
}

std::vector<GrowthState> simulate_replicas(const GrowthOptions& opt, std::uint64_t count, int threads) {
  std::vector<GrowthState> out(count);
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    while (!failed) {
      const std::uint64_t i = next++;
      if (i >= count) return;
      try {
        GrowthOptions o = opt;
        o.stream = i;
        out[i] = simulate_sqrt_process(o);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
      }
    }
  };
  const int n = std::max(1, threads);
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

void write_event_log_csv(std::ostream& os, const GrowthState& st) {
  os.precision(17);
  os << "t,x1,x2\n";
  for (const auto& e : st.log) os << e.t << ',' << e.site.x1 << ',' << e.site.x2 << '\n';
}

SiteSet tiled_obstacle(const GrowthState& st, const SiteSet& occupied, std::int64_t half_width) {
  const auto& w = st.window;
  const Rect box{w.x_lo(), w.x_hi(), 1, SiteSet::kUnbounded - 1};
  const auto sites = occupied.sites_in(box);
  if (w.policy == LateralPolicy::kFrozen) return SiteSet::from_sites(sites);
  SiteSet::Builder b;
  const std::int64_t reps = half_width / w.width + 2;
  for (const auto& s : sites) {
    for (std::int64_t j = -reps; j <= reps; ++j) {
      const std::int64_t x = s.x1 + j * w.width;
      if (x >= -half_width && x <= half_width) b.add_site(Site{x, s.x2});
    }
  }
  return std::move(b).build();
}

// ---------------------------------------------------------------------------

GrowthStep harmonic_growth_step(const SiteSet& B, const HarmonicStepOptions& opt) {
  TruncatedDomain d;
  d.N = opt.N;
  d.W = opt.W;
  d.obstacle = B;
  const auto field = green_field(d);
  const Rect win = d.window();
  const std::int64_t hw = opt.candidate_half_width > 0
                              ? std::min(opt.candidate_half_width, win.x1_hi)
                              : win.x1_hi;
  const Rect cand{-hw, hw, 1, win.x2_hi + 1};

  GrowthStep step;
  for (const auto& y : outer_boundary(B, cand)) {
    const double v = exact_hat_measure(field, y);
    step.table.push_back({y, v});
    step.total += v;
  }
  if (!(step.total > opt.frozen_threshold)) {
    throw Error(ErrorCode::kFrozenState, "total growth intensity is numerically zero");
  }
  RngStream rng(opt.seed, 0);
  const double u = (1.0 - rng.uniform_pos()) * step.total;
  double acc = 0.0;
  step.site = step.table.back().site;
  for (const auto& e : step.table) {
    acc += e.value;
    if (u < acc && e.value > 0) {
      step.site = e.site;
      break;
    }
  }
  return step;
}

ProbeResult positivity_probe(const GrowthState& st, double s, std::int64_t N, std::int64_t W) {
  TruncatedDomain d;
  d.N = N;
  d.W = W;
  const std::int64_t hw = d.half_width();
  if (hw < std::max(-st.window.x_lo(), st.window.x_hi())) {
    throw Error(ErrorCode::kInvalidArgument, "solve window narrower than the growth window");
  }
  const SiteSet occ = st.occupied_at(s);
  d.obstacle = tiled_obstacle(st, occ, hw);
  const auto field = green_field(d);
  ProbeResult r;
  const Rect box{st.window.x_lo(), st.window.x_hi(), 0, field.domain.window().x2_hi};
  for (const auto& x : occ.sites_in(box)) {
    const double v = exact_point_measure(field, x);
    ++r.sites;
    if (r.sites == 1 || v > r.max_measure) {
      r.max_measure = v;
      r.argmax = x;
    }
  }
  return r;
}

ProbeResult positivity_probe(const GrowthState& st, std::int64_t N, std::int64_t W) {
  return positivity_probe(st, st.t, N, W);
}

HeightBound height_bound_check(const SiteSet& B, std::int64_t N, std::int64_t W,
                               std::optional<std::int64_t> report_half_width) {
  TruncatedDomain d;
  d.N = N;
  d.W = W;
  d.obstacle = B;
  HeightBound out;
  out.N = N;
  const Rect win = d.window();
  const std::int64_t hw = report_half_width ? std::min(*report_half_width, win.x1_hi) : win.x1_hi;
  const auto sites = B.sites_in(Rect{-hw, hw, 1, win.x2_hi});
  if (sites.empty()) return out;
  const auto field = green_field(d);
  for (const auto& x : sites) {
    const double c = exact_point_measure(field, x) / std::sqrt(static_cast<double>(x.x2));
    ++out.sites;
    if (!out.C || c > *out.C) {
      out.C = c;
      out.argmax = x;
    }
  }
  return out;
}

}  // namespace stathm
