#include "stathm/dirichlet.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <ostream>
#include <unordered_set>

#include "stathm/error.hpp"

namespace stathm {

std::int64_t TruncatedDomain::height() const {
  const std::int64_t margin = top_margin.value_or(4 * N);
  if (obstacle.has_unbounded_column()) return N + margin;
  const std::int64_t top = obstacle.max_height();
  if (top <= N) return N;
  return std::min(top, N + margin);
}

Rect TruncatedDomain::window() const {
  const auto w = half_width();
  return Rect{-w, w, 0, height()};
}

namespace {

void check_domain(const TruncatedDomain& d) {
  if (d.N < 1) throw Error(ErrorCode::kInvalidArgument, "N must be >= 1");
  if (d.W < 0) throw Error(ErrorCode::kInvalidArgument, "W must be >= 0");
  if (d.top_margin && *d.top_margin < 0) {
    throw Error(ErrorCode::kInvalidArgument, "top margin must be >= 0");
  }
  if (!(d.tolerance > 0)) throw Error(ErrorCode::kInvalidArgument, "tolerance must be > 0");
}

// Visit every site of `set` inside `box`.
template <class Fn>
void for_each_site_in(const SiteSet& set, const Rect& box, Fn&& fn) {
  for (const auto& [x1, c] : set.columns()) {
    if (x1 < box.x1_lo || x1 > box.x1_hi) continue;
    const std::int64_t lo = std::max<std::int64_t>(box.x2_lo, c.floor ? 0 : 1);
    const std::int64_t hi = std::min(box.x2_hi, c.top);
    for (auto h = lo; h <= hi; ++h) fn(Site{x1, h});
  }
  for (const auto& s : set.extras()) {
    if (box.contains(s)) fn(s);
  }
}

bool on_top_strip(const ScalarField& f, Site y) {
  const Rect w = f.domain.window();
  return y.x2 == w.x2_hi + 1 && y.x1 >= w.x1_lo && y.x1 <= w.x1_hi;
}

}  // namespace

double ScalarField::value(Site y) const {
  const Rect w = domain.window();
  if (w.contains(y)) return solution.value(y);
  if (on_top_strip(*this, y)) {
    return 4.0 * solution.from_above[static_cast<std::size_t>(y.x1 - w.x1_lo)];
  }
  throw Error(ErrorCode::kOutOfWindow, "site outside the solve window");
}

ScalarField green_field(const TruncatedDomain& domain) {
  check_domain(domain);
  ScalarField field;
  field.domain = domain;
  const Rect box = domain.window();
  field.clipped = domain.obstacle.clipped(box.x1_hi, box.x2_hi);
  GridProblem problem(GridSpec{box, domain.sides, TopPolicy::kFreeSpace});
  for (auto x = box.x1_lo; x <= box.x1_hi; ++x) problem.set_fixed({x, 0}, 0.0);
  for_each_site_in(field.clipped, box, [&](Site s) { problem.set_fixed(s, 0.0); });
  for (auto x = box.x1_lo; x <= box.x1_hi; ++x) {
    const Site s{x, domain.N};
    if (!problem.fixed[problem.index(s)]) {
      problem.add_source(s, 1.0);
      field.sources += 1.0;
    }
  }
  SolverOptions opt;
  opt.tolerance = domain.tolerance * std::max(1.0, field.sources);
  field.solution = solve_grid(problem, opt);
  return field;
}

double exact_point_measure(const ScalarField& field, Site x) {
  if (x.x2 < 0 || (x.x2 > 0 && !field.domain.obstacle.contains(x))) {
    throw Error(ErrorCode::kInvalidTarget, "site is not in B or on the floor");
  }
  if (!field.in_window(x)) throw Error(ErrorCode::kOutOfWindow, "site outside the solve window");
  return field.solution.inflow(x);
}

double exact_edge_measure(const ScalarField& field, const DirectedEdge& e) {
  const bool from_ok =
      e.from.x2 == 0 || (e.from.x2 > 0 && field.domain.obstacle.contains(e.from));
  if (!adjacent(e.from, e.to) || !from_ok || e.to.x2 < 0 ||
      field.domain.obstacle.contains(e.to)) {
    throw Error(ErrorCode::kInvalidEdge, "edge must lead from B u L_0 to a site outside B");
  }
  if (!field.in_window(e.from)) {
    throw Error(ErrorCode::kOutOfWindow, "edge outside the solve window");
  }
  if (e.to.x2 == 0) return 0.0;
  if (on_top_strip(field, e.to)) return field.value(e.to) / 4.0;
  return field.solution.edge_inflow(e.from, e.to);
}

double exact_hat_measure(const ScalarField& field, Site y) {
  if (y.x2 < 0 || field.domain.obstacle.contains(y)) {
    throw Error(ErrorCode::kInvalidSite, "site must lie in the half-plane outside B");
  }
  const int deg = neighbors_in(field.domain.obstacle, y);
  if (deg == 0) throw Error(ErrorCode::kInvalidSite, "site has no neighbor in B");
  if (y.x2 == 0) return 0.0;
  return deg * field.value(y) / 4.0;
}

MeasureReport measure_report(const ScalarField& field) {
  MeasureReport r;
  const Rect box = field.domain.window();
  r.N = field.domain.N;
  r.W = box.x1_hi;
  r.H = box.x2_hi;
  r.sources = field.sources;
  r.absorbed = field.absorbed();
  r.leaked = field.leaked();
  r.tolerance = field.domain.tolerance;
  r.residual = field.solution.residual;
  r.iterations = field.solution.iterations;

  std::vector<Site> targets;
  for (auto x = box.x1_lo; x <= box.x1_hi; ++x) {
    if (!field.clipped.contains({x, 0})) targets.push_back({x, 0});
  }
  for_each_site_in(field.clipped, box, [&](Site s) { targets.push_back(s); });
  std::sort(targets.begin(), targets.end());
  for (const auto& x : targets) {
    r.point.push_back({x, field.solution.inflow(x)});
    for (int d = 0; d < 4; ++d) {
      const Site y = neighbor(x, d);
      if (y.x2 <= 0 || field.clipped.contains(y)) continue;
      if (!box.contains(y) && !on_top_strip(field, y)) continue;
      const double v = field.value(y) / 4.0;
      if (v != 0.0) r.edges.push_back({DirectedEdge{x, y}, v});
    }
  }
  const Rect outer{box.x1_lo, box.x1_hi, 1, box.x2_hi + 1};
  for (const auto& y : outer_boundary(field.clipped, outer)) {
    r.hat.push_back({y, neighbors_in(field.clipped, y) * field.value(y) / 4.0});
  }
  return r;
}

void write_report_csv(std::ostream& os, const MeasureReport& r) {
  os.precision(17);
  os << "# N=" << r.N << " W=" << r.W << " H=" << r.H << " tol=" << r.tolerance
     << " residual=" << r.residual << " iterations=" << r.iterations << "\n";
  os << "# sources=" << r.sources << " absorbed=" << r.absorbed << " leaked=" << r.leaked
     << "\n";
  os << "kind,x1,x2,y1,y2,value\n";
  for (const auto& p : r.point) {
    os << "point," << p.site.x1 << ',' << p.site.x2 << ",,," << p.value << '\n';
  }
  for (const auto& e : r.edges) {
    os << "edge," << e.edge.from.x1 << ',' << e.edge.from.x2 << ',' << e.edge.to.x1 << ','
       << e.edge.to.x2 << ',' << e.value << '\n';
  }
  for (const auto& h : r.hat) {
    os << "hat," << h.site.x1 << ',' << h.site.x2 << ",,," << h.value << '\n';
  }
}

void write_field_csv(std::ostream& os, const ScalarField& field) {
  const Rect box = field.domain.window();
  os.precision(17);
  os << "# N=" << field.domain.N << " W=" << box.x1_hi << " H=" << box.x2_hi
     << " tol=" << field.domain.tolerance << " leaked=" << field.leaked() << "\n";
  os << "x1,x2,value\n";
  for (auto x2 = box.x2_lo; x2 <= box.x2_hi; ++x2) {
    for (auto x1 = box.x1_lo; x1 <= box.x1_hi; ++x1) {
      const Site s{x1, x2};
      if (field.solution.is_fixed(s)) continue;
      os << x1 << ',' << x2 << ',' << field.solution.value(s) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------

HittingField::HittingField(const SitePredicate& target_a, const SitePredicate& target_b,
                           const std::vector<Site>& seeds, const HittingOptions& opt,
                           const SitePredicate& count)
    : a_(target_a), b_(target_b), count_(count), opt_(opt) {
  if (!a_ || !b_) throw Error(ErrorCode::kInvalidArgument, "targets must be set");
  if (seeds.empty()) throw Error(ErrorCode::kInvalidArgument, "no start sites");
  auto is_target = [&](Site s) { return b_(s) || a_(s); };
  std::unordered_set<Site, SiteHash> seen;
  std::deque<Site> queue;
  Rect box{std::numeric_limits<std::int64_t>::max(), std::numeric_limits<std::int64_t>::min(),
           std::numeric_limits<std::int64_t>::max(), std::numeric_limits<std::int64_t>::min()};
  auto grow = [&](Site s) {
    box.x1_lo = std::min(box.x1_lo, s.x1);
    box.x1_hi = std::max(box.x1_hi, s.x1);
    box.x2_lo = std::min(box.x2_lo, s.x2);
    box.x2_hi = std::max(box.x2_hi, s.x2);
  };
  auto visit = [&](Site s) {
    if (opt_.half_plane && s.x2 < 0) {
      throw Error(ErrorCode::kNotEnclosed, "targets do not enclose the start");
    }
    if (opt_.reflect_half_width && std::abs(s.x1) > *opt_.reflect_half_width) return;
    grow(s);
    if (is_target(s) || seen.contains(s)) return;
    seen.insert(s);
    if (seen.size() > opt_.max_sites) {
      throw Error(ErrorCode::kNotEnclosed, "component exceeds the site limit");
    }
    queue.push_back(s);
  };
  for (const auto& s : seeds) {
    visit(s);
    for (int d = 0; d < 4; ++d) visit(neighbor(s, d));
  }
  while (!queue.empty()) {
    const Site y = queue.front();
    queue.pop_front();
    for (int d = 0; d < 4; ++d) visit(neighbor(y, d));
  }
  box_ = box;

  const SidePolicy sides =
      opt_.reflect_half_width ? SidePolicy::kReflecting : SidePolicy::kAbsorbing;
  GridProblem problem(GridSpec{box, sides, TopPolicy::kAbsorbing});
  kind_.assign(problem.cells(), 0);
  for (std::size_t i = 0; i < problem.cells(); ++i) {
    const Site s = problem.site(i);
    if (seen.contains(s)) {
      kind_[i] = 1;
      continue;
    }
    if (b_(s)) {
      kind_[i] = 3;
    } else if (a_(s)) {
      kind_[i] = 2;
    }
    problem.set_fixed(s, kind_[i] == 2 ? 1.0 : 0.0);
  }
  SolverOptions sopt;
  sopt.tolerance = opt_.tolerance;
  if (!seen.empty()) {
    auto sol = solve_grid(problem, sopt);
    u_ = std::move(sol.u);
    iterations_ = sol.iterations;
  } else {
    u_.assign(problem.cells(), 0.0);
    for (std::size_t i = 0; i < problem.cells(); ++i) u_[i] = kind_[i] == 2 ? 1.0 : 0.0;
  }
  if (count_) {
    double sources = 0.0;
    for (std::size_t i = 0; i < problem.cells(); ++i) {
      problem.fixed_value[i] = 0.0;
      if (kind_[i] == 1 && count_(problem.site(i))) {
        problem.source[i] = 1.0;
        sources += 1.0;
      }
    }
    sopt.tolerance = opt_.tolerance * std::max(1.0, sources);
    visits_ = sources > 0 ? solve_grid(problem, sopt).u : std::vector<double>(problem.cells(), 0.0);
  }
}

double HittingField::inner(const std::vector<double>& u, Site y) const {
  if (!box_.contains(y)) throw Error(ErrorCode::kNotEnclosed, "site outside the solved region");
  const auto i = static_cast<std::size_t>((y.x2 - box_.x2_lo) * box_.width() + (y.x1 - box_.x1_lo));
  if (kind_[i] == 0) throw Error(ErrorCode::kNotEnclosed, "site outside the solved region");
  return u[i];
}

double HittingField::probability(Site start, TimeConvention convention) const {
  if (convention == TimeConvention::kHitting) {
    if (b_(start)) return 0.0;
    if (a_(start)) return 1.0;
    return inner(u_, start);
  }
  double p = 0.0;
  for (int d = 0; d < 4; ++d) {
    const Site y = step_from(start, d);
    if (b_(y)) continue;
    p += a_(y) ? 1.0 : inner(u_, y);
  }
  return p / 4.0;
}

Site HittingField::step_from(Site x, int d) const {
  const Site y = neighbor(x, d);
  if (opt_.reflect_half_width && std::abs(y.x1) > *opt_.reflect_half_width) return x;
  return y;
}

double HittingField::expected_visits(Site start) const {
  if (!count_) throw Error(ErrorCode::kInvalidArgument, "no visit set was given");
  if (!b_(start) && !a_(start)) return inner(visits_, start);
  double v = count_(start) ? 1.0 : 0.0;
  for (int d = 0; d < 4; ++d) {
    const Site y = step_from(start, d);
    if (!b_(y) && !a_(y)) v += inner(visits_, y) / 4.0;
  }
  return v;
}

double hitting_probability(const SitePredicate& target_a, const SitePredicate& target_b,
                           Site start, const HittingOptions& opt) {
  return HittingField(target_a, target_b, {start}, opt).probability(start);
}

// ---------------------------------------------------------------------------

ConvergenceTable converge_measure(const SetFamily& family, Site x, const ConvergeOptions& opt) {
  if (opt.schedule.empty()) throw Error(ErrorCode::kInvalidArgument, "empty N schedule");
  if (!std::is_sorted(opt.schedule.begin(), opt.schedule.end()) ||
      std::adjacent_find(opt.schedule.begin(), opt.schedule.end()) != opt.schedule.end()) {
    throw Error(ErrorCode::kInvalidArgument, "N schedule must be increasing");
  }
  auto solve = [&](std::int64_t N, std::int64_t W, double* leaked) {
    TruncatedDomain d;
    d.N = N;
    d.W = W;
    d.sides = opt.sides;
    d.obstacle = family.materialize(W);
    const auto field = green_field(d);
    *leaked = field.leaked();
    return exact_point_measure(field, x);
  };
  ConvergenceTable table;
  for (const auto N : opt.schedule) {
    ConvergenceRow row;
    row.N = N;
    row.W = opt.width_factor * N;
    row.value = solve(N, row.W, &row.leaked);
    row.width_change = std::numeric_limits<double>::infinity();
    for (std::int64_t i = 0; i < opt.max_width_doublings; ++i) {
      double leaked = 0.0;
      const double wider = solve(N, 2 * row.W, &leaked);
      const double scale = std::max(std::abs(wider), std::numeric_limits<double>::min());
      row.width_change = std::abs(wider - row.value) / scale;
      row.W *= 2;
      row.value = wider;
      row.leaked = leaked;
      if (row.width_change < opt.width_tolerance) break;
    }
    table.rows.push_back(row);
  }
  const auto& rows = table.rows;
  if (rows.size() >= 3) {
    auto rel = [&](std::size_t i) {
      return std::abs(rows[i].value - rows[i - 1].value) /
             std::max(std::abs(rows[i].value), std::numeric_limits<double>::min());
    };
    const std::size_t n = rows.size();
    table.converged = rel(n - 1) < opt.epsilon && rel(n - 2) < opt.epsilon;
  }
  return table;
}

}  // namespace stathm
