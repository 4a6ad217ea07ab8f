#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "stathm/grid.hpp"
#include "stathm/lattice.hpp"
#include "stathm/sets.hpp"

namespace stathm {

// Finite window [-W, W] x [0, H] for the measures of B with sources on L_N.
// H = N unless B reaches above N, in which case H = min(max height of B,
// N + top_margin). Above H the walk moves in the free strip.
struct TruncatedDomain {
  std::int64_t N = 0;
  std::int64_t W = 0;  // 0 selects the default 8N
  SiteSet obstacle;
  SidePolicy sides = SidePolicy::kReflecting;
  std::optional<std::int64_t> top_margin;  // default 4N
  double tolerance = 1e-12;                // residual per unit source

  std::int64_t half_width() const { return W > 0 ? W : 8 * N; }
  std::int64_t height() const;
  Rect window() const;
};

// Expected visits m(y) summed over walkers started at every site of L_N \ B
// inside the window, killed on B u L_0.
struct ScalarField {
  TruncatedDomain domain;
  SiteSet clipped;  // the part of B the solver honors
  GridSolution solution;
  double sources = 0.0;

  double value(Site y) const;
  bool in_window(Site y) const { return domain.window().contains(y); }
  double leaked() const { return solution.leaked; }
  double absorbed() const { return solution.absorbed; }
};

ScalarField green_field(const TruncatedDomain& domain);

// Sum over neighbors y of x outside B u L_0 of m(y)/4.
double exact_point_measure(const ScalarField& field, Site x);
// m(e.to)/4 for e = x -> y with x in B u L_0 and y outside B.
double exact_edge_measure(const ScalarField& field, const DirectedEdge& e);
// deg_B(y) m(y)/4 for y outside B with a neighbor in B.
double exact_hat_measure(const ScalarField& field, Site y);

struct SiteValue {
  Site site;
  double value;
};
struct EdgeValue {
  DirectedEdge edge;
  double value;
};

struct MeasureReport {
  std::int64_t N = 0;
  std::int64_t W = 0;
  std::int64_t H = 0;
  std::vector<SiteValue> point;  // sites of B and of the floor in the window
  std::vector<EdgeValue> edges;  // edges with nonzero flux
  std::vector<SiteValue> hat;    // outer boundary of B in the window
  double sources = 0.0;
  double absorbed = 0.0;
  double leaked = 0.0;
  double tolerance = 0.0;
  double residual = 0.0;
  std::uint64_t iterations = 0;
};

MeasureReport measure_report(const ScalarField& field);

// CSV with a commented metadata header: kind,x1,x2,y1,y2,value rows.
void write_report_csv(std::ostream& os, const MeasureReport& report);
// x1,x2,value rows for every free site of the field.
void write_field_csv(std::ostream& os, const ScalarField& field);

// Hitting-time (n >= 0) or exit-time (n >= 1) convention for P(tau_A < tau_B).
enum class TimeConvention { kExit, kHitting };

using SitePredicate = std::function<bool(Site)>;

struct HittingOptions {
  TimeConvention convention = TimeConvention::kExit;
  std::uint64_t max_sites = 20'000'000;
  double tolerance = 1e-12;
  // Restrict the walk to the half-plane: leaving it counts as not enclosed.
  bool half_plane = true;
  // Optional stay-put side walls at |x1| = reflect_half_width.
  std::optional<std::int64_t> reflect_half_width;
};

// Harmonic function on the components of Z^2 minus (A u B) reached from the
// seeds, equal to 1 on A \ B and 0 on B. Also carries an optional visit
// count field: expected visits to `count` before hitting A u B.
class HittingField {
 public:
  HittingField(const SitePredicate& target_a, const SitePredicate& target_b,
               const std::vector<Site>& seeds, const HittingOptions& opt = {},
               const SitePredicate& count = nullptr);

  // P_start(tau_A < tau_B) in the requested convention.
  double probability(Site start, TimeConvention convention) const;
  double probability(Site start) const { return probability(start, opt_.convention); }
  // E_start[# n < tau_{A u B} with S_n in count], exit convention for starts
  // on the targets.
  double expected_visits(Site start) const;

  std::uint64_t iterations() const { return iterations_; }
  const Rect& box() const { return box_; }

 private:
  double inner(const std::vector<double>& u, Site y) const;
  // Neighbor of x in direction d, or x itself when a side wall blocks the move.
  Site step_from(Site x, int d) const;

  SitePredicate a_, b_, count_;
  HittingOptions opt_;
  Rect box_;
  std::vector<std::uint8_t> kind_;  // 0 outside, 1 free, 2 on A, 3 on B
  std::vector<double> u_;
  std::vector<double> visits_;
  std::uint64_t iterations_ = 0;
};

double hitting_probability(const SitePredicate& target_a, const SitePredicate& target_b,
                           Site start, const HittingOptions& opt = {});

struct ConvergenceRow {
  std::int64_t N = 0;
  std::int64_t W = 0;
  double value = 0.0;
  double width_change = 0.0;  // relative change of the last width doubling
  double leaked = 0.0;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  bool converged = false;
};

struct ConvergeOptions {
  std::vector<std::int64_t> schedule = {8, 16, 32, 64, 128, 256};
  std::int64_t width_factor = 8;
  double width_tolerance = 1e-4;
  std::int64_t max_width_doublings = 3;
  double epsilon = 1e-3;
  SidePolicy sides = SidePolicy::kReflecting;
};

// Point measure of x for the family at each N of the schedule. W starts at
// width_factor N and doubles until two widths agree to width_tolerance.
ConvergenceTable converge_measure(const SetFamily& family, Site x, const ConvergeOptions& opt = {});

}  // namespace stathm
