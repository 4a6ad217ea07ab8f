#pragma once

#include <cstdint>
#include <vector>

#include "stathm/lattice.hpp"

namespace stathm {

// What happens to a walk that steps out of the box through a side.
enum class SidePolicy {
  kAbsorbing,   // the walk is lost (counted as leaked mass)
  kReflecting,  // the walk stays where it is
};

enum class TopPolicy {
  kAbsorbing,
  kReflecting,
  // Free half-plane above the box: a walk stepping up returns to the top row
  // with the exact law of the walk in the strip above (no sources or
  // obstacles up there).
  kFreeSpace,
};

struct GridSpec {
  Rect box;
  SidePolicy sides = SidePolicy::kReflecting;
  TopPolicy top = TopPolicy::kFreeSpace;
};

// Linear system u(y) = source(y) + sum_y' P(y, y') u(y') on the free cells of
// the box, with u prescribed on fixed cells. The bottom side is absorbing.
struct GridProblem {
  explicit GridProblem(GridSpec s);

  bool in_box(Site s) const { return spec.box.contains(s); }
  std::size_t index(Site s) const {
    return static_cast<std::size_t>((s.x2 - spec.box.x2_lo) * spec.box.width() +
                                    (s.x1 - spec.box.x1_lo));
  }
  Site site(std::size_t i) const;
  std::size_t cells() const { return fixed.size(); }

  void set_fixed(Site s, double v);
  void add_source(Site s, double v);

  GridSpec spec;
  std::vector<std::uint8_t> fixed;
  std::vector<double> fixed_value;
  std::vector<double> source;
};

struct SolverOptions {
  double tolerance = 1e-12;  // max-norm residual, absolute
  std::uint64_t max_iterations = 200000;
  // Precondition with the obstacle-free box operator, inverted by a lateral
  // cosine/sine transform and one tridiagonal solve per mode.
  bool precondition = true;
};

struct GridSolution {
  GridSpec spec;
  std::vector<double> u;  // fixed cells hold their prescribed value
  std::vector<std::uint8_t> fixed;
  // Mass arriving at each top-row cell from above, per column.
  std::vector<double> from_above;
  std::uint64_t iterations = 0;
  double residual = 0.0;
  // Flux accounting for the walk with unit mass per unit source:
  // absorbed into fixed cells and lost through absorbing sides.
  double absorbed = 0.0;
  double leaked = 0.0;

  std::size_t index(Site s) const {
    return static_cast<std::size_t>((s.x2 - spec.box.x2_lo) * spec.box.width() +
                                    (s.x1 - spec.box.x1_lo));
  }
  bool in_box(Site s) const { return spec.box.contains(s); }
  bool is_fixed(Site s) const { return fixed[index(s)] != 0; }
  double value(Site s) const { return u[index(s)]; }
  // u(y)/4 if y is a free neighbor of x in the box, else 0.
  double edge_inflow(Site x, Site y) const;
  // Total mass entering x: free neighbors plus returns from above.
  double inflow(Site x) const;
};

// Throws kNonConvergence when the residual target is not met.
GridSolution solve_grid(const GridProblem& problem, const SolverOptions& opt = {});

// Return factor r_k of the free strip above for a horizontal mode with
// eigenvalue mu: the smaller root of r^2 - (4 - 2 mu) r + 1 = 0.
double strip_return_factor(double mu);

}  // namespace stathm
