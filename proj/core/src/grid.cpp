#include "stathm/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "stathm/error.hpp"

namespace stathm {

GridProblem::GridProblem(GridSpec s) : spec(s) {
  if (spec.box.empty()) throw Error(ErrorCode::kInvalidArgument, "empty grid box");
  const auto n = static_cast<std::size_t>(spec.box.width() * spec.box.height());
  fixed.assign(n, 0);
  fixed_value.assign(n, 0.0);
  source.assign(n, 0.0);
}

Site GridProblem::site(std::size_t i) const {
  const auto w = static_cast<std::size_t>(spec.box.width());
  return Site{spec.box.x1_lo + static_cast<std::int64_t>(i % w),
              spec.box.x2_lo + static_cast<std::int64_t>(i / w)};
}

void GridProblem::set_fixed(Site s, double v) {
  if (!in_box(s)) throw Error(ErrorCode::kOutOfWindow, "fixed cell outside the grid");
  fixed[index(s)] = 1;
  fixed_value[index(s)] = v;
}

void GridProblem::add_source(Site s, double v) {
  if (!in_box(s)) throw Error(ErrorCode::kOutOfWindow, "source outside the grid");
  source[index(s)] += v;
}

double strip_return_factor(double mu) {
  return (2.0 - mu) - std::sqrt((1.0 - mu) * (3.0 - mu));
}

double GridSolution::edge_inflow(Site x, Site y) const {
  if (!adjacent(x, y) || !in_box(y) || is_fixed(y)) return 0.0;
  return value(y) / 4.0;
}

double GridSolution::inflow(Site x) const {
  double total = 0.0;
  for (int d = 0; d < 4; ++d) total += edge_inflow(x, neighbor(x, d));
  if (spec.top == TopPolicy::kFreeSpace && x.x2 == spec.box.x2_hi && in_box(x)) {
    total += from_above[static_cast<std::size_t>(x.x1 - spec.box.x1_lo)];
  }
  return total;
}

namespace {

// Return kernel K of the free strip above the top row, applied through a
// cosine (reflecting sides) or sine (absorbing sides) transform.
class StripKernel {
 public:
  StripKernel(std::size_t n, bool reflecting) : n_(n), factor_(n) {
    buf_ = fftw_alloc_real(n);
    const int len = static_cast<int>(n);
    if (reflecting) {
      fwd_ = fftw_plan_r2r_1d(len, buf_, buf_, FFTW_REDFT10, FFTW_ESTIMATE);
      inv_ = fftw_plan_r2r_1d(len, buf_, buf_, FFTW_REDFT01, FFTW_ESTIMATE);
      for (std::size_t k = 0; k < n; ++k) {
        const double mu = std::cos(std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
        factor_[k] = strip_return_factor(mu) / (2.0 * static_cast<double>(n));
      }
    } else {
      fwd_ = fftw_plan_r2r_1d(len, buf_, buf_, FFTW_RODFT00, FFTW_ESTIMATE);
      inv_ = fwd_;
      for (std::size_t k = 0; k < n; ++k) {
        const double mu =
            std::cos(std::numbers::pi * static_cast<double>(k + 1) / static_cast<double>(n + 1));
        factor_[k] = strip_return_factor(mu) / (2.0 * static_cast<double>(n + 1));
      }
    }
  }
  StripKernel(const StripKernel&) = delete;
  StripKernel& operator=(const StripKernel&) = delete;
  ~StripKernel() {
    if (inv_ != fwd_) fftw_destroy_plan(inv_);
    fftw_destroy_plan(fwd_);
    fftw_free(buf_);
  }

  // out = K in, both of length n.
  void apply(const std::vector<double>& in, std::vector<double>& out) {
    std::copy(in.begin(), in.end(), buf_);
    fftw_execute(fwd_);
    for (std::size_t k = 0; k < n_; ++k) buf_[k] *= factor_[k];
    fftw_execute(inv_);
    out.assign(buf_, buf_ + n_);
  }

 private:
  std::size_t n_;
  std::vector<double> factor_;
  double* buf_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_ = nullptr;
};

// Exact inverse of the box operator with every cell free: transform each
// row laterally, then solve the tridiagonal system in x2 for each mode.
class BoxPreconditioner {
 public:
  // The lateral size is rounded up to a 7-smooth length; the extra columns
  // only change the preconditioner, not the system.
  BoxPreconditioner(std::size_t width, std::size_t rows, SidePolicy sides, TopPolicy top)
      : width_(width), n_(smooth_length(width)), rows_(rows), cp_(n_ * rows), inv_(n_ * rows) {
    const std::size_t n = n_;
    buf_ = fftw_alloc_real(n * rows);
    const int len = static_cast<int>(n);
    const int many = static_cast<int>(rows);
    const bool reflecting = sides == SidePolicy::kReflecting;
    const fftw_r2r_kind fk = reflecting ? FFTW_REDFT10 : FFTW_RODFT00;
    const fftw_r2r_kind ik = reflecting ? FFTW_REDFT01 : FFTW_RODFT00;
    fwd_ = fftw_plan_many_r2r(1, &len, many, buf_, nullptr, 1, len, buf_, nullptr, 1, len, &fk,
                              FFTW_ESTIMATE);
    inv_plan_ = fftw_plan_many_r2r(1, &len, many, buf_, nullptr, 1, len, buf_, nullptr, 1, len,
                                   &ik, FFTW_ESTIMATE);
    const double nn = static_cast<double>(n);
    scale_ = reflecting ? 1.0 / (2.0 * nn) : 1.0 / (2.0 * (nn + 1.0));
    for (std::size_t k = 0; k < n; ++k) {
      const double mu = reflecting
                            ? std::cos(std::numbers::pi * static_cast<double>(k) / nn)
                            : std::cos(std::numbers::pi * static_cast<double>(k + 1) / (nn + 1.0));
      double up = 0.0;
      if (top == TopPolicy::kFreeSpace) up = strip_return_factor(mu);
      if (top == TopPolicy::kReflecting) up = 1.0;
      // Thomas factors for diag d_i, off-diagonals -1/4.
      double prev = 0.0;
      for (std::size_t i = 0; i < rows; ++i) {
        double d = 1.0 - 0.5 * mu;
        if (i + 1 == rows) d -= 0.25 * up;
        const double denom = d - (i ? -0.25 * prev : 0.0);
        inv_[i * n + k] = 1.0 / denom;
        cp_[i * n + k] = -0.25 / denom;
        prev = cp_[i * n + k];
      }
    }
  }
  BoxPreconditioner(const BoxPreconditioner&) = delete;
  BoxPreconditioner& operator=(const BoxPreconditioner&) = delete;
  ~BoxPreconditioner() {
    fftw_destroy_plan(inv_plan_);
    fftw_destroy_plan(fwd_);
    fftw_free(buf_);
  }

  // z = M^-1 r on the free cells listed in cell_of.
  void apply(const std::vector<std::size_t>& cell_of, const std::vector<double>& r,
             std::vector<double>& z) {
    std::fill(buf_, buf_ + n_ * rows_, 0.0);
    for (std::size_t i = 0; i < cell_of.size(); ++i) buf_[slot(cell_of[i])] = r[i];
    fftw_execute(fwd_);
    for (std::size_t k = 0; k < n_; ++k) buf_[k] *= inv_[k];
    for (std::size_t i = 1; i < rows_; ++i) {
      double* row = buf_ + i * n_;
      const double* below = row - n_;
      const double* inv = &inv_[i * n_];
      for (std::size_t k = 0; k < n_; ++k) row[k] = (row[k] + 0.25 * below[k]) * inv[k];
    }
    for (std::size_t i = rows_ - 1; i-- > 0;) {
      double* row = buf_ + i * n_;
      const double* above = row + n_;
      const double* cp = &cp_[i * n_];
      for (std::size_t k = 0; k < n_; ++k) row[k] -= cp[k] * above[k];
    }
    fftw_execute(inv_plan_);
    for (std::size_t i = 0; i < cell_of.size(); ++i) z[i] = scale_ * buf_[slot(cell_of[i])];
  }

 private:
  static std::size_t smooth_length(std::size_t n) {
    for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
      std::size_t v = m;
      for (std::size_t p : {2, 3, 5, 7}) {
        while (v % p == 0) v /= p;
      }
      if (v == 1) return m;
    }
  }
  std::size_t slot(std::size_t cell) const { return (cell / width_) * n_ + cell % width_; }

  std::size_t width_, n_, rows_;
  std::vector<double> cp_, inv_;
  double scale_ = 1.0;
  double* buf_ = nullptr;
  fftw_plan fwd_ = nullptr;
  fftw_plan inv_plan_ = nullptr;
};

struct Operator {
  std::vector<std::size_t> cell_of;        // free index -> cell
  std::vector<std::int64_t> nb;            // 4 per free cell, -1 if not free
  std::vector<std::uint8_t> stay;          // reflected moves
  std::vector<std::uint8_t> lost;          // moves out through absorbing sides
  std::vector<std::pair<std::size_t, std::size_t>> top;  // (free index, column)
  std::size_t width = 0;
  StripKernel* kernel = nullptr;
  mutable std::vector<double> row_in, row_out;

  std::size_t size() const { return cell_of.size(); }

  void apply(const std::vector<double>& x, std::vector<double>& y) const {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
      double s = stay[i] * x[i];
      const std::int64_t* q = &nb[4 * i];
      for (int d = 0; d < 4; ++d) {
        if (q[d] >= 0) s += x[static_cast<std::size_t>(q[d])];
      }
      y[i] = x[i] - 0.25 * s;
    }
    if (kernel && !top.empty()) {
      std::fill(row_in.begin(), row_in.end(), 0.0);
      for (const auto& [i, c] : top) row_in[c] = x[i];
      kernel->apply(row_in, row_out);
      for (const auto& [i, c] : top) y[i] -= 0.25 * row_out[c];
    }
  }
};

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

GridSolution solve_grid(const GridProblem& problem, const SolverOptions& opt) {
  const GridSpec& spec = problem.spec;
  const Rect& box = spec.box;
  const auto width = static_cast<std::size_t>(box.width());
  const std::size_t cells = problem.cells();

  std::vector<std::int64_t> free_index(cells, -1);
  Operator op;
  op.width = width;
  for (std::size_t c = 0; c < cells; ++c) {
    if (!problem.fixed[c]) {
      free_index[c] = static_cast<std::int64_t>(op.cell_of.size());
      op.cell_of.push_back(c);
    }
  }
  const std::size_t n = op.size();
  op.nb.assign(4 * n, -1);
  op.stay.assign(n, 0);
  op.lost.assign(n, 0);

  std::optional<StripKernel> kernel;
  if (spec.top == TopPolicy::kFreeSpace) {
    kernel.emplace(width, spec.sides == SidePolicy::kReflecting);
    op.kernel = &*kernel;
    op.row_in.assign(width, 0.0);
    op.row_out.assign(width, 0.0);
  }

  // Right-hand side: sources plus one-step flux from fixed cells.
  std::vector<double> b(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Site s = problem.site(op.cell_of[i]);
    b[i] = problem.source[op.cell_of[i]];
    for (int d = 0; d < 4; ++d) {
      const Site t = neighbor(s, d);
      if (box.contains(t)) {
        const std::size_t tc = problem.index(t);
        if (problem.fixed[tc]) {
          b[i] += 0.25 * problem.fixed_value[tc];
        } else {
          op.nb[4 * i + d] = free_index[tc];
        }
        continue;
      }
      const bool lateral = d == 0 || d == 2;
      const bool up = d == 1;
      if ((lateral && spec.sides == SidePolicy::kReflecting) ||
          (up && spec.top == TopPolicy::kReflecting)) {
        ++op.stay[i];
      } else if (up && spec.top == TopPolicy::kFreeSpace) {
        // handled by the strip kernel
      } else {
        ++op.lost[i];
      }
    }
    if (s.x2 == box.x2_hi && kernel) {
      op.top.emplace_back(i, static_cast<std::size_t>(s.x1 - box.x1_lo));
    }
  }
  if (kernel) {
    std::vector<double> row(width, 0.0), out;
    bool any = false;
    for (std::size_t c = 0; c < width; ++c) {
      const std::size_t cell = static_cast<std::size_t>(box.height() - 1) * width + c;
      if (problem.fixed[cell]) {
        row[c] = problem.fixed_value[cell];
        any = any || row[c] != 0.0;
      }
    }
    if (any) {
      kernel->apply(row, out);
      for (const auto& [i, c] : op.top) b[i] += 0.25 * out[c];
    }
  }

  // Preconditioned conjugate gradients on the symmetric positive definite
  // system.
  std::optional<BoxPreconditioner> box_pc;
  // Transforming the whole box only pays off when most of it is free.
  if (opt.precondition && n > 0 && 4 * n >= cells) {
    box_pc.emplace(width, static_cast<std::size_t>(box.height()), spec.sides, spec.top);
  }
  auto precondition = [&](const std::vector<double>& in, std::vector<double>& out) {
    if (box_pc) {
      box_pc->apply(op.cell_of, in, out);
    } else {
      out = in;
    }
  };
  std::vector<double> x(n, 0.0), r = b, z(n), p(n), ap(n);
  precondition(r, z);
  p = z;
  double rz = dot(r, z);
  double res = max_abs(r);
  std::uint64_t it = 0;
  while (res > opt.tolerance) {
    if (it >= opt.max_iterations) {
      throw Error(ErrorCode::kNonConvergence,
                  "solver did not converge: residual " + std::to_string(res));
    }
    op.apply(p, ap);
    const double pap = dot(p, ap);
    if (pap <= 0.0) break;
    const double alpha = rz / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    ++it;
    if (it % 64 == 0) {
      // Refresh the recursive residual to avoid drift.
      op.apply(x, ap);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
    }
    res = max_abs(r);
    if (res <= opt.tolerance) {
      op.apply(x, ap);
      for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
      res = max_abs(r);
      if (res <= opt.tolerance) break;
    }
    precondition(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }

  GridSolution sol;
  sol.spec = spec;
  sol.fixed = problem.fixed;
  sol.u = problem.fixed_value;
  for (std::size_t c = 0; c < cells; ++c) {
    if (!problem.fixed[c]) sol.u[c] = 0.0;
  }
  for (std::size_t i = 0; i < n; ++i) sol.u[op.cell_of[i]] = x[i];
  sol.iterations = it;
  sol.residual = res;
  sol.from_above.assign(width, 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    const Site s = problem.site(op.cell_of[i]);
    for (int d = 0; d < 4; ++d) {
      const Site t = neighbor(s, d);
      if (box.contains(t) && problem.fixed[problem.index(t)]) sol.absorbed += 0.25 * x[i];
    }
    sol.leaked += 0.25 * op.lost[i] * x[i];
  }
  if (kernel) {
    std::vector<double> row(width, 0.0), out;
    for (const auto& [i, c] : op.top) row[c] = x[i];
    kernel->apply(row, out);
    for (std::size_t c = 0; c < width; ++c) sol.from_above[c] = 0.25 * out[c];
    std::vector<double> ones(width, 1.0), k1;
    kernel->apply(ones, k1);
    const std::size_t top_row = static_cast<std::size_t>(box.height() - 1) * width;
    for (std::size_t c = 0; c < width; ++c) {
      if (problem.fixed[top_row + c]) sol.absorbed += sol.from_above[c];
    }
    for (const auto& [i, c] : op.top) sol.leaked += 0.25 * x[i] * (1.0 - k1[c]);
  }
  return sol;
}

}  // namespace stathm
