#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "stathm/lattice.hpp"
#include "stathm/sets.hpp"
#include "stathm/walk.hpp"

namespace stathm {

enum class Method { kExact, kMc };

std::string_view to_string(Method m);
Method parse_method(std::string_view text);

// Parameters of the wedge-chain construction for a power envelope of order
// alpha with exceptional height h0.
struct ScheduleParams {
  double alpha = 0.0;
  double beta = 0.0;    // 4 / (alpha + 3)
  double gamma = 0.0;   // 2 (alpha - 1) / (alpha + 3)
  double alpha1 = 0.0;  // beta + gamma
  std::int64_t k0 = 0;
  std::int64_t h0 = 0;
  // The three lower bounds whose maximum is k0.
  std::int64_t k_height = 0;  // min{k : 2^(beta k) > 2 h0}
  std::int64_t k_ratio = 0;   // 2 ceil((alpha + 3) / (alpha - 1))
  std::int64_t k_slope = 0;   // ceil(3 / (alpha1 - 1))

  std::int64_t k(std::int64_t i) const { return k0 + i; }
  // Half-width of the strip s_i on L_{2^k_i}: sum_{j=1..i} 2^((1+gamma) k_j).
  double strip_half_width(std::int64_t i) const;
  // x in W_{i,y}: x2 - ceil(2^(beta k_i)) >= |x1 - y1| 2^(-gamma k_i).
  bool in_wedge(std::int64_t i, Site y, Site x) const;
};

ScheduleParams schedule_params(double alpha, std::int64_t h0);

struct Assertion {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Measurements, bounds and pass flags of one verification run. The flags are
// derived from the recorded numbers only.
struct VerificationReport {
  std::string name;
  nlohmann::json inputs = nlohmann::json::object();
  nlohmann::json levels = nlohmann::json::array();
  nlohmann::json bounds = nlohmann::json::object();
  std::vector<Assertion> assertions;
  std::vector<std::string> notes;
  double runtime_seconds = 0.0;

  bool passed() const;
  void check(std::string name, bool pass, std::string detail = {});
  nlohmann::json to_json() const;
  void write_text(std::ostream& os) const;
};

struct CalculusSample {
  double x = 0.0;
  double y = 0.0;
  double alpha = 2.0;
};

// (x + y)^a >= x^a + a x^(a-1) y, with a relative slack of 1e-12.
VerificationReport calculus_check(const std::vector<CalculusSample>& samples);

struct RectangleOptions {
  Method method = Method::kExact;
  McOptions mc;
  double tolerance = 1e-4;  // p(k,n) <= p(k,1)^n (1 + tolerance)
};

// P_x(vertical sides of R_{k,n} before horizontal sides) for x on {0} x [-k,k],
// with R_{k,n} = [-nk, nk] x [-k, k] shifted up by k. Corners count as
// horizontal. Starts on the boundary use the hitting convention.
double rectangle_escape(std::int64_t k, std::int64_t n, std::int64_t x2, const RectangleOptions& opt = {});

VerificationReport rectangle_escape_table(const std::vector<std::int64_t>& ks,
                                          const std::vector<std::int64_t>& ns,
                                          const RectangleOptions& opt = {});

struct Thm1Options {
  Method method = Method::kExact;
  McOptions mc;
  double escape_margin = 0.01;  // max escape <= 1/2 - margin
  double decay_ratio = 0.95;    // v(N_{k+1}) <= ratio v(N_k) for k >= 2
  // Blocking set used in place of the wedge {x2 < c |x1|}.
  std::optional<SetFamily> blocker;
};

// Escape and decay checks for the wedge W_c and segment l_{n1} at heights
// N_k = 2^(k-1) ceil(c n1), k = 1..k_max.
VerificationReport verify_thm1(Rational c, std::int64_t n1, std::int64_t k_max,
                               const Thm1Options& opt = {});

// h0, D0 = [-ceil(h0^a), ceil(h0^a)] x [0, h0] and B0 = B n D0 for B the
// power envelope with extras.
struct EnvelopeCore {
  std::vector<Site> exceptional;  // sites of B above the envelope
  std::int64_t h0 = 0;
  Rect d0;
  std::vector<Site> b0;
};

EnvelopeCore envelope_core(double alpha, const std::vector<Site>& extras);

struct Thm2Options {
  Method method = Method::kExact;
  McOptions mc;
  std::vector<std::int64_t> schedule = {16, 32, 64, 128};
  double persistence = 0.5;  // min >= persistence * first
  // Levels k for the escape (~ 2^-k) and return (~ 2^k) scaling checks;
  // empty skips them.
  std::vector<std::int64_t> scaling_levels;
  double band = 8.0;
};

VerificationReport verify_thm2(double alpha, const std::vector<Site>& extras,
                               const Thm2Options& opt = {});

struct VisitsOptions {
  Method method = Method::kExact;
  McOptions mc;
  double tolerance = 1e-6;  // exact
  double sigmas = 3.0;      // mc
};

// E_y[visits to L_N before L_0] = 4N for y on L_N.
VerificationReport visits_identity_check(const std::vector<std::int64_t>& Ns,
                                         const VisitsOptions& opt = {});

}  // namespace stathm
