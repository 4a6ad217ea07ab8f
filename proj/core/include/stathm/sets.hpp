#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stathm/lattice.hpp"

namespace stathm {

struct Rational {
  std::int64_t num = 1;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;
  // "p", "p/q" or a finite decimal such as "0.5".
  static Rational parse(std::string_view text);
};

// Columns {n} x [0, 2^|n|] for |n| <= n_max, floor sites excluded.
SiteSet make_counterexample(std::int64_t n_max);

// Sites with 1 <= x2 < c |x1|, |x1| <= half_width.
SiteSet make_wedge(Rational c, std::int64_t half_width);

// Sites with 1 <= x2 <= |x1|^(1/alpha), |x1| <= half_width, plus extras.
SiteSet make_power_envelope(double alpha, std::int64_t half_width,
                            const std::vector<Site>& extras = {});

// floor(|x1|^(1/alpha)), exact at integer boundaries.
std::int64_t envelope_height(double alpha, std::int64_t x1);

SiteSet load_set(const std::filesystem::path& path);
void save_set(const SiteSet& set, const std::filesystem::path& path);

// A possibly infinite set, materialized on demand for a given half-width.
//   empty | file:<path> | cex[:nmax=<K>] | wedge:c=<rational>
//   | env:alpha=<real>[,extras=<x1>:<x2>/<x1>:<x2>...]
class SetFamily {
 public:
  enum class Kind { kEmpty, kFixed, kCounterexample, kWedge, kEnvelope };

  SetFamily() = default;
  static SetFamily parse(std::string_view spec);
  static SetFamily fixed(SiteSet set, std::string label = "fixed");
  // Without n_max every column of the window is present; columns taller
  // than 2^62 are stored as unbounded runs.
  static SetFamily counterexample(std::optional<std::int64_t> n_max = std::nullopt);
  static SetFamily wedge(Rational c);
  static SetFamily envelope(double alpha, std::vector<Site> extras = {});

  // Sites with |x1| <= half_width (all of them for a fixed set).
  SiteSet materialize(std::int64_t half_width) const;
  const std::string& spec() const { return spec_; }
  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  Rational c() const { return c_; }
  const std::vector<Site>& extras() const { return extras_; }

 private:
  Kind kind_ = Kind::kEmpty;
  std::string spec_ = "empty";
  SiteSet fixed_;
  std::optional<std::int64_t> n_max_;
  Rational c_;
  double alpha_ = 0.0;
  std::vector<Site> extras_;
};

struct GrowthClass {
  enum class Kind { kSuperlinear, kSublinear, kIndeterminate };
  Kind kind = Kind::kIndeterminate;
  // Superlinear witness: h_{x1} >= c |x1| for M <= |x1| <= half_width.
  double c = 0.0;
  std::int64_t M = 0;
  // Sublinear witness: sites outside {x2 <= |x1|^(1/alpha)} form `exceptional`.
  double alpha = 0.0;
  std::vector<Site> exceptional;
  double slope = 0.0;  // fitted growth exponent of the column heights
  std::string reason;
};

std::string_view to_string(GrowthClass::Kind kind);

// Exhaustive check of the linear and power envelopes on |x1| <= half_width.
// The growth exponent is fitted on the outer half of the window.
GrowthClass classify_growth(const SiteSet& set, std::int64_t half_width);

}  // namespace stathm
