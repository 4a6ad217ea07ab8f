#include "stathm/sets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "stathm/error.hpp"

namespace stathm {

namespace {

std::int64_t to_int(std::string_view s, const char* what) {
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw Error(ErrorCode::kParse, std::string("bad ") + what + ": '" + std::string(s) + "'");
  }
  return v;
}

double to_real(std::string_view s, const char* what) {
  double v = 0.0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::kParse, std::string("bad ") + what + ": '" + std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string real_str(double v) {
  char buf[32];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

std::string Rational::str() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

Rational Rational::parse(std::string_view text) {
  Rational r;
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    r.num = to_int(text.substr(0, slash), "rational");
    r.den = to_int(text.substr(slash + 1), "rational");
  } else if (const auto dot = text.find('.'); dot != std::string_view::npos) {
    const auto frac = text.substr(dot + 1);
    if (frac.size() > 15) throw Error(ErrorCode::kParse, "too many decimal digits");
    std::string digits(text.substr(0, dot));
    digits += frac;
    r.num = to_int(digits, "rational");
    r.den = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) r.den *= 10;
  } else {
    r.num = to_int(text, "rational");
  }
  if (r.den == 0) throw Error(ErrorCode::kParse, "zero denominator");
  if (r.den < 0) {
    r.den = -r.den;
    r.num = -r.num;
  }
  const auto g = std::gcd(r.num, r.den);
  if (g > 1) {
    r.num /= g;
    r.den /= g;
  }
  return r;
}

SiteSet make_counterexample(std::int64_t n_max) {
  if (n_max < 0) throw Error(ErrorCode::kInvalidArgument, "n_max must be >= 0");
  if (n_max > 62) throw Error(ErrorCode::kOverflow, "2^n_max exceeds the integer range");
  SiteSet::Builder b;
  for (std::int64_t n = -n_max; n <= n_max; ++n) {
    b.add_column(n, std::int64_t{1} << (n < 0 ? -n : n));
  }
  return std::move(b).build();
}

SiteSet make_wedge(Rational c, std::int64_t half_width) {
  if (c.num <= 0 || c.den <= 0) throw Error(ErrorCode::kInvalidArgument, "c must be > 0");
  if (half_width < 0) throw Error(ErrorCode::kInvalidArgument, "half_width must be >= 0");
  SiteSet::Builder b;
  for (std::int64_t x = -half_width; x <= half_width; ++x) {
    const std::int64_t ax = x < 0 ? -x : x;
    if (ax == 0) continue;
    if (c.num > std::numeric_limits<std::int64_t>::max() / ax) {
      throw Error(ErrorCode::kOverflow, "wedge height overflows");
    }
    // Largest h with h < c |x|, i.e. h * den < num * |x|.
    const std::int64_t h = (c.num * ax - 1) / c.den;
    if (h >= 1) b.add_column(x, h);
  }
  return std::move(b).build();
}

std::int64_t envelope_height(double alpha, std::int64_t x1) {
  if (!(alpha > 1.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be > 1");
  const long double ax = std::abs(static_cast<long double>(x1));
  if (ax < 1) return 0;
  auto h = static_cast<std::int64_t>(std::floor(std::pow(ax, 1.0L / alpha)));
  const auto fits = [&](std::int64_t k) {
    return std::pow(static_cast<long double>(k), static_cast<long double>(alpha)) <= ax;
  };
  while (fits(h + 1)) ++h;
  while (h > 0 && !fits(h)) --h;
  return h;
}

SiteSet make_power_envelope(double alpha, std::int64_t half_width,
                            const std::vector<Site>& extras) {
  if (half_width < 0) throw Error(ErrorCode::kInvalidArgument, "half_width must be >= 0");
  SiteSet::Builder b;
  for (std::int64_t x = -half_width; x <= half_width; ++x) {
    const auto h = envelope_height(alpha, x);
    if (h >= 1) b.add_column(x, h);
  }
  b.add_sites(extras);
  return std::move(b).build();
}

SiteSet load_set(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_set_text(in);
}

void save_set(const SiteSet& set, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  write_set_text(out, set);
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

SetFamily SetFamily::fixed(SiteSet set, std::string label) {
  SetFamily f;
  f.kind_ = Kind::kFixed;
  f.fixed_ = std::move(set);
  f.spec_ = std::move(label);
  return f;
}

SetFamily SetFamily::counterexample(std::optional<std::int64_t> n_max) {
  SetFamily f;
  f.kind_ = Kind::kCounterexample;
  f.spec_ = "cex";
  if (n_max) {
    if (*n_max < 0) throw Error(ErrorCode::kInvalidArgument, "n_max must be >= 0");
    if (*n_max > 62) throw Error(ErrorCode::kOverflow, "2^n_max exceeds the integer range");
    f.n_max_ = n_max;
    f.spec_ += ":nmax=" + std::to_string(*n_max);
  }
  return f;
}

SetFamily SetFamily::wedge(Rational c) {
  if (c.num <= 0 || c.den <= 0) throw Error(ErrorCode::kInvalidArgument, "c must be > 0");
  SetFamily f;
  f.kind_ = Kind::kWedge;
  f.c_ = c;
  f.spec_ = "wedge:c=" + c.str();
  return f;
}

SetFamily SetFamily::envelope(double alpha, std::vector<Site> extras) {
  if (!(alpha > 1.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be > 1");
  SetFamily f;
  f.kind_ = Kind::kEnvelope;
  f.alpha_ = alpha;
  f.extras_ = std::move(extras);
  std::sort(f.extras_.begin(), f.extras_.end());
  f.spec_ = "env:alpha=" + real_str(alpha);
  if (!f.extras_.empty()) {
    f.spec_ += ",extras=";
    for (std::size_t i = 0; i < f.extras_.size(); ++i) {
      if (i) f.spec_ += '/';
      f.spec_ += std::to_string(f.extras_[i].x1) + ":" + std::to_string(f.extras_[i].x2);
    }
  }
  return f;
}

SetFamily SetFamily::parse(std::string_view spec) {
  if (spec == "empty") return SetFamily{};
  if (spec == "cex") return counterexample();
  const auto colon = spec.find(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::kParse, "unknown set specifier '" + std::string(spec) + "'");
  }
  const auto kind = spec.substr(0, colon);
  const auto rest = spec.substr(colon + 1);
  if (kind == "file") {
    auto f = fixed(load_set(std::string(rest)), std::string(spec));
    return f;
  }
  std::unordered_map<std::string, std::string> kv;
  for (auto item : split(rest, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::kParse, "expected key=value in '" + std::string(spec) + "'");
    }
    kv[std::string(item.substr(0, eq))] = std::string(item.substr(eq + 1));
  }
  auto take = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) {
      throw Error(ErrorCode::kParse, "missing '" + key + "' in '" + std::string(spec) + "'");
    }
    auto v = it->second;
    kv.erase(it);
    return v;
  };
  SetFamily f;
  if (kind == "cex") {
    f = counterexample(to_int(take("nmax"), "nmax"));
  } else if (kind == "wedge") {
    f = wedge(Rational::parse(take("c")));
  } else if (kind == "env") {
    const double alpha = to_real(take("alpha"), "alpha");
    std::vector<Site> extras;
    if (kv.contains("extras")) {
      for (auto tok : split(take("extras"), '/')) {
        const auto sep = tok.find(':');
        if (sep == std::string_view::npos) throw Error(ErrorCode::kParse, "extras use x1:x2");
        extras.push_back({to_int(tok.substr(0, sep), "x1"), to_int(tok.substr(sep + 1), "x2")});
        if (extras.back().x2 < 0) throw Error(ErrorCode::kInvalidSite, "extra below the floor");
      }
    }
    f = envelope(alpha, std::move(extras));
  } else {
    throw Error(ErrorCode::kParse, "unknown set kind '" + std::string(kind) + "'");
  }
  if (!kv.empty()) throw Error(ErrorCode::kParse, "unknown key '" + kv.begin()->first + "'");
  return f;
}

SiteSet SetFamily::materialize(std::int64_t half_width) const {
  switch (kind_) {
    case Kind::kEmpty:
      return {};
    case Kind::kFixed:
      return fixed_;
    case Kind::kCounterexample: {
      const auto hw = std::max<std::int64_t>(half_width, 0);
      if (n_max_) return make_counterexample(std::min(*n_max_, hw));
      SiteSet::Builder b;
      for (std::int64_t n = -hw; n <= hw; ++n) {
        const std::int64_t an = n < 0 ? -n : n;
        b.add_column(n, an <= 62 ? std::int64_t{1} << an : SiteSet::kUnbounded);
      }
      return std::move(b).build();
    }
    case Kind::kWedge:
      return make_wedge(c_, half_width);
    case Kind::kEnvelope:
      return make_power_envelope(alpha_, half_width, extras_);
  }
  return {};
}

std::string_view to_string(GrowthClass::Kind kind) {
  switch (kind) {
    case GrowthClass::Kind::kSuperlinear: return "superlinear";
    case GrowthClass::Kind::kSublinear: return "sublinear";
    case GrowthClass::Kind::kIndeterminate: return "indeterminate";
  }
  return "?";
}

GrowthClass classify_growth(const SiteSet& set, std::int64_t half_width) {
  GrowthClass out;
  if (half_width < 2) {
    out.reason = "window too narrow";
    return out;
  }
  // Highest site per column (column run or extra) and the run heights.
  std::unordered_map<std::int64_t, std::int64_t> top;
  for (const auto& [x1, c] : set.columns()) {
    if (c.top == SiteSet::kUnbounded) {
      out.reason = "unbounded column";
      return out;
    }
    top[x1] = c.top;
  }
  for (const auto& s : set.extras()) top[s.x1] = std::max(top[s.x1], s.x2);
  auto h_of = [&](std::int64_t x) { return set.column_height(x); };

  const std::int64_t outer_lo = half_width / 2 + 1;
  std::vector<double> lx, lh;
  bool outer_full = true;
  for (std::int64_t ax = outer_lo; ax <= half_width; ++ax) {
    for (const std::int64_t x : {-ax, ax}) {
      const auto h = h_of(x);
      if (h == 0) {
        outer_full = false;
        continue;
      }
      lx.push_back(std::log(static_cast<double>(ax)));
      lh.push_back(std::log(static_cast<double>(h)));
    }
  }
  if (lx.size() >= 2) {
    const double n = static_cast<double>(lx.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double mh = std::accumulate(lh.begin(), lh.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (lh[i] - mh);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    out.slope = sxx > 0 ? sxy / sxx : 0.0;
  }

  if (outer_full && out.slope >= 0.9) {
    // Smallest M with every column in [M, half_width] nonempty; c is capped at 1.
    for (std::int64_t M = 1; M <= outer_lo; ++M) {
      double rho = std::numeric_limits<double>::infinity();
      for (std::int64_t ax = M; ax <= half_width && rho > 0; ++ax) {
        const auto h = std::min(h_of(-ax), h_of(ax));
        rho = std::min(rho, static_cast<double>(h) / static_cast<double>(ax));
      }
      if (rho > 0) {
        out.kind = GrowthClass::Kind::kSuperlinear;
        out.c = std::min(1.0, rho);
        out.M = M;
        out.reason = "column heights grow linearly";
        return out;
      }
    }
  }

  if (out.slope < 0.9) {
    double alpha = std::numeric_limits<double>::infinity();
    for (const auto& [x1, h] : top) {
      const std::int64_t ax = x1 < 0 ? -x1 : x1;
      if (ax < outer_lo || ax > half_width || h < 2) continue;
      alpha = std::min(alpha, std::log(static_cast<double>(ax)) / std::log(static_cast<double>(h)));
    }
    if (!std::isinf(alpha)) alpha = std::round(alpha * 1e9) / 1e9;
    if (alpha > 1.0) {
      const double slack = alpha * (1.0 - 1e-12);
      std::vector<Site> bad;
      const Rect window{-half_width, half_width, 1, set.max_height()};
      for (const auto& s : set.sites_in(window)) {
        const bool inside = std::isinf(alpha) ? s.x2 <= 1 && s.x1 != 0
                                              : s.x2 <= envelope_height(slack, s.x1);
        if (!inside) bad.push_back(s);
      }
      const bool localized = std::all_of(bad.begin(), bad.end(), [&](const Site& s) {
        return 4 * (s.x1 < 0 ? -s.x1 : s.x1) <= half_width;
      });
      if (localized) {
        out.kind = GrowthClass::Kind::kSublinear;
        out.alpha = alpha;
        out.exceptional = std::move(bad);
        out.reason = "column heights stay under a power envelope";
        return out;
      }
      out.reason = "envelope violations are not localized";
      return out;
    }
  }
  out.reason = "neither envelope holds on the window";
  return out;
}

}  // namespace stathm
