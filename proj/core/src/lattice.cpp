#include "stathm/lattice.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "stathm/error.hpp"

namespace stathm {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kUnboundedColumn: return "unbounded-column";
    case ErrorCode::kOverflow: return "overflow";
    case ErrorCode::kParse: return "parse-error";
    case ErrorCode::kCapExceeded: return "cap-exceeded";
    case ErrorCode::kInvalidTarget: return "invalid-target";
    case ErrorCode::kInvalidEdge: return "invalid-edge";
    case ErrorCode::kInvalidSite: return "invalid-site";
    case ErrorCode::kHeight: return "height-error";
    case ErrorCode::kOutOfWindow: return "out-of-window";
    case ErrorCode::kNotEnclosed: return "not-enclosed";
    case ErrorCode::kNonConvergence: return "non-convergence";
    case ErrorCode::kEventBudget: return "event-budget-exceeded";
    case ErrorCode::kFrozenState: return "frozen-state";
    case ErrorCode::kIo: return "io-error";
  }
  return "unknown";
}

int direction_between(Site a, Site b) {
  for (int d = 0; d < 4; ++d) {
    if (neighbor(a, d) == b) return d;
  }
  return -1;
}

DirectedEdge make_edge(Site from, Site to) {
  if (!adjacent(from, to)) {
    throw Error(ErrorCode::kInvalidEdge, "edge endpoints are not nearest neighbors");
  }
  return {from, to};
}

// ---------------------------------------------------------------------------
// SiteSet::Builder

SiteSet::Builder& SiteSet::Builder::add_column(std::int64_t x1, std::int64_t h,
                                               bool floor_anchored) {
  if (h < 0) throw Error(ErrorCode::kInvalidArgument, "column height must be >= 0");
  if (h == 0) {
    if (floor_anchored) sites_.push_back({x1, 0});
    return *this;
  }
  columns_.push_back({x1, Column{h, floor_anchored}});
  return *this;
}

SiteSet::Builder& SiteSet::Builder::add_site(Site s) {
  if (!in_half_plane(s)) {
    throw Error(ErrorCode::kInvalidSite, "site below the floor line");
  }
  sites_.push_back(s);
  return *this;
}

SiteSet::Builder& SiteSet::Builder::add_sites(const std::vector<Site>& sites) {
  for (const auto& s : sites) add_site(s);
  return *this;
}

SiteSet::Builder& SiteSet::Builder::add_set(const SiteSet& other) {
  for (const auto& [x1, col] : other.columns()) columns_.push_back({x1, col});
  sites_.insert(sites_.end(), other.extras().begin(), other.extras().end());
  return *this;
}

SiteSet SiteSet::Builder::build() && {
  std::map<std::int64_t, Column> cols;
  for (const auto& [x1, c] : columns_) {
    auto [it, inserted] = cols.try_emplace(x1, c);
    if (!inserted) {
      it->second.top = std::max(it->second.top, c.top);
      it->second.floor = it->second.floor || c.floor;
    }
  }
  std::unordered_set<Site, SiteHash> extras(sites_.begin(), sites_.end());

  // Fold extras that continue a run (or start one at height 1) into columns.
  std::map<std::int64_t, std::vector<std::int64_t>> by_column;
  for (const auto& s : extras) by_column[s.x1].push_back(s.x2);
  for (auto& [x1, heights] : by_column) {
    std::sort(heights.begin(), heights.end());
    auto it = cols.find(x1);
    std::int64_t top = it == cols.end() ? 0 : it->second.top;
    bool floor = it != cols.end() && it->second.floor;
    if (top != kUnbounded) {
      for (auto h : heights) {
        if (h == top + 1) ++top;
      }
    }
    if (top >= 1) {
      auto& c = cols[x1];
      c.top = top;
      c.floor = floor || extras.contains({x1, 0});
    }
  }

  SiteSet out;
  for (const auto& [x1, c] : cols) {
    out.columns_.emplace(x1, c);
    out.column_keys_.push_back(x1);
  }
  for (const auto& s : extras) {
    auto it = out.columns_.find(s.x1);
    if (it != out.columns_.end()) {
      const auto& c = it->second;
      const bool covered = s.x2 <= c.top && (s.x2 >= 1 || c.floor);
      if (covered) continue;
    }
    out.extras_.insert(s);
  }
  out.extras_sorted_.assign(out.extras_.begin(), out.extras_.end());
  std::sort(out.extras_sorted_.begin(), out.extras_sorted_.end());
  return out;
}

// ---------------------------------------------------------------------------
// SiteSet

SiteSet SiteSet::from_sites(const std::vector<Site>& sites) {
  return std::move(Builder{}.add_sites(sites)).build();
}

bool SiteSet::contains(Site s) const {
  if (s.x2 < 0) return false;
  if (auto it = columns_.find(s.x1); it != columns_.end()) {
    const auto& c = it->second;
    if (s.x2 <= c.top && (s.x2 >= 1 || c.floor)) return true;
  }
  return extras_.contains(s);
}

SiteSet::Column SiteSet::column(std::int64_t x1) const {
  auto it = columns_.find(x1);
  return it == columns_.end() ? Column{} : it->second;
}

std::int64_t SiteSet::column_height(std::int64_t x1) const {
  const auto c = column(x1);
  if (c.top == kUnbounded) {
    std::ostringstream msg;
    msg << "column " << x1 << " is unbounded";
    throw Error(ErrorCode::kUnboundedColumn, msg.str());
  }
  return c.top;
}

bool SiteSet::column_unbounded(std::int64_t x1) const {
  return column(x1).top == kUnbounded;
}

std::vector<std::pair<std::int64_t, SiteSet::Column>> SiteSet::columns() const {
  std::vector<std::pair<std::int64_t, Column>> out;
  out.reserve(column_keys_.size());
  for (auto x1 : column_keys_) out.emplace_back(x1, columns_.at(x1));
  return out;
}

Rect SiteSet::bounds() const {
  if (empty()) return Rect{};
  Rect r{std::numeric_limits<std::int64_t>::max(), std::numeric_limits<std::int64_t>::min(),
         std::numeric_limits<std::int64_t>::max(), std::numeric_limits<std::int64_t>::min()};
  for (const auto& [x1, c] : columns_) {
    r.x1_lo = std::min(r.x1_lo, x1);
    r.x1_hi = std::max(r.x1_hi, x1);
    r.x2_lo = std::min<std::int64_t>(r.x2_lo, c.floor ? 0 : 1);
    r.x2_hi = std::max(r.x2_hi, c.top);
  }
  for (const auto& s : extras_) {
    r.x1_lo = std::min(r.x1_lo, s.x1);
    r.x1_hi = std::max(r.x1_hi, s.x1);
    r.x2_lo = std::min(r.x2_lo, s.x2);
    r.x2_hi = std::max(r.x2_hi, s.x2);
  }
  return r;
}

std::int64_t SiteSet::max_height() const {
  if (empty()) return -1;
  return bounds().x2_hi;
}

bool SiteSet::has_unbounded_column() const {
  return std::any_of(columns_.begin(), columns_.end(),
                     [](const auto& kv) { return kv.second.top == kUnbounded; });
}

std::uint64_t SiteSet::size() const {
  std::uint64_t n = extras_.size();
  for (const auto& [x1, c] : columns_) {
    if (c.top == kUnbounded) {
      throw Error(ErrorCode::kUnboundedColumn, "set has an unbounded column");
    }
    n += static_cast<std::uint64_t>(c.top) + (c.floor ? 1 : 0);
  }
  return n;
}

std::vector<Site> SiteSet::sites_in(const Rect& window) const {
  std::vector<Site> out;
  if (window.empty()) return out;
  for (const auto& [x1, c] : columns_) {
    if (x1 < window.x1_lo || x1 > window.x1_hi) continue;
    const std::int64_t lo = std::max<std::int64_t>(window.x2_lo, c.floor ? 0 : 1);
    const std::int64_t hi = std::min(window.x2_hi, c.top);
    for (auto h = lo; h <= hi; ++h) out.push_back({x1, h});
  }
  for (const auto& s : extras_) {
    if (window.contains(s)) out.push_back(s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

SiteSet SiteSet::shifted(std::int64_t dx) const {
  Builder b;
  for (const auto& [x1, c] : columns_) b.add_column(x1 + dx, c.top, c.floor);
  for (const auto& s : extras_) b.add_site({s.x1 + dx, s.x2});
  return std::move(b).build();
}

SiteSet SiteSet::mirrored() const {
  Builder b;
  for (const auto& [x1, c] : columns_) b.add_column(-x1, c.top, c.floor);
  for (const auto& s : extras_) b.add_site({-s.x1, s.x2});
  return std::move(b).build();
}

SiteSet SiteSet::united(const SiteSet& other) const {
  return std::move(Builder{}.add_set(*this).add_set(other)).build();
}

SiteSet SiteSet::clipped(std::int64_t half_width, std::int64_t max_x2) const {
  Builder b;
  for (const auto& [x1, c] : columns_) {
    if (x1 < -half_width || x1 > half_width) continue;
    const auto top = std::min(c.top, max_x2);
    if (top >= 1) {
      b.add_column(x1, top, c.floor);
    } else if (c.floor && max_x2 >= 0) {
      b.add_site({x1, 0});
    }
  }
  for (const auto& s : extras_) {
    if (s.x1 >= -half_width && s.x1 <= half_width && s.x2 <= max_x2) b.add_site(s);
  }
  return std::move(b).build();
}

bool operator==(const SiteSet& a, const SiteSet& b) {
  if (a.column_keys_ != b.column_keys_) return false;
  for (auto x1 : a.column_keys_) {
    const auto& ca = a.columns_.at(x1);
    const auto& cb = b.columns_.at(x1);
    if (ca.top != cb.top || ca.floor != cb.floor) return false;
  }
  return a.extras_sorted_ == b.extras_sorted_;
}

// ---------------------------------------------------------------------------

int neighbors_in(const SiteSet& set, Site y) {
  int n = 0;
  for (int d = 0; d < 4; ++d) n += set.contains(neighbor(y, d)) ? 1 : 0;
  return n;
}

std::vector<Site> outer_boundary(const SiteSet& set, const Rect& window,
                                 bool include_floor) {
  std::vector<Site> out;
  if (window.empty() || set.empty()) return out;
  const std::int64_t row_lo = std::max<std::int64_t>(window.x2_lo, include_floor ? 0 : 1);
  if (row_lo > window.x2_hi) return out;
  // Candidates are the neighbors of the set sites near the window.
  const Rect near{window.x1_lo - 1, window.x1_hi + 1, std::max<std::int64_t>(row_lo - 1, 0),
                  window.x2_hi == SiteSet::kUnbounded ? window.x2_hi : window.x2_hi + 1};
  for (const auto& x : set.sites_in(near)) {
    for (int d = 0; d < 4; ++d) {
      const Site y = neighbor(x, d);
      if (y.x2 < row_lo || !window.contains(y) || set.contains(y)) continue;
      out.push_back(y);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void write_set_text(std::ostream& os, const SiteSet& set) {
  for (const auto& [x1, c] : set.columns()) {
    os << "col " << x1 << ' ';
    if (c.top == SiteSet::kUnbounded) {
      os << "inf";
    } else {
      os << c.top;
    }
    os << '\n';
    if (c.floor) os << "site " << x1 << " 0\n";
  }
  for (const auto& s : set.extras()) os << "site " << s.x1 << ' ' << s.x2 << '\n';
}

namespace {

[[noreturn]] void parse_fail(std::size_t line_no, const std::string& line,
                             const std::string& why) {
  std::ostringstream msg;
  msg << "line " << line_no << ": " << why << " in '" << line << "'";
  throw Error(ErrorCode::kParse, msg.str());
}

std::int64_t parse_int(const std::string& tok, std::size_t line_no, const std::string& line) {
  std::size_t used = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(tok, &used);
  } catch (const std::exception&) {
    parse_fail(line_no, line, "expected integer '" + tok + "'");
  }
  if (used != tok.size()) parse_fail(line_no, line, "expected integer '" + tok + "'");
  return v;
}

}  // namespace

SiteSet read_set_text(std::istream& is) {
  SiteSet::Builder b;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind) || kind.front() == '#') continue;
    std::vector<std::string> toks;
    for (std::string t; ls >> t;) toks.push_back(t);
    if (toks.size() != 2) parse_fail(line_no, line, "expected two fields");
    const auto x1 = parse_int(toks[0], line_no, line);
    if (kind == "col") {
      const auto h = toks[1] == "inf" ? SiteSet::kUnbounded : parse_int(toks[1], line_no, line);
      if (h < 0) parse_fail(line_no, line, "negative column height");
      b.add_column(x1, h);
    } else if (kind == "site") {
      const auto x2 = parse_int(toks[1], line_no, line);
      if (x2 < 0) parse_fail(line_no, line, "site below the floor");
      b.add_site({x1, x2});
    } else {
      parse_fail(line_no, line, "unknown record '" + kind + "'");
    }
  }
  return std::move(b).build();
}

}  // namespace stathm
