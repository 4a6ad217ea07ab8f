#include "cli.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stathm/dirichlet.hpp"
#include "stathm/error.hpp"
#include "stathm/growth.hpp"
#include "stathm/sets.hpp"
#include "stathm/theorems.hpp"
#include "stathm/version.hpp"
#include "stathm/walk.hpp"

namespace stathm::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr int kRunSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Argument parsing helpers

std::int64_t parse_int(std::string_view s, std::string_view what) {
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end) {
    throw Error(ErrorCode::kParse, "bad " + std::string(what) + ": '" + std::string(s) + "'");
  }
  return v;
}

Site parse_site(std::string_view s) {
  const auto comma = s.find(',');
  if (comma == std::string_view::npos) {
    throw Error(ErrorCode::kParse, "site must be X1,X2: '" + std::string(s) + "'");
  }
  return {parse_int(s.substr(0, comma), "x1"), parse_int(s.substr(comma + 1), "x2")};
}

// "x1:x2/x1:x2/..."
std::vector<Site> parse_extras(std::string_view s) {
  std::vector<Site> out;
  while (!s.empty()) {
    const auto slash = s.find('/');
    const auto item = s.substr(0, slash);
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorCode::kParse, "extras use x1:x2/x1:x2: '" + std::string(item) + "'");
    }
    out.push_back({parse_int(item.substr(0, colon), "x1"), parse_int(item.substr(colon + 1), "x2")});
    if (slash == std::string_view::npos) break;
    s.remove_prefix(slash + 1);
  }
  return out;
}

template <class F>
CLI::Validator parses_as(F f, std::string desc) {
  return CLI::Validator(
      [f](std::string& s) -> std::string {
        try {
          f(s);
        } catch (const Error& e) {
          return e.what();
        }
        return {};
      },
      std::move(desc));
}

const CLI::Validator kSiteArg = parses_as([](const std::string& s) { parse_site(s); }, "X1,X2");
const CLI::Validator kSetArg = parses_as([](const std::string& s) { SetFamily::parse(s); }, "SET");
const CLI::Validator kExtrasArg = parses_as([](const std::string& s) { parse_extras(s); }, "X1:X2/..");
const CLI::Validator kRationalArg = parses_as([](const std::string& s) { Rational::parse(s); }, "P/Q");
const CLI::Validator kMethodArg = CLI::IsMember({"exact", "mc"});
const CLI::Validator kPolicyArg = CLI::IsMember({"periodic", "frozen"});
const CLI::Validator kSidesArg = CLI::IsMember({"reflecting", "absorbing"});

SidePolicy parse_sides(const std::string& s) {
  return s == "absorbing" ? SidePolicy::kAbsorbing : SidePolicy::kReflecting;
}

// A target of the escape subcommand, a union of atoms:
//   above:H | below:H | line:H | floor | outside:W | site:X1,X2 | set:SPEC
SitePredicate parse_target(const std::vector<std::string>& atoms, std::int64_t set_half_width) {
  std::vector<SitePredicate> parts;
  for (const auto& atom : atoms) {
    const auto colon = atom.find(':');
    const std::string kind = atom.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : atom.substr(colon + 1);
    if (kind == "floor") {
      parts.push_back([](Site s) { return s.x2 <= 0; });
    } else if (kind == "above") {
      const auto h = parse_int(arg, "height");
      parts.push_back([h](Site s) { return s.x2 >= h; });
    } else if (kind == "below") {
      const auto h = parse_int(arg, "height");
      parts.push_back([h](Site s) { return s.x2 <= h; });
    } else if (kind == "line") {
      const auto h = parse_int(arg, "height");
      parts.push_back([h](Site s) { return s.x2 == h; });
    } else if (kind == "outside") {
      const auto w = parse_int(arg, "half-width");
      parts.push_back([w](Site s) { return s.x1 < -w || s.x1 > w; });
    } else if (kind == "site") {
      const Site t = parse_site(arg);
      parts.push_back([t](Site s) { return s == t; });
    } else if (kind == "set") {
      auto set = std::make_shared<SiteSet>(SetFamily::parse(arg).materialize(set_half_width));
      parts.push_back([set](Site s) { return set->contains(s); });
    } else {
      throw Error(ErrorCode::kParse, "unknown target atom '" + atom + "'");
    }
  }
  if (parts.empty()) throw Error(ErrorCode::kInvalidTarget, "empty target");
  return [parts](Site s) {
    return std::any_of(parts.begin(), parts.end(), [s](const SitePredicate& p) { return p(s); });
  };
}

const CLI::Validator kTargetArg = parses_as(
    [](const std::string& s) {
      if (s.rfind("set:", 0) == 0) {
        SetFamily::parse(s.substr(4));
      } else {
        parse_target({s}, 0);
      }
    },
    "ATOM");

// ---------------------------------------------------------------------------
// Output directory with a manifest of written files

class RunDir {
 public:
  explicit RunDir(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir_.string() + ": " + ec.message());
  }

  std::ofstream open(const std::string& name) {
    const auto path = dir_ / name;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream os(path);
    if (!os) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    os.precision(17);
    files_.push_back(name);
    return os;
  }

  void write_json(const std::string& name, const json& j) { open(name) << j.dump(2) << '\n'; }

  void write_text(const std::string& name, const std::string& text) { open(name) << text; }

  const fs::path& path() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<std::string> files_;
};

// Report JSON without the wall-clock time, so reruns are byte-identical.
json report_json(const VerificationReport& r) {
  auto j = r.to_json();
  j.erase("runtime_seconds");
  return j;
}

// levels array of objects -> CSV with the keys of the first row.
void write_levels_csv(std::ostream& os, const json& levels) {
  if (levels.empty() || !levels[0].is_object()) return;
  std::vector<std::string> keys;
  for (const auto& [k, v] : levels[0].items()) {
    if (!v.is_array() && !v.is_object()) keys.push_back(k);
  }
  for (std::size_t i = 0; i < keys.size(); ++i) os << (i ? "," : "") << keys[i];
  os << '\n';
  for (const auto& row : levels) {
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (i) os << ',';
      if (row.contains(keys[i])) {
        const auto& v = row[keys[i]];
        os << (v.is_string() ? v.get<std::string>() : v.dump());
      }
    }
    os << '\n';
  }
}

int finish_report(RunDir& dir, const VerificationReport& r, std::ostream& out) {
  dir.write_json("report.json", report_json(r));
  {
    auto os = dir.open("levels.csv");
    write_levels_csv(os, r.levels);
  }
  r.write_text(out);
  return r.passed() ? kExitOk : kExitCheckFailed;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string plot_header() {
  return "import sys\n"
         "import pandas as pd\n"
         "import matplotlib\n"
         "matplotlib.use('Agg')\n"
         "import matplotlib.pyplot as plt\n"
         "from pathlib import Path\n\n"
         "d = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).parent\n";
}

// ---------------------------------------------------------------------------
// Subcommand arguments

struct McArgs {
  std::string method = "exact";
  std::uint64_t chains = 100000;
  std::uint64_t step_cap = 1'000'000'000ULL;

  Method parsed() const { return parse_method(method); }
};

void add_mc_options(CLI::App* sub, McArgs& a) {
  sub->add_option("--method", a.method, "exact (linear solve) or mc (random walks)")
      ->check(kMethodArg);
  sub->add_option("--chains", a.chains, "Monte Carlo chains (walks)")->check(CLI::PositiveNumber);
  sub->add_option("--step-cap", a.step_cap, "Monte Carlo moves per chain before giving up")
      ->check(CLI::PositiveNumber);
}

struct GrowthArgs {
  std::int64_t width = 64;
  std::string policy = "periodic";
  double t_end = 1.0;
  std::uint64_t replicas = 1;
  std::uint64_t max_events = 10'000'000;
  std::uint64_t check_every = 0;
};

void add_growth_options(CLI::App* sub, GrowthArgs& a) {
  sub->add_option("--width", a.width, "window width in columns (sites)")->check(CLI::PositiveNumber);
  sub->add_option("--policy", a.policy, "lateral boundary: periodic (wrap x1) or frozen")
      ->check(kPolicyArg);
  sub->add_option("--t-end", a.t_end, "final time (process time units)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--replicas", a.replicas, "independent replicas, replica i uses stream i")
      ->check(CLI::PositiveNumber);
  sub->add_option("--max-events", a.max_events, "event budget per replica")
      ->check(CLI::PositiveNumber);
  sub->add_option("--check-every", a.check_every,
                  "compare incremental rates with a rebuild every K events (0 = off)");
}

struct Args {
  std::string out = "stathm-out";
  int threads = 1;
  std::uint64_t seed = 1;
  std::string replay;

  // measure
  struct {
    std::string set = "empty";
    std::string x;
    std::string to;
    bool hat = false;
    std::int64_t N = 64, W = 0;
    std::string sides = "reflecting";
    double tol = 1e-12;
    bool full = false, field = false;
    McArgs mc;
  } measure;

  struct {
    std::string set = "empty";
    std::string x = "0,0";
    std::vector<std::int64_t> schedule = {8, 16, 32, 64, 128, 256};
    std::int64_t width_factor = 8;
    double width_tol = 1e-4;
    std::int64_t doublings = 3;
    double eps = 1e-3;
    std::string sides = "reflecting";
  } converge;

  struct {
    std::vector<std::string> start;
    std::vector<std::string> a, b;
    std::string convention = "exit";
    std::optional<std::int64_t> reflect;
    std::int64_t set_half_width = 256;
    std::uint64_t max_sites = 20'000'000;
    McArgs mc;
  } escape;

  struct {
    std::vector<std::int64_t> Ns = {1, 4, 8, 16};
    double tol = 1e-6, sigmas = 3;
    McArgs mc;
  } visits;

  struct {
    std::string set = "cex:nmax=6";
    std::int64_t half_width = 16;
    std::int64_t max_height = 256;
  } gen;

  struct {
    std::string set = "empty";
    std::int64_t half_width = 256;
  } classify;

  struct {
    std::string c = "1";
    std::int64_t n1 = 4, kmax = 5;
    double margin = 0.01, decay = 0.95;
    std::string blocker;
    McArgs mc;
  } thm1;

  struct {
    double alpha = 2.0;
    std::string extras;
    std::vector<std::int64_t> schedule = {16, 32, 64, 128};
    double persistence = 0.5;
    std::vector<std::int64_t> scaling;
    double band = 8.0;
    McArgs mc;
  } thm2;

  struct {
    std::vector<std::int64_t> ks = {2, 4, 8};
    std::vector<std::int64_t> ns = {1, 2, 3, 4};
    double tol = 1e-4;
    McArgs mc;
  } rect;

  struct {
    GrowthArgs g;
    std::uint64_t logs = 1;
  } grow;

  struct {
    std::string set = "cex:nmax=8";
    std::int64_t N = 64, W = 0, candidate = 0, steps = 1;
  } dla;

  struct {
    GrowthArgs g;
    std::vector<double> times = {0.0, 1.0, 5.0};
    std::int64_t N = 0, W = 0;
  } probe;

  struct {
    std::string set = "env:alpha=2";
    std::vector<std::int64_t> Ns = {64, 128};
    std::int64_t W = 0;
    std::optional<std::int64_t> report_half_width;
    double stability = 0.1;
  } height;
};

McOptions mc_options(const McArgs& a, const Args& g) {
  McOptions o;
  o.chains = a.chains;
  o.seed = g.seed;
  o.threads = g.threads;
  o.step_cap = a.step_cap;
  return o;
}

GrowthOptions growth_options(const GrowthArgs& a, const Args& g) {
  GrowthOptions o;
  o.window.width = a.width;
  o.window.policy = parse_lateral_policy(a.policy);
  o.t_end = a.t_end;
  o.seed = g.seed;
  o.max_events = a.max_events;
  o.check_every = a.check_every;
  return o;
}

// ---------------------------------------------------------------------------
// Subcommands

int cmd_measure(const Args& g, RunDir& dir, std::ostream& out) {
  const auto& a = g.measure;
  const Site x = parse_site(a.x);
  const auto family = SetFamily::parse(a.set);
  TruncatedDomain d;
  d.N = a.N;
  d.W = a.W;
  d.sides = parse_sides(a.sides);
  d.tolerance = a.tol;
  d.obstacle = family.materialize(d.half_width());

  std::string kind = a.hat ? "hat" : "point";
  std::optional<Site> to;
  if (!a.to.empty()) {
    to = parse_site(a.to);
    kind = "edge";
  }
  if (to && a.hat) throw Error(ErrorCode::kInvalidArgument, "--to and --hat exclude each other");

  std::ostringstream os;
  os.precision(17);
  const std::string y1 = to ? std::to_string(to->x1) : "";
  const std::string y2 = to ? std::to_string(to->x2) : "";
  os << kind << ',' << x.x1 << ',' << x.x2 << ',' << y1 << ',' << y2 << ',';

  double value = 0.0;
  if (a.mc.parsed() == Method::kExact) {
    const auto field = green_field(d);
    if (to) {
      value = exact_edge_measure(field, make_edge(x, *to));
    } else if (a.hat) {
      value = exact_hat_measure(field, x);
    } else {
      value = exact_point_measure(field, x);
    }
    const auto& sol = field.solution;
    os << value << ",0,exact," << d.N << ',' << d.half_width() << ',' << d.height() << ','
       << field.sources << ',' << sol.absorbed << ',' << sol.leaked << ',' << sol.residual << ','
       << sol.iterations << ",\n";
    if (a.full) {
      auto rs = dir.open("report.csv");
      write_report_csv(rs, measure_report(field));
    }
    if (a.field) {
      auto fs_ = dir.open("field.csv");
      write_field_csv(fs_, field);
    }
  } else {
    auto opt = mc_options(a.mc, g);
    opt.reflect_half_width = d.half_width();
    Estimate e;
    if (to) {
      e = mc_edge_measure(d.obstacle, make_edge(x, *to), d.N, opt);
    } else if (a.hat) {
      e = mc_hat_measure(d.obstacle, x, d.N, opt);
    } else {
      e = mc_point_measure(d.obstacle, x, d.N, opt);
    }
    value = e.mean;
    os << e.mean << ',' << e.std_error << ",mc," << d.N << ',' << d.half_width() << ",,,,,,,"
       << e.n_chains << '\n';
  }
  dir.open("measure.csv") << "kind,x1,x2,y1,y2,value,std_error,method,N,W,H,sources,absorbed,"
                             "leaked,residual,iterations,chains\n"
                          << os.str();
  out << kind << " measure at (" << x.x1 << "," << x.x2 << ") = " << value << '\n';

  dir.write_text("plot.py", plot_header() +
                                "p = d / 'report.csv'\n"
                                "if not p.exists():\n"
                                "    print(pd.read_csv(d / 'measure.csv').to_string())\n"
                                "    sys.exit(0)\n"
                                "r = pd.read_csv(p, comment='#')\n"
                                "pt = r[r.kind == 'point']\n"
                                "fig, ax = plt.subplots()\n"
                                "for x2, grp in pt.groupby('x2'):\n"
                                "    if x2 <= 4:\n"
                                "        ax.plot(grp.x1, grp.value, '.', label=f'x2={x2}')\n"
                                "ax.set_xlabel('x1')\n"
                                "ax.set_ylabel('point measure')\n"
                                "ax.legend()\n"
                                "fig.savefig(d / 'measure.png', dpi=150)\n");
  return kExitOk;
}

int cmd_converge(const Args& g, RunDir& dir, std::ostream& out) {
  const auto& a = g.converge;
  ConvergeOptions opt;
  opt.schedule = a.schedule;
  opt.width_factor = a.width_factor;
  opt.width_tolerance = a.width_tol;
  opt.max_width_doublings = a.doublings;
  opt.epsilon = a.eps;
  opt.sides = parse_sides(a.sides);
  const auto table = converge_measure(SetFamily::parse(a.set), parse_site(a.x), opt);
  {
    auto os = dir.open("converge.csv");
    os << "N,W,value,width_change,leaked,diff\n";
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
      const auto& r = table.rows[i];
      os << r.N << ',' << r.W << ',' << r.value << ',' << r.width_change << ',' << r.leaked << ',';
      if (i > 0) os << std::abs(r.value - table.rows[i - 1].value);
      os << '\n';
      out << "N=" << r.N << " W=" << r.W << " value=" << r.value << '\n';
    }
  }
  dir.write_json("converge.json", {{"converged", table.converged}});
  out << (table.converged ? "converged" : "not converged") << '\n';
  dir.write_text("plot.py", plot_header() +
                                "r = pd.read_csv(d / 'converge.csv')\n"
                                "fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 4))\n"
                                "a1.semilogx(r.N, r.value, 'o-', base=2)\n"
                                "a1.set_xlabel('N')\n"
                                "a1.set_ylabel('point measure')\n"
                                "q = r.dropna(subset=['diff'])\n"
                                "a2.loglog(q.N, q['diff'], 'o-', base=2)\n"
                                "a2.set_xlabel('N')\n"
                                "a2.set_ylabel('|v(N) - v(N/2)|')\n"
                                "fig.tight_layout()\n"
                                "fig.savefig(d / 'converge.png', dpi=150)\n");
  return kExitOk;
}

int cmd_escape(const Args& g, RunDir& dir, std::ostream& out) {
  const auto& a = g.escape;
  const auto A = parse_target(a.a, a.set_half_width);
  const auto B = parse_target(a.b, a.set_half_width);
  std::vector<Site> starts;
  for (const auto& s : a.start) starts.push_back(parse_site(s));
  const auto convention = a.convention == "hitting" ? TimeConvention::kHitting : TimeConvention::kExit;

  auto os = dir.open("escape.csv");
  os << "x1,x2,probability,std_error,method,convention\n";
  if (a.mc.parsed() == Method::kExact) {
    HittingOptions opt;
    opt.convention = convention;
    opt.max_sites = a.max_sites;
    opt.reflect_half_width = a.reflect;
    const HittingField field(A, B, starts, opt);
    for (const Site s : starts) {
      const double p = field.probability(s);
      os << s.x1 << ',' << s.x2 << ',' << p << ",0,exact," << a.convention << '\n';
      out << "P(" << s.x1 << "," << s.x2 << ") = " << p << '\n';
    }
  } else {
    auto opt = mc_options(a.mc, g);
    opt.reflect_half_width = a.reflect;
    for (const Site s : starts) {
      Estimate e;
      if (convention == TimeConvention::kHitting && B(s)) {
        e.n_chains = 0;
      } else if (convention == TimeConvention::kHitting && A(s)) {
        e.mean = 1.0;
      } else {
        e = mc_escape_probability(s, A, B, opt);
      }
      os << s.x1 << ',' << s.x2 << ',' << e.mean << ',' << e.std_error << ",mc," << a.convention
         << '\n';
      out << "P(" << s.x1 << "," << s.x2 << ") = " << e.mean << " +- " << e.std_error << '\n';
    }
  }
  dir.write_text("plot.py", plot_header() +
                                "r = pd.read_csv(d / 'escape.csv')\n"
                                "fig, ax = plt.subplots()\n"
                                "ax.errorbar(range(len(r)), r.probability, yerr=r.std_error, fmt='o')\n"
                                "ax.set_xticks(range(len(r)))\n"
                                "ax.set_xticklabels([f'({a},{b})' for a, b in zip(r.x1, r.x2)])\n"
                                "ax.set_ylabel('P(tau_A < tau_B)')\n"
                                "fig.savefig(d / 'escape.png', dpi=150)\n");
  return kExitOk;
}

int cmd_visits(const Args& g, RunDir& dir, std::ostream& out) {
  const auto& a = g.visits;
  VisitsOptions opt;
  opt.method = a.mc.parsed();
  opt.mc = mc_options(a.mc, g);
  opt.tolerance = a.tol;
  opt.sigmas = a.sigmas;
  return finish_report(dir, visits_identity_check(a.Ns, opt), out);
}

int cmd_gen_set(const Args& g, RunDir& dir, std::ostream& out) {
  const auto& a = g.gen;
  const auto set = SetFamily::parse(a.set).materialize(a.half_width);
  {
    auto os = dir.open("set.txt");
    write_set_text(os, set);
  }
  const auto sites = set.sites_in({-a.half_width, a.half_width, 0, a.max_height});
  {
    auto os = dir.open("sites.csv");
    os << "x1,x2\n";
    for (const Site s : sites) os << s.x1 << ',' << s.x2 << '\n';
  }
  out << sites.size() << " sites with |x1| <= " << a.half_width << " and x2 <= " << a.max_height
      << '\n';
  dir.write_text("plot.py", plot_header() +
                                "r = pd.read_csv(d / 'sites.csv')\n"
                                "fig, ax = plt.subplots()\n"
                                "ax.scatter(r.x1, r.x2, s=4, marker='s')\n"
                                "ax.set_xlabel('x1')\n"
                                "ax.set_ylabel('x2')\n"
                                "fig.savefig(d / 'set.png', dpi=150)\n");
  return kExitOk;
}

int cmd_classify(const Args& g, RunDir& dir, std::ostream& out) {
  const auto& a = g.classify;
  const auto set = SetFamily::parse(a.set).materialize(a.half_width);
  const auto c = classify_growth(set, a.half_width);
  json ex = json::array();
  for (const Site s : c.exceptional) ex.push_back({s.x1, s.x2});
  const json j = {{"kind", to_string(c.kind)}, {"c", c.c},         {"M", c.M},
                  {"alpha", c.alpha},          {"exceptional", ex}, {"slope", c.slope},
                  {"reason", c.reason},        {"half_width", a.half_width}};
  dir.write_json("classify.json", j);
  out << j.dump(2) << '\n';
  dir.write_text("plot.py", plot_header() +
                                "import json\n"
                                "print(json.dumps(json.load(open(d / 'classify.json')), indent=2))\n");
  return kExitOk;
}

std::string report_plot(const std::string& x, const std::string& y, bool logy) {
  return plot_header() + "r = pd.read_csv(d / 'levels.csv')\n" +
         "fig, ax = plt.subplots()\n" + "ax.plot(r['" + x + "'], r['" + y + "'], 'o-')\n" +
         (logy ? "ax.set_yscale('log')\n" : "") + "ax.set_xlabel('" + x + "')\n" +
         "ax.set_ylabel('" + y + "')\n" + "fig.savefig(d / 'levels.png', dpi=150)\n";
}

int cmd_thm1(const Args& g, RunDir& dir, std::ostream& out) {
  const auto& a = g.thm1;
  Thm1Options opt;
  opt.method = a.mc.parsed();
  opt.mc = mc_options(a.mc, g);
  opt.escape_margin = a.margin;
  opt.decay_ratio = a.decay;
  if (!a.blocker.empty()) opt.blocker = SetFamily::parse(a.blocker);
  const auto r = verify_thm1(Rational::parse(a.c), a.n1, a.kmax, opt);
  dir.write_text("plot.py", report_plot("k", "v", true));
  return finish_report(dir, r, out);
}

int cmd_thm2(const Args& g, RunDir& dir, std::ostream& out) {
  const auto& a = g.thm2;
  Thm2Options opt;
  opt.method = a.mc.parsed();
  opt.mc = mc_options(a.mc, g);
  opt.schedule = a.schedule;
  opt.persistence = a.persistence;
  opt.scaling_levels = a.scaling;
  opt.band = a.band;
  const auto r = verify_thm2(a.alpha, parse_extras(a.extras), opt);
  dir.write_text("plot.py", report_plot("N", "measure_B0", false));
  return finish_report(dir, r, out);
}

int cmd_rect(const Args& g, RunDir& dir, std::ostream& out) {
  const auto& a = g.rect;
  RectangleOptions opt;
  opt.method = a.mc.parsed();
  opt.mc = mc_options(a.mc, g);
  opt.tolerance = a.tol;
  const auto r = rectangle_escape_table(a.ks, a.ns, opt);
  dir.write_text("plot.py", plot_header() +
                                "r = pd.read_csv(d / 'levels.csv')\n"
                                "fig, ax = plt.subplots()\n"
                                "for k, grp in r.groupby('k'):\n"
                                "    ax.semilogy(grp.n, grp.p, 'o-', label=f'k={k}')\n"
                                "ax.set_xlabel('n')\n"
                                "ax.set_ylabel('P(vertical sides first)')\n"
                                "ax.legend()\n"
                                "fig.savefig(d / 'levels.png', dpi=150)\n");
  return finish_report(dir, r, out);
}

std::string replica_name(const std::string& stem, std::uint64_t i, const std::string& ext) {
  std::ostringstream ss;
  ss << stem << '_' << std::setw(3) << std::setfill('0') << i << ext;
  return ss.str();
}

int cmd_grow(const Args& g, RunDir& dir, std::ostream& out) {
  const auto& a = g.grow;
  const auto opt = growth_options(a.g, g);
  const auto states = simulate_replicas(opt, a.g.replicas, g.threads);
  double sum = 0.0, sum2 = 0.0;
  std::uint64_t n_first = 0;
  {
    auto os = dir.open("summary.csv");
    os << "replica,events,first_event,max_height,occupied\n";
    for (std::size_t i = 0; i < states.size(); ++i) {
      const auto& s = states[i];
      os << i << ',' << s.log.size() << ',';
      if (!s.log.empty()) {
        os << s.log.front().t;
        sum += s.log.front().t;
        sum2 += s.log.front().t * s.log.front().t;
        ++n_first;
      }
      os << ',' << s.max_height() << ',' << s.occupied.size() << '\n';
    }
  }
  for (std::uint64_t i = 0; i < std::min<std::uint64_t>(a.logs, states.size()); ++i) {
    auto ev = dir.open(replica_name("events", i, ".csv"));
    write_event_log_csv(ev, states[i]);
    auto snap = dir.open(replica_name("snapshot", i, ".txt"));
    write_set_text(snap, states[i].snapshot());
  }
  json j = {{"replicas", states.size()}, {"width", a.g.width}, {"t_end", a.g.t_end}};
  if (n_first > 0) {
    const double mean = sum / static_cast<double>(n_first);
    const double var = n_first > 1 ? (sum2 - n_first * mean * mean) / (n_first - 1.0) : 0.0;
    j["first_event_mean"] = mean;
    j["first_event_std_error"] = std::sqrt(std::max(0.0, var) / static_cast<double>(n_first));
    j["first_event_expected"] = 1.0 / static_cast<double>(a.g.width);
    out << "first event mean " << mean << " (expected " << 1.0 / static_cast<double>(a.g.width)
        << ")\n";
  }
  dir.write_json("grow.json", j);
  dir.write_text("plot.py", plot_header() +
                                "e = pd.read_csv(d / 'events_000.csv')\n"
                                "fig, (a1, a2) = plt.subplots(1, 2, figsize=(10, 4))\n"
                                "a1.scatter(e.x1, e.x2, c=e.t, s=4, marker='s')\n"
                                "a1.set_xlabel('x1')\n"
                                "a1.set_ylabel('x2')\n"
                                "a1.set_title('replica 0, colored by birth time')\n"
                                "a2.plot(e.t, range(1, len(e) + 1))\n"
                                "a2.set_xlabel('t')\n"
                                "a2.set_ylabel('events')\n"
                                "fig.tight_layout()\n"
                                "fig.savefig(d / 'growth.png', dpi=150)\n");
  out << states.size() << " replicas written to " << dir.path().string() << '\n';
  return kExitOk;
}

// Solve height comfortably above the cluster at time t.
std::int64_t probe_height(const GrowthState& s, double t, std::int64_t requested) {
  if (requested > 0) return requested;
  const auto h = s.occupied_at(t).max_height();
  return std::max<std::int64_t>(32, static_cast<std::int64_t>(std::bit_ceil(
                                        static_cast<std::uint64_t>(2 * (h + 1)))));
}

int cmd_probe(const Args& g, RunDir& dir, std::ostream& out) {
  const auto& a = g.probe;
  auto opt = growth_options(a.g, g);
  opt.t_end = std::max(opt.t_end, *std::max_element(a.times.begin(), a.times.end()));
  const auto states = simulate_replicas(opt, a.g.replicas, g.threads);
  VerificationReport r;
  const auto t0 = std::chrono::steady_clock::now();
  r.name = "positivity probe";
  r.inputs = {{"width", a.g.width}, {"times", a.times}, {"replicas", a.g.replicas}};
  double worst = INFINITY;
  auto os = dir.open("probe.csv");
  os << "replica,t,N,W,max_measure,argmax_x1,argmax_x2,sites\n";
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (const double t : a.times) {
      const auto N = probe_height(states[i], t, a.N);
      const auto W = a.W > 0 ? a.W : 2 * N;
      const auto p = positivity_probe(states[i], t, N, W);
      os << i << ',' << t << ',' << N << ',' << W << ',' << p.max_measure << ',' << p.argmax.x1
         << ',' << p.argmax.x2 << ',' << p.sites << '\n';
      worst = std::min(worst, p.max_measure);
    }
  }
  r.bounds = {{"min_max_measure", worst}};
  r.check("positive", worst > 0.0, "smallest max point measure " + std::to_string(worst));
  r.runtime_seconds = seconds_since(t0);
  dir.write_json("report.json", report_json(r));
  r.write_text(out);
  dir.write_text("plot.py", plot_header() +
                                "r = pd.read_csv(d / 'probe.csv')\n"
                                "fig, ax = plt.subplots()\n"
                                "for t, grp in r.groupby('t'):\n"
                                "    ax.hist(grp.max_measure, bins=20, alpha=0.6, label=f't={t}')\n"
                                "ax.set_xlabel('max point measure over the cluster')\n"
                                "ax.legend()\n"
                                "fig.savefig(d / 'probe.png', dpi=150)\n");
  return r.passed() ? kExitOk : kExitCheckFailed;
}

int cmd_height(const Args& g, RunDir& dir, std::ostream& out) {
  const auto& a = g.height;
  const auto family = SetFamily::parse(a.set);
  VerificationReport r;
  const auto t0 = std::chrono::steady_clock::now();
  r.name = "height bound";
  r.inputs = {{"set", family.spec()}, {"N", a.Ns}, {"stability", a.stability}};
  std::vector<double> cs;
  auto os = dir.open("height_bound.csv");
  os << "N,W,C,argmax_x1,argmax_x2,sites\n";
  for (const auto N : a.Ns) {
    const auto W = a.W > 0 ? a.W : 8 * N;
    const auto hb = height_bound_check(family.materialize(W), N, W, a.report_half_width);
    os << N << ',' << W << ',';
    if (hb.C) {
      os << *hb.C;
      cs.push_back(*hb.C);
    }
    os << ',' << hb.argmax.x1 << ',' << hb.argmax.x2 << ',' << hb.sites << '\n';
    r.levels.push_back({{"N", N}, {"W", W}, {"C", hb.C ? json(*hb.C) : json(nullptr)}});
  }
  if (cs.size() == a.Ns.size() && cs.size() >= 2) {
    const double change = std::abs(cs.back() - cs[cs.size() - 2]) / cs[cs.size() - 2];
    r.bounds = {{"relative_change", change}};
    r.check("stable", change <= a.stability, "last doubling changes C by " + std::to_string(change));
  } else {
    r.check("stable", false, "C is undefined or fewer than two N values");
  }
  r.runtime_seconds = seconds_since(t0);
  dir.write_json("report.json", report_json(r));
  r.write_text(out);
  dir.write_text("plot.py", plot_header() +
                                "r = pd.read_csv(d / 'height_bound.csv')\n"
                                "fig, ax = plt.subplots()\n"
                                "ax.semilogx(r.N, r.C, 'o-', base=2)\n"
                                "ax.set_xlabel('N')\n"
                                "ax.set_ylabel('max H(x) / sqrt(x2)')\n"
                                "fig.savefig(d / 'height_bound.png', dpi=150)\n");
  return r.passed() ? kExitOk : kExitCheckFailed;
}

int cmd_dla(const Args& g, RunDir& dir, std::ostream& out) {
  const auto& a = g.dla;
  HarmonicStepOptions opt;
  opt.N = a.N;
  opt.W = a.W;
  opt.candidate_half_width = a.candidate;
  const auto W = a.W > 0 ? a.W : 8 * a.N;
  auto B = SetFamily::parse(a.set).materialize(W);
  auto os = dir.open("steps.csv");
  os << "step,x1,x2,total\n";
  for (std::int64_t i = 0; i < a.steps; ++i) {
    opt.seed = g.seed + static_cast<std::uint64_t>(i);
    const auto step = harmonic_growth_step(B, opt);
    if (i == 0) {
      auto ts = dir.open("intensities.csv");
      ts << "x1,x2,value\n";
      for (const auto& v : step.table) ts << v.site.x1 << ',' << v.site.x2 << ',' << v.value << '\n';
    }
    os << i << ',' << step.site.x1 << ',' << step.site.x2 << ',' << step.total << '\n';
    out << "step " << i << ": (" << step.site.x1 << "," << step.site.x2
        << ") total intensity " << step.total << '\n';
    B = B.united(SiteSet::from_sites({step.site}));
  }
  {
    auto fs_ = dir.open("final.txt");
    write_set_text(fs_, B);
  }
  dir.write_text("plot.py", plot_header() +
                                "r = pd.read_csv(d / 'intensities.csv')\n"
                                "fig, ax = plt.subplots()\n"
                                "sc = ax.scatter(r.x1, r.x2, c=r.value, s=12)\n"
                                "fig.colorbar(sc, label='outer measure')\n"
                                "ax.set_xlabel('x1')\n"
                                "ax.set_ylabel('x2')\n"
                                "fig.savefig(d / 'intensities.png', dpi=150)\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// Application

json options_json(const CLI::App* sub) {
  json j = json::object();
  for (const auto* opt : sub->get_options()) {
    if (opt == sub->get_help_ptr()) continue;
    const auto name = opt->get_name(false, true);
    const auto& results = opt->results();
    if (opt->get_expected_max() == 0) {
      j[name] = opt->count() > 0;
    } else if (!results.empty()) {
      j[name] = results.size() == 1 ? json(results[0]) : json(results);
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

using Handler = int (*)(const Args&, RunDir&, std::ostream&);

struct Command {
  const char* name;
  const char* help;
  Handler handler;
};

void build_app(CLI::App& app, Args& a, std::map<const CLI::App*, Handler>& handlers) {
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.add_option("--out", a.out, "output directory (created if missing)");
  app.add_option("--threads", a.threads, "worker threads for Monte Carlo and replicas; results do not depend on it")
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", a.seed, "base random seed; every chain and replica derives its stream from it");
  app.add_option("--replay", a.replay, "rerun the command recorded in a run.json");
  app.footer(
      "Sets (SET): empty | file:PATH | cex[:nmax=K] | wedge:c=P/Q | env:alpha=A[,extras=X1:X2/X1:X2]\n"
      "Sites are X1,X2 in lattice units. Exit codes: 0 ok, 1 error, 2 failed check, 64 usage.\n"
      "Every run writes run.json, its CSV/JSON outputs and plot.py into --out.");

  auto add = [&](const char* name, const char* help, Handler h) {
    auto* sub = app.add_subcommand(name, help);
    handlers[sub] = h;
    return sub;
  };

  {
    auto& m = a.measure;
    auto* s = add("measure",
                  "Point, edge or outer measure of B with unit sources on L_N.\n"
                  "measure.csv: kind,x1,x2,y1,y2,value,std_error,method,N,W,H,sources,absorbed,leaked,"
                  "residual,iterations,chains",
                  cmd_measure);
    s->add_option("--set", m.set, "obstacle set B")->check(kSetArg);
    s->add_option("--x", m.x, "site x in B or on the floor (or outside B with --hat)")
        ->required()
        ->check(kSiteArg);
    s->add_option("--to", m.to, "edge measure of x -> y for this neighbor y")->check(kSiteArg);
    s->add_flag("--hat", m.hat, "outer measure of a vacant site x next to B");
    s->add_option("--N", m.N, "source line height (lattice units)")->check(CLI::PositiveNumber);
    s->add_option("--W", m.W, "solve half-width in columns, 0 selects 8N")->check(CLI::NonNegativeNumber);
    s->add_option("--sides", m.sides, "side walls at |x1| = W")->check(kSidesArg);
    s->add_option("--tol", m.tol, "residual tolerance per unit source (exact)")->check(CLI::PositiveNumber);
    s->add_flag("--full", m.full, "also write report.csv with every point, edge and outer value");
    s->add_flag("--field", m.field, "also write field.csv with the expected visit counts");
    add_mc_options(s, m.mc);
  }
  {
    auto& c = a.converge;
    auto* s = add("converge",
                  "Point measure of x for N over a schedule, widening W until stable.\n"
                  "converge.csv: N,W,value,width_change,leaked,diff",
                  cmd_converge);
    s->add_option("--set", c.set, "obstacle set B")->check(kSetArg);
    s->add_option("--x", c.x, "site x in B or on the floor")->check(kSiteArg);
    s->add_option("--schedule", c.schedule, "increasing N values")->delimiter(',');
    s->add_option("--width-factor", c.width_factor, "initial W as a multiple of N");
    s->add_option("--width-tol", c.width_tol, "relative change accepted between W and 2W");
    s->add_option("--doublings", c.doublings, "max W doublings per N");
    s->add_option("--eps", c.eps, "convergence threshold on |v(2N) - v(N)|");
    s->add_option("--sides", c.sides, "side walls at |x1| = W")->check(kSidesArg);
  }
  {
    auto& e = a.escape;
    auto* s = add("escape",
                  "P_x(tau_A < tau_B) for targets built from atoms (union of repeats):\n"
                  "  above:H below:H line:H floor outside:W site:X1,X2 set:SET\n"
                  "A site in both targets counts as B. escape.csv: x1,x2,probability,std_error,method,convention",
                  cmd_escape);
    s->add_option("--start", e.start, "start site(s)")->required()->check(kSiteArg);
    s->add_option("--a", e.a, "target A atom(s)")->required()->check(kTargetArg);
    s->add_option("--b", e.b, "target B atom(s)")->required()->check(kTargetArg);
    s->add_option("--convention", e.convention, "exit (n >= 1) or hitting (n >= 0)")
        ->check(CLI::IsMember({"exit", "hitting"}));
    s->add_option("--reflect", e.reflect, "stay-put side walls at |x1| = W (lattice units)");
    s->add_option("--set-half-width", e.set_half_width, "half-width used to materialize set: atoms");
    s->add_option("--max-sites", e.max_sites, "site budget of the exact solve");
    add_mc_options(s, e.mc);
  }
  {
    auto& v = a.visits;
    auto* s = add("visits", "Expected visits to L_N before L_0 from L_N, against 4N. Writes report.json, levels.csv",
                  cmd_visits);
    s->add_option("--N", v.Ns, "line heights")->delimiter(',');
    s->add_option("--tol", v.tol, "absolute tolerance (exact)");
    s->add_option("--sigmas", v.sigmas, "accepted deviation in standard errors (mc)");
    add_mc_options(s, v.mc);
  }
  {
    auto& gs = a.gen;
    auto* s = add("gen-set", "Materialize a set. Writes set.txt and sites.csv (x1,x2)", cmd_gen_set);
    s->add_option("--set", gs.set, "set specifier")->check(kSetArg);
    s->add_option("--half-width", gs.half_width, "columns |x1| <= half-width")->check(CLI::NonNegativeNumber);
    s->add_option("--max-height", gs.max_height, "listing cap for sites.csv (lattice units)");
  }
  {
    auto& c = a.classify;
    auto* s = add("classify", "Superlinear or power-envelope witness for a set. Writes classify.json",
                  cmd_classify);
    s->add_option("--set", c.set, "set specifier")->check(kSetArg);
    s->add_option("--half-width", c.half_width, "columns examined")->check(CLI::PositiveNumber);
  }
  {
    auto& t = a.thm1;
    auto* s = add("verify-thm1",
                  "Escape and decay checks for the wedge x2 < c|x1| and the segment [-n1, n1].\n"
                  "Writes report.json and levels.csv; exit 2 when a check fails",
                  cmd_thm1);
    s->add_option("--c", t.c, "wedge slope")->check(kRationalArg);
    s->add_option("--n1", t.n1, "segment half-width (lattice units)")->check(CLI::PositiveNumber);
    s->add_option("--kmax", t.kmax, "number of dyadic levels")->check(CLI::PositiveNumber);
    s->add_option("--margin", t.margin, "required margin below 1/2 for every escape probability");
    s->add_option("--decay", t.decay, "required ratio v(N_{k+1}) / v(N_k) for k >= 2");
    s->add_option("--blocker", t.blocker, "blocking set used instead of the wedge")->check(kSetArg);
    add_mc_options(s, t.mc);
  }
  {
    auto& t = a.thm2;
    auto* s = add("verify-thm2",
                  "Persistence of the measure of the core B0 of a power envelope.\n"
                  "Writes report.json and levels.csv; exit 2 when a check fails",
                  cmd_thm2);
    s->add_option("--alpha", t.alpha, "envelope order, > 1")->check(CLI::Range(1.0 + 1e-12, 1e6));
    s->add_option("--extras", t.extras, "extra sites X1:X2/X1:X2")->check(kExtrasArg);
    s->add_option("--schedule", t.schedule, "N values")->delimiter(',');
    s->add_option("--persistence", t.persistence, "min over N >= persistence x first value");
    s->add_option("--scaling-levels", t.scaling, "levels k for the 2^-k escape and 2^k return checks")
        ->delimiter(',');
    s->add_option("--band", t.band, "allowed factor around the fitted scaling");
    add_mc_options(s, t.mc);
  }
  {
    auto& r = a.rect;
    auto* s = add("rect-lemma",
                  "Probability of reaching the vertical sides of [-nk, nk] x [-k, k] first.\n"
                  "Writes report.json and levels.csv; exit 2 when a check fails",
                  cmd_rect);
    s->add_option("--k", r.ks, "half-heights (lattice units)")->delimiter(',');
    s->add_option("--n", r.ns, "aspect ratios")->delimiter(',');
    s->add_option("--tol", r.tol, "relative slack in p(k,n) <= p(k,1)^n");
    add_mc_options(s, r.mc);
  }
  {
    auto& gr = a.grow;
    auto* s = add("grow",
                  "Sqrt-height birth process by exact event simulation.\n"
                  "summary.csv: replica,events,first_event,max_height,occupied; events_III.csv: t,x1,x2",
                  cmd_grow);
    add_growth_options(s, gr.g);
    s->add_option("--logs", gr.logs, "replicas whose event log and final snapshot are written");
  }
  {
    auto& d = a.dla;
    auto* s = add("dla-step",
                  "Harmonic growth steps: add a boundary site drawn by its outer measure.\n"
                  "steps.csv: step,x1,x2,total; intensities.csv: x1,x2,value (first step)",
                  cmd_dla);
    s->add_option("--set", d.set, "initial set")->check(kSetArg);
    s->add_option("--N", d.N, "source line height")->check(CLI::PositiveNumber);
    s->add_option("--W", d.W, "solve half-width, 0 selects 8N")->check(CLI::NonNegativeNumber);
    s->add_option("--candidate-half-width", d.candidate, "candidates with |x1| <= this, 0 uses W");
    s->add_option("--steps", d.steps, "growth steps")->check(CLI::PositiveNumber);
  }
  {
    auto& p = a.probe;
    auto* s = add("probe",
                  "Grow replicas, then the max point measure over the cluster at given times.\n"
                  "probe.csv: replica,t,N,W,max_measure,argmax_x1,argmax_x2,sites; exit 2 if any is 0",
                  cmd_probe);
    add_growth_options(s, p.g);
    s->add_option("--times", p.times, "probe times (process time units)")->delimiter(',');
    s->add_option("--N", p.N, "source height, 0 picks a power of two above twice the cluster");
    s->add_option("--W", p.W, "solve half-width, 0 selects 2N");
  }
  {
    auto& h = a.height;
    auto* s = add("height-bound",
                  "C = max over B of H(x) / sqrt(x2) for each N; checks the last doubling.\n"
                  "height_bound.csv: N,W,C,argmax_x1,argmax_x2,sites; exit 2 when unstable",
                  cmd_height);
    s->add_option("--set", h.set, "set specifier")->check(kSetArg);
    s->add_option("--N", h.Ns, "source heights")->delimiter(',');
    s->add_option("--W", h.W, "solve half-width, 0 selects 8N");
    s->add_option("--report-half-width", h.report_half_width, "only sites with |x1| <= this");
    s->add_option("--stability", h.stability, "allowed relative change of C");
  }
}

// Stored argv of a run.json with --out replaced when the caller gives one.
std::vector<std::string> replay_args(const std::string& path, const std::vector<std::string>& args) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kIo, "cannot open " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
  if (j.value("schema_version", 0) != kRunSchemaVersion) {
    throw Error(ErrorCode::kParse, path + ": unsupported run.json schema");
  }
  auto stored = j.at("argv").get<std::vector<std::string>>();
  std::optional<std::string> out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--out" && i + 1 < args.size()) out = args[i + 1];
    if (args[i].rfind("--out=", 0) == 0) out = args[i].substr(6);
  }
  if (out) {
    std::vector<std::string> kept;
    for (std::size_t i = 0; i < stored.size(); ++i) {
      if (stored[i] == "--out") {
        ++i;
      } else if (stored[i].rfind("--out=", 0) != 0) {
        kept.push_back(stored[i]);
      }
    }
    kept.insert(kept.begin(), {"--out", *out});
    stored = std::move(kept);
  }
  return stored;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::optional<std::string> path;
    if (args[i] == "--replay" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--replay=", 0) == 0) path = args[i].substr(9);
    if (!path) continue;
    try {
      return run(replay_args(*path, args), out, err);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return kExitError;
    }
  }

  Args a;
  CLI::App app{"Stationary harmonic measure on the upper half-plane lattice", "stathm"};
  std::map<const CLI::App*, Handler> handlers;
  build_app(app, a, handlers);

  std::vector<const char*> argv{"stathm"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }

  const CLI::App* sub = app.get_subcommands().front();
  json manifest = {
      {"schema_version", kRunSchemaVersion},
      {"argv", args},
      {"command", sub->get_name()},
      {"options", options_json(sub)},
      {"global", {{"out", a.out}, {"threads", a.threads}, {"seed", a.seed}}},
      {"seed", a.seed},
      {"versions",
       {{"stathm", library_version()}, {"fftw", fftw_version()}, {"compiler", compiler_version()}}},
  };

  const auto t0 = std::chrono::steady_clock::now();
  int code = kExitOk;
  std::optional<RunDir> dir;
  try {
    dir.emplace(a.out);
    code = handlers.at(sub)(a, *dir, out);
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    manifest["error"] = {{"code", to_string(e.code())}, {"message", e.what()}};
    code = kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    manifest["error"] = {{"code", "internal"}, {"message", e.what()}};
    code = kExitError;
  }
  manifest["exit_code"] = code;
  manifest["runtime_seconds"] = seconds_since(t0);
  if (dir) {
    manifest["outputs"] = dir->files();
    try {
      std::ofstream os(dir->path() / "run.json");
      os << manifest.dump(2) << '\n';
      if (!os) throw Error(ErrorCode::kIo, "cannot write run.json");
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kExitError;
    }
  }
  return code;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace stathm::cli
