// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "image_io.hpp"
#include "synthetic.hpp"
#include "telemetry_io.hpp"
#include "verify.hpp"

#include "jointsparse/oracle.hpp"
#include "jointsparse/solver.hpp"

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace jointsparse;
using namespace jointsparse::app;
namespace fs = std::filesystem;

namespace {

constexpr ChannelNorm kNorms[] = {ChannelNorm::One, ChannelNorm::Two, ChannelNorm::Inf};
using Params = RegularizationParams<double>;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double x) { return format_number(x); }

// Largest increase of J between consecutive outer records, over every run.
struct MonotoneLog {
  int runs = 0;
  double worst_increase = -std::numeric_limits<double>::infinity();

  void add(const SolverTelemetry<double>& t) {
    ++runs;
    for (std::size_t i = 1; i < t.outer.size(); ++i)
      worst_increase = std::max(worst_increase, t.outer[i].objective_j - t.outer[i - 1].objective_j);
  }
  void add(const RatioStats& s) {
    ++runs;
    worst_increase = std::max(worst_increase, s.worst_increase);
  }
};

MonotoneLog g_monotone;

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t s) : gen(s) {}
  double normal() { return std::normal_distribution<double>()(gen); }
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(gen); }
  Index integer(Index a, Index b) { return std::uniform_int_distribution<Index>(a, b)(gen); }
  Vector<double> vec(Index n, double scale) {
    Vector<double> x(n);
    for (Index i = 0; i < n; ++i) x[i] = scale * normal();
    return x;
  }
  ChannelNorm norm() { return kNorms[integer(0, 2)]; }
};

// ---------------------------------------------------------------------------

Outcome prox_oracle() {
  const auto t0 = Clock::now();
  const auto reports = check_prox_oracle(11, 500, 1e-3);
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  Outcome o{secs < 60, ""};
  for (const auto& r : reports) {
    o.pass = o.pass && r.triples == 500 && r.max_defect <= 2e-3 && !r.boundary_hit;
    o.detail += std::string("q=") + to_string(r.q) + " max defect " + num(r.max_defect) + "; ";
  }
  o.detail += "limit 2e-3, " + num(secs) + " s (limit 60)";
  return o;
}

Outcome moreau_identity() {
  Rng rng(12);
  const auto t0 = Clock::now();
  double worst = 0;
  for (int t = 0; t < 10000; ++t) {
    const ChannelNorm q = rng.norm();
    const Index m = rng.integer(1, 6);
    const Vector<double> x = rng.vec(m, 2.0);
    const double v = rng.uniform(0, 4);
    const Vector<double> sum = shrink(x, v, q) + project_ball(x, v / 2, dual_norm(q));
    worst = std::max(worst, (sum - x).cwiseAbs().maxCoeff());
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  return {worst <= 1e-12 && secs < 5,
          "10000 triples, max |S + P - x| = " + num(worst) + " (limit 1e-12), " + num(secs) +
              " s (limit 5)"};
}

Outcome nonexpansive() {
  Rng rng(13);
  int violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (ChannelNorm q : kNorms) {
    for (int t = 0; t < 10000; ++t) {
      const Index nl = rng.integer(1, 4), m = rng.integer(1, 6);
      Coefficients<double> x(nl, m), y(nl, m);
      for (Index i = 0; i < x.size(); ++i) {
        x.data()[i] = 2 * rng.normal();
        y.data()[i] = t % 2 ? x.data()[i] + 0.05 * rng.normal() : 2 * rng.normal();
      }
      Weights<double> v(nl), omega(nl);
      for (Index l = 0; l < nl; ++l) {
        v[l] = rng.uniform(0, 4);
        omega[l] = t % 3 == 0 ? 0.0 : rng.uniform(0, 2);
      }
      const double lhs =
          (threshold_block(x, v, omega, q) - threshold_block(y, v, omega, q)).norm();
      const double excess = lhs - (x - y).norm();
      worst = std::max(worst, excess);
      if (excess > 1e-12) ++violations;
    }
  }
  return {violations == 0, "30000 pairs, " + std::to_string(violations) +
                               " violations, max ||Ux - Uy|| - ||x - y|| = " + num(worst)};
}

Outcome radius_lipschitz() {
  Rng rng(14);
  int violations = 0;
  double worst = -std::numeric_limits<double>::infinity();
  for (ChannelNorm q : kNorms) {
    for (int t = 0; t < 10000; ++t) {
      const Index m = rng.integer(1, 6);
      const Vector<double> x = rng.vec(m, 2.0);
      const double a = rng.uniform(0, 3);
      const double b = t % 2 ? a + rng.uniform(-0.05, 0.05) : rng.uniform(0, 3);
      if (b < 0) continue;
      const double lip = q == ChannelNorm::Two ? 1.0 : std::sqrt(double(m));
      const double lhs = (project_ball(x, a, q) - project_ball(x, b, q)).norm();
      const double excess = lhs - lip * std::abs(a - b);
      worst = std::max(worst, excess);
      if (excess > 1e-12) ++violations;
    }
  }
  return {violations == 0, std::to_string(violations) +
                               " violations over 3 x 10000 triples, max excess " + num(worst)};
}

struct RateCase {
  RateInstance inst;
  std::uint64_t seed;
};

std::vector<RateCase> rate_cases() {
  std::vector<RateCase> out;
  for (std::uint64_t s = 0; s < 20; ++s)
    out.push_back({make_rate_instance(1000 + s, 50, 3, 150, 0.9), 1000 + s});
  return out;
}

Outcome inner_rate(const std::vector<RateCase>& cases) {
  const auto t0 = Clock::now();
  bool ok = true;
  double worst_gap = -1;
  int measured = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    Rng rng(cases[i].seed);
    const ChannelNorm q = kNorms[i % 3];
    Params p = Params::uniform(q, 50, 3, 10, 1, 0.05);
    for (Index l = 0; l < 50; ++l) p.omega[l] = 0.05 + rng.uniform(0, 0.2);  // >= gamma
    p.gamma = 0.05;
    Weights<double> v(50);
    for (Index l = 0; l < 50; ++l) v[l] = rng.uniform(0, 2);
    const auto st = check_inner_rate(cases[i].inst, p, v, 600, 1e-6);
    ok = ok && st.count > 0 && st.holds(1e-6);
    measured += st.count;
    worst_gap = std::max(worst_gap, st.worst_ratio - st.bound);
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  return {ok && secs < 30, "20 instances, " + std::to_string(measured) +
                               " ratios, max (ratio - alpha) = " + num(worst_gap) + ", " +
                               num(secs) + " s (limit 30)"};
}

Params outer_params(ChannelNorm q) { return rate_params(q, 50, 3, 0.05, 1.0, 0.2); }

Outcome outer_rate(const std::vector<RateCase>& cases) {
  bool ok = true;
  double worst_gap = -1;
  int measured = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const Params p = outer_params(kNorms[i % 3]);
    if (!check_strong_rate(p).ok) return {false, "parameters miss the strong-rate condition"};
    const auto st = check_outer_rate(cases[i].inst, p, 1e-4);
    g_monotone.add(st);
    ok = ok && st.count > 0 && st.holds(1e-6);
    measured += st.count;
    worst_gap = std::max(worst_gap, st.worst_ratio - st.bound);
  }
  return {ok, "20 instances, theta*omega = 1, " + std::to_string(measured) +
                  " ratios, max (ratio - beta) = " + num(worst_gap)};
}

Outcome combined_rate(const std::vector<RateCase>& cases) {
  const bool examples = choose_inner_iters(0.5, 0.5, 0.9) == 2 &&
                        choose_inner_iters(0.9, 0.1, 0.5) == 10;
  bool ok = examples;
  double worst_gap = -1;
  int measured = 0;
  Index lmin = std::numeric_limits<Index>::max(), lmax = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    Index L = 0;
    const auto st = check_combined_rate(cases[i].inst, outer_params(kNorms[i % 3]), 1e-4, &L);
    g_monotone.add(st);
    lmin = std::min(lmin, L);
    lmax = std::max(lmax, L);
    ok = ok && st.count > 0 && st.holds(1e-6);
    measured += st.count;
    worst_gap = std::max(worst_gap, st.worst_ratio - st.bound);
  }
  return {ok, std::string("L(0.5,0.5,0.9)=2 and L(0.9,0.1,0.5)=10: ") +
                  (examples ? "yes" : "no") + "; L in [" + std::to_string(lmin) + ", " +
                  std::to_string(lmax) + "], " + std::to_string(measured) +
                  " ratios, max (ratio - delta) = " + num(worst_gap)};
}

Outcome tiny_instance() {
  const auto t0 = Clock::now();
  auto op = std::make_shared<DenseJointOperator<double>>(Matrix<double>::Constant(1, 1, 0.9), 1, 1);
  const MeasurementData<double> g{Vector<double>::Constant(1, 0.9)};
  const Params p = Params::uniform(ChannelNorm::One, 1, 1, 10, 1, 0.25);
  Schedule<double> s;
  s.n_max = 1000;
  s.outer_tol = 1e-14;
  const auto sol = jointsparse::jointsparse<double>({op, g}, p, s);
  g_monotone.add(sol.telemetry);
  const auto grid = oracle::grid_joint_minimizer<double>(*op, g, p, oracle::JointGridSpec{});
  const double du = std::abs(sol.u(0, 0) - grid.u(0, 0));
  const double dv = std::abs(sol.v[0] - grid.v[0]);
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  return {du <= 5e-3 && dv <= 5e-3 && !grid.on_boundary && secs < 10,
          "u = " + num(sol.u(0, 0)) + " vs grid " + num(grid.u(0, 0)) + ", v = " +
              num(sol.v[0]) + " vs grid " + num(grid.v[0]) + ", " + num(secs) +
              " s (limit 10)"};
}

Outcome v_update() {
  Rng rng(15);
  double worst = 0;
  bool in_range = true;
  for (int t = 0; t < 1000; ++t) {
    const ChannelNorm q = rng.norm();
    const Index m = rng.integer(1, 6);
    Coefficients<double> u(1, m);
    const double scale = t % 10 == 0 ? 0.0 : std::exp(rng.uniform(-4, 3));
    for (Index c = 0; c < m; ++c) u(0, c) = scale * rng.normal();
    const Weights<double> theta = Weights<double>::Constant(1, rng.uniform(0.1, 10));
    const Weights<double> rho = Weights<double>::Constant(1, rng.uniform(0, 2));
    const double v = update_v(u, theta, rho, q)[0];
    in_range = in_range && v >= 0 && v <= rho[0];

    double n = 0;
    const Vector<double> row = u.row(0).transpose();
    switch (q) {
      case ChannelNorm::One: n = row.cwiseAbs().sum(); break;
      case ChannelNorm::Two: n = std::sqrt(row.squaredNorm()); break;
      case ChannelNorm::Inf: n = row.cwiseAbs().maxCoeff(); break;
    }
    const double th = theta[0], r = rho[0];
    auto f = [&](double y) { return y * n + th * (r - y) * (r - y); };
    double best = r, best_f = f(r);
    const auto steps = static_cast<long>(std::floor(r / 1e-6));
    for (long k = 0; k <= steps; ++k) {
      const double y = double(k) * 1e-6;
      const double fy = f(y);
      if (fy < best_f) {
        best_f = fy;
        best = y;
      }
    }
    worst = std::max(worst, std::abs(v - best));
  }
  return {worst <= 1e-5 && in_range, "1000 rows, max |v - grid| = " + num(worst) +
                                         " (limit 1e-5), range " + (in_range ? "ok" : "violated")};
}

Outcome convexity_sharpness() {
  Rng rng(16);
  std::string detail;
  bool ok = true;
  for (ChannelNorm q : kNorms) {
    for (Index m : {1, 2, 3}) {
      const double kappa = convexity_kappa(q, m), theta = 2.0, rho = 1.5;
      const Params below = Params::uniform(q, 1, m, theta, rho, 0.999 * kappa / (4 * theta));
      const auto w = oracle::convexity_witness(q, m, theta, below.omega[0], rho);
      bool violated = false;
      if (w.found) {
        const double f1 = eval_phi_row(w.x1, w.y1, below, 0);
        const double f2 = eval_phi_row(w.x2, w.y2, below, 0);
        const double fm = eval_phi_row(Vector<double>((w.x1 + w.x2) / 2), (w.y1 + w.y2) / 2, below, 0);
        violated = fm > (f1 + f2) / 2;
      }

      const Params above = Params::uniform(q, 1, m, theta, rho, 1.001 * kappa / (4 * theta));
      int bad = 0;
      const int checks = m == 3 ? 100000 : 20000;
      for (int t = 0; t < checks; ++t) {
        Vector<double> x1, x2;
        double y1, y2;
        if (t % 2 && w.found) {  // pairs near the witness slice
          x1 = w.x1 + rng.vec(m, 0.05);
          x2 = w.x2 + rng.vec(m, 0.05);
          y1 = std::max(0.0, w.y1 + 0.05 * rng.normal());
          y2 = std::max(0.0, w.y2 + 0.05 * rng.normal());
        } else {
          x1 = rng.vec(m, 1.5);
          x2 = rng.vec(m, 1.5);
          y1 = rng.uniform(0, 3);
          y2 = rng.uniform(0, 3);
        }
        const double avg = (eval_phi_row(x1, y1, above, 0) + eval_phi_row(x2, y2, above, 0)) / 2;
        const double mid = eval_phi_row(Vector<double>((x1 + x2) / 2), (y1 + y2) / 2, above, 0);
        if (mid > avg + 1e-12 * std::max(1.0, std::abs(avg))) ++bad;
      }
      ok = ok && violated && bad == 0;
      if (m == 3)
        detail += std::string("q=") + to_string(q) + ": witness " + (violated ? "yes" : "no") +
                  ", " + std::to_string(bad) + " of " + std::to_string(checks) + " above; ";
    }
  }
  detail += "(M = 1, 2 also checked)";
  return {ok, detail};
}

Outcome joint_sparsity_benefit() {
  const auto t0 = Clock::now();
  std::array<std::vector<double>, 3> errs;
  for (int s = 0; s < 20; ++s) {
    MmvSpec spec;
    spec.lambda_count = 128;
    spec.channels = 3;
    spec.rows = 64;
    spec.full_channels = 1;
    spec.sparsity = 12;
    spec.overlap = 1.0;
    spec.noise = 0.01;
    spec.seed = 500 + std::uint64_t(s);
    const auto prob = make_mmv(spec);
    const double tn = prob.truth.rightCols(2).norm();
    for (std::size_t k = 0; k < 3; ++k) {
      const Params p = Params::uniform(kNorms[k], 128, 3, 100, 0.1, 0.01);
      Schedule<double> sc;
      sc.n_max = 50;
      sc.inner_iters = 20;
      sc.outer_tol = 0;
      const auto sol = jointsparse::jointsparse<double>({prob.op(), prob.g}, p, sc);
      g_monotone.add(sol.telemetry);
      errs[k].push_back((sol.u.rightCols(2) - prob.truth.rightCols(2)).norm() / tn);
    }
  }
  std::array<double, 3> med{};
  for (std::size_t k = 0; k < 3; ++k) {
    auto e = errs[k];
    std::sort(e.begin(), e.end());
    med[k] = (e[9] + e[10]) / 2;
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  return {med[2] <= med[1] && med[1] <= med[0] && secs < 300,
          "median relative error on the undersampled channels: q=inf " + num(med[2]) +
              ", q=2 " + num(med[1]) + ", q=1 " + num(med[0]) + ", " + num(secs) +
              " s (limit 300)"};
}

Outcome monotonicity() {
  return {g_monotone.runs > 0 && g_monotone.worst_increase <= 1e-12,
          std::to_string(g_monotone.runs) + " runs, largest increase of J between outer passes " +
              num(g_monotone.worst_increase) + " (slack 1e-12)"};
}

// --- CLI demo --------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& cwd) {
  const std::string cmd = "cd '" + cwd.string() + "' && '" JOINTSPARSE_CLI "' " + args +
                          " >> cli.log 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool parse_number(const std::string& s) {
  if (s == "nan" || s == "inf" || s == "-inf") return true;
  std::istringstream in(s);
  in.imbue(std::locale::classic());
  double x;
  in >> x;
  return !in.fail() && in.eof();
}

// Header comments, the column row, then (n, m) rows in strictly increasing order.
std::string telemetry_schema_error(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  bool header = false;
  long pn = -1, pm = -1, rows = 0;
  while (std::getline(in, line)) {
    if (!header) {
      if (line.rfind("# ", 0) == 0) continue;
      if (line != kTelemetryColumns) return "bad header row '" + line + "'";
      header = true;
      continue;
    }
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string item; std::getline(ss, item, ',');) f.push_back(item);
    if (f.size() != 6) return "row with " + std::to_string(f.size()) + " fields";
    for (const auto& x : f)
      if (!parse_number(x)) return "unparsable field '" + x + "'";
    const long n = std::stol(f[0]), m = std::stol(f[1]);
    if (!(n > pn || (n == pn && m > pm))) return "rows out of order";
    pn = n;
    pm = m;
    ++rows;
  }
  if (!header || rows == 0) return "no data rows";
  if (text.find('\r') != std::string::npos) return "CR line endings";
  return "";
}

double final_error(const fs::path& errors_csv) {
  std::istringstream in(slurp(errors_csv));
  std::string line, last;
  while (std::getline(in, line))
    if (!line.empty()) last = line;
  std::vector<std::string> f;
  std::stringstream ss(last);
  for (std::string item; std::getline(ss, item, ',');) f.push_back(item);
  if (f.size() != 4) return std::numeric_limits<double>::quiet_NaN();
  return std::hypot(std::stod(f[2]), std::stod(f[3]));
}

Outcome demo_end_to_end() {
  const fs::path dir = fs::current_path() / "acceptance_demo";
  fs::remove_all(dir);
  fs::create_directories(dir);
  if (run_cli("gen --seed 1 --set kind=image image_side=64", dir) != 0)
    return {false, "gen failed, see " + (dir / "cli.log").string()};

  const std::string demo =
      "demo-color --seed 1 --downsample 4 --set gray=gray.pgm color=color.ppm omega=0.05 "
      "theta=10 rho=20 rho_exponent=1 inner_iters=7 n_max=15 ";
  const auto t0 = Clock::now();
  const int rc = run_cli(demo + "--q inf --out run1", dir);
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (rc != 0) return {false, "demo-color exited with " + std::to_string(rc)};
  if (run_cli(demo + "--q inf --out run2", dir) != 0) return {false, "rerun failed"};

  const std::string tele = slurp(dir / "run1/telemetry.csv");
  const std::string schema = telemetry_schema_error(tele);
  bool echoed = true;
  for (const char* kv : {"# omega=0.05", "# theta=10", "# rho=20", "# inner_iters=7", "# n_max=15"})
    echoed = echoed && tele.find(kv) != std::string::npos;

  std::string ppm;
  try {
    const Image img = read_pnm(dir / "run1/reconstruction.ppm");
    if (img.width != 64 || img.height != 64 || img.channels() != 3) ppm = "wrong geometry";
  } catch (const std::exception& e) {
    ppm = e.what();
  }
  bool identical = true;
  for (const char* f : {"telemetry.csv", "errors.csv", "reconstruction.ppm"})
    identical = identical && slurp(dir / "run1" / f) == slurp(dir / "run2" / f);

  // Informational: q = 2 under the same parameters, and the q = 1 refusal.
  std::string extra;
  if (run_cli(demo + "--q 2 --out q2", dir) == 0) {
    const double e_inf = final_error(dir / "run1/errors.csv");
    const double e_two = final_error(dir / "q2/errors.csv");
    extra = "; chroma error q=inf " + num(e_inf) + " vs q=2 " + num(e_two) +
            (e_inf <= e_two ? " (inf <= 2)" : " (inf > 2)");
  }
  extra += std::string("; q=1 ") +
           (run_cli(demo + "--q 1 --out q1", dir) == 2 ? "refused by the convexity check"
                                                       : "not refused");

  const bool ok = secs < 60 && schema.empty() && echoed && ppm.empty() && identical;
  return {ok, num(secs) + " s (limit 60), CSV " + (schema.empty() ? "valid" : schema) +
                  ", parameters echoed " + (echoed ? "yes" : "no") + ", PPM " +
                  (ppm.empty() ? "valid" : ppm) + ", rerun byte-identical " +
                  (identical ? "yes" : "no") + extra};
}

}  // namespace

int main() {
  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << o.detail
              << " [" << std::fixed << std::setprecision(2) << secs << " s]" << std::endl;
    std::cout.unsetf(std::ios::floatfield);
    if (!o.pass) ++failed;
  };

  std::vector<RateCase> cases;
  report(1, "prox oracle equivalence", prox_oracle);
  report(2, "Moreau identity", moreau_identity);
  report(3, "non-expansiveness of U", nonexpansive);
  report(4, "radius Lipschitz projections", radius_lipschitz);
  report(5, "inner linear rate", [&] {
    cases = rate_cases();
    return inner_rate(cases);
  });
  report(6, "outer rate", [&] { return outer_rate(cases); });
  report(7, "combined rate", [&] { return combined_rate(cases); });
  report(9, "tiny instance global optimum", tiny_instance);
  report(10, "v update against a 1-D grid", v_update);
  report(11, "convexity certificate sharpness", convexity_sharpness);
  report(12, "joint sparsity benefit", joint_sparsity_benefit);
  report(8, "objective monotonicity", monotonicity);
  report(13, "color demo end to end", demo_end_to_end);

  std::cout << (failed ? "FAILED " : "ALL PASSED ") << failed << " of 13 criteria failed"
            << std::endl;
  return failed ? 1 : 0;
}
