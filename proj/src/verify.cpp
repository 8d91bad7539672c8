#include "verify.hpp"

#include "jointsparse/oracle.hpp"
#include "telemetry_io.hpp"

#include <Eigen/Eigenvalues>

#include <ostream>
#include <random>

namespace jointsparse::app {

namespace {

constexpr ChannelNorm kNorms[] = {ChannelNorm::One, ChannelNorm::Two, ChannelNorm::Inf};

Coefficients<double> zeros_like(const LinearOperator<double>& op) {
  return Coefficients<double>::Zero(op.lambda_count(), op.channels());
}

// Tracks d_{k+1} / d_k for the distances pushed in order.
struct RatioTracker {
  double floor;
  RatioStats stats;
  double prev = -1;

  void push(double d) {
    if (prev > floor) {
      ++stats.count;
      stats.worst_ratio = std::max(stats.worst_ratio, d / prev);
    }
    prev = d;
  }
};

void check_monotone(const SolverTelemetry<double>& t, RatioStats& s) {
  for (std::size_t i = 1; i < t.outer.size(); ++i) {
    const double inc = t.outer[i].objective_j - t.outer[i - 1].objective_j;
    s.worst_increase = std::max(s.worst_increase, inc);
    if (inc > 1e-12) s.monotone = false;
  }
}

// Reference minimizer from a long run with near-exact inner solves.
Coefficients<double> reference_solution(const RateInstance& inst,
                                        const RegularizationParams<double>& p) {
  Schedule<double> s;
  s.n_max = 2000;
  s.inner_iters = 1000000;
  s.inner_step_tol = 1e-13;
  s.outer_tol = 1e-13;
  s.residual_norm = inst.residual;
  return jointsparse<double>({inst.op, inst.g}, p, s).u;
}

// Outer passes after which a sequence contracting by `rate` from d0 is
// certainly below `floor`, capped for safety.
Index passes_to_floor(double d0, double rate, double floor) {
  if (!(d0 > floor) || !(rate > 0)) return 1;
  const double n = std::ceil(std::log(floor / d0) / std::log(rate));
  return static_cast<Index>(std::min(n, 1000.0)) + 1;
}

}  // namespace

std::vector<ProxReport> check_prox_oracle(std::uint64_t seed, int per_q, double step) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<Index> dim(1, 3);
  std::vector<ProxReport> out;
  for (ChannelNorm q : kNorms) {
    ProxReport r;
    r.q = q;
    for (int t = 0; t < per_q; ++t) {
      const Index m = dim(rng);
      Vector<double> x(m);
      for (Index i = 0; i < m; ++i) x[i] = 2.0 * normal(rng);
      const double v = 4.0 * unit(rng);
      const Vector<double> z = shrink(x, v, q);
      const auto grid = oracle::brute_prox<double>(x, v, q, oracle::default_halfwidth(x), step);
      r.max_defect = std::max(r.max_defect, (grid.z - z).cwiseAbs().maxCoeff());
      r.boundary_hit = r.boundary_hit || grid.on_boundary;
      if (v > 0)
        r.max_certificate_defect = std::max(
            r.max_certificate_defect, oracle::subgradient_certificate<double>(z, x, v, q).defect);
      ++r.triples;
    }
    out.push_back(r);
  }
  return out;
}

RateInstance make_rate_instance(std::uint64_t seed, Index nl, Index m, Index rows,
                                double target) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Matrix<double> a(rows, nl * m);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);

  const Matrix<double> gram = a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<Matrix<double>> es(gram);
  a *= target / std::sqrt(es.eigenvalues().maxCoeff());

  RateInstance inst;
  inst.op = std::make_shared<DenseJointOperator<double>>(a, nl, m);
  const Matrix<double> r = Matrix<double>::Identity(nl * m, nl * m) - a.transpose() * a;
  Eigen::SelfAdjointEigenSolver<Matrix<double>> er(r);
  inst.residual = std::min(1.0, er.eigenvalues().cwiseAbs().maxCoeff());

  // Jointly sparse truth on every fifth index plus small noise.
  Coefficients<double> truth = Coefficients<double>::Zero(nl, m);
  for (Index l = 0; l < nl; l += 5)
    for (Index c = 0; c < m; ++c) truth(l, c) = 2.0 * normal(rng);
  inst.g = inst.op->apply(truth);
  for (auto& b : inst.g)
    for (Index i = 0; i < b.size(); ++i) b[i] += 0.05 * normal(rng);
  return inst;
}

RegularizationParams<double> rate_params(ChannelNorm q, Index nl, Index m, double gamma,
                                         double product, double rho) {
  return RegularizationParams<double>::uniform(q, nl, m, product / gamma, rho, gamma);
}

RatioStats check_inner_rate(const RateInstance& inst, const RegularizationParams<double>& p,
                            const Weights<double>& v, Index steps, double floor) {
  const auto ref = inner_solve(zeros_like(*inst.op), v, p, *inst.op, inst.g,
                               InnerBudget{std::max<Index>(10 * steps, 200000), 1e-14});
  RatioTracker tr{floor, {}};
  tr.stats.bound = rate_alpha(p.gamma, inst.residual).value;
  Coefficients<double> u = zeros_like(*inst.op);
  tr.push((u - ref.u).norm());
  for (Index m = 0; m < steps; ++m) {
    u = landweber_step(u, v, p, *inst.op, inst.g);
    tr.push((u - ref.u).norm());
  }
  return tr.stats;
}

RatioStats check_outer_rate(const RateInstance& inst, const RegularizationParams<double>& p,
                            double floor) {
  const Coefficients<double> u_star = reference_solution(inst, p);
  RatioTracker tr{floor, {}};
  tr.stats.bound = rate_beta(p, inst.residual);
  Schedule<double> s;
  s.n_max = passes_to_floor((zeros_like(*inst.op) - u_star).norm(), tr.stats.bound, floor);
  s.inner_iters = 1000000;
  s.inner_step_tol = 1e-13;
  s.outer_tol = 0;
  s.residual_norm = inst.residual;
  bool done = false;
  Observers<double> obs;
  // Stop measuring once the distance falls below the floor.
  obs.outer = [&](Index, const Coefficients<double>& u, const Weights<double>&) {
    if (done) return;
    const double d = (u - u_star).norm();
    tr.push(d);
    done = d <= floor;
  };
  const auto sol = jointsparse<double>({inst.op, inst.g}, p, s, obs);
  check_monotone(sol.telemetry, tr.stats);
  return tr.stats;
}

RatioStats check_combined_rate(const RateInstance& inst, const RegularizationParams<double>& p,
                               double floor, Index* inner_iters) {
  const Coefficients<double> u_star = reference_solution(inst, p);
  const double alpha = rate_alpha(p.gamma, inst.residual).value;
  const double beta = rate_beta(p, inst.residual);
  const double delta = (1 + beta) / 2;
  const Index L = choose_inner_iters(alpha, beta, delta);
  if (inner_iters) *inner_iters = L;

  RatioTracker tr{floor, {}};
  tr.stats.bound = delta;
  Schedule<double> s;
  s.n_max = passes_to_floor((zeros_like(*inst.op) - u_star).norm(), delta, floor);
  s.inner_iters = L;
  s.outer_tol = 0;
  bool done = false;
  Observers<double> obs;
  obs.outer = [&](Index, const Coefficients<double>& u, const Weights<double>&) {
    if (done) return;
    const double d = (u - u_star).norm();
    tr.push(d);
    done = d <= floor;
  };
  const auto sol = jointsparse<double>({inst.op, inst.g}, p, s, obs);
  check_monotone(sol.telemetry, tr.stats);
  return tr.stats;
}

StationarityReport check_stationarity(const RateInstance& inst,
                                      const RegularizationParams<double>& p) {
  Schedule<double> s;
  s.n_max = 5000;
  s.inner_iters = 50;
  s.outer_tol = 1e-13;
  const auto sol = jointsparse<double>({inst.op, inst.g}, p, s);
  StationarityReport r;
  const Weights<double> v = update_v(sol.u, p.theta, p.rho, p.q);
  r.v_mismatch = (v - sol.v).cwiseAbs().maxCoeff();
  r.fixed_point_residual = fixed_point_residual(sol.u, sol.v, p, *inst.op, inst.g);
  for (Index l = 0; l < sol.v.size(); ++l)
    r.v_in_range = r.v_in_range && sol.v[l] >= 0 && sol.v[l] <= p.rho[l];

  // 0 ∈ 2(1 + omega) u - 2 x + v ∂||u||_q with x = u + T*(g - Tu), per index.
  auto res = inst.op->apply(sol.u);
  for (std::size_t j = 0; j < res.size(); ++j) res[j] = inst.g[j] - res[j];
  const Coefficients<double> x = sol.u + inst.op->adjoint(res);
  for (Index l = 0; l < sol.u.rows(); ++l) {
    if (!(sol.v[l] > 0)) continue;
    const Vector<double> z = (1 + p.omega[l]) * sol.u.row(l).transpose();
    const auto c = oracle::subgradient_certificate<double>(z, x.row(l).transpose(), sol.v[l], p.q);
    r.certificate_defect = std::max(r.certificate_defect, c.defect);
  }
  return r;
}

bool run_verify(const std::vector<std::string>& scopes, std::uint64_t seed, std::ostream& out) {
  bool all = true;
  auto line = [&](bool ok, const std::string& name, const std::string& detail) {
    out << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
    all = all && ok;
  };
  for (const auto& scope : scopes) {
    if (scope == "prox") {
      const double step = 1e-3;
      for (const auto& r : check_prox_oracle(seed, 500, step)) {
        const bool ok = r.max_defect <= 2 * step && !r.boundary_hit &&
                        r.max_certificate_defect < 1e-9;
        line(ok, std::string("prox q=") + to_string(r.q),
             std::to_string(r.triples) + " triples, max |shrink - grid| = " +
                 format_number(r.max_defect) + " (limit " + format_number(2 * step) +
                 "), max certificate defect = " + format_number(r.max_certificate_defect));
      }
    } else if (scope == "rates") {
      for (ChannelNorm q : kNorms) {
        for (int t = 0; t < 3; ++t) {
          const auto inst = make_rate_instance(seed + 100 * std::uint64_t(t), 10, 2, 20, 0.9);
          const auto p = rate_params(q, 10, 2, 0.05, 1.0, 0.2);
          const auto in = check_inner_rate(inst, p, p.rho, 60, 1e-6);
          const auto ou = check_outer_rate(inst, p, 1e-4);
          const auto co = check_combined_rate(inst, p, 1e-4);
          const std::string tag = std::string("q=") + to_string(q) + " #" + std::to_string(t);
          line(in.holds(1e-6), "inner rate " + tag,
               "worst ratio " + format_number(in.worst_ratio) + " vs alpha " +
                   format_number(in.bound) + " over " + std::to_string(in.count));
          line(ou.holds(1e-6) && ou.monotone, "outer rate " + tag,
               "worst ratio " + format_number(ou.worst_ratio) + " vs beta " +
                   format_number(ou.bound) + " over " + std::to_string(ou.count));
          line(co.holds(1e-6) && co.monotone, "combined rate " + tag,
               "worst ratio " + format_number(co.worst_ratio) + " vs delta " +
                   format_number(co.bound) + " over " + std::to_string(co.count));
        }
      }
    } else if (scope == "stationarity") {
      for (ChannelNorm q : kNorms) {
        const auto inst = make_rate_instance(seed, 12, 3, 24, 0.9);
        const auto p = rate_params(q, 12, 3, 0.05, 1.0, 0.2);
        const auto r = check_stationarity(inst, p);
        const bool ok = r.v_mismatch == 0 && r.v_in_range && r.fixed_point_residual < 1e-8 &&
                        r.certificate_defect < 1e-6;
        line(ok, std::string("stationarity q=") + to_string(q),
             "v mismatch " + format_number(r.v_mismatch) + ", fixed-point residual " +
                 format_number(r.fixed_point_residual) + ", subgradient defect " +
                 format_number(r.certificate_defect));
      }
    } else {
      throw std::invalid_argument("unknown verify scope '" + scope +
                                  "' (expected prox, rates or stationarity)");
    }
  }
  return all;
}

}  // namespace jointsparse::app
