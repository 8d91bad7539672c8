#include <doctest.h>

#include "jointsparse/functionals.hpp"
#include "jointsparse/oracle.hpp"
#include "test_support.hpp"

using namespace jointsparse;
using namespace jstest;

namespace {

using Params = RegularizationParams<double>;

Params params_with_product(ChannelNorm q, Index nl, Index m, double product) {
  return Params::uniform(q, nl, m, 1.0, 1.0, product);
}

// Row-by-row reference for Phi written without channel_norm.
double phi_reference(const Coeffs& u, const W& v, const Params& p) {
  double s = 0;
  for (Index l = 0; l < u.rows(); ++l) {
    const Vec row = u.row(l).transpose();
    const double nq = p.q == ChannelNorm::One   ? row.cwiseAbs().sum()
                      : p.q == ChannelNorm::Two ? std::sqrt(row.dot(row))
                                                : row.cwiseAbs().maxCoeff();
    s += v[l] * nq + p.omega[l] * row.dot(row) +
         p.theta[l] * (p.rho[l] - v[l]) * (p.rho[l] - v[l]);
  }
  return s;
}

// sum_j || sum_l T_{l,j} u^l - g_j ||^2 from the individual matrix blocks.
double blockwise_discrepancy(const std::vector<std::vector<Mat>>& blocks, const Coeffs& u,
                             const MeasurementData<double>& g) {
  double s = 0;
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    Vec acc = -g[j];
    for (std::size_t l = 0; l < blocks[j].size(); ++l)
      acc += blocks[j][l] * u.col(static_cast<Index>(l));
    s += acc.squaredNorm();
  }
  return s;
}

struct RandomBlockInstance {
  std::vector<std::vector<Mat>> blocks;
  std::shared_ptr<BlockOperator<double>> op;
  MeasurementData<double> g;
};

RandomBlockInstance random_block_instance(Rng& rng, Index nl, Index m,
                                          const std::vector<Index>& sizes) {
  RandomBlockInstance r;
  BlockOperator<double>::Grid grid(sizes.size());
  r.blocks.resize(sizes.size());
  for (std::size_t j = 0; j < sizes.size(); ++j) {
    for (Index l = 0; l < m; ++l) {
      Mat a = rng.mat(sizes[j], nl);
      r.blocks[j].push_back(a);
      grid[j].push_back(std::make_shared<MatrixOperator<double>>(a));
    }
    r.g.push_back(rng.vec(sizes[j]));
  }
  r.op = std::make_shared<BlockOperator<double>>(nl, sizes, grid);
  return r;
}

}  // namespace

TEST_CASE("eval_discrepancy examples") {
  auto id = std::make_shared<IdentityOperator<double>>(3);
  const auto op = BlockOperator<double>::diagonal({id});
  Coeffs u = Coeffs::Zero(3, 1);
  MeasurementData<double> g{v3(0, 1, 0)};
  CHECK(eval_discrepancy(op, u, g) == 1.0);
  u(1, 0) = 1.0;
  CHECK(eval_discrepancy(op, u, g) == 0.0);

  Rng rng(11);
  for (int t = 0; t < 20; ++t) {
    const auto inst = random_block_instance(rng, 5, 3, {4, 2});
    const Coeffs w = rng.coeffs(5, 3);
    const double expected = blockwise_discrepancy(inst.blocks, w, inst.g);
    CHECK(std::abs(eval_discrepancy(*inst.op, w, inst.g) - expected) <= 1e-11 * expected);
  }
}

TEST_CASE("eval_discrepancy rejects mismatched data") {
  auto id = std::make_shared<IdentityOperator<double>>(3);
  const auto op = BlockOperator<double>::diagonal({id});
  MeasurementData<double> g{v2(0, 1)};
  CHECK_THROWS_AS(eval_discrepancy(op, Coeffs(Coeffs::Zero(3, 1)), g), ContractViolation);
}

TEST_CASE("eval_phi examples") {
  const Params p = Params::uniform(ChannelNorm::One, 1, 1, 1.0, 1.0, 0.25);
  Coeffs u(1, 1);
  u << 2.0;
  CHECK(eval_phi(u, W(W::Constant(1, 1.0)), p) == doctest::Approx(3.0).epsilon(1e-15));

  const Params p4 = Params::uniform(ChannelNorm::Two, 4, 2, 3.0, 0.7, 0.5);
  CHECK(eval_phi(Coeffs(Coeffs::Zero(4, 2)), p4.rho, p4) == 0.0);

  W v = p4.rho;
  v[2] = -0.1;
  CHECK(std::isinf(eval_phi(Coeffs(Coeffs::Ones(4, 2)), v, p4)));
  CHECK(eval_phi(Coeffs(Coeffs::Ones(4, 2)), v, p4) > 0);
}

TEST_CASE("eval_phi decouples over lambda") {
  Rng rng(12);
  for (ChannelNorm q : kAllNorms) {
    Params p = Params::uniform(q, 6, 3, 1.0, 1.0, 1.0);
    p.theta = rng.uniform_vec(6, 0.1, 5);
    p.rho = rng.uniform_vec(6, 0, 3);
    p.omega = rng.uniform_vec(6, 0.1, 2);
    p.gamma = p.omega.minCoeff();
    const Coeffs u = rng.coeffs(6, 3);
    const W v = rng.uniform_vec(6, 0, 3);
    double sum = 0;
    for (Index l = 0; l < 6; ++l) sum += eval_phi_row(u.row(l), v[l], p, l);
    CHECK(eval_phi(u, v, p) == sum);
    CHECK(std::abs(eval_phi(u, v, p) - phi_reference(u, v, p)) <= 1e-12 * sum);
  }
}

TEST_CASE("eval_J is the discrepancy plus Phi") {
  Rng rng(13);
  for (ChannelNorm q : kAllNorms) {
    const auto inst = random_block_instance(rng, 4, 3, {3, 5, 2});
    const Params p = Params::uniform(q, 4, 3, 2.0, 1.5, 0.4);
    const Coeffs u = rng.coeffs(4, 3);
    const W v = rng.uniform_vec(4, 0, 1.5);
    const double j = eval_J(u, v, *inst.op, inst.g, p);
    CHECK(j == eval_discrepancy(*inst.op, u, inst.g) + eval_phi(u, v, p));
    const double reference = blockwise_discrepancy(inst.blocks, u, inst.g) + phi_reference(u, v, p);
    CHECK(std::abs(j - reference) <= 1e-11 * reference);
  }

  auto id = std::make_shared<IdentityOperator<double>>(2);
  const auto op = BlockOperator<double>::diagonal({id, id});
  const Params p = Params::uniform(ChannelNorm::Inf, 2, 2, 1.0, 1.0, 0.5);
  MeasurementData<double> g{Vec::Zero(2), Vec::Zero(2)};
  CHECK(eval_J(Coeffs(Coeffs::Zero(2, 2)), p.rho, op, g, p) == 0.0);
  W neg = p.rho;
  neg[0] = -1;
  CHECK(std::isinf(eval_J(Coeffs(Coeffs::Zero(2, 2)), neg, op, g, p)));
}

TEST_CASE("eval_K matches J at omega = 0 and rho = v") {
  Rng rng(14);
  for (ChannelNorm q : kAllNorms) {
    const auto inst = random_block_instance(rng, 5, 2, {4, 4});
    const Coeffs u = rng.coeffs(5, 2);
    const W v = rng.uniform_vec(5, 0, 2);
    Params p = Params::uniform(q, 5, 2, 3.0, 0.0, 0.0);
    p.rho = v;
    const W zero = W::Zero(5);
    const double k = eval_K(u, *inst.op, inst.g, v, zero, q);
    CHECK(std::abs(k - eval_J(u, v, *inst.op, inst.g, p)) <= 1e-13 * k);
  }
}

TEST_CASE("eval_K equals J minus the coupling term") {
  Rng rng(15);
  const auto inst = random_block_instance(rng, 3, 2, {5});
  Params p = Params::uniform(ChannelNorm::Two, 3, 2, 2.0, 1.0, 0.3);
  const Coeffs u = rng.coeffs(3, 2);
  const W v = rng.uniform_vec(3, 0, 1);
  double coupling = 0;
  for (Index l = 0; l < 3; ++l) coupling += 2.0 * (1.0 - v[l]) * (1.0 - v[l]);
  const double k = eval_K(u, *inst.op, inst.g, v, p.omega, p.q);
  CHECK(std::abs(k + coupling - eval_J(u, v, *inst.op, inst.g, p)) <= 1e-12 * k);

  auto id = std::make_shared<IdentityOperator<double>>(3);
  const auto op = BlockOperator<double>::diagonal({id});
  MeasurementData<double> g{Vec::Zero(3)};
  CHECK(eval_K(Coeffs(Coeffs::Zero(3, 1)), op, g, W(W::Ones(3)), W(W::Ones(3)), ChannelNorm::One) == 0.0);

  // Hand-expanded single row: |(1,-2)|_inf = 2, so 1*2 + 0.5*5 plus a residual of 5.
  Coeffs w(1, 2);
  w << 1, -2;
  auto id2 = std::make_shared<IdentityOperator<double>>(1);
  const auto op2 = BlockOperator<double>::diagonal({id2, id2});
  MeasurementData<double> g2{v1(0), v1(0)};
  CHECK(eval_K(w, op2, g2, W(W::Constant(1, 1.0)), W(W::Constant(1, 0.5)), ChannelNorm::Inf) ==
        doctest::Approx(9.5).epsilon(1e-15));
}

TEST_CASE("check_convexity examples") {
  auto c = check_convexity(params_with_product(ChannelNorm::One, 4, 3, 0.75));
  CHECK(c.convex);
  CHECK_FALSE(c.strict);
  CHECK(c.kappa == 3.0);
  CHECK(c.j_sufficient_condition());

  c = check_convexity(params_with_product(ChannelNorm::Two, 4, 3, 0.3));
  CHECK(c.convex);
  CHECK(c.strict);
  CHECK(c.kappa == 1.0);

  Params p = params_with_product(ChannelNorm::Inf, 4, 3, 0.3);
  p.omega[2] = 0.2;
  p.gamma = 0.2;
  c = check_convexity(p);
  CHECK_FALSE(c.convex);
  CHECK_FALSE(c.strict);
  CHECK(c.worst_index == 2);
  CHECK(c.min_product == doctest::Approx(0.2));
}

TEST_CASE("check_strong_rate examples") {
  auto s = check_strong_rate(params_with_product(ChannelNorm::Inf, 3, 4, 0.6));
  CHECK(s.ok);
  CHECK(s.phi_q == 2.0);
  CHECK(s.sigma == doctest::Approx(0.6));

  s = check_strong_rate(params_with_product(ChannelNorm::One, 3, 4, 0.9));
  CHECK_FALSE(s.ok);
  CHECK(s.phi_q == 4.0);

  s = check_strong_rate(params_with_product(ChannelNorm::Two, 3, 4, 0.25));
  CHECK_FALSE(s.ok);
  CHECK(s.phi_q == 1.0);
}

TEST_CASE("midpoint convexity of Phi when strictly convex") {
  Rng rng(16);
  for (ChannelNorm q : kAllNorms) {
    for (Index m : {1, 2, 3}) {
      const double kappa = convexity_kappa(q, m);
      Params p = Params::uniform(q, 5, m, 1.0, 1.0, 1.0);
      p.theta = rng.uniform_vec(5, 0.5, 3);
      p.rho = rng.uniform_vec(5, 0, 2);
      for (Index l = 0; l < 5; ++l) p.omega[l] = 1.02 * kappa / (4 * p.theta[l]);
      p.gamma = p.omega.minCoeff();
      REQUIRE(check_convexity(p).strict);
      for (int t = 0; t < 500; ++t) {
        const Coeffs u1 = rng.coeffs(5, m), u2 = rng.coeffs(5, m);
        const W a = rng.uniform_vec(5, 0, 3), b = rng.uniform_vec(5, 0, 3);
        const double mid = eval_phi(Coeffs((u1 + u2) / 2), W((a + b) / 2), p);
        const double avg = (eval_phi(u1, a, p) + eval_phi(u2, b, p)) / 2;
        CHECK(mid <= avg + 1e-12 * std::max(1.0, avg));
      }
    }
  }
}

TEST_CASE("non-convex parameters admit a midpoint violation") {
  for (ChannelNorm q : kAllNorms) {
    for (Index m : {1, 2, 3}) {
      const double kappa = convexity_kappa(q, m);
      const double theta = 2.0, rho = 1.5, omega = 0.9 * kappa / (4 * theta);
      const Params p = Params::uniform(q, 1, m, theta, rho, omega);
      REQUIRE_FALSE(check_convexity(p).convex);
      const auto w = oracle::convexity_witness(q, m, theta, omega, rho);
      REQUIRE(w.found);
      const double f1 = eval_phi_row(w.x1, w.y1, p, 0);
      const double f2 = eval_phi_row(w.x2, w.y2, p, 0);
      const double fm = eval_phi_row(Vec((w.x1 + w.x2) / 2), (w.y1 + w.y2) / 2, p, 0);
      CHECK(fm > (f1 + f2) / 2);
    }
  }
  CHECK_FALSE(oracle::convexity_witness(ChannelNorm::Two, 2, 2.0, 0.2, 1.0).found);
}
