#include <cmath>
#include <random>
#include <stop_token>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "qbloch/quasi_dynamics.hpp"

using namespace qbloch;
using oracle::pi;

namespace {

const double sqrt2 = std::sqrt(2.0);

QuasiMatrix qm(std::size_t rows, std::size_t cols, std::initializer_list<double> values) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  auto it = values.begin();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = *it++;
  return QuasiMatrix(m);
}

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) r[i++] = x;
  return r;
}

SpectralField cos_field(double amp) {  // amp cos(2 pi w)
  return SpectralField(1, {{FreqVector{1}, amp / 2}, {FreqVector{-1}, amp / 2}}, true);
}

MatrixSpectralField scalar_perturbation(double amp) {  // amp cos(2 pi w) as a 1x1 field
  Eigen::MatrixXcd a(1, 1);
  a(0, 0) = amp / 2;
  return MatrixSpectralField(1, 1, {{FreqVector{1}, a}, {FreqVector{-1}, a}}, false);
}

// |x - y| on the circle, per coordinate
double torus_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double d = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) {
    double x = std::abs(a[j] - b[j]);
    d = std::max(d, std::min(x, 1.0 - x));
  }
  return d;
}

}  // namespace

TEST(Tau, DocumentedValues) {
  const auto l = qm(1, 1, {sqrt2});
  EXPECT_EQ(tau(l, vec({0.0}), vec({0.3}))[0], 0.3);
  EXPECT_NEAR(tau(l, vec({1.0}), vec({0.0}))[0], sqrt2 - 1.0, 1e-15);
  EXPECT_NEAR(tau(l, vec({1.0}), vec({0.0}))[0], 0.41421356, 1e-8);
  EXPECT_THROW(tau(l, vec({1.0, 2.0}), vec({0.0})), ContractError);
}

TEST(Tau, GroupPropertyOnRandomInputs) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0), x(-10.0, 10.0);
  const auto l = qm(3, 2, {1.0, sqrt2, -0.5, std::sqrt(3.0), 0.25, 0.75});
  for (int i = 0; i < 1000; ++i) {
    const Eigen::VectorXd a = vec({x(rng), x(rng)}), b = vec({x(rng), x(rng)});
    const Eigen::VectorXd w = vec({u(rng), u(rng), u(rng)});
    const auto lhs = tau(l, a + b, w);
    const auto rhs = tau(l, a, tau(l, b, w));
    EXPECT_LE(torus_distance(lhs, rhs), 1e-12);
    for (Eigen::Index j = 0; j < lhs.size(); ++j) {
      EXPECT_GE(lhs[j], 0.0);
      EXPECT_LT(lhs[j], 1.0);
    }
  }
}

TEST(Tau, GridShiftIsAPermutation) {
  // Lambda x = 7/N: the uniform N-grid maps onto itself
  const std::size_t n = 64;
  const auto l = qm(1, 1, {sqrt2});
  const Eigen::VectorXd x = vec({7.0 / static_cast<double>(n) / sqrt2});
  std::vector<int> hits(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = tau(l, x, vec({static_cast<double>(i) / n}))[0] * n;
    const auto idx = static_cast<std::size_t>(std::llround(w)) % n;
    EXPECT_NEAR(w, std::round(w), 1e-9);
    ++hits[idx];
  }
  for (int h : hits) EXPECT_EQ(h, 1);
}

TEST(Density, DocumentedVerdicts) {
  const auto id = density_kernel_test(qm(2, 2, {1.0, 0.0, 0.0, 1.0}), 15, 1e-9);
  EXPECT_FALSE(id.obstructed);
  const auto dep = density_kernel_test(qm(2, 1, {1.0, 0.5}), 10, 1e-9);
  ASSERT_TRUE(dep.obstructed);
  EXPECT_EQ(*dep.witness, (FreqVector{1, -2}));
  EXPECT_EQ(dep.residual, 0.0);
  EXPECT_FALSE(density_kernel_test(qm(2, 1, {1.0, sqrt2}), 100, 1e-9).obstructed);
  // a loose tolerance finds the Pell approximant 99^2 - 2*70^2 = 1
  const auto pell = density_kernel_test(qm(2, 1, {1.0, sqrt2}), 100, 0.01);
  ASSERT_TRUE(pell.obstructed);
  EXPECT_LE(pell.residual, 0.01);
  EXPECT_THROW(density_kernel_test(qm(1, 1, {1.0}), 0, 1e-9), ContractError);
}

TEST(ExactMean, DocumentedValuesAndQuadrature) {
  EXPECT_EQ(exact_mean(SpectralField::constant(2, cplx(1.5, -2.0))), cplx(1.5, -2.0));
  EXPECT_EQ(exact_mean(SpectralField(1, {{FreqVector{1}, 1.0}})), cplx(0.0));
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 5; ++trial) {
    auto f = oracle::random_field(rng, 2, 30, 7, false) + SpectralField::constant(2, cplx(0.7, 0.2));
    const auto quad = oracle::grid_mean(2, 16, [&](const std::vector<double>& w) { return oracle::eval(f, w); });
    EXPECT_NEAR(std::abs(quad - exact_mean(f)), 0.0, 1e-10 * std::max(1.0, std::abs(exact_mean(f))));
  }
}

TEST(GaussLegendre, ExactForPolynomials) {
  for (std::size_t order : {1u, 2u, 5u, 8u, 13u}) {
    const auto g = gauss_legendre(order);
    for (std::size_t p = 0; p < 2 * order; ++p) {
      double s = 0.0;
      for (std::size_t i = 0; i < order; ++i) s += g.weights[i] * std::pow(g.nodes[i], static_cast<double>(p));
      const double exact = p % 2 ? 0.0 : 2.0 / static_cast<double>(p + 1);
      EXPECT_NEAR(s, exact, 1e-14) << "order " << order << " degree " << p;
    }
  }
}

TEST(MeanValue, ConstantFieldIsExactForAllBoxes) {
  const auto l = qm(1, 2, {1.0, sqrt2});
  for (double t : {0.5, 3.0, 100.0})
    EXPECT_EQ(mean_value_estimate(SpectralField::constant(1, 2.5), l, vec({0.4}), t), cplx(2.5));
}

TEST(MeanValue, PureModeMatchesClosedFormAndEnvelope) {
  const auto l = qm(1, 1, {sqrt2});
  const SpectralField f(1, {{FreqVector{1}, 1.0}});
  for (double t : {0.7, 25.0, 50.0, 100.0, 200.0}) {
    const cplx est = mean_value_estimate(f, l, vec({0.0}), t);
    const cplx exact = oracle::exp_box_average(2.0 * pi * sqrt2, t);
    EXPECT_NEAR(std::abs(est - exact), 0.0, 1e-8) << t;
    EXPECT_LE(std::abs(est), 1.0 / (pi * sqrt2 * t) * (1.0 + 1e-12)) << t;
  }
}

TEST(MeanValue, ConvergenceOverDoublingBoxes) {
  // test set {sqrt2}: monotone decay and shrink >= 1.5 per doubling
  const auto l = qm(1, 1, {sqrt2});
  const SpectralField f(1, {{FreqVector{1}, 1.0}});
  std::vector<double> errs;
  for (double t : {25.0, 50.0, 100.0, 200.0})
    errs.push_back(std::abs(mean_value_estimate(f, l, vec({0.0}), t) - exact_mean(f)));
  for (std::size_t i = 1; i < errs.size(); ++i) {
    EXPECT_LT(errs[i], errs[i - 1]);
    EXPECT_GE(errs[i - 1] / errs[i], 1.5);
  }
  // other irrationals obey the 1/(pi a t) envelope
  for (double a : {std::sqrt(3.0), std::sqrt(5.0), (1 + std::sqrt(5.0)) / 2, pi}) {
    const auto la = qm(1, 1, {a});
    for (double t : {25.0, 50.0, 100.0, 200.0})
      EXPECT_LE(std::abs(mean_value_estimate(f, la, vec({0.2}), t)), 1.0 / (pi * a * t) * (1 + 1e-9));
  }
}

TEST(MeanValue, MultiDimensionalSeparableBox) {
  std::mt19937_64 rng(51);
  const auto l = qm(2, 2, {1.0, 0.3, sqrt2, -0.7});
  const auto f = oracle::random_field(rng, 2, 8, 2, false);
  const Eigen::VectorXd w0 = vec({0.15, 0.6});
  const double t = 7.5;
  cplx want{};
  for (const auto& [k, c] : f.coeffs()) {
    const Eigen::VectorXd y = l.frequency(k);
    cplx term = c * std::exp(cplx(0.0, 2.0 * pi * (static_cast<double>(k[0]) * w0[0] + static_cast<double>(k[1]) * w0[1])));
    for (Eigen::Index j = 0; j < 2; ++j) term *= oracle::exp_box_average(2.0 * pi * y[j], t);
    want += term;
  }
  EXPECT_NEAR(std::abs(mean_value_estimate(f, l, w0, t) - want), 0.0, 1e-10);
}

TEST(MeanValue, CooperativeCancellation) {
  std::stop_source src;
  src.request_stop();
  MeanOptions opt;
  opt.stop = src.get_token();
  EXPECT_THROW(mean_value_estimate(cos_field(1.0), qm(1, 1, {sqrt2}), vec({0.0}), 10.0, opt), Cancelled);
  EXPECT_THROW(mean_value_estimate(cos_field(1.0), qm(1, 1, {sqrt2}), vec({0.0}), -1.0), ContractError);
}

TEST(Deformation, ValidityBounds) {
  const auto l = qm(1, 1, {sqrt2});
  EXPECT_NO_THROW(Deformation(l, vec({0.3}), scalar_perturbation(0.1), 0.85, 1.15));
  EXPECT_THROW(Deformation(l, vec({0.3}), scalar_perturbation(0.1), 0.95, 1.15), ValidityError);
  EXPECT_THROW(Deformation(l, vec({0.3}), scalar_perturbation(0.1), 0.85, 1.05), ValidityError);
  EXPECT_THROW(Deformation(l, vec({0.3}), scalar_perturbation(1.5), 1e-3, 10.0), ValidityError);
  EXPECT_THROW(Deformation(l, vec({0.3, 0.1}), scalar_perturbation(0.1), 0.85, 1.15), ContractError);
  const Deformation d(l, vec({0.3}), scalar_perturbation(0.1), 0.85, 1.15);
  EXPECT_NEAR(d.sampled_min_det(), 0.9, 1e-9);
  EXPECT_NEAR(d.sampled_max_norm(), 1.1, 1e-9);
}

TEST(Deformation, JacobianPolynomialMatchesPointwiseDeterminant) {
  // n = 2 over T^2
  Eigen::MatrixXcd g0 = Eigen::MatrixXcd::Zero(2, 2), g1(2, 2);
  g0(0, 1) = 0.05;
  g1 << cplx(0.05, 0.02), 0.03, cplx(0.0, 0.04), -0.06;
  MatrixSpectralField::Coeffs c{{FreqVector{0, 0}, g0},
                                {FreqVector{1, 0}, g1},
                                {FreqVector{-1, 0}, g1.conjugate()},
                                {FreqVector{0, 1}, 0.5 * g1},
                                {FreqVector{0, -1}, 0.5 * g1.conjugate()}};
  const Deformation d(qm(2, 2, {1.0, 0.0, 0.0, sqrt2}), vec({0.0, 0.0}),
                      MatrixSpectralField(2, 2, c, false), 0.3, 3.0);
  for (int s = 0; s < 20; ++s) {
    const double w[] = {0.05 * s, 0.13 * s - std::floor(0.13 * s)};
    EXPECT_NEAR(evaluate(d.jacobian(), w).real(), d.gradient_at(w).determinant(), 1e-13);
    EXPECT_NEAR(evaluate(d.jacobian(), w).imag(), 0.0, 1e-13);
  }
}

TEST(Phi2, RightHandSideDocumentedValues) {
  const auto l = qm(1, 1, {sqrt2});
  std::mt19937_64 rng(61);
  const auto f = oracle::random_field(rng, 1, 9, 4, true);
  const Deformation idd(l, vec({0.3}), MatrixSpectralField::zero(1, 1, false), 0.5, 2.0);
  EXPECT_NEAR(phi2_rhs(f, idd), exact_mean(f).real(), 1e-14);

  const Deformation d(l, vec({0.3}), scalar_perturbation(0.1), 0.85, 1.15);
  EXPECT_NEAR(phi2_rhs(SpectralField::constant(1, 1.0), d), 1.0, 1e-14);
  EXPECT_NEAR(phi2_rhs(cos_field(1.0), d), 0.05, 1e-14);
  // 4096-point quadrature oracle
  const auto num = oracle::grid_mean(1, 4096, [](const std::vector<double>& w) {
    return cplx(std::cos(2 * pi * w[0]) * (1.0 + 0.1 * std::cos(2 * pi * w[0])));
  });
  const auto den = oracle::grid_mean(1, 4096, [](const std::vector<double>& w) {
    return cplx(1.0 + 0.1 * std::cos(2 * pi * w[0]));
  });
  EXPECT_NEAR(phi2_rhs(cos_field(1.0), d), num.real() / den.real(), 1e-14);

  EXPECT_THROW(phi2_rhs(SpectralField(1, {{FreqVector{1}, 1.0}}), d), ContractError);
}

TEST(Phi2, LeftHandSideReductions) {
  const auto l = qm(1, 1, {sqrt2});
  std::mt19937_64 rng(71);
  const auto f = oracle::random_field(rng, 1, 9, 4, true);
  const Deformation idd(l, vec({0.3}), MatrixSpectralField::zero(1, 1, false), 0.5, 2.0);
  for (double t : {10.0, 80.0})
    EXPECT_NEAR(phi2_lhs_estimate(f, idd, t), mean_value_estimate(f, l, vec({0.3}), t).real(), 1e-14);
  const Deformation d(l, vec({0.3}), scalar_perturbation(0.1), 0.85, 1.15);
  for (double t : {3.0, 50.0, 200.0}) EXPECT_NEAR(phi2_lhs_estimate(SpectralField::constant(1, 1.0), d, t), 1.0, 1e-14);
}

TEST(Phi2, LeftHandSideAgainstQuadratureOracle) {
  // n = m = 1: the ratio of the two orbit integrals computed directly
  const auto l = qm(1, 1, {sqrt2});
  const double w0 = 0.3, t = 40.0;
  const Deformation d(l, vec({w0}), scalar_perturbation(0.1), 0.85, 1.15);
  const int n = 400000;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {  // midpoint rule fine enough at this resolution
    const double y = (i + 0.5) * t / n;
    const double th = 2 * pi * (w0 + sqrt2 * y);
    const double jac = 1.0 + 0.1 * std::cos(th);
    num += std::cos(th) * jac;
    den += jac;
  }
  EXPECT_NEAR(phi2_lhs_estimate(cos_field(1.0), d, t), num / den, 1e-9);
}

TEST(Phi2, TwoSidesConvergeAsBoxGrows) {
  // |lhs - rhs| = O(1/t): the amplitude-1 mode of f J decays like 1/(pi sqrt2 t)
  const auto l = qm(1, 1, {sqrt2});
  std::mt19937_64 rng(81);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    const Deformation d(l, vec({u(rng)}), scalar_perturbation(0.1), 0.85, 1.15);
    const double rhs = phi2_rhs(cos_field(1.0), d);
    for (double t : {200.0, 2000.0, 20000.0}) {
      const double lhs = phi2_lhs_estimate(cos_field(1.0), d, t);
      const double bound = (1.0 + 0.05 / 2 + 0.1 * rhs) / (pi * sqrt2 * t) / 0.9;
      EXPECT_LE(std::abs(lhs - rhs), bound) << "t=" << t;
    }
    EXPECT_LE(std::abs(phi2_lhs_estimate(cos_field(1.0), d, 20000.0) - rhs), 1e-3 * rhs);
  }
}
