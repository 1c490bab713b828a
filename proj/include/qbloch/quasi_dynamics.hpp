#pragma once

// The torus flow tau(x)w = w + Lambda x mod 1 and mean values of stationary
// fields along its orbits, plain and under a stochastic deformation.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <optional>
#include <stop_token>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qbloch/dual_lattice.hpp"
#include "qbloch/errors.hpp"
#include "qbloch/harmonics.hpp"

namespace qbloch {

inline Eigen::VectorXd tau(const QuasiMatrix& lambda, const Eigen::VectorXd& x,
                           const Eigen::VectorXd& w) {
  detail::require(static_cast<std::size_t>(x.size()) == lambda.cols(), "x must live in R^n");
  detail::require(static_cast<std::size_t>(w.size()) == lambda.rows(), "w must live in T^m");
  Eigen::VectorXd r = w + lambda.matrix() * x;
  for (Eigen::Index j = 0; j < r.size(); ++j) r[j] -= std::floor(r[j]);
  return r;
}

struct DensityVerdict {
  bool obstructed = false;
  std::optional<FreqVector> witness;  // nonzero k with |Lambda^T k| <= tol
  double residual = 0.0;              // |Lambda^T k| of the witness
};

/// Searches [-R, R]^m for a nonzero character killed by Lambda^T. A witness
/// means the orbits are not dense; no witness is only window-limited
/// evidence of ergodicity. The reported witness has the smallest sup-norm,
/// ties broken lexicographically, sign fixed so its first nonzero entry is > 0.
inline DensityVerdict density_kernel_test(const QuasiMatrix& lambda, std::int64_t window,
                                          double tol) {
  detail::require(window >= 1, "window radius must be >= 1");
  detail::require(std::isfinite(tol) && tol > 0.0, "tolerance must be > 0");
  const std::vector<std::int64_t> bounds(lambda.rows(), window);
  detail::require(detail::box_volume(bounds) <= detail::max_box_volume, "window is too large");
  DensityVerdict v;
  detail::scan_box(
      bounds, [](std::size_t, std::int64_t) { return 0.0; }, 0.0,
      [&](const FreqVector& k) {
        if (k.is_zero()) return;
        // canonical sign: first nonzero entry positive
        for (auto c : k) {
          if (c != 0) {
            if (c < 0) return;
            break;
          }
        }
        const double r = lambda.frequency(k).norm();
        if (r > tol) return;
        if (!v.witness || k.linf() < v.witness->linf()) {
          v.obstructed = true;
          v.witness = k;
          v.residual = r;
        }
      });
  return v;
}

/// E[f] over (T^m, Haar): the zero coefficient.
inline cplx exact_mean(const SpectralField& f) { return f.coeff(FreqVector(f.dim())); }

/// Gauss-Legendre nodes and weights on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline GaussRule gauss_legendre(std::size_t order) {
  detail::require(order >= 1 && order <= 64, "Gauss-Legendre order must be in [1, 64]");
  GaussRule g{std::vector<double>(order, 0.0), std::vector<double>(order, 2.0)};
  if (order == 1) return g;
  const double n = static_cast<double>(order);
  // P_n(x) and P_n'(x) by the three-term recurrence
  auto legendre = [&](double x) {
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= order; ++k) {
      const double kk = static_cast<double>(k);
      const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
      p0 = p1;
      p1 = p2;
    }
    return std::pair{p1, n * (x * p1 - p0) / (x * x - 1.0)};
  };
  for (std::size_t i = 0; i < order / 2; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre(x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre(x).second;
    const double wt = 2.0 / ((1.0 - x * x) * dp * dp);
    g.nodes[i] = -x;
    g.nodes[order - 1 - i] = x;
    g.weights[i] = wt;
    g.weights[order - 1 - i] = wt;
  }
  if (order % 2 == 1) {
    const double dp = legendre(0.0).second;
    g.weights[order / 2] = 2.0 / (dp * dp);
  }
  return g;
}

struct MeanOptions {
  std::size_t gl_order = 8;
  std::stop_token stop{};
};

namespace detail {

/// (1/t) int_0^t e^{2 pi i y x} dx by a composite Gauss rule.
inline cplx box_average_1d(double y, double t, std::size_t panels, const GaussRule& g) {
  if (y == 0.0) return 1.0;
  const double h = t / static_cast<double>(panels);
  cplx s{};
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = (static_cast<double>(p) + 0.5) * h;
    cplx ps{};
    for (std::size_t q = 0; q < g.nodes.size(); ++q) {
      double phase = y * (mid + 0.5 * h * g.nodes[q]);
      phase -= std::floor(phase);
      ps += g.weights[q] * std::polar(1.0, two_pi * phase);
    }
    s += ps;
  }
  return s * (0.5 * h) / t;
}

inline std::size_t panel_count(double t, double max_freq) {
  const double p = 8.0 * std::ceil(t * max_freq);
  detail::require(p <= 1e9, "box average needs too many quadrature panels");
  return std::max<std::size_t>(1, static_cast<std::size_t>(p));
}

}  // namespace detail

/// (1/t^n) int_{[0,t]^n} f(tau(x) w0) dx. Each mode is a product of axis
/// exponentials, so the tensor rule factors into one-dimensional rules.
inline cplx mean_value_estimate(const SpectralField& f, const QuasiMatrix& lambda,
                                const Eigen::VectorXd& omega0, double t,
                                const MeanOptions& opt = {}) {
  detail::require(std::isfinite(t) && t > 0.0, "box size t must be > 0");
  detail::require(lambda.rows() == f.dim(), "Lambda rows must equal field dimension");
  detail::require(static_cast<std::size_t>(omega0.size()) == f.dim(), "omega0 has wrong dimension");
  double max_freq = 0.0;
  for (const auto& [k, c] : f.coeffs()) max_freq = std::max(max_freq, lambda.frequency(k).norm());
  const std::size_t panels = detail::panel_count(t, max_freq);
  const GaussRule g = gauss_legendre(opt.gl_order);
  const std::vector<double> w0(omega0.data(), omega0.data() + omega0.size());

  cplx s{};
  for (const auto& [k, c] : f.coeffs()) {
    if (opt.stop.stop_requested()) throw Cancelled();
    const Eigen::VectorXd y = lambda.frequency(k);
    cplx term = c * detail::character(k, w0);
    for (Eigen::Index j = 0; j < y.size(); ++j) term *= detail::box_average_1d(y[j], t, panels, g);
    s += term;
  }
  return s;
}

/// grad Phi(y) = I + G(tau(y) w0) for a stationary perturbation G on T^m.
class Deformation {
 public:
  static constexpr std::size_t max_n = 4;

  Deformation(QuasiMatrix lambda, Eigen::VectorXd omega0, MatrixSpectralField g, double nu_lower,
              double sup_bound)
      : lambda_(std::move(lambda)),
        omega0_(std::move(omega0)),
        g_(std::move(g)),
        nu_(nu_lower),
        sup_(sup_bound) {
    detail::require(g_.dim() == lambda_.rows(), "G dimension must equal Lambda rows");
    detail::require(g_.n() == lambda_.cols(), "G must be n x n with n = Lambda columns");
    detail::require(g_.n() <= max_n, "deformations support n <= 4");
    detail::require(static_cast<std::size_t>(omega0_.size()) == lambda_.rows(),
                    "omega0 has wrong dimension");
    detail::require(std::isfinite(nu_) && nu_ > 0.0, "Jacobian lower bound must be > 0");
    detail::require(std::isfinite(sup_) && sup_ > 0.0, "gradient bound M must be > 0");
    validate();
    jacobian_ = build_jacobian();
  }

  std::size_t n() const { return lambda_.cols(); }
  std::size_t m() const { return lambda_.rows(); }
  const QuasiMatrix& lambda() const { return lambda_; }
  const Eigen::VectorXd& omega0() const { return omega0_; }
  const MatrixSpectralField& perturbation() const { return g_; }
  double nu_lower() const { return nu_; }
  double sup_bound() const { return sup_; }
  double sampled_min_det() const { return min_det_; }
  double sampled_max_norm() const { return max_norm_; }

  Eigen::MatrixXd gradient_at(std::span<const double> w) const {
    return Eigen::MatrixXd::Identity(n(), n()) + g_.at(w);
  }
  /// det(I + G) as a trigonometric polynomial.
  const SpectralField& jacobian() const { return jacobian_; }

 private:
  void validate() {
    min_det_ = std::numeric_limits<double>::infinity();
    max_norm_ = 0.0;
    auto check = [&](std::span<const double> w) {
      const Eigen::MatrixXd grad = gradient_at(w);
      min_det_ = std::min(min_det_, grad.determinant());
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(grad);
      max_norm_ = std::max(max_norm_, svd.singularValues()[0]);
    };
    // 10^4 points: uniform grid for m <= 2, seeded random otherwise
    if (m() <= 2) {
      detail::for_each_grid_point(m(), m() == 1 ? 10'000 : 100, check);
    } else {
      std::mt19937_64 rng(0x5eedULL);
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::vector<double> w(m());
      for (int s = 0; s < 10'000; ++s) {
        for (auto& x : w) x = u(rng);
        check(w);
      }
    }
    if (min_det_ < nu_)
      throw ValidityError("deformation Jacobian falls to " + std::to_string(min_det_) +
                          " below nu_lower = " + std::to_string(nu_));
    if (max_norm_ > sup_)
      throw ValidityError("deformation gradient norm reaches " + std::to_string(max_norm_) +
                          " above M = " + std::to_string(sup_));
  }

  SpectralField entry(std::size_t i, std::size_t j) const {
    SpectralField e = g_.entry(i, j);
    if (i == j) e = e + SpectralField::constant(m(), 1.0);
    return e;
  }

  SpectralField build_jacobian() const {
    std::vector<std::size_t> perm(n());
    std::iota(perm.begin(), perm.end(), 0);
    SpectralField det = SpectralField::zero(m());
    do {
      int inversions = 0;
      for (std::size_t a = 0; a < perm.size(); ++a)
        for (std::size_t b = a + 1; b < perm.size(); ++b) inversions += perm[a] > perm[b];
      SpectralField term = SpectralField::constant(m(), inversions % 2 ? -1.0 : 1.0);
      for (std::size_t i = 0; i < perm.size(); ++i) term = term * entry(i, perm[i]);
      det = det + term;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return det;
  }

  QuasiMatrix lambda_;
  Eigen::VectorXd omega0_;
  MatrixSpectralField g_;
  double nu_;
  double sup_;
  double min_det_ = 0.0;
  double max_norm_ = 0.0;
  SpectralField jacobian_;
};

/// E[f det grad Phi] / det E[grad Phi], both expectations by exact
/// trigonometric quadrature on a uniform grid of T^m.
inline double phi2_rhs(const SpectralField& f, const Deformation& def) {
  detail::require(f.real_valued(), "phi2_rhs needs a real-valued field");
  detail::require(f.dim() == def.m(), "field dimension must equal the deformation's m");
  const std::int64_t degree = f.degree() + static_cast<std::int64_t>(def.n()) * def.perturbation().degree();
  const std::size_t per_axis = static_cast<std::size_t>(2 * degree + 1);
  detail::require(std::pow(static_cast<double>(per_axis), static_cast<double>(def.m())) <= 5e7,
                  "quadrature grid for phi2_rhs is too large");
  double num = 0.0;
  Eigen::MatrixXd mean_grad = Eigen::MatrixXd::Zero(def.n(), def.n());
  std::size_t count = 0;
  detail::for_each_grid_point(def.m(), per_axis, [&](std::span<const double> w) {
    const Eigen::MatrixXd grad = def.gradient_at(w);
    num += evaluate(f, w).real() * grad.determinant();
    mean_grad += grad;
    ++count;
  });
  num /= static_cast<double>(count);
  mean_grad /= static_cast<double>(count);
  const double den = mean_grad.determinant();
  if (!(den > 0.0))
    throw ValidityError("det E[grad Phi] = " + std::to_string(den) + " is not positive");
  return num / den;
}

/// Mean of f o Phi^{-1} over the deformed box Phi([0,t]^n), computed by the
/// change of variables z = Phi(y):
///   int_{[0,t]^n} f(tau(y) w0) J(y) dy / int_{[0,t]^n} J(y) dy.
inline double phi2_lhs_estimate(const SpectralField& f, const Deformation& def, double t,
                                std::size_t quad_order = 8, std::stop_token stop = {}) {
  detail::require(f.dim() == def.m(), "field dimension must equal the deformation's m");
  detail::require(std::isfinite(t) && t > 0.0, "box size t must be > 0");
  const SpectralField& jac = def.jacobian();

  // Jacobian positivity along the sampled orbit (<= 10^4 points of the box)
  {
    const std::size_t n = def.n();
    const std::size_t per_axis = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::floor(std::pow(1e4, 1.0 / static_cast<double>(n)))));
    std::vector<std::size_t> idx(n, 0);
    Eigen::VectorXd y(n);
    while (true) {
      for (std::size_t j = 0; j < n; ++j)
        y[static_cast<Eigen::Index>(j)] = t * static_cast<double>(idx[j]) / (per_axis - 1);
      const Eigen::VectorXd w = tau(def.lambda(), y, def.omega0());
      const double jv = evaluate(jac, std::span<const double>(w.data(), w.size())).real();
      if (!(jv > 0.0))
        throw ValidityError("non-positive Jacobian " + std::to_string(jv) + " on the orbit");
      std::size_t j = 0;
      while (j < n && ++idx[j] == per_axis) idx[j++] = 0;
      if (j == n) break;
    }
  }

  const MeanOptions opt{quad_order, stop};
  const cplx num = mean_value_estimate(f * jac, def.lambda(), def.omega0(), t, opt);
  const cplx den = mean_value_estimate(jac, def.lambda(), def.omega0(), t, opt);
  if (!(den.real() > 0.0)) throw ValidityError("deformed box has non-positive volume");
  return (num / den).real();
}

}  // namespace qbloch
