#pragma once

// Trigonometric polynomials on T^m stored by their Fourier coefficients.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qbloch/dual_lattice.hpp"
#include "qbloch/errors.hpp"

namespace qbloch {

using cplx = std::complex<double>;
inline constexpr cplx imag_unit{0.0, 1.0};

namespace detail {

inline constexpr double drop_below = 1e-30;

/// e^{2 pi i k.w}
inline cplx character(const FreqVector& k, std::span<const double> w) {
  double phase = 0.0;
  for (std::size_t j = 0; j < k.size(); ++j) phase += static_cast<double>(k[j]) * w[j];
  phase -= std::floor(phase);
  return std::polar(1.0, two_pi * phase);
}

}  // namespace detail

/// Finitely supported coefficient map k -> c_k of f(w) = sum c_k e^{2 pi i k.w}.
class SpectralField {
 public:
  using Coeffs = std::map<FreqVector, cplx>;

  SpectralField() = default;

  SpectralField(std::size_t dim, Coeffs coeffs, bool real_valued = false)
      : dim_(dim), real_(real_valued) {
    detail::require(dim >= 1, "field dimension must be >= 1");
    for (auto& [k, c] : coeffs) {
      detail::require(k.size() == dim, "coefficient frequency has wrong dimension");
      detail::require(std::isfinite(c.real()) && std::isfinite(c.imag()),
                      "coefficients must be finite");
      if (std::abs(c) >= detail::drop_below) coeffs_.emplace(k, c);
    }
    if (real_) {
      const double tol = 1e-12 * std::max(1.0, max_abs());
      for (const auto& [k, c] : coeffs_) {
        if (std::abs(coeff(-k) - std::conj(c)) > tol)
          throw ContractError("real-valued field violates c(-k) = conj(c(k))");
      }
    }
  }

  static SpectralField constant(std::size_t dim, cplx c) {
    return SpectralField(dim, {{FreqVector(dim), c}}, c.imag() == 0.0);
  }
  static SpectralField zero(std::size_t dim) { return SpectralField(dim, {}, true); }

  std::size_t dim() const { return dim_; }
  bool real_valued() const { return real_; }
  const Coeffs& coeffs() const { return coeffs_; }
  std::size_t size() const { return coeffs_.size(); }

  cplx coeff(const FreqVector& k) const {
    auto it = coeffs_.find(k);
    return it == coeffs_.end() ? cplx{} : it->second;
  }

  double max_abs() const {
    double s = 0.0;
    for (const auto& [k, c] : coeffs_) s = std::max(s, std::abs(c));
    return s;
  }

  /// max_k |k|_inf over the support.
  std::int64_t degree() const {
    std::int64_t r = 0;
    for (const auto& [k, c] : coeffs_) r = std::max(r, k.linf());
    return r;
  }

  friend SpectralField operator+(const SpectralField& a, const SpectralField& b) {
    detail::require(a.dim_ == b.dim_, "field dimension mismatch");
    Coeffs c = a.coeffs_;
    for (const auto& [k, v] : b.coeffs_) c[k] += v;
    return SpectralField(a.dim_, std::move(c), a.real_ && b.real_);
  }
  friend SpectralField operator*(cplx s, const SpectralField& a) {
    Coeffs c;
    for (const auto& [k, v] : a.coeffs_) c.emplace(k, s * v);
    return SpectralField(a.dim_, std::move(c), a.real_ && s.imag() == 0.0);
  }
  /// Pointwise product (coefficient convolution).
  friend SpectralField operator*(const SpectralField& a, const SpectralField& b) {
    detail::require(a.dim_ == b.dim_, "field dimension mismatch");
    Coeffs c;
    for (const auto& [ka, va] : a.coeffs_)
      for (const auto& [kb, vb] : b.coeffs_) c[ka + kb] += va * vb;
    return SpectralField(a.dim_, std::move(c), a.real_ && b.real_);
  }

 private:
  std::size_t dim_ = 1;
  bool real_ = true;
  Coeffs coeffs_;
};

/// Coefficient map q -> n x n complex matrix of a real matrix field on T^m.
class MatrixSpectralField {
 public:
  using Coeffs = std::map<FreqVector, Eigen::MatrixXcd>;

  MatrixSpectralField() = default;

  /// `symmetric` additionally demands each reconstructed matrix is symmetric
  /// (coefficient fields A); deformation gradients only need to be real.
  MatrixSpectralField(std::size_t dim, std::size_t n, Coeffs coeffs, bool symmetric = true)
      : dim_(dim), n_(n), symmetric_(symmetric) {
    detail::require(dim >= 1 && n >= 1, "matrix field dimensions must be >= 1");
    for (auto& [q, a] : coeffs) {
      detail::require(q.size() == dim, "matrix coefficient frequency has wrong dimension");
      detail::require(a.rows() == static_cast<Eigen::Index>(n) &&
                          a.cols() == static_cast<Eigen::Index>(n),
                      "matrix coefficient must be n x n");
      detail::require(a.allFinite(), "matrix coefficients must be finite");
      if (a.cwiseAbs().maxCoeff() >= detail::drop_below) coeffs_.emplace(q, a);
    }
    double scale = 1.0;
    for (const auto& [q, a] : coeffs_) scale = std::max(scale, a.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * scale;
    for (const auto& [q, a] : coeffs_) {
      if ((coeff(-q) - a.conjugate()).cwiseAbs().maxCoeff() > tol)
        throw ContractError("matrix field violates A(-q) = conj(A(q)); it must be real-valued");
      if (symmetric_ && (a - a.transpose()).cwiseAbs().maxCoeff() > tol)
        throw ContractError("matrix field coefficients must be symmetric");
    }
  }

  static MatrixSpectralField identity(std::size_t dim, std::size_t n) {
    return MatrixSpectralField(dim, n, {{FreqVector(dim), Eigen::MatrixXcd::Identity(n, n)}});
  }
  static MatrixSpectralField zero(std::size_t dim, std::size_t n, bool symmetric = true) {
    return MatrixSpectralField(dim, n, {}, symmetric);
  }

  std::size_t dim() const { return dim_; }
  std::size_t n() const { return n_; }
  bool symmetric() const { return symmetric_; }
  const Coeffs& coeffs() const { return coeffs_; }

  Eigen::MatrixXcd coeff(const FreqVector& q) const {
    auto it = coeffs_.find(q);
    return it == coeffs_.end() ? Eigen::MatrixXcd::Zero(n_, n_) : it->second;
  }
  const Eigen::MatrixXcd* find(const FreqVector& q) const {
    auto it = coeffs_.find(q);
    return it == coeffs_.end() ? nullptr : &it->second;
  }

  std::int64_t degree() const {
    std::int64_t r = 0;
    for (const auto& [q, a] : coeffs_) r = std::max(r, q.linf());
    return r;
  }

  /// A(w), real part of the (real up to rounding) reconstruction.
  Eigen::MatrixXd at(std::span<const double> w) const {
    detail::require(w.size() == dim_, "point dimension mismatch");
    Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(n_, n_);
    for (const auto& [q, a] : coeffs_) s += detail::character(q, w) * a;
    return s.real();
  }

  /// Scalar field of entry (i, j).
  SpectralField entry(std::size_t i, std::size_t j) const {
    SpectralField::Coeffs c;
    for (const auto& [q, a] : coeffs_)
      c.emplace(q, a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    return SpectralField(dim_, std::move(c), true);
  }

 private:
  std::size_t dim_ = 1;
  std::size_t n_ = 1;
  bool symmetric_ = true;
  Coeffs coeffs_;
};

// Sampling points on T^m: a 32^m grid for m <= 3, else 10^4 seeded random points.
namespace detail {

template <class Visit>
void for_each_grid_point(std::size_t m, std::size_t per_axis, Visit&& visit) {
  std::vector<std::size_t> idx(m, 0);
  std::vector<double> w(m, 0.0);
  while (true) {
    for (std::size_t j = 0; j < m; ++j) w[j] = static_cast<double>(idx[j]) / per_axis;
    visit(std::span<const double>(w));
    std::size_t j = 0;
    while (j < m && ++idx[j] == per_axis) idx[j++] = 0;
    if (j == m) break;
  }
}

template <class Visit>
void for_each_sample_point(std::size_t m, Visit&& visit) {
  if (m <= 3) {
    for_each_grid_point(m, 32, visit);
    return;
  }
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(m);
  for (int s = 0; s < 10'000; ++s) {
    for (auto& x : w) x = u(rng);
    visit(std::span<const double>(w));
  }
}

}  // namespace detail

/// Sampled ellipticity constant a0 = min_w lambda_min(A(w)).
inline double ellipticity_witness(const MatrixSpectralField& a) {
  double a0 = std::numeric_limits<double>::infinity();
  detail::for_each_sample_point(a.dim(), [&](std::span<const double> w) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a.at(w), Eigen::EigenvaluesOnly);
    a0 = std::min(a0, es.eigenvalues().minCoeff());
  });
  return a0;
}

inline cplx evaluate(const SpectralField& f, std::span<const double> w) {
  detail::require(w.size() == f.dim(), "point dimension mismatch");
  cplx s{};
  for (const auto& [k, c] : f.coeffs()) s += c * detail::character(k, w);
  return s;
}

/// Plancherel: the L2 norm is the l2 norm of the coefficients.
inline double l2_norm(const SpectralField& f) {
  double s = 0.0;
  for (const auto& [k, c] : f.coeffs()) s += std::norm(c);
  return std::sqrt(s);
}

/// (sum_k (1 + gamma(k)^2)^s |c_k|^2)^{1/2}
inline double sobolev_norm(const SpectralField& f, const GammaWeight& w, double s) {
  detail::require(std::isfinite(s) && s >= 0.0, "Sobolev order must be >= 0");
  if (auto m = w.dim()) detail::require(*m == f.dim(), "field and weight dimensions differ");
  double acc = 0.0;
  for (const auto& [k, c] : f.coeffs()) {
    const double g = w(k);
    acc += std::pow(1.0 + g * g, s) * std::norm(c);
  }
  return std::sqrt(acc);
}

/// d/dy_j of y -> f(tau(y) w): c_k -> 2 pi i (Lambda^T k)_j c_k. `axis` is 0-based.
inline SpectralField spectral_derivative(const SpectralField& f, const QuasiMatrix& lambda,
                                         std::size_t axis) {
  detail::require(lambda.rows() == f.dim(), "Lambda rows must equal field dimension");
  detail::require(axis < lambda.cols(), "derivative axis out of range");
  SpectralField::Coeffs c;
  for (const auto& [k, v] : f.coeffs()) {
    const double y = lambda.frequency(k)[static_cast<Eigen::Index>(axis)];
    c.emplace(k, two_pi * imag_unit * y * v);
  }
  return SpectralField(f.dim(), std::move(c), f.real_valued());
}

/// c_k -> c_k / sqrt(1 + gamma(k)^2)
inline SpectralField apply_T(const SpectralField& f, const GammaWeight& w) {
  if (auto m = w.dim()) detail::require(*m == f.dim(), "field and weight dimensions differ");
  SpectralField::Coeffs c;
  for (const auto& [k, v] : f.coeffs()) {
    const double g = w(k);
    c.emplace(k, v / std::sqrt(1.0 + g * g));
  }
  return SpectralField(f.dim(), std::move(c), f.real_valued());
}

/// Largest `top` eigenvalues 1/sqrt(1 + gamma(k)^2) of T restricted to the
/// window [-R, R]^m, descending. The threshold is raised until enough
/// frequencies are inside, so only the head of the spectrum is enumerated.
inline std::vector<double> t_spectrum(const GammaWeight& w, std::int64_t window, std::size_t top) {
  detail::require(window >= 1, "window radius must be >= 1");
  const std::size_t m = w.dim().value_or(static_cast<std::size_t>(window));
  const double box = std::pow(2.0 * static_cast<double>(window) + 1.0, static_cast<double>(m));
  const double want = std::min(static_cast<double>(top), box);

  // gamma never exceeds this inside the window
  double d_max = 0.0;
  {
    FreqVector corner(std::vector<std::int64_t>(m, window));
    if (std::holds_alternative<weights::QuasiEuclidean>(w.scheme()))
      d_max = two_pi * std::get<weights::QuasiEuclidean>(w.scheme()).lambda.norm() *
              std::sqrt(static_cast<double>(m)) * static_cast<double>(window);
    else
      d_max = w(corner);
  }

  double d = two_pi;
  std::vector<FreqVector> ks;
  while (true) {
    ks = enumerate_in_window(w, std::min(d, d_max), window);
    if (static_cast<double>(ks.size()) >= want || d >= d_max) break;
    d *= 1.5;
  }
  std::vector<double> vals;
  vals.reserve(ks.size());
  for (const auto& k : ks) {
    const double g = w(k);
    vals.push_back(1.0 / std::sqrt(1.0 + g * g));
  }
  std::sort(vals.begin(), vals.end(), std::greater<>());
  if (vals.size() > top) vals.resize(top);
  return vals;
}

/// Spectral inner product sum_k a_k conj(b_k).
inline cplx inner(const SpectralField& a, const SpectralField& b) {
  detail::require(a.dim() == b.dim(), "field dimension mismatch");
  cplx s{};
  for (const auto& [k, v] : a.coeffs()) s += v * std::conj(b.coeff(k));
  return s;
}

/// |<u, d_j zeta> + <d_j u, zeta>|, zero for exact arithmetic.
inline double integration_by_parts_check(const SpectralField& u, const SpectralField& zeta,
                                         const QuasiMatrix& lambda, std::size_t axis) {
  return std::abs(inner(u, spectral_derivative(zeta, lambda, axis)) +
                  inner(spectral_derivative(u, lambda, axis), zeta));
}

}  // namespace qbloch
