#pragma once

// Test-only reference computations. Nothing here calls into the library's
// enumeration, quadrature or eigensolver paths.

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "qbloch/harmonics.hpp"

namespace oracle {

using cplx = std::complex<double>;
inline constexpr double pi = std::numbers::pi;

/// Counts k in [-R, R]^m with pred(k) by plain index arithmetic.
inline std::size_t box_count(std::size_t m, std::int64_t r,
                             const std::function<bool(const std::vector<std::int64_t>&)>& pred) {
  const std::int64_t side = 2 * r + 1;
  std::int64_t total = 1;
  for (std::size_t j = 0; j < m; ++j) total *= side;
  std::vector<std::int64_t> k(m);
  std::size_t n = 0;
  for (std::int64_t idx = 0; idx < total; ++idx) {
    std::int64_t rest = idx;
    for (std::size_t j = 0; j < m; ++j) {
      k[j] = rest % side - r;
      rest /= side;
    }
    if (pred(k)) ++n;
  }
  return n;
}

/// f(w) summed directly from the coefficients.
inline cplx eval(const qbloch::SpectralField& f, const std::vector<double>& w) {
  cplx s{};
  for (const auto& [k, c] : f.coeffs()) {
    double ph = 0.0;
    for (std::size_t j = 0; j < w.size(); ++j) ph += static_cast<double>(k[j]) * w[j];
    s += c * std::exp(cplx(0.0, 2.0 * pi * ph));
  }
  return s;
}

/// Mean of g over the uniform N^m grid of T^m.
inline cplx grid_mean(std::size_t m, std::size_t n, const std::function<cplx(const std::vector<double>&)>& g) {
  std::size_t total = 1;
  for (std::size_t j = 0; j < m; ++j) total *= n;
  std::vector<double> w(m);
  cplx s{};
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rest = idx;
    for (std::size_t j = 0; j < m; ++j) {
      w[j] = static_cast<double>(rest % n) / static_cast<double>(n);
      rest /= n;
    }
    s += g(w);
  }
  return s / static_cast<double>(total);
}

/// (1/t) int_0^t e^{i a x} dx in closed form.
inline cplx exp_box_average(double a, double t) {
  if (a == 0.0) return 1.0;
  return (std::exp(cplx(0.0, a * t)) - 1.0) / cplx(0.0, a * t);
}

/// Random coefficient map with `modes` entries in [-radius, radius]^m.
inline qbloch::SpectralField random_field(std::mt19937_64& rng, std::size_t m, std::size_t modes,
                                          std::int64_t radius, bool real) {
  std::uniform_int_distribution<std::int64_t> ki(-radius, radius);
  std::normal_distribution<double> g(0.0, 1.0);
  if (static_cast<double>(modes) > std::pow(2.0 * static_cast<double>(radius) + 1.0, static_cast<double>(m)))
    throw std::invalid_argument("random_field: more modes than frequencies in the box");
  qbloch::SpectralField::Coeffs c;
  while (c.size() < modes) {
    std::vector<std::int64_t> k(m);
    for (auto& x : k) x = ki(rng);
    qbloch::FreqVector fk(k);
    const cplx v(g(rng), g(rng));
    if (real) {
      if (fk.is_zero()) c[fk] = v.real();
      else {
        c[fk] = v;
        c[-fk] = std::conj(v);
      }
    } else {
      c[fk] = v;
    }
  }
  return qbloch::SpectralField(m, std::move(c), real);
}

/// Solves a complex cyclic tridiagonal system with constant off-diagonals
///   lo x_{i-1} + d_i x_i + up x_{i+1} = b_i, x_{-1} = corner_lo x_{N-1}, x_N = corner_up x_0
/// by the Sherman-Morrison correction of the Thomas algorithm.
struct CyclicTridiag {
  std::vector<cplx> diag;
  cplx lo, up;              // sub- and super-diagonal
  cplx corner_lo, corner_up;  // A(0, N-1) = lo*corner_lo, A(N-1, 0) = up*corner_up

  std::vector<cplx> thomas(std::vector<cplx> a_diag, std::vector<cplx> b) const {
    const std::size_t n = a_diag.size();
    std::vector<cplx> c(n);
    c[0] = up / a_diag[0];
    b[0] /= a_diag[0];
    for (std::size_t i = 1; i < n; ++i) {
      const cplx den = a_diag[i] - lo * c[i - 1];
      c[i] = up / den;
      b[i] = (b[i] - lo * b[i - 1]) / den;
    }
    for (std::size_t i = n - 1; i-- > 0;) b[i] -= c[i] * b[i + 1];
    return b;
  }

  std::vector<cplx> solve(const std::vector<cplx>& rhs) const {
    const std::size_t n = diag.size();
    const cplx alpha = up * corner_up;   // bottom-left
    const cplx beta = lo * corner_lo;    // top-right
    const cplx gam = -diag[0];
    std::vector<cplx> dd = diag;
    dd[0] -= gam;
    dd[n - 1] -= alpha * beta / gam;
    std::vector<cplx> x = thomas(dd, rhs);
    std::vector<cplx> u(n, 0.0);
    u[0] = gam;
    u[n - 1] = alpha;
    std::vector<cplx> z = thomas(dd, u);
    const cplx fact = (x[0] + beta * x[n - 1] / gam) / (1.0 + z[0] + beta * z[n - 1] / gam);
    for (std::size_t i = 0; i < n; ++i) x[i] -= fact * z[i];
    return x;
  }
};

/// Lowest eigenvalue of -u'' + V u on [0, 1) with u(y + 1) = e^{2 pi i theta} u(y),
/// second-order central differences on `points` nodes, by shifted inverse
/// iteration with a Rayleigh-quotient readout.
inline double fd_ground_state(const std::function<double(double)>& v, double theta,
                              std::size_t points, double shift) {
  const double h = 1.0 / static_cast<double>(points);
  const double ih2 = 1.0 / (h * h);
  const cplx phase = std::exp(cplx(0.0, 2.0 * pi * theta));
  std::vector<double> vv(points);
  for (std::size_t i = 0; i < points; ++i) vv[i] = v(static_cast<double>(i) * h);

  CyclicTridiag op;
  op.diag.resize(points);
  for (std::size_t i = 0; i < points; ++i) op.diag[i] = 2.0 * ih2 + vv[i] - shift;
  op.lo = -ih2;
  op.up = -ih2;
  op.corner_lo = std::conj(phase);  // u_{-1} = e^{-2 pi i theta} u_{N-1}
  op.corner_up = phase;             // u_N = e^{2 pi i theta} u_0

  auto apply_h = [&](const std::vector<cplx>& u) {
    std::vector<cplx> r(points);
    for (std::size_t i = 0; i < points; ++i) {
      const cplx left = i == 0 ? std::conj(phase) * u[points - 1] : u[i - 1];
      const cplx right = i + 1 == points ? phase * u[0] : u[i + 1];
      r[i] = (2.0 * u[i] - left - right) * ih2 + vv[i] * u[i];
    }
    return r;
  };

  std::vector<cplx> u(points);
  for (std::size_t i = 0; i < points; ++i)
    u[i] = std::exp(cplx(0.0, 2.0 * pi * theta * static_cast<double>(i) * h)) *
           (1.0 + 0.01 * std::cos(2.0 * pi * static_cast<double>(i) * h));
  double lam = 0.0, prev = 1e300;
  for (int it = 0; it < 2000; ++it) {
    u = op.solve(u);
    double nrm = 0.0;
    for (const auto& x : u) nrm += std::norm(x);
    nrm = std::sqrt(nrm);
    for (auto& x : u) x /= nrm;
    const auto hu = apply_h(u);
    cplx rq{};
    for (std::size_t i = 0; i < points; ++i) rq += std::conj(u[i]) * hu[i];
    lam = rq.real();
    if (std::abs(lam - prev) < 1e-15 * std::max(1.0, std::abs(lam))) break;
    prev = lam;
  }
  return lam;
}

}  // namespace oracle
