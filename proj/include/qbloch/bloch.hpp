#pragma once

// Plane-wave Galerkin discretization of the shifted cell operator
//   -(div + 2 pi i theta) A (grad + 2 pi i theta) + V
// in the character basis e^{2 pi i (Lambda^T k).y}, k in a finite set K.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "qbloch/dual_lattice.hpp"
#include "qbloch/errors.hpp"
#include "qbloch/harmonics.hpp"

namespace qbloch {

/// Finite basis K from a certified sublevel set of w at level d.
inline std::vector<FreqVector> truncation_from_weight(const GammaWeight& w, double d) {
  auto s = enumerate_sublevel(w, d);
  if (!s.exact)
    throw ContractError("truncation weight " + w.name() +
                        " is not certified finite; pass an explicit K");
  return std::move(s.freqs);
}

class BlochProblem {
 public:
  BlochProblem(QuasiMatrix lambda, MatrixSpectralField a, SpectralField v, Eigen::VectorXd theta,
               std::vector<FreqVector> basis)
      : lambda_(std::move(lambda)),
        a_(std::move(a)),
        v_(std::move(v)),
        theta_(std::move(theta)),
        basis_(std::move(basis)) {
    const std::size_t m = lambda_.rows(), n = lambda_.cols();
    detail::require(a_.dim() == m && a_.n() == n, "A must be an n x n field over T^m");
    detail::require(a_.symmetric(), "A must be symmetric");
    detail::require(v_.dim() == m, "V must be a field over T^m");
    detail::require(v_.real_valued(), "V must be real-valued");
    detail::require(static_cast<std::size_t>(theta_.size()) == n, "theta must live in R^n");
    detail::require(theta_.allFinite(), "theta must be finite");
    validate_basis();
    a0_ = ellipticity_witness(a_);
    if (!(a0_ > 0.0))
      throw ValidityError("A is not elliptic: sampled a0 = " + std::to_string(a0_));
  }

  const QuasiMatrix& lambda() const { return lambda_; }
  const MatrixSpectralField& a() const { return a_; }
  const SpectralField& v() const { return v_; }
  const Eigen::VectorXd& theta() const { return theta_; }
  const std::vector<FreqVector>& basis() const { return basis_; }
  double ellipticity() const { return a0_; }
  std::size_t size() const { return basis_.size(); }

  BlochProblem with_theta(Eigen::VectorXd theta) const {
    detail::require(static_cast<std::size_t>(theta.size()) == lambda_.cols(),
                    "theta must live in R^n");
    BlochProblem p(*this);
    p.theta_ = std::move(theta);
    return p;
  }

  BlochProblem with_potential(SpectralField v) const {
    detail::require(v.dim() == lambda_.rows() && v.real_valued(), "V must be real over T^m");
    BlochProblem p(*this);
    p.v_ = std::move(v);
    return p;
  }

 private:
  void validate_basis() {
    detail::require(!basis_.empty(), "truncation set K is empty");
    for (const auto& k : basis_)
      detail::require(k.size() == lambda_.rows(), "truncation frequency has wrong dimension");
    std::sort(basis_.begin(), basis_.end());
    detail::require(std::adjacent_find(basis_.begin(), basis_.end()) == basis_.end(),
                    "truncation set K has duplicates");
    detail::require(std::binary_search(basis_.begin(), basis_.end(), FreqVector(lambda_.rows())),
                    "truncation set K must contain 0");
    for (const auto& k : basis_)
      if (!std::binary_search(basis_.begin(), basis_.end(), -k))
        throw ContractError("truncation set K is not symmetric under k -> -k");
  }

  QuasiMatrix lambda_;
  MatrixSpectralField a_;
  SpectralField v_;
  Eigen::VectorXd theta_;
  std::vector<FreqVector> basis_;
  double a0_ = 0.0;
};

/// H[k', k] = 4 pi^2 (Lambda^T k' + theta)^T A_{k'-k} (Lambda^T k + theta) + V_{k'-k},
/// rows and columns in the lexicographic order of K.
inline Eigen::MatrixXcd assemble(const BlochProblem& p) {
  const auto& ks = p.basis();
  const auto size = static_cast<Eigen::Index>(ks.size());
  std::vector<Eigen::VectorXd> shifted;
  shifted.reserve(ks.size());
  for (const auto& k : ks) shifted.push_back(p.lambda().frequency(k) + p.theta());

  const double four_pi2 = two_pi * two_pi;
  Eigen::MatrixXcd h(size, size);
  for (Eigen::Index r = 0; r < size; ++r) {
    for (Eigen::Index c = 0; c < size; ++c) {
      const FreqVector q = ks[static_cast<std::size_t>(r)] - ks[static_cast<std::size_t>(c)];
      cplx e = p.v().coeff(q);
      if (const auto* aq = p.a().find(q)) {
        const auto& kr = shifted[static_cast<std::size_t>(r)];
        const auto& kc = shifted[static_cast<std::size_t>(c)];
        e += four_pi2 * (kr.cast<cplx>().transpose() * (*aq) * kc.cast<cplx>())(0, 0);
      }
      h(r, c) = e;
    }
  }
  return h;
}

struct BandResult {
  Eigen::VectorXd theta;
  std::vector<double> eigenvalues;                // ascending
  std::optional<Eigen::MatrixXcd> eigenvectors;   // unit columns over K
  std::vector<double> residuals;                  // |H c - lambda c| per pair
};

/// Lowest `count` eigenpairs of the Galerkin matrix.
inline BandResult solve_bands(const BlochProblem& p, std::size_t count, bool keep_vectors = false) {
  detail::require(count >= 1, "at least one band must be requested");
  detail::require(count <= p.size(), "requested " + std::to_string(count) +
                                         " bands but |K| = " + std::to_string(p.size()));
  const Eigen::MatrixXcd h = assemble(p);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  if (es.info() != Eigen::Success)
    throw ValidityError("Hermitian eigensolver did not converge for a " + std::to_string(h.rows()) +
                        "x" + std::to_string(h.cols()) + " matrix");
  BandResult r;
  r.theta = p.theta();
  const auto cnt = static_cast<Eigen::Index>(count);
  for (Eigen::Index j = 0; j < cnt; ++j) {
    const double lam = es.eigenvalues()[j];
    r.eigenvalues.push_back(lam);
    r.residuals.push_back((h * es.eigenvectors().col(j) - lam * es.eigenvectors().col(j)).norm());
  }
  if (keep_vectors) r.eigenvectors = es.eigenvectors().leftCols(cnt);
  return r;
}

/// Rayleigh quotient c^H H c / c^H c.
inline double energy(const BlochProblem& p, const Eigen::VectorXcd& c) {
  detail::require(static_cast<std::size_t>(c.size()) == p.size(), "coefficient vector has wrong size");
  const double nrm2 = c.squaredNorm();
  detail::require(nrm2 > 0.0, "energy of the zero vector is undefined");
  return (c.adjoint() * assemble(p) * c)(0, 0).real() / nrm2;
}

namespace detail {

[[noreturn]] inline void rethrow_indexed(std::exception_ptr e, std::size_t index) {
  const std::string pre = "theta[" + std::to_string(index) + "]: ";
  try {
    std::rethrow_exception(e);
  } catch (const ParseError& x) {
    throw ParseError(pre + x.what());
  } catch (const ContractError& x) {
    throw ContractError(pre + x.what());
  } catch (const ValidityError& x) {
    throw ValidityError(pre + x.what());
  }
}

}  // namespace detail

/// solve_bands for every theta; results are indexed like the input whatever
/// the worker count.
inline std::vector<BandResult> band_structure(const BlochProblem& base,
                                              const std::vector<Eigen::VectorXd>& thetas,
                                              std::size_t count, std::size_t workers = 1) {
  detail::require(!thetas.empty(), "theta list is empty");
  std::vector<std::optional<BandResult>> out(thetas.size());
  std::vector<std::exception_ptr> errs(thetas.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < thetas.size(); i = next++) {
      try {
        out[i] = solve_bands(base.with_theta(thetas[i]), count);
      } catch (...) {
        errs[i] = std::current_exception();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, thetas.size());
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (std::size_t i = 0; i < errs.size(); ++i)
    if (errs[i]) detail::rethrow_indexed(errs[i], i);
  std::vector<BandResult> res;
  res.reserve(out.size());
  for (auto& r : out) res.push_back(std::move(*r));
  return res;
}

}  // namespace qbloch
