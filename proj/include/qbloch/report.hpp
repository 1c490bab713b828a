#pragma once

// Text encodings of results: CSV with 17 significant digits, JSON reports.

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "qbloch/bloch.hpp"
#include "qbloch/dual_lattice.hpp"
#include "qbloch/io.hpp"
#include "qbloch/quasi_dynamics.hpp"

namespace qbloch::report {

inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// "# count=N,exact=B" then "k_1..k_m,gamma" rows.
inline std::string sublevel_csv(const SublevelSet& s, const GammaWeight& w) {
  std::ostringstream o;
  o << "# count=" << s.freqs.size() << ",exact=" << (s.exact ? "true" : "false") << '\n';
  for (std::size_t j = 0; j < s.dim; ++j) o << "k_" << (j + 1) << ',';
  o << "gamma\n";
  for (const auto& k : s.freqs) {
    for (auto v : k) o << v << ',';
    o << num(w(k)) << '\n';
  }
  return o.str();
}

inline io::json condition_c_json(const ConditionCReport& r, const GammaWeight& w,
                                 std::int64_t spectrum_window, const std::vector<double>& spectrum) {
  io::json levels = io::json::array();
  for (const auto& l : r.levels) {
    io::json e = {{"d", l.d}, {"exact", l.exact}};
    if (l.exact) e["count"] = l.count;
    else {
      e["window_counts"] = l.window_counts;
      e["strictly_increasing"] = l.strictly_increasing;
    }
    levels.push_back(e);
  }
  return {{"weight", io::to_json(w)},
          {"verdict", to_string(r.verdict)},
          {"windows", r.windows},
          {"levels", levels},
          {"t_spectrum", {{"window", spectrum_window}, {"values", spectrum}}}};
}

/// Header theta_1..theta_n,lambda_0..lambda_{j-1}; one row per theta.
inline std::string bands_csv(const std::vector<BandResult>& rows, std::size_t n, std::size_t count) {
  std::ostringstream o;
  for (std::size_t j = 0; j < n; ++j) o << "theta_" << (j + 1) << ',';
  for (std::size_t j = 0; j < count; ++j) o << "lambda_" << j << (j + 1 < count ? "," : "\n");
  for (const auto& r : rows) {
    for (Eigen::Index j = 0; j < r.theta.size(); ++j) o << num(r.theta[j]) << ',';
    for (std::size_t j = 0; j < r.eigenvalues.size(); ++j)
      o << num(r.eigenvalues[j]) << (j + 1 < r.eigenvalues.size() ? "," : "\n");
  }
  return o.str();
}

struct MeanRow {
  double t = 0.0;
  cplx estimate;
  cplx reference;  // exact mean, or phi2_rhs for deformed runs
  double abs_error = 0.0;
};

inline std::vector<MeanRow> mean_value_table(const SpectralField& f, const QuasiMatrix& lambda,
                                             const Eigen::VectorXd& omega0,
                                             const std::vector<double>& ts) {
  std::vector<MeanRow> rows;
  const cplx ref = exact_mean(f);
  for (double t : ts) {
    const cplx est = mean_value_estimate(f, lambda, omega0, t);
    rows.push_back({t, est, ref, std::abs(est - ref)});
  }
  return rows;
}

inline std::vector<MeanRow> deformed_mean_table(const SpectralField& f, const Deformation& d,
                                                const std::vector<double>& ts) {
  std::vector<MeanRow> rows;
  const double ref = phi2_rhs(f, d);
  for (double t : ts) {
    const double est = phi2_lhs_estimate(f, d, t);
    rows.push_back({t, est, ref, std::abs(est - ref)});
  }
  return rows;
}

inline std::string mean_value_csv(const std::vector<MeanRow>& rows) {
  std::ostringstream o;
  o << "t,estimate_re,estimate_im,reference_re,reference_im,abs_error\n";
  for (const auto& r : rows)
    o << num(r.t) << ',' << num(r.estimate.real()) << ',' << num(r.estimate.imag()) << ','
      << num(r.reference.real()) << ',' << num(r.reference.imag()) << ',' << num(r.abs_error) << '\n';
  return o.str();
}

inline io::json density_json(const DensityVerdict& v, std::int64_t window, double tol) {
  io::json j = {{"verdict", v.obstructed ? "OBSTRUCTION" : "NO_OBSTRUCTION_FOUND"},
                {"window", window},
                {"tol", tol}};
  if (v.witness) {
    j["k"] = v.witness->values();
    j["residual"] = v.residual;
  }
  return j;
}

}  // namespace qbloch::report
