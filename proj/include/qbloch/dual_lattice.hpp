#pragma once

// Dual lattice of the torus T^m: integer frequencies, gamma weights,
// sublevel enumeration and the finiteness (compact embedding) certifier.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "qbloch/errors.hpp"

namespace qbloch {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Integer frequency k in Z^m, the index of the character e^{2 pi i k.w}.
class FreqVector {
 public:
  using value_type = std::int64_t;

  FreqVector() = default;
  explicit FreqVector(std::size_t m) : k_(m, 0) {}
  FreqVector(std::initializer_list<value_type> k) : k_(k) {}
  explicit FreqVector(std::vector<value_type> k) : k_(std::move(k)) {}

  static FreqVector unit(std::size_t m, std::size_t axis) {
    FreqVector e(m);
    e.k_.at(axis) = 1;
    return e;
  }

  std::size_t size() const { return k_.size(); }
  value_type operator[](std::size_t j) const { return k_[j]; }
  value_type& operator[](std::size_t j) { return k_[j]; }
  auto begin() const { return k_.begin(); }
  auto end() const { return k_.end(); }
  const std::vector<value_type>& values() const { return k_; }

  bool is_zero() const {
    return std::all_of(k_.begin(), k_.end(), [](value_type v) { return v == 0; });
  }
  value_type l1() const {
    value_type s = 0;
    for (auto v : k_) s += v < 0 ? -v : v;
    return s;
  }
  value_type linf() const {
    value_type s = 0;
    for (auto v : k_) s = std::max(s, v < 0 ? -v : v);
    return s;
  }

  FreqVector operator-() const {
    FreqVector r(*this);
    for (auto& v : r.k_) v = -v;
    return r;
  }
  friend FreqVector operator+(const FreqVector& a, const FreqVector& b) {
    detail::require(a.size() == b.size(), "frequency dimension mismatch");
    FreqVector r(a);
    for (std::size_t j = 0; j < r.size(); ++j) r.k_[j] += b.k_[j];
    return r;
  }
  friend FreqVector operator-(const FreqVector& a, const FreqVector& b) { return a + (-b); }

  // Lexicographic, which is the ordering of every returned frequency set.
  friend auto operator<=>(const FreqVector&, const FreqVector&) = default;
  friend bool operator==(const FreqVector&, const FreqVector&) = default;

  Eigen::VectorXd as_real() const {
    Eigen::VectorXd r(k_.size());
    for (std::size_t j = 0; j < k_.size(); ++j) r[j] = static_cast<double>(k_[j]);
    return r;
  }

 private:
  std::vector<value_type> k_;
};

/// Frequency matrix Lambda (m rows lambda_i in R^n) of a quasiperiodic
/// structure, with the Gram matrix B = Lambda Lambda^T cached.
class QuasiMatrix {
 public:
  static constexpr std::size_t max_rows = 8;

  explicit QuasiMatrix(Eigen::MatrixXd lambda) : lambda_(std::move(lambda)) {
    detail::require(lambda_.rows() >= 1 && lambda_.cols() >= 1, "Lambda must be at least 1x1");
    detail::require(static_cast<std::size_t>(lambda_.rows()) <= max_rows,
                    "Lambda supports at most 8 rows");
    detail::require(lambda_.allFinite(), "Lambda entries must be finite");
    gram_ = lambda_ * lambda_.transpose();
    det_ = gram_.determinant();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram_, Eigen::EigenvaluesOnly);
    const double lo = std::max(0.0, es.eigenvalues().minCoeff());
    const double hi = std::max(0.0, es.eigenvalues().maxCoeff());
    norm_ = std::sqrt(hi);
    // det B > 1e-12 * |Lambda|^{2m}
    const double scale = std::pow(norm_, 2.0 * static_cast<double>(rows()));
    positive_ = norm_ > 0.0 && det_ > 1e-12 * scale && lo > 0.0;
    inv_gram_norm_ = positive_ ? 1.0 / lo : std::numeric_limits<double>::infinity();
  }

  std::size_t rows() const { return static_cast<std::size_t>(lambda_.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(lambda_.cols()); }
  const Eigen::MatrixXd& matrix() const { return lambda_; }
  const Eigen::MatrixXd& gram() const { return gram_; }
  double det_gram() const { return det_; }
  bool positive() const { return positive_; }
  double norm() const { return norm_; }
  double inverse_gram_norm() const { return inv_gram_norm_; }

  /// y(k) = Lambda^T k, the physical frequency of the character k.
  Eigen::VectorXd frequency(const FreqVector& k) const {
    detail::require(k.size() == rows(), "frequency dimension does not match Lambda rows");
    return lambda_.transpose() * k.as_real();
  }

  /// Bound C with |k| <= C |Lambda^T k|; infinite unless positive().
  double coordinate_factor() const { return inv_gram_norm_ * norm_; }

 private:
  Eigen::MatrixXd lambda_;
  Eigen::MatrixXd gram_;
  double det_ = 0.0;
  double norm_ = 0.0;
  double inv_gram_norm_ = 0.0;
  bool positive_ = false;
};

namespace weights {

struct PeriodicL1 {
  std::size_t m;
};
struct WeightedL1 {
  std::vector<double> alpha;
};
/// Weighted l1 metric on the finitely supported sequences Z^N_c (the dual of
/// the infinite torus), alpha_l = scale * l^exponent for l = 1, 2, ...
/// A window R truncates to the first R coordinates.
struct SequenceL1 {
  double scale;
  double exponent;
  double alpha(std::size_t l) const { return scale * std::pow(static_cast<double>(l), exponent); }
};
struct QuasiEuclidean {
  QuasiMatrix lambda;
};

}  // namespace weights

/// gamma: dual -> [0, inf), including the 2 pi prefactor.
class GammaWeight {
 public:
  using Scheme = std::variant<weights::PeriodicL1, weights::WeightedL1, weights::SequenceL1,
                              weights::QuasiEuclidean>;

  static GammaWeight periodic_l1(std::size_t m) {
    detail::require(m >= 1, "PeriodicL1 needs m >= 1");
    return GammaWeight(weights::PeriodicL1{m});
  }
  static GammaWeight weighted_l1(std::vector<double> alpha) {
    detail::require(!alpha.empty(), "WeightedL1 needs at least one weight");
    for (double a : alpha)
      detail::require(std::isfinite(a) && a >= 0.0, "WeightedL1 weights must be finite and >= 0");
    return GammaWeight(weights::WeightedL1{std::move(alpha)});
  }
  static GammaWeight sequence_l1(double scale, double exponent) {
    detail::require(std::isfinite(scale) && scale >= 0.0, "sequence weight scale must be >= 0");
    detail::require(std::isfinite(exponent) && exponent >= 0.0,
                    "sequence weight exponent must be >= 0");
    return GammaWeight(weights::SequenceL1{scale, exponent});
  }
  static GammaWeight quasi_euclidean(QuasiMatrix lambda) {
    return GammaWeight(weights::QuasiEuclidean{std::move(lambda)});
  }

  const Scheme& scheme() const { return scheme_; }

  /// Torus dimension m; empty for the infinite-torus sequence scheme.
  std::optional<std::size_t> dim() const {
    return std::visit(
        [](const auto& s) -> std::optional<std::size_t> {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, weights::PeriodicL1>) return s.m;
          else if constexpr (std::is_same_v<S, weights::WeightedL1>) return s.alpha.size();
          else if constexpr (std::is_same_v<S, weights::SequenceL1>) return std::nullopt;
          else return s.lambda.rows();
        },
        scheme_);
  }

  std::string name() const {
    return std::visit(
        [](const auto& s) -> std::string {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, weights::PeriodicL1>) return "periodic_l1";
          else if constexpr (std::is_same_v<S, weights::WeightedL1>) return "weighted_l1";
          else if constexpr (std::is_same_v<S, weights::SequenceL1>) return "sequence_l1";
          else return "quasi_euclidean";
        },
        scheme_);
  }

  /// Per-coordinate cost 2 pi alpha_l (1-based l) for the l1-type schemes.
  double axis_weight(std::size_t l) const {
    return std::visit(
        [l](const auto& s) -> double {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, weights::PeriodicL1>) return two_pi;
          else if constexpr (std::is_same_v<S, weights::WeightedL1>) return two_pi * s.alpha.at(l - 1);
          else if constexpr (std::is_same_v<S, weights::SequenceL1>) return two_pi * s.alpha(l);
          else return std::numeric_limits<double>::quiet_NaN();
        },
        scheme_);
  }

  double operator()(const FreqVector& k) const {
    if (auto m = dim()) {
      detail::require(k.size() == *m, "frequency dimension " + std::to_string(k.size()) +
                                          " does not match weight dimension " + std::to_string(*m));
    }
    if (const auto* q = std::get_if<weights::QuasiEuclidean>(&scheme_))
      return two_pi * q->lambda.frequency(k).norm();
    if (std::holds_alternative<weights::PeriodicL1>(scheme_))
      return two_pi * static_cast<double>(k.l1());
    double s = 0.0;
    for (std::size_t l = 0; l < k.size(); ++l) {
      if (k[l] != 0) s += axis_weight(l + 1) * static_cast<double>(k[l] < 0 ? -k[l] : k[l]);
    }
    return s;
  }

 private:
  explicit GammaWeight(Scheme s) : scheme_(std::move(s)) {}
  Scheme scheme_;
};

inline double gamma(const GammaWeight& w, const FreqVector& k) { return w(k); }

namespace detail {

inline double level_slack(double d) { return 1e-12 * std::max(1.0, d); }
inline bool within_level(double g, double d) { return g <= d + level_slack(d); }

inline std::int64_t floor_with_slack(double x) {
  if (!std::isfinite(x)) throw ContractError("coordinate bound is not finite");
  return static_cast<std::int64_t>(std::floor(x + 1e-12 * std::max(1.0, std::abs(x))));
}

inline constexpr double max_box_volume = 2e8;
inline constexpr std::size_t max_result = 20'000'000;

/// Depth-first scan of prod_j [-bounds_j, bounds_j] in lexicographic order.
/// axis_cost(j, v) is an additive nonnegative cost pruned against budget;
/// leaf(k) sees every surviving vector.
template <class AxisCost, class Leaf>
void scan_box(std::span<const std::int64_t> bounds, AxisCost&& axis_cost, double budget,
              Leaf&& leaf) {
  const std::size_t m = bounds.size();
  FreqVector k(m);
  std::function<void(std::size_t, double)> rec = [&](std::size_t j, double acc) {
    if (j == m) {
      leaf(k);
      return;
    }
    for (std::int64_t v = -bounds[j]; v <= bounds[j]; ++v) {
      const double c = acc + axis_cost(j, v);
      if (!within_level(c, budget)) continue;
      k[j] = v;
      rec(j + 1, c);
    }
    k[j] = 0;
  };
  rec(0, 0.0);
}

inline double box_volume(std::span<const std::int64_t> bounds) {
  double v = 1.0;
  for (auto b : bounds) v *= 2.0 * static_cast<double>(b) + 1.0;
  return v;
}

}  // namespace detail

struct SublevelSet {
  std::vector<FreqVector> freqs;  // lexicographic
  bool exact = false;             // true: the full sublevel set of the dual
  std::size_t dim = 0;
};

namespace detail {

/// Sublevel set clipped to the box [-R, R]^M; `bounds` already encodes both
/// the rigorous per-axis bounds and the window.
inline std::vector<FreqVector> collect(const GammaWeight& w, double d,
                                       std::span<const std::int64_t> bounds) {
  std::vector<FreqVector> out;
  if (std::holds_alternative<weights::QuasiEuclidean>(w.scheme())) {
    if (box_volume(bounds) > max_box_volume)
      throw ContractError("sublevel enumeration box is too large");
    scan_box(
        bounds, [](std::size_t, std::int64_t) { return 0.0; }, d,
        [&](const FreqVector& k) {
          if (within_level(w(k), d)) out.push_back(k);
        });
  } else {
    scan_box(
        bounds,
        [&](std::size_t j, std::int64_t v) {
          return v == 0 ? 0.0 : w.axis_weight(j + 1) * static_cast<double>(v < 0 ? -v : v);
        },
        d,
        [&](const FreqVector& k) {
          if (out.size() >= max_result) throw ContractError("sublevel set is too large");
          out.push_back(k);
        });
  }
  return out;
}

/// Rigorous per-axis bounds when they exist.
inline std::optional<std::vector<std::int64_t>> exact_bounds(const GammaWeight& w, double d) {
  return std::visit(
      [&](const auto& s) -> std::optional<std::vector<std::int64_t>> {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, weights::PeriodicL1>) {
          return std::vector<std::int64_t>(s.m, floor_with_slack(d / two_pi));
        } else if constexpr (std::is_same_v<S, weights::WeightedL1>) {
          std::vector<std::int64_t> b;
          for (double a : s.alpha) {
            if (a <= 0.0) return std::nullopt;
            b.push_back(floor_with_slack(d / (two_pi * a)));
          }
          return b;
        } else if constexpr (std::is_same_v<S, weights::SequenceL1>) {
          if (s.scale <= 0.0 || s.exponent <= 0.0) return std::nullopt;
          // alpha_l increases to infinity: coordinates l with 2 pi alpha_l > d are forced to 0.
          const std::int64_t support =
              floor_with_slack(std::pow(d / (two_pi * s.scale), 1.0 / s.exponent));
          std::vector<std::int64_t> b;
          for (std::int64_t l = 1; l <= std::max<std::int64_t>(support, 1); ++l)
            b.push_back(floor_with_slack(d / w.axis_weight(static_cast<std::size_t>(l))));
          return b;
        } else {
          if (!s.lambda.positive()) return std::nullopt;
          const auto r = floor_with_slack(s.lambda.coordinate_factor() * d / two_pi);
          return std::vector<std::int64_t>(s.lambda.rows(), r);
        }
      },
      w.scheme());
}

inline std::vector<std::int64_t> window_bounds(const GammaWeight& w, double d, std::int64_t r) {
  const std::size_t m = w.dim().value_or(static_cast<std::size_t>(r));
  std::vector<std::int64_t> b(m, r);
  if (!std::holds_alternative<weights::QuasiEuclidean>(w.scheme())) {
    for (std::size_t l = 0; l < m; ++l) {
      const double a = w.axis_weight(l + 1);
      if (a > 0.0) b[l] = std::min(r, floor_with_slack(d / a));
    }
  }
  return b;
}

}  // namespace detail

/// Frequencies with gamma(k) <= d, lexicographically ordered. When a rigorous
/// coordinate bound exists the full set is returned (window ignored, exact =
/// true); otherwise the set is clipped to [-R, R]^m (for the sequence scheme,
/// also to the first R coordinates) and exact = false.
inline SublevelSet enumerate_sublevel(const GammaWeight& w, double d,
                                      std::optional<std::int64_t> window = std::nullopt) {
  detail::require(std::isfinite(d) && d >= 0.0, "level d must be finite and >= 0");
  if (auto b = detail::exact_bounds(w, d)) {
    return SublevelSet{detail::collect(w, d, *b), true, b->size()};
  }
  if (!window)
    throw ContractError("weight " + w.name() +
                        " has no finite coordinate bound; a window radius (--windows) is required");
  detail::require(*window >= 1, "window radius must be >= 1");
  auto b = detail::window_bounds(w, d, *window);
  return SublevelSet{detail::collect(w, d, b), false, b.size()};
}

/// Sublevel set intersected with [-R, R]^m whether or not it is finite.
inline std::vector<FreqVector> enumerate_in_window(const GammaWeight& w, double d, std::int64_t r) {
  detail::require(std::isfinite(d) && d >= 0.0, "level d must be finite and >= 0");
  detail::require(r >= 1, "window radius must be >= 1");
  auto b = detail::window_bounds(w, d, r);
  if (auto e = detail::exact_bounds(w, d); e && e->size() <= b.size()) {
    for (std::size_t j = 0; j < e->size(); ++j) b[j] = std::min(b[j], (*e)[j]);
    for (std::size_t j = e->size(); j < b.size(); ++j) b[j] = 0;
  }
  return detail::collect(w, d, b);
}

enum class Verdict { CertifiedFinite, EvidenceInfinite, Inconclusive };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::CertifiedFinite: return "CERTIFIED_FINITE";
    case Verdict::EvidenceInfinite: return "EVIDENCE_INFINITE";
    case Verdict::Inconclusive: return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

struct LevelCounts {
  double d = 0.0;
  bool exact = false;
  std::size_t count = 0;                   // full count; meaningful when exact
  std::vector<std::size_t> window_counts;  // one per window, when not exact
  bool strictly_increasing = false;
};

struct ConditionCReport {
  std::string weight;
  Verdict verdict = Verdict::Inconclusive;
  std::vector<std::int64_t> windows;
  std::vector<LevelCounts> levels;
};

/// Certifies finiteness of every sublevel set (Condition C) when exact
/// enumeration succeeds at all levels. Strict growth of the windowed counts
/// over at least three radii is reported as evidence of an infinite sublevel
/// set, never as proof.
inline ConditionCReport condition_c_report(const GammaWeight& w, const std::vector<double>& d_levels,
                                           const std::vector<std::int64_t>& windows) {
  detail::require(!d_levels.empty(), "at least one level is required");
  detail::require(std::is_sorted(d_levels.begin(), d_levels.end()), "levels must be ascending");
  detail::require(std::is_sorted(windows.begin(), windows.end()), "windows must be ascending");
  for (auto r : windows) detail::require(r >= 1, "window radius must be >= 1");

  ConditionCReport rep{w.name(), Verdict::Inconclusive, windows, {}};
  bool all_exact = true;
  bool growth = false;
  for (double d : d_levels) {
    detail::require(std::isfinite(d) && d >= 0.0, "level d must be finite and >= 0");
    LevelCounts lc;
    lc.d = d;
    if (auto b = detail::exact_bounds(w, d)) {
      lc.exact = true;
      lc.count = detail::collect(w, d, *b).size();
    } else {
      all_exact = false;
      if (windows.empty())
        throw ContractError("weight " + w.name() + " needs windows for a non-certified level");
      for (auto r : windows) lc.window_counts.push_back(enumerate_in_window(w, d, r).size());
      lc.strictly_increasing =
          lc.window_counts.size() >= 3 &&
          std::adjacent_find(lc.window_counts.begin(), lc.window_counts.end(),
                             [](std::size_t a, std::size_t b) { return b <= a; }) ==
              lc.window_counts.end();
      growth = growth || lc.strictly_increasing;
    }
    rep.levels.push_back(std::move(lc));
  }
  rep.verdict = all_exact ? Verdict::CertifiedFinite
                          : (growth ? Verdict::EvidenceInfinite : Verdict::Inconclusive);
  return rep;
}

struct GeneratorReport {
  bool bounded = true;
  double sup = 0.0;
  bool uniform = false;  // every generator carries the same weight
};

/// Sup of gamma over a finite generator list. Always bounded; `uniform`
/// flags the equal-weight unit generators of a constant-alpha weight, which
/// together with a growing window count obstructs the compact embedding.
inline GeneratorReport generator_bounded_check(const GammaWeight& w,
                                               const std::vector<FreqVector>& generators) {
  detail::require(!generators.empty(), "generator list is empty");
  GeneratorReport r;
  double lo = std::numeric_limits<double>::infinity();
  for (const auto& g : generators) {
    const double v = w(g);
    r.sup = std::max(r.sup, v);
    lo = std::min(lo, v);
  }
  r.uniform = r.sup - lo <= 1e-12 * std::max(1.0, r.sup);
  return r;
}

}  // namespace qbloch
