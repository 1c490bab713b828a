#pragma once

// JSON forms of weights, fields, deformations and Bloch problems.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qbloch/bloch.hpp"
#include "qbloch/dual_lattice.hpp"
#include "qbloch/errors.hpp"
#include "qbloch/harmonics.hpp"
#include "qbloch/quasi_dynamics.hpp"

namespace qbloch::io {

using json = nlohmann::json;

inline json parse(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
}

inline json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

namespace detail {

inline const json& at(const json& j, const char* key) {
  if (!j.is_object()) throw ParseError(std::string("expected an object holding \"") + key + "\"");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(std::string("missing key \"") + key + "\"");
  return *it;
}

inline double number(const json& j, const char* what) {
  if (!j.is_number()) throw ParseError(std::string(what) + " must be a number");
  return j.get<double>();
}

inline std::int64_t integer(const json& j, const char* what) {
  if (!j.is_number_integer()) throw ParseError(std::string(what) + " must be an integer");
  return j.get<std::int64_t>();
}

inline bool boolean(const json& j, const char* what) {
  if (!j.is_boolean()) throw ParseError(std::string(what) + " must be a boolean");
  return j.get<bool>();
}

inline std::vector<double> numbers(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + " must be an array");
  std::vector<double> v;
  for (const auto& x : j) v.push_back(number(x, what));
  return v;
}

inline Eigen::MatrixXd real_matrix(const json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ParseError(std::string(what) + " must be a nonempty 2-D array");
  const auto rows = j.size();
  std::size_t cols = 0;
  Eigen::MatrixXd m;
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = numbers(j[r], what);
    if (r == 0) {
      cols = row.size();
      if (cols == 0) throw ParseError(std::string(what) + " has an empty row");
      m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    }
    if (row.size() != cols) throw ParseError(std::string(what) + " rows differ in length");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return m;
}

inline json to_rows(const Eigen::MatrixXd& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    a.push_back(row);
  }
  return a;
}

}  // namespace detail

inline FreqVector freq_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw ParseError("frequency must be a nonempty integer array");
  std::vector<std::int64_t> k;
  for (const auto& x : j) k.push_back(detail::integer(x, "frequency entry"));
  return FreqVector(std::move(k));
}

inline json to_json(const FreqVector& k) { return json(k.values()); }

inline QuasiMatrix lambda_from_json(const json& j) {
  return QuasiMatrix(detail::real_matrix(j, "lambda"));
}

inline GammaWeight weight_from_json(const json& j) {
  const auto& scheme = detail::at(j, "scheme");
  if (!scheme.is_string()) throw ParseError("scheme must be a string");
  const auto s = scheme.get<std::string>();
  if (s == "periodic_l1") {
    const auto m = detail::integer(detail::at(j, "m"), "m");
    if (m < 1) throw ContractError("periodic_l1 needs m >= 1");
    return GammaWeight::periodic_l1(static_cast<std::size_t>(m));
  }
  if (s == "weighted_l1") return GammaWeight::weighted_l1(detail::numbers(detail::at(j, "alpha"), "alpha"));
  if (s == "sequence_l1")
    return GammaWeight::sequence_l1(detail::number(detail::at(j, "scale"), "scale"),
                                    detail::number(detail::at(j, "exponent"), "exponent"));
  if (s == "quasi_euclidean") return GammaWeight::quasi_euclidean(lambda_from_json(detail::at(j, "lambda")));
  throw ParseError("unknown weight scheme \"" + s + "\"");
}

inline json to_json(const GammaWeight& w) {
  return std::visit(
      [](const auto& s) -> json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, weights::PeriodicL1>)
          return {{"scheme", "periodic_l1"}, {"m", s.m}};
        else if constexpr (std::is_same_v<S, weights::WeightedL1>)
          return {{"scheme", "weighted_l1"}, {"alpha", s.alpha}};
        else if constexpr (std::is_same_v<S, weights::SequenceL1>)
          return {{"scheme", "sequence_l1"}, {"scale", s.scale}, {"exponent", s.exponent}};
        else
          return {{"scheme", "quasi_euclidean"}, {"lambda", detail::to_rows(s.lambda.matrix())}};
      },
      w.scheme());
}

// {"dim": m, "real": bool, "coeffs": [{"k": [...], "re": x, "im": y}]}
inline SpectralField field_from_json(const json& j) {
  const auto dim = detail::integer(detail::at(j, "dim"), "dim");
  if (dim < 1) throw ContractError("field dimension must be >= 1");
  const bool real = j.contains("real") ? detail::boolean(j["real"], "real") : false;
  const auto& cs = detail::at(j, "coeffs");
  if (!cs.is_array()) throw ParseError("coeffs must be an array");
  SpectralField::Coeffs coeffs;
  for (const auto& c : cs) {
    const FreqVector k = freq_from_json(detail::at(c, "k"));
    const double re = c.contains("re") ? detail::number(c["re"], "re") : 0.0;
    const double im = c.contains("im") ? detail::number(c["im"], "im") : 0.0;
    if (!coeffs.emplace(k, cplx(re, im)).second) throw ParseError("duplicate frequency in coeffs");
  }
  return SpectralField(static_cast<std::size_t>(dim), std::move(coeffs), real);
}

inline json to_json(const SpectralField& f) {
  json cs = json::array();
  for (const auto& [k, c] : f.coeffs())
    cs.push_back({{"k", k.values()}, {"re", c.real()}, {"im", c.imag()}});
  return {{"dim", f.dim()}, {"real", f.real_valued()}, {"coeffs", cs}};
}

// matrix form adds "n" and n x n "re"/"im" per entry
inline MatrixSpectralField matrix_field_from_json(const json& j, bool symmetric = true) {
  const auto dim = detail::integer(detail::at(j, "dim"), "dim");
  const auto n = detail::integer(detail::at(j, "n"), "n");
  if (dim < 1 || n < 1) throw ContractError("matrix field dimensions must be >= 1");
  const auto& cs = detail::at(j, "coeffs");
  if (!cs.is_array()) throw ParseError("coeffs must be an array");
  MatrixSpectralField::Coeffs coeffs;
  const auto nn = static_cast<Eigen::Index>(n);
  for (const auto& c : cs) {
    const FreqVector k = freq_from_json(detail::at(c, "k"));
    Eigen::MatrixXd re = c.contains("re") ? detail::real_matrix(c["re"], "re") : Eigen::MatrixXd::Zero(nn, nn);
    Eigen::MatrixXd im = c.contains("im") ? detail::real_matrix(c["im"], "im") : Eigen::MatrixXd::Zero(nn, nn);
    if (re.rows() != nn || re.cols() != nn || im.rows() != nn || im.cols() != nn)
      throw ContractError("matrix coefficient must be n x n");
    Eigen::MatrixXcd a(nn, nn);
    a.real() = re;
    a.imag() = im;
    if (!coeffs.emplace(k, std::move(a)).second) throw ParseError("duplicate frequency in coeffs");
  }
  return MatrixSpectralField(static_cast<std::size_t>(dim), static_cast<std::size_t>(n),
                             std::move(coeffs), symmetric);
}

inline json to_json(const MatrixSpectralField& a) {
  json cs = json::array();
  for (const auto& [q, m] : a.coeffs())
    cs.push_back({{"k", q.values()}, {"re", detail::to_rows(m.real())}, {"im", detail::to_rows(m.imag())}});
  return {{"dim", a.dim()}, {"n", a.n()}, {"real", true}, {"coeffs", cs}};
}

inline Eigen::VectorXd vector_from_json(const json& j, const char* what) {
  auto v = detail::numbers(j, what);
  return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// {"n", "m", "lambda", "omega0", "G", "nu_lower", "M"}
inline Deformation deformation_from_json(const json& j) {
  QuasiMatrix lambda = lambda_from_json(detail::at(j, "lambda"));
  const auto n = detail::integer(detail::at(j, "n"), "n");
  const auto m = detail::integer(detail::at(j, "m"), "m");
  if (static_cast<std::size_t>(n) != lambda.cols() || static_cast<std::size_t>(m) != lambda.rows())
    throw ContractError("deformation n, m disagree with lambda's shape");
  return Deformation(std::move(lambda), vector_from_json(detail::at(j, "omega0"), "omega0"),
                     matrix_field_from_json(detail::at(j, "G"), false),
                     detail::number(detail::at(j, "nu_lower"), "nu_lower"),
                     detail::number(detail::at(j, "M"), "M"));
}

inline json to_json(const Deformation& d) {
  json w = json::array();
  for (Eigen::Index i = 0; i < d.omega0().size(); ++i) w.push_back(d.omega0()[i]);
  return {{"n", d.n()},          {"m", d.m()},
          {"lambda", detail::to_rows(d.lambda().matrix())},
          {"omega0", w},         {"G", to_json(d.perturbation())},
          {"nu_lower", d.nu_lower()}, {"M", d.sup_bound()}};
}

/// The parsed problem plus how K was chosen.
struct ProblemSpec {
  BlochProblem problem;
  std::optional<GammaWeight> truncation_weight;  // set when K came from a weight
  bool explicit_basis = false;
};

// {"lambda", "theta", "A", "V", "truncation": {"weight", "d"} | {"K": [[...], ...]}}
// A defaults to the identity, V to zero, the truncation weight to
// quasi_euclidean on the problem's lambda.
inline ProblemSpec problem_from_json(const json& j) {
  QuasiMatrix lambda = lambda_from_json(detail::at(j, "lambda"));
  const std::size_t m = lambda.rows(), n = lambda.cols();
  Eigen::VectorXd theta = j.contains("theta") ? vector_from_json(j["theta"], "theta")
                                              : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  MatrixSpectralField a = j.contains("A") ? matrix_field_from_json(j["A"]) : MatrixSpectralField::identity(m, n);
  SpectralField v = j.contains("V") ? field_from_json(j["V"]) : SpectralField::zero(m);
  if (j.contains("V") && !v.real_valued()) {
    // a potential given without the flag is accepted when it is real
    v = SpectralField(v.dim(), v.coeffs(), true);
  }
  const auto& tr = detail::at(j, "truncation");
  std::vector<FreqVector> basis;
  std::optional<GammaWeight> w;
  bool explicit_k = false;
  if (tr.contains("K")) {
    const auto& ks = tr["K"];
    if (!ks.is_array()) throw ParseError("truncation K must be an array of frequencies");
    for (const auto& k : ks) basis.push_back(freq_from_json(k));
    explicit_k = true;
  } else {
    w = tr.contains("weight") ? weight_from_json(tr["weight"]) : GammaWeight::quasi_euclidean(lambda);
    if (w->dim() && *w->dim() != m) throw ContractError("truncation weight dimension must equal m");
    basis = truncation_from_weight(*w, detail::number(detail::at(tr, "d"), "d"));
  }
  return ProblemSpec{BlochProblem(std::move(lambda), std::move(a), std::move(v), std::move(theta),
                                  std::move(basis)),
                     std::move(w), explicit_k};
}

}  // namespace qbloch::io
