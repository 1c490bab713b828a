// qbloch: batch front end for the lattice, mean-value and Bloch-band pipelines.
//
// Exit codes: 0 success, 2 parse error, 3 operand/contract error,
// 4 mathematical-validity error.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qbloch/bloch.hpp"
#include "qbloch/dual_lattice.hpp"
#include "qbloch/harmonics.hpp"
#include "qbloch/io.hpp"
#include "qbloch/quasi_dynamics.hpp"
#include "qbloch/report.hpp"

namespace {

using namespace qbloch;

struct RunConfig {
  std::string input;
  std::string output;
  std::string deformation;
  std::string d;
  std::vector<std::string> levels;
  std::vector<std::int64_t> windows;
  std::vector<std::string> theta_grid;
  std::vector<std::string> t_list;
  std::size_t eigs = 1;
  std::size_t top = 10;
  std::size_t workers = 1;
  double tol = 1e-9;
};

// "12.5", "6pi", "0.5pi" or "pi"
double parse_real(const std::string& s) {
  std::string body = s;
  double scale = 1.0;
  if (body.size() >= 2 && body.compare(body.size() - 2, 2, "pi") == 0) {
    body.resize(body.size() - 2);
    if (!body.empty() && body.back() == '*') body.pop_back();
    scale = std::numbers::pi;
    if (body.empty()) return scale;
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(body, &used);
    if (used != body.size()) throw std::invalid_argument(s);
    return v * scale;
  } catch (const std::exception&) {
    throw ParseError("cannot parse number \"" + s + "\"");
  }
}

std::vector<double> parse_reals(const std::vector<std::string>& v) {
  std::vector<double> out;
  for (const auto& s : v) out.push_back(parse_real(s));
  return out;
}

// start:stop:count
std::vector<double> parse_axis(const std::string& spec) {
  const auto a = spec.find(':');
  const auto b = a == std::string::npos ? a : spec.find(':', a + 1);
  if (b == std::string::npos) throw ParseError("--theta-grid expects start:stop:count, got \"" + spec + "\"");
  const double lo = parse_real(spec.substr(0, a));
  const double hi = parse_real(spec.substr(a + 1, b - a - 1));
  long count = 0;
  const auto tail = spec.substr(b + 1);
  auto [p, ec] = std::from_chars(tail.data(), tail.data() + tail.size(), count);
  if (ec != std::errc{} || p != tail.data() + tail.size())
    throw ParseError("--theta-grid count must be an integer in \"" + spec + "\"");
  if (count < 1) throw ContractError("--theta-grid count must be >= 1");
  std::vector<double> xs;
  for (long i = 0; i < count; ++i)
    xs.push_back(count == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1));
  return xs;
}

std::vector<Eigen::VectorXd> theta_points(const std::vector<std::string>& axes) {
  std::vector<std::vector<double>> grids;
  for (const auto& a : axes) grids.push_back(parse_axis(a));
  std::vector<Eigen::VectorXd> pts;
  std::vector<std::size_t> idx(grids.size(), 0);
  while (true) {
    Eigen::VectorXd p(static_cast<Eigen::Index>(grids.size()));
    for (std::size_t j = 0; j < grids.size(); ++j) p[static_cast<Eigen::Index>(j)] = grids[j][idx[j]];
    pts.push_back(p);
    // last axis fastest
    std::size_t j = grids.size();
    while (j > 0 && ++idx[j - 1] == grids[j - 1].size()) idx[--j] = 0;
    if (j == 0) break;
  }
  return pts;
}

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.output.empty() || cfg.output == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.output, std::ios::binary);
  if (!out) throw ContractError("cannot write " + cfg.output);
  out << text;
}

int cmd_enumerate(const RunConfig& cfg) {
  const GammaWeight w = io::weight_from_json(io::read_file(cfg.input));
  if (cfg.d.empty()) throw ContractError("enumerate needs --d");
  std::optional<std::int64_t> window;
  if (!cfg.windows.empty()) window = cfg.windows.front();
  const auto s = enumerate_sublevel(w, parse_real(cfg.d), window);
  if (!s.exact) std::cerr << "warning: set is clipped to the window, not the full sublevel set\n";
  emit(cfg, report::sublevel_csv(s, w));
  return 0;
}

int cmd_compactness(const RunConfig& cfg) {
  const GammaWeight w = io::weight_from_json(io::read_file(cfg.input));
  if (cfg.levels.empty()) throw ContractError("compactness needs --levels");
  auto windows = cfg.windows;
  const auto rep = condition_c_report(w, parse_reals(cfg.levels), windows);
  const std::int64_t spec_window = windows.empty() ? 10 : windows.back();
  const auto spectrum = t_spectrum(w, spec_window, cfg.top);
  if (rep.verdict == Verdict::EvidenceInfinite)
    std::cerr << "warning: sublevel counts grow with the window; T appears non-compact\n";
  emit(cfg, report::condition_c_json(rep, w, spec_window, spectrum).dump(2) + "\n");
  return 0;
}

int cmd_bands(const RunConfig& cfg) {
  auto spec = io::problem_from_json(io::read_file(cfg.input));
  const auto& p = spec.problem;
  if (spec.explicit_basis && !p.lambda().positive()) {
    std::cerr << "warning: gamma(k) = 2 pi |Lambda^T k| is not certified to have finite sublevel "
                 "sets (det Lambda Lambda^T = "
              << report::num(p.lambda().det_gram())
              << "); H^1 is not known to embed compactly in L^2 and the hand-picked K may not "
                 "converge\n";
  }
  std::vector<Eigen::VectorXd> thetas;
  if (cfg.theta_grid.empty()) thetas.push_back(p.theta());
  else {
    if (cfg.theta_grid.size() != p.lambda().cols())
      throw ContractError("--theta-grid must be given once per axis (n = " +
                          std::to_string(p.lambda().cols()) + ")");
    thetas = theta_points(cfg.theta_grid);
  }
  const auto rows = band_structure(p, thetas, cfg.eigs, cfg.workers);
  emit(cfg, report::bands_csv(rows, p.lambda().cols(), cfg.eigs));
  return 0;
}

int cmd_mean_value(const RunConfig& cfg) {
  const auto j = io::read_file(cfg.input);
  const SpectralField f = io::field_from_json(io::detail::at(j, "field"));
  if (cfg.t_list.empty()) throw ContractError("mean-value needs --t-list");
  const auto ts = parse_reals(cfg.t_list);
  if (!cfg.deformation.empty()) {
    const Deformation d = io::deformation_from_json(io::read_file(cfg.deformation));
    emit(cfg, report::mean_value_csv(report::deformed_mean_table(f, d, ts)));
    return 0;
  }
  const QuasiMatrix lambda = io::lambda_from_json(io::detail::at(j, "lambda"));
  const Eigen::VectorXd w0 = j.contains("omega0")
                                 ? io::vector_from_json(j["omega0"], "omega0")
                                 : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(f.dim()));
  emit(cfg, report::mean_value_csv(report::mean_value_table(f, lambda, w0, ts)));
  return 0;
}

int cmd_ergodic(const RunConfig& cfg) {
  const auto j = io::read_file(cfg.input);
  const QuasiMatrix lambda = io::lambda_from_json(io::detail::at(j, "lambda"));
  const std::int64_t r = cfg.windows.empty() ? 20 : cfg.windows.front();
  const auto v = density_kernel_test(lambda, r, cfg.tol);
  emit(cfg, report::density_json(v, r, cfg.tol).dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qbloch: dual-lattice compactness, torus mean values and Bloch bands"};
  app.require_subcommand(1);
  RunConfig cfg;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--input", cfg.input, "input JSON file")->required();
    sub->add_option("--output", cfg.output, "output file (default stdout)");
    sub->add_option("--workers", cfg.workers, "worker threads")->check(CLI::PositiveNumber);
  };

  auto* en = app.add_subcommand("enumerate", "list frequencies with gamma(k) <= d");
  common(en);
  en->add_option("--d", cfg.d, "level d (accepts a 'pi' suffix, e.g. 6pi)")->required();
  en->add_option("--windows", cfg.windows, "box radius R for uncertified weights")->delimiter(',');

  auto* cc = app.add_subcommand("compactness", "Condition C report and T-spectrum head");
  common(cc);
  cc->add_option("--levels", cfg.levels, "ascending levels d")->delimiter(',')->required();
  cc->add_option("--windows", cfg.windows, "ascending window radii")->delimiter(',');
  cc->add_option("--top", cfg.top, "length of the T-spectrum head")->check(CLI::PositiveNumber);

  auto* bd = app.add_subcommand("bands", "Bloch band sweep to CSV");
  common(bd);
  bd->add_option("--theta-grid", cfg.theta_grid, "start:stop:count, once per axis");
  bd->add_option("--eigs", cfg.eigs, "bands per theta")->check(CLI::PositiveNumber);

  auto* mv = app.add_subcommand("mean-value", "box averages against the exact mean");
  common(mv);
  mv->add_option("--t-list", cfg.t_list, "box sizes t")->delimiter(',')->required();
  mv->add_option("--deformation", cfg.deformation, "deformation JSON file");

  auto* eg = app.add_subcommand("ergodic", "search for characters annihilated by Lambda^T");
  common(eg);
  eg->add_option("--windows", cfg.windows, "search radius R")->delimiter(',');
  eg->add_option("--tol", cfg.tol, "|Lambda^T k| threshold")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (en->parsed()) return cmd_enumerate(cfg);
    if (cc->parsed()) return cmd_compactness(cfg);
    if (bd->parsed()) return cmd_bands(cfg);
    if (mv->parsed()) return cmd_mean_value(cfg);
    if (eg->parsed()) return cmd_ergodic(cfg);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const ContractError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const ValidityError& e) {
    std::cerr << "invalid: " << e.what() << '\n';
    return 4;
  } catch (const io::json::exception& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 3;
}
