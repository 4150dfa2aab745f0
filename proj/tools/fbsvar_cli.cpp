// Command-line front end: simulation, limit constants, variations,
// interpolation, the exact moment oracle, and Monte Carlo experiment runs.
// Exit codes: 0 ok/pass, 1 io, 2 usage, 3 numeric, 4 inconsistency,
// 5 failed experiment verdict.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fbsvar/config.hpp"
#include "fbsvar/diagrams.hpp"
#include "fbsvar/experiments.hpp"
#include "fbsvar/fgn.hpp"
#include "fbsvar/hermite.hpp"
#include "fbsvar/lattice.hpp"
#include "fbsvar/limits.hpp"
#include "fbsvar/variations.hpp"

namespace {

using fbsvar::json;

std::vector<double> parse_hurst(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  int axis = 0;
  while (std::getline(ss, item, ',')) {
    double h = 0.0;
    try {
      h = std::stod(item);
    } catch (...) {
      throw std::invalid_argument("hurst axis " + std::to_string(axis) +
                                  ": not a number: " + item);
    }
    if (!(h > 0.0 && h < 1.0))
      throw std::invalid_argument("hurst axis " + std::to_string(axis) +
                                  ": value " + item + " outside (0,1)");
    out.push_back(h);
    ++axis;
  }
  if (out.empty()) throw std::invalid_argument("hurst: empty list");
  return out;
}

std::vector<std::int64_t> parse_extents(const std::string& csv) {
  std::vector<std::int64_t> out;
  std::stringstream ss(csv);
  std::string item;
  int axis = 0;
  while (std::getline(ss, item, ',')) {
    std::int64_t v = 0;
    try {
      v = std::stoll(item);
    } catch (...) {
      throw std::invalid_argument("shape axis " + std::to_string(axis) +
                                  ": not an integer: " + item);
    }
    if (v < 1)
      throw std::invalid_argument("shape axis " + std::to_string(axis) +
                                  ": extent must be >= 1");
    out.push_back(v);
    ++axis;
  }
  if (out.empty()) throw std::invalid_argument("shape: empty list");
  return out;
}

fbsvar::FunctionalSpec parse_functional_arg(const std::string& s) {
  if (!s.empty() && s.front() == '{')
    return fbsvar::parse_functional(json::parse(s), "/functional");
  if (s.rfind("json:", 0) == 0) {
    std::ifstream is(s.substr(5));
    if (!is) throw fbsvar::io_error("cannot open " + s.substr(5));
    json j;
    is >> j;
    return fbsvar::parse_functional(j, "/functional");
  }
  return fbsvar::parse_functional(json(s), "/functional");
}

void write_field(const fbsvar::LatticeField& field, const std::string& path,
                 const std::string& format) {
  if (format == "bin")
    fbsvar::write_binary(field, path);
  else if (format == "csv")
    fbsvar::write_csv(field, path);
  else
    throw std::invalid_argument("format must be bin or csv");
}

int default_threads() {
  if (const char* env = std::getenv("FBSVAR_THREADS")) {
    const int t = std::atoi(env);
    if (t >= 1) return t;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

int cmd_simulate(const std::string& kind, const std::string& hurst_csv,
                 const std::string& shape_csv, std::uint64_t seed,
                 std::uint64_t stream, const std::string& out,
                 const std::string& format, const std::string& spectrum_out) {
  const auto H = parse_hurst(hurst_csv);
  const fbsvar::LatticeShape m{parse_extents(shape_csv)};
  if (static_cast<int>(H.size()) != m.dim())
    throw std::invalid_argument("hurst and shape dimensions differ");
  const fbsvar::IncrementFieldSampler sampler(H, m, fbsvar::FactorOptions{});
  if (!spectrum_out.empty()) {
    std::ofstream os(spectrum_out);
    if (!os) throw fbsvar::io_error("cannot open " + spectrum_out);
    os << "axis,index,eigenvalue\n";
    for (std::size_t nu = 0; nu < sampler.factors().size(); ++nu) {
      const auto spec = sampler.factors()[nu].spectrum();
      for (std::size_t i = 0; i < spec.size(); ++i)
        os << nu << "," << i << "," << fbsvar::format_full(spec[i]) << "\n";
    }
  }
  const fbsvar::SeedSpec s{seed, stream};
  fbsvar::LatticeField field =
      (kind == "fbs") ? sampler.sample_fbs(s) : sampler.sample(s);
  write_field(field, out, format);
  json summary = {{"kind", kind},
                  {"shape", m.extents()},
                  {"seed", seed},
                  {"stream", stream},
                  {"corner_value", field[field.shape().total() - 1]},
                  {"corner_variance_theoretical", 1.0},
                  {"out", out}};
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_constants(const std::string& hurst_csv, const std::string& functional,
                  const std::string& shape_csv, double tail_tol) {
  const auto H = parse_hurst(hurst_csv);
  const fbsvar::FunctionalSpec spec = parse_functional_arg(functional);
  const auto& e = spec.expansion;
  const auto regime = fbsvar::classify_regime(H, e.rank);
  const auto h_shift = fbsvar::hurst_shift(H, e.rank);

  json b_table = json::object();
  for (const auto& [k, ak] : e.coeffs) {
    if (k < std::max(e.rank, 2) &&
        !(regime.regime == fbsvar::Regime::NCLT && k == e.rank))
      continue;
    json row = json::array();
    for (double h : H)
      row.push_back(fbsvar::b_coefficient(h, k, e.rank, tail_tol).value);
    b_table[std::to_string(k)] = row;
  }
  json out = {
      {"regime", regime.regime == fbsvar::Regime::NCLT ? "NCLT" : "CLT"},
      {"rank", e.rank},
      {"H_tilde", h_shift},
      {"b_table", b_table},
      {"Lambda", fbsvar::lambda_constant(H, e, tail_tol)},
      {"assumption_value", e.summability_value},
      {"functional", spec.label}};
  if (!shape_csv.empty()) {
    const fbsvar::LatticeShape m{parse_extents(shape_csv)};
    if (static_cast<int>(H.size()) != m.dim())
      throw std::invalid_argument("hurst and shape dimensions differ");
    const auto c = fbsvar::scaling_factor(H, e.rank, m);
    out["c"] = c.per_axis;
    out["c_product"] = c.product;
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_variations(const std::string& hurst_csv, const std::string& shape_csv,
                   std::uint64_t seed, std::uint64_t stream,
                   const std::string& functional, int power,
                   const std::string& mode, const std::string& out,
                   const std::string& format) {
  const auto H = parse_hurst(hurst_csv);
  const fbsvar::LatticeShape m{parse_extents(shape_csv)};
  if (static_cast<int>(H.size()) != m.dim())
    throw std::invalid_argument("hurst and shape dimensions differ");
  const fbsvar::IncrementFieldSampler sampler(H, m, fbsvar::FactorOptions{});
  const fbsvar::LatticeField incr = sampler.sample({seed, stream});

  fbsvar::LatticeField result{m.grown(1), fbsvar::Anchor::LatticePoints};
  if (mode == "power" || mode == "fluctuation") {
    if (power < 1) throw std::invalid_argument("--power required for this mode");
    const auto fl = fbsvar::fluctuation(incr, H, power);
    result = (mode == "power") ? fl.power_v.values : fl.fluct.values;
  } else {
    const fbsvar::FunctionalSpec spec = parse_functional_arg(functional);
    auto u = fbsvar::generalized_variation(incr, spec.expansion);
    if (mode == "rescaled")
      u = fbsvar::rescaled_variation(u, H, spec.expansion.rank);
    else if (mode != "raw")
      throw std::invalid_argument("mode must be raw|rescaled|power|fluctuation");
    result = u.values;
  }
  write_field(result, out, format);
  json summary = {{"mode", mode}, {"shape", m.extents()}, {"out", out}};
  std::cout << summary.dump(2) << "\n";
  return 0;
}

int cmd_interpolate(const std::string& in, const std::string& points,
                    const std::string& out) {
  const fbsvar::LatticeField field = fbsvar::read_binary(in);
  std::vector<std::vector<double>> ts;
  for (std::stringstream ss(points); ss.good();) {
    std::string group;
    if (!std::getline(ss, group, ';')) break;
    if (group.empty()) continue;
    std::vector<double> t;
    std::stringstream gs(group);
    std::string item;
    while (std::getline(gs, item, ',')) t.push_back(std::stod(item));
    ts.push_back(std::move(t));
  }
  std::ofstream os(out);
  if (!os) throw fbsvar::io_error("cannot open " + out);
  for (int nu = 0; nu < field.dim(); ++nu) os << "t" << nu << ",";
  os << "value\n";
  for (const auto& t : ts) {
    const double v = fbsvar::multilinear_interpolate(field, t);
    for (double x : t) os << fbsvar::format_full(x) << ",";
    os << fbsvar::format_full(v) << "\n";
  }
  std::cout << json{{"points", ts.size()}, {"out", out}}.dump(2) << "\n";
  return 0;
}

int cmd_oracle(const std::string& hurst_csv, const std::string& shape_csv,
               const std::string& functional, int p, double cap) {
  const auto H = parse_hurst(hurst_csv);
  const fbsvar::LatticeShape l{parse_extents(shape_csv)};
  if (static_cast<int>(H.size()) != l.dim())
    throw std::invalid_argument("hurst and l dimensions differ");
  const fbsvar::FunctionalSpec spec = parse_functional_arg(functional);
  const double exact =
      fbsvar::exact_variation_moment(H, l, spec.expansion, p, cap);
  json out = {{"functional", spec.label},
              {"expansion", fbsvar::to_json(spec.expansion)},
              {"lattice", l.extents()},
              {"p", p},
              {"exact_moment", exact}};
  if (p >= 2) {
    const auto bound = fbsvar::moment_bound_rhs(H, spec.expansion, p, l);
    out["bound_rhs"] = bound.value;
    out["bound_constant"] = bound.c_constant;
    out["bound_partial"] = bound.partial;
  }
  // diagram census for the rank-homogeneous order tuple
  std::vector<int> orders(static_cast<std::size_t>(p), spec.expansion.rank);
  out["diagram_count"] = fbsvar::diagram_count(orders);
  out["diagram_count_bound"] = fbsvar::diagram_count_bound(orders);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_experiment(const std::string& config_path, int threads,
                   const std::string& out_dir, int verbosity) {
  std::ifstream is(config_path);
  if (!is) throw fbsvar::io_error("cannot open " + config_path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const std::exception& e) {
    throw fbsvar::config_error("", std::string("invalid JSON: ") + e.what());
  }
  const fbsvar::ExperimentConfig cfg = fbsvar::parse_config(doc);
  if (verbosity >= 1)
    std::cerr << "running " << cfg.name << " (" << fbsvar::kind_name(cfg.kind)
              << ") with " << threads << " thread(s)\n";
  const fbsvar::ExperimentReport report =
      fbsvar::run_experiment(cfg, threads);

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::string base = out_dir + "/" + cfg.name;
    {
      std::ofstream js(base + "_report.json");
      if (!js) throw fbsvar::io_error("cannot open " + base + "_report.json");
      js << report.to_json().dump(2) << "\n";
    }
    {
      std::ofstream cs(base + "_report.csv");
      if (!cs) throw fbsvar::io_error("cannot open " + base + "_report.csv");
      cs << report.to_csv();
    }
  }
  for (const auto& s : report.statistics)
    std::cout << (s.pass ? "[pass] " : "[FAIL] ") << s.name
              << "  empirical=" << fbsvar::format_full(s.empirical)
              << " target=" << fbsvar::format_full(s.target)
              << " se=" << fbsvar::format_full(s.se) << " mode=" << s.mode
              << "\n";
  std::cout << (report.all_pass ? "ALL PASS" : "VERDICT FAILED") << " ("
            << fbsvar::format_full(report.wall_seconds) << " s)\n";
  return report.all_pass ? 0 : 5;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fractional Brownian sheet variation laboratory"};
  app.require_subcommand(1);

  std::string hurst, shape, out, format = "bin", kind = "fbs";
  std::string functional = "Pk:2", mode = "raw", points, in_path;
  std::string config_path, out_dir, spectrum_out;
  std::uint64_t seed = 0, stream = 0;
  int p = 2, power = 0, verbosity = 1;
  int threads = default_threads();
  double cap = 1e7, tail_tol = 1e-10;

  auto* sim = app.add_subcommand("simulate", "sample a sheet or its increments");
  sim->add_option("--kind", kind, "fbs|increments");
  sim->add_option("--hurst", hurst)->required();
  sim->add_option("--shape", shape)->required();
  sim->add_option("--seed", seed)->required();
  sim->add_option("--stream", stream);
  sim->add_option("--out", out)->required();
  sim->add_option("--format", format, "bin|csv");
  sim->add_option("--dump-spectrum", spectrum_out);

  auto* con = app.add_subcommand("constants", "limit-theorem constants");
  con->add_option("--hurst", hurst)->required();
  con->add_option("--functional", functional)->required();
  con->add_option("--shape", shape);
  con->add_option("--tail-tol", tail_tol);

  auto* var = app.add_subcommand("variations", "variation processes");
  var->add_option("--hurst", hurst)->required();
  var->add_option("--shape", shape)->required();
  var->add_option("--seed", seed)->required();
  var->add_option("--stream", stream);
  var->add_option("--functional", functional);
  var->add_option("--power", power);
  var->add_option("--mode", mode, "raw|rescaled|power|fluctuation");
  var->add_option("--out", out)->required();
  var->add_option("--format", format);

  auto* itp = app.add_subcommand("interpolate", "multilinear trace export");
  itp->add_option("--in", in_path)->required();
  itp->add_option("--t", points, "t points \"0.5,0.5;0.7,0.2\"")->required();
  itp->add_option("--out", out)->required();

  auto* orc = app.add_subcommand("oracle", "exact moment oracle");
  orc->add_option("--hurst", hurst)->required();
  orc->add_option("--l", shape)->required();
  orc->add_option("--functional", functional)->required();
  orc->add_option("--p", p)->required();
  orc->add_option("--cap", cap);

  auto* exp = app.add_subcommand("experiment", "run a configured experiment");
  exp->add_option("--config", config_path)->required();
  exp->add_option("--threads", threads);
  exp->add_option("--out", out_dir);
  exp->add_option("--verbosity", verbosity);

  auto* sch = app.add_subcommand("schema", "print the experiment config schema");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (sim->parsed())
      return cmd_simulate(kind, hurst, shape, seed, stream, out, format,
                          spectrum_out);
    if (con->parsed()) return cmd_constants(hurst, functional, shape, tail_tol);
    if (var->parsed())
      return cmd_variations(hurst, shape, seed, stream, functional, power, mode,
                            out, format);
    if (itp->parsed()) return cmd_interpolate(in_path, points, out);
    if (orc->parsed()) return cmd_oracle(hurst, shape, functional, p, cap);
    if (exp->parsed())
      return cmd_experiment(config_path, threads, out_dir, verbosity);
    if (sch->parsed()) {
      std::cout << fbsvar::experiment_config_schema().dump(2) << "\n";
      return 0;
    }
  } catch (const fbsvar::config_error& e) {
    std::cerr << "config error at " << (e.pointer.empty() ? "/" : e.pointer)
              << ": " << e.what() << "\n";
    return 2;
  } catch (const fbsvar::io_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 1;
  } catch (const fbsvar::numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const fbsvar::inconsistency_error& e) {
    std::cerr << "inconsistency: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
