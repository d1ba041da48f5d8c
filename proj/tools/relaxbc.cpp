// relaxbc command line: validate | gkc | reduce | expand | simulate | converge.
// Exit codes: 0 pass, 2 configuration, 3 admissibility, 4 Kreiss/UKC,
// 5 numerical.  All file output is deterministic (ordered loops only).

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "relaxbc/config.hpp"
#include "relaxbc/convergence.hpp"
#include "relaxbc/error.hpp"
#include "relaxbc/expansion.hpp"
#include "relaxbc/kreiss.hpp"
#include "relaxbc/reduced_bc.hpp"
#include "relaxbc/relaxation.hpp"

namespace {

using json = nlohmann::json;
using namespace relaxbc;

struct Options {
  std::string config_path;
  std::vector<std::string> grid_overrides;
  std::vector<double> eps;
  bool json_out = false;
  std::string dump_csv;
  std::string dump_fields;
  std::string layer_source = "coupled";
  bool print_config_only = false;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void apply_grid_override(GridSpec& grid, const std::string& item) {
  const size_t eq = item.find('=');
  if (eq == std::string::npos || eq == 0)
    fail(Err::Schema, "--grid: expected key=value, got '" + item + "'");
  const std::string key = item.substr(0, eq);
  const std::string val = item.substr(eq + 1);
  char* end = nullptr;
  const double x = std::strtod(val.c_str(), &end);
  if (end == val.c_str() || *end != '\0')
    fail(Err::Schema, "--grid " + key + ": not a number: '" + val + "'");
  if (key == "x1_max") grid.x1_max = x;
  else if (key == "nx") grid.nx = static_cast<Index>(x);
  else if (key == "x2_max") grid.x2_max = x;
  else if (key == "nx2") grid.nx2 = static_cast<Index>(x);
  else if (key == "t_max") grid.t_max = x;
  else if (key == "cfl") grid.cfl = x;
  else if (key == "y_max") grid.y_max = x;
  else if (key == "z_max") grid.z_max = x;
  else if (key == "ny") grid.ny = static_cast<Index>(x);
  else if (key == "nz") grid.nz = static_cast<Index>(x);
  else if (key == "tol_layer") grid.tol_layer = x;
  else fail(Err::Schema, "--grid: unknown key '" + key + "'");
}

// Overridden configs are reserialized and reparsed so every schema check
// applies to the effective values, not just the ones from the file.
RunConfig load_effective(const Options& opt) {
  RunConfig cfg = load_config(opt.config_path);
  bool touched = false;
  for (const auto& item : opt.grid_overrides) {
    apply_grid_override(cfg.grid, item);
    touched = true;
  }
  if (!opt.eps.empty()) {
    cfg.eps = opt.eps;
    touched = true;
  }
  if (touched) cfg = parse_config(print_config(cfg));
  return cfg;
}

LayerSource source_of(const Options& opt) {
  return opt.layer_source == "zero" ? LayerSource::Zero : LayerSource::Coupled;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(Err::Schema, "cannot open output file '" + path + "'");
  return out;
}

json mat_json(const Mat& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

void print_mat(const std::string& name, const Mat& m) {
  std::printf("%s  (%ld x %ld)\n", name.c_str(), static_cast<long>(m.rows()),
              static_cast<long>(m.cols()));
  for (Index i = 0; i < m.rows(); ++i) {
    std::printf(" ");
    for (Index j = 0; j < m.cols(); ++j) std::printf(" % .17g", m(i, j));
    std::printf("\n");
  }
}

json point_json(const FrequencyPoint& pt) {
  json j;
  j["re_xi"] = pt.xi.real();
  j["im_xi"] = pt.xi.imag();
  j["eta"] = pt.eta;
  json om = json::array();
  for (Index k = 0; k < pt.omega.size(); ++k) om.push_back(pt.omega(k));
  j["omega"] = om;
  return j;
}

std::string point_str(const FrequencyPoint& pt) {
  std::string s = "xi=" + fmt(pt.xi.real()) + (pt.xi.imag() < 0 ? "-" : "+") +
                  fmt(std::abs(pt.xi.imag())) + "i eta=" + fmt(pt.eta);
  for (Index k = 0; k < pt.omega.size(); ++k) s += " omega" + std::to_string(k + 2) + "=" + fmt(pt.omega(k));
  return s;
}

// Trapezoid L2 norm over the physical grid, matching the solver accounting.
double state_l2(const Mat& state, Index nx1, Index nx2, double dx1, double dx2) {
  double acc = 0.0;
  for (Index i2 = 0; i2 < nx2; ++i2)
    for (Index i1 = 0; i1 <= nx1; ++i1) {
      const double w = (i1 == 0 || i1 == nx1) ? 0.5 : 1.0;
      acc += w * state.col(i2 * (nx1 + 1) + i1).squaredNorm();
    }
  return std::sqrt(acc * dx1 * dx2);
}

void dump_state_csv(std::ofstream& out, const RunConfig& cfg, double eps, const Vec& x1,
                    const Vec& x2, const Mat& state, bool header) {
  const Index n = cfg.sys.n, r = cfg.sys.r;
  if (header) {
    out << "eps,x1,x2";
    for (Index k = 0; k < n - r; ++k) out << ",u" << (k + 1);
    for (Index k = 0; k < r; ++k) out << ",v" << (k + 1);
    out << "\n";
  }
  for (Index i2 = 0; i2 < x2.size(); ++i2)
    for (Index i1 = 0; i1 < x1.size(); ++i1) {
      out << fmt(eps) << ',' << fmt(x1(i1)) << ',' << fmt(x2(i2));
      const Index c = i2 * x1.size() + i1;
      for (Index k = 0; k < n; ++k) out << ',' << fmt(state(k, c));
      out << "\n";
    }
}

int report_validation(const ValidationReport& rep, json& body) {
  json checks = json::array();
  for (const auto& c : rep.checks) {
    json jc;
    jc["name"] = c.name;
    jc["passed"] = c.passed;
    jc["residual"] = c.residual;
    jc["message"] = c.message;
    checks.push_back(jc);
  }
  body["checks"] = checks;
  return rep.all_passed() ? 0 : exit_code(Err::NotValidated);
}

int cmd_validate(const RunConfig& cfg, const Options& opt) {
  json body;
  ValidationReport rep = validate_structural_stability(cfg.sys);
  int rc = report_validation(rep, body);
  if (rc == 0) {
    const NormalizedSystem norm = normalize(cfg.sys);
    const CharacteristicSignature sig = classify(norm);
    const LayerAlgebra la = build_layer_algebra(norm, sig);
    bordered_inertia_check(la);

    const Index nx2 = cfg.sys.d == 2 ? cfg.grid.nx2 : 1;
    Mat u0(cfg.sys.n - cfg.sys.r, nx2), b0(cfg.sys.b.rows(), nx2);
    for (Index i2 = 0; i2 < nx2; ++i2) {
      u0.col(i2) = initial_state(cfg, 0.0, i2 * cfg.grid.x2_max / nx2);
      b0.col(i2) = boundary_data(cfg, 0.0);
    }
    const ValidationReport compat = check_compatibility(norm, u0, b0, 1e-8);
    for (const auto& c : compat.checks) rep.checks.push_back(c);
    rc = report_validation(rep, body);

    body["signature"] = {{"n_plus", sig.n_plus},
                         {"n1_plus", sig.n1_plus},
                         {"n1_zero", sig.n1_zero},
                         {"layer_dim", la.layer_dim()}};
  }
  body["passed"] = rc == 0;
  if (opt.json_out) {
    std::cout << body.dump(2) << "\n";
    return rc;
  }
  for (const auto& c : rep.checks)
    std::printf("%-28s %s  residual=%.3e  %s\n", c.name.c_str(),
                c.passed ? "ok    " : "FAILED", c.residual, c.message.c_str());
  if (body.contains("signature"))
    std::printf("signature: n_plus=%ld n1_plus=%ld n1_zero=%ld layer_dim=%ld\n",
                body["signature"]["n_plus"].get<long>(), body["signature"]["n1_plus"].get<long>(),
                body["signature"]["n1_zero"].get<long>(), body["signature"]["layer_dim"].get<long>());
  std::printf("validate: %s\n", rc == 0 ? "PASSED" : "FAILED");
  return rc;
}

int cmd_gkc(const RunConfig& cfg, const Options& opt) {
  const NormalizedSystem norm = normalize(cfg.sys);
  const CharacteristicSignature sig = classify(norm);
  const KreissReport rep = certify_kreiss(norm, sig, default_kreiss_grid());
  if (!opt.dump_csv.empty()) {
    std::ofstream out = open_out(opt.dump_csv);
    out << "min_ratio,re_xi,im_xi,eta,evaluated,skipped,threshold,passed\n"
        << fmt(rep.min_ratio) << ',' << fmt(rep.argmin.xi.real()) << ','
        << fmt(rep.argmin.xi.imag()) << ',' << fmt(rep.argmin.eta) << ',' << rep.evaluated
        << ',' << rep.skipped << ',' << fmt(rep.threshold) << ',' << (rep.passed ? 1 : 0)
        << "\n";
  }
  if (opt.json_out) {
    json body;
    body["min_ratio"] = rep.min_ratio;
    body["argmin"] = point_json(rep.argmin);
    body["evaluated"] = rep.evaluated;
    body["skipped"] = rep.skipped;
    body["threshold"] = rep.threshold;
    body["passed"] = rep.passed;
    std::cout << body.dump(2) << "\n";
  } else {
    std::printf("gkc: %s  min_ratio=%.17g at %s  (evaluated=%ld skipped=%ld threshold=%g)\n",
                rep.passed ? "PASSED" : "FAILED", rep.min_ratio, point_str(rep.argmin).c_str(),
                static_cast<long>(rep.evaluated), static_cast<long>(rep.skipped), rep.threshold);
  }
  return rep.passed ? 0 : exit_code(Err::GkcFailed);
}

int cmd_reduce(const RunConfig& cfg, const Options& opt) {
  const Pipeline pipe = build_pipeline(cfg.sys);
  const ReducedBoundary& red = pipe.red;
  const UkcSweep sweep = sweep_ukc(pipe.norm, pipe.sig, red, default_kreiss_grid());
  const bool ukc_ok = sweep.min_ratio > 1e-6;

  const std::vector<std::pair<std::string, const Mat*>> blocks = {
      {"y_outer", &red.y_outer},         {"y_zero", &red.y_zero},
      {"y_layer", &red.y_layer},         {"rows_outer", &red.rows_outer},
      {"rows_zero", &red.rows_zero},     {"rows_layer", &red.rows_layer},
      {"solve_zero", &red.solve_zero},   {"solve_layer", &red.solve_layer},
      {"coupling_matrix", &red.coupling_matrix}};

  if (!opt.dump_csv.empty()) {
    std::ofstream out = open_out(opt.dump_csv);
    out << "block,row,col,value\n";
    for (const auto& [name, m] : blocks)
      for (Index i = 0; i < m->rows(); ++i)
        for (Index j = 0; j < m->cols(); ++j)
          out << name << ',' << i << ',' << j << ',' << fmt((*m)(i, j)) << "\n";
  }
  if (opt.json_out) {
    json body;
    for (const auto& [name, m] : blocks) body[name] = mat_json(*m);
    body["coupling_sigma_min"] = red.coupling_sigma_min;
    body["ukc_ratio"] = red.ukc_ratio;
    body["ukc_sweep"] = {{"min_ratio", sweep.min_ratio},
                         {"argmin", point_json(sweep.argmin)},
                         {"evaluated", sweep.evaluated},
                         {"skipped", sweep.skipped}};
    body["passed"] = ukc_ok;
    std::cout << body.dump(2) << "\n";
  } else {
    for (const auto& [name, m] : blocks) print_mat(name, *m);
    std::printf("coupling_sigma_min = %.17g\n", red.coupling_sigma_min);
    std::printf("ukc_ratio          = %.17g\n", red.ukc_ratio);
    std::printf("ukc sweep: %s  min_ratio=%.17g at %s  (evaluated=%ld skipped=%ld)\n",
                ukc_ok ? "PASSED" : "FAILED", sweep.min_ratio, point_str(sweep.argmin).c_str(),
                static_cast<long>(sweep.evaluated), static_cast<long>(sweep.skipped));
  }
  return ukc_ok ? 0 : exit_code(Err::GkcFailed);
}

int cmd_expand(const RunConfig& cfg, const Options& opt) {
  const ExpansionBase base = build_expansion_base(cfg.sys, cfg);
  const Index nx1 = cfg.grid.nx, nx2 = base.ubar.x2.size();
  const double dx1 = cfg.grid.x1_max / nx1;
  const double dx2 = cfg.sys.d == 2 ? cfg.grid.x2_max / nx2 : 1.0;
  const Index last = static_cast<Index>(base.tg.slice_steps.size()) - 1;

  std::ofstream fields;
  if (!opt.dump_fields.empty()) fields = open_out(opt.dump_fields);

  json records = json::array();
  if (!opt.json_out)
    std::printf("expand: gamma=%.6g y_max=%.6g z_max=%.6g trace_defect=%.3e\n", base.gamma,
                base.cfg.grid.y_max, base.cfg.grid.z_max, base.traces.reconstruction_defect);
  bool first = true;
  for (double eps : cfg.eps) {
    const ExpansionComposite comp = build_composite(base, eps, source_of(opt));
    const double defect = boundary_identity_defect(comp);
    const Mat state = compose_state(comp, last);
    const double norm = state_l2(state, nx1, nx2, dx1, dx2);
    if (!opt.dump_fields.empty()) {
      dump_state_csv(fields, cfg, eps, base.ubar.x1, base.ubar.x2, state, first);
      first = false;
    }
    if (opt.json_out)
      records.push_back({{"eps", eps}, {"identity_defect", defect}, {"state_l2", norm}});
    else
      std::printf("eps=%-10.4g identity_defect=%.3e  state_l2=%.17g\n", eps, defect, norm);
  }
  if (opt.json_out) {
    json body;
    body["gamma"] = base.gamma;
    body["y_max"] = base.cfg.grid.y_max;
    body["z_max"] = base.cfg.grid.z_max;
    body["trace_defect"] = base.traces.reconstruction_defect;
    body["records"] = records;
    std::cout << body.dump(2) << "\n";
  }
  return 0;
}

int cmd_simulate(const RunConfig& cfg, const Options& opt) {
  const Pipeline pipe = build_pipeline(cfg.sys);
  const TimeGrid tg = make_time_grid(pipe.norm, cfg.grid);
  const Index nx1 = cfg.grid.nx;
  const double dx1 = cfg.grid.x1_max / nx1;

  std::ofstream fields, table;
  if (!opt.dump_fields.empty()) fields = open_out(opt.dump_fields);
  if (!opt.dump_csv.empty()) {
    table = open_out(opt.dump_csv);
    table << "eps,step,time,energy_sq\n";
  }

  json records = json::array();
  bool first = true;
  for (double eps : cfg.eps) {
    const RelaxationField field = solve_relaxation(pipe, cfg, tg, eps);
    const Index nx2 = field.x2.size();
    const double dx2 = cfg.sys.d == 2 ? cfg.grid.x2_max / nx2 : 1.0;
    const Mat& last = field.slices.back();
    const double norm = state_l2(last, nx1, nx2, dx1, dx2);
    if (!opt.dump_csv.empty())
      for (size_t s = 0; s < field.energy.size(); ++s)
        table << fmt(eps) << ',' << s << ',' << fmt(tg.time(static_cast<Index>(s))) << ','
              << fmt(field.energy[s]) << "\n";
    if (!opt.dump_fields.empty()) {
      dump_state_csv(fields, cfg, eps, field.x1, field.x2, last, first);
      first = false;
    }
    if (opt.json_out)
      records.push_back({{"eps", eps},
                         {"state_l2", norm},
                         {"bc_defect", field.bc_defect},
                         {"final_energy_sq", field.energy.back()}});
    else
      std::printf("eps=%-10.4g state_l2=%.17g  bc_defect=%.3e\n", eps, norm, field.bc_defect);
  }
  if (opt.json_out) {
    json body;
    body["dt"] = tg.dt;
    body["nt"] = tg.nt;
    body["records"] = records;
    std::cout << body.dump(2) << "\n";
  }
  return 0;
}

int cmd_converge(const RunConfig& cfg, const Options& opt) {
  const ConvergenceReport rep = run_convergence(cfg.sys, cfg, source_of(opt));
  if (!opt.dump_csv.empty()) {
    std::ofstream out = open_out(opt.dump_csv);
    out << "eps,final_error,sup_error,bc_defect,identity_defect,residual_first,residual_second\n";
    for (const auto& r : rep.records)
      out << fmt(r.eps) << ',' << fmt(r.final_error) << ',' << fmt(r.sup_error) << ','
          << fmt(r.bc_defect) << ',' << fmt(r.identity_defect) << ','
          << fmt(r.residual.first_block) << ',' << fmt(r.residual.second_block) << "\n";
  }
  if (opt.json_out) {
    json records = json::array();
    for (const auto& r : rep.records)
      records.push_back({{"eps", r.eps},
                         {"final_error", r.final_error},
                         {"sup_error", r.sup_error},
                         {"bc_defect", r.bc_defect},
                         {"identity_defect", r.identity_defect},
                         {"residual_first", r.residual.first_block},
                         {"residual_second", r.residual.second_block}});
    json body;
    body["records"] = records;
    body["slope"] = rep.slope;
    body["monotone"] = rep.monotone;
    body["scale"] = rep.scale;
    std::cout << body.dump(2) << "\n";
  } else {
    std::printf("%-12s %-14s %-14s %-12s %-12s %-12s %-12s\n", "eps", "final_error", "sup_error",
                "bc_defect", "ident_defect", "res_first", "res_second");
    for (const auto& r : rep.records)
      std::printf("%-12.4g %-14.6e %-14.6e %-12.3e %-12.3e %-12.3e %-12.3e\n", r.eps,
                  r.final_error, r.sup_error, r.bc_defect, r.identity_defect,
                  r.residual.first_block, r.residual.second_block);
    std::printf("slope=%.6g  monotone=%s  scale=%.6g\n", rep.slope,
                rep.monotone ? "yes" : "no", rep.scale);
  }
  return 0;
}

std::string flatten(const std::string& s) {
  std::string out;
  for (char c : s) out += (c == '\n') ? ';' : c;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"boundary-layer toolkit for stiff relaxation systems"};
  app.require_subcommand(1);
  Options opt;
  for (const char* name : {"validate", "gkc", "reduce", "expand", "simulate", "converge"}) {
    CLI::App* sub = app.add_subcommand(name, "");
    sub->add_option("config", opt.config_path, "configuration file")->required();
    sub->add_option("--grid", opt.grid_overrides, "grid overrides, key=value")->delimiter(',');
    sub->add_option("--eps", opt.eps, "override the epsilon sweep")->delimiter(',');
    sub->add_flag("--json", opt.json_out, "machine-readable report on stdout");
    sub->add_option("--dump-csv", opt.dump_csv, "write the report table as CSV");
    sub->add_option("--dump-fields", opt.dump_fields, "write solution fields as CSV");
    sub->add_option("--layer-source", opt.layer_source, "sqrt-scale source handling")
        ->check(CLI::IsMember({"coupled", "zero"}));
    sub->add_flag("--print-config", opt.print_config_only, "echo the effective config and exit");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    const RunConfig cfg = load_effective(opt);
    if (opt.print_config_only) {
      std::fputs(print_config(cfg).c_str(), stdout);
      return 0;
    }
    if (cmd == "validate") return cmd_validate(cfg, opt);
    if (cmd == "gkc") return cmd_gkc(cfg, opt);
    if (cmd == "reduce") return cmd_reduce(cfg, opt);
    if (cmd == "expand") return cmd_expand(cfg, opt);
    if (cmd == "simulate") return cmd_simulate(cfg, opt);
    return cmd_converge(cfg, opt);
  } catch (const relaxbc::Error& e) {
    std::fprintf(stderr, "relaxbc %s: %s\n", cmd.c_str(), flatten(e.what()).c_str());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "relaxbc %s: unexpected: %s\n", cmd.c_str(), flatten(e.what()).c_str());
    return exit_code(relaxbc::Err::NumericalFailure);
  }
}
