#include "lphom/cli.hpp"

#include "lphom/config.hpp"
#include "lphom/scenario.hpp"
#include "lphom/study.hpp"
#include "lphom/unfolding.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace lphom {

namespace {

namespace fs = std::filesystem;

struct Context {
  Settings settings;
  std::ostream& out;
  std::ostream& err;
};

std::string require_text(const Settings& s, const std::string& key) {
  auto v = s.text(key);
  if (!v) throw UsageError("missing required setting '" + key + "'");
  return *v;
}

Coefficients coefficients(const Settings& s) {
  Coefficients c;
  const std::pair<const char*, double*> fields[] = {{"mu1", &c.mu1},       {"mu2", &c.mu2},       {"mu3", &c.mu3},
                                                    {"kappa1", &c.kappa1}, {"kappa2", &c.kappa2}, {"kappa3", &c.kappa3},
                                                    {"alpha", &c.alpha},   {"beta", &c.beta},     {"dl", &c.dl},
                                                    {"df", &c.df},         {"db", &c.db}};
  for (const auto& [key, field] : fields)
    if (auto v = s.number(key)) *field = *v;
  return c;
}

Scenario scenario(const Settings& s) {
  const std::string name = require_text(s, "scenario");
  try {
    return make_scenario(name, s.number("radius").value_or(0.25));
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

double single_eps(const Settings& s, double fallback) {
  if (auto e = s.number("eps")) return *e;
  if (auto l = s.numbers("epsilon_list")) return l->front();
  return fallback;
}

GeometryMode geometry(const std::string& v) {
  if (v == "exact") return GeometryMode::kExact;
  if (v == "discrete") return GeometryMode::kDiscrete;
  throw UsageError("geometry must be 'exact' or 'discrete'");
}

InitialData initial_data(const Settings& s) {
  InitialData d;
  const double a = s.number("l0_amp").value_or(0.0);
  d.l0 = [a](const VecN& x) { return 1.0 + a * std::cos(std::numbers::pi * x(0)) * std::cos(std::numbers::pi * x(1)); };
  return d;
}

/// Writes to outdir/name when outdir is set, else to the fallback stream
/// (nullptr: skip).
template <class Fn>
void emit(const Settings& s, const std::string& name, std::ostream* fallback, Fn&& write) {
  if (auto dir = s.text("outdir")) {
    fs::create_directories(*dir);
    std::ofstream os(fs::path(*dir) / name);
    if (!os) throw Error("cannot write " + (fs::path(*dir) / name).string());
    write(os);
  } else if (fallback) {
    write(*fallback);
  }
}

std::string fmt_g(double v) { return fmt::format("{:.17g}", v); }

int cmd_geom(Context& ctx) {
  const Scenario sc = scenario(ctx.settings);
  const double eps = single_eps(ctx.settings, 1.0 / 16);
  const double r = ctx.settings.number("r").value_or(0.5);
  const Box domain = Box::unit(2);
  const TransformCheck chk = check_transform(sc.tf, domain, sc.cell, 17);
  const Partition p = build_partition(domain, eps, r, sc.tf);
  emit(ctx.settings, "partition.csv", &ctx.out, [&](std::ostream& os) {
    fmt::print(os, "subdomain,lo_x,lo_y,hi_x,hi_y,anchor_x,anchor_y,detD,hat_cells,xi_cells\n");
    for (int n = 0; n < p.size(); ++n) {
      const Subdomain& s = p.subdomains[n];
      fmt::print(os, "{},{},{},{},{},{},{},{},{},{}\n", n, fmt_g(s.lo(0)), fmt_g(s.lo(1)), fmt_g(s.hi(0)), fmt_g(s.hi(1)),
                 fmt_g(s.anchor(0)), fmt_g(s.anchor(1)), fmt_g(s.detD), s.hat_count, s.xi_count);
    }
  });
  const double lambda = lambda_measure_sampled(p, 256);
  fmt::print(ctx.err, "scenario={} eps={} side={} subdomains={} hat_volume={} lambda_measure={} transform_ok={}\n", sc.name,
             fmt_g(eps), fmt_g(p.side), p.size(), fmt_g(p.hat_volume()), fmt_g(lambda), chk.ok ? 1 : 0);
  return chk.ok ? 0 : 1;
}

int cmd_check_unfold(Context& ctx) {
  const Scenario sc = scenario(ctx.settings);
  const double eps = single_eps(ctx.settings, 1.0 / 16);
  const double r = ctx.settings.number("r").value_or(0.5);
  const int m = ctx.settings.integer("m_y").value_or(8);
  const int ng = ctx.settings.integer("nGamma").value_or(32);
  if (m < 1 || ng < 1) throw UsageError("m_y and nGamma must be positive");
  const Partition p = build_partition(Box::unit(2), eps, r, sc.tf);
  const PointFn one = [](const VecN&) { return 1.0; };
  const PointFn smooth = [](const VecN& x) { return std::sin(std::numbers::pi * x(0)) * std::exp(x(1)); };
  const PointFn trace = [](const VecN& x) { return 1.0 + x(0) * x(1); };

  struct Row {
    std::string name;
    IdentityCheck c;
    double tol;
  };
  std::vector<Row> rows;
  rows.push_back({"integration_constant", check_integration_identity(one, p, m), 1e-12});
  const IdentityCheck s1 = check_integration_identity(smooth, p, m);
  const IdentityCheck s2 = check_integration_identity(smooth, p, 2 * m);
  rows.push_back({fmt::format("integration_smooth_m{}", m), s1, std::numeric_limits<double>::infinity()});
  rows.push_back({fmt::format("integration_smooth_m{}", 2 * m), s2, s1.gap / 4});
  if (sc.cell.has_inclusion())
    rows.push_back({"boundary_identity", check_boundary_identity(trace, p, sc.cell, circle_quadrature(sc.cell, ng)), 1e-10});
  bool ok = true;
  emit(ctx.settings, "check_unfold.csv", &ctx.out, [&](std::ostream& os) {
    fmt::print(os, "check,lhs,rhs,gap,tolerance,pass,scenario,eps,r,m_y,nGamma\n");
    for (const Row& row : rows) {
      const bool pass = row.c.gap <= row.tol;
      ok = ok && pass;
      fmt::print(os, "{},{},{},{},{},{},{},{},{},{},{}\n", row.name, fmt_g(row.c.lhs), fmt_g(row.c.rhs), fmt_g(row.c.gap),
                 std::isfinite(row.tol) ? fmt_g(row.tol) : "inf", pass ? 1 : 0, sc.name, fmt_g(eps), fmt_g(r), m, ng);
    }
  });
  return ok ? 0 : 1;
}

std::vector<VecN> parse_points(const std::string& text) {
  std::vector<VecN> pts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const std::vector<double> v = parse_number_list(item);
    if (v.size() != 2) throw UsageError("points are 'x1,x2' pairs separated by ';'");
    pts.push_back(make_vec(v[0], v[1]));
  }
  if (pts.empty()) throw UsageError("no points given");
  return pts;
}

void write_tensor_csv(std::ostream& os, const EffectiveTensorField& f, const std::string& scenario) {
  fmt::print(os, "x1,x2,A11,A12,A21,A22,theta,theta_discrete,gamma,gamma_discrete,detD,residual,Nc,scenario,error\n");
  for (std::size_t k = 0; k < f.points.size(); ++k) {
    const VecN& x = f.points[k];
    if (const auto& t = f.tensors[k]) {
      fmt::print(os, "{},{},{},{},{},{},{},{},{},{},{},{},{},{},\n", fmt_g(x(0)), fmt_g(x(1)), fmt_g(t->A(0, 0)), fmt_g(t->A(0, 1)),
                 fmt_g(t->A(1, 0)), fmt_g(t->A(1, 1)), fmt_g(t->theta), fmt_g(t->theta_discrete), fmt_g(t->gamma_measure),
                 fmt_g(t->gamma_discrete), fmt_g(t->detD), fmt_g(t->residual), t->Nc, scenario);
    } else {
      std::string e = f.errors[k];
      for (char& ch : e)
        if (ch == ',' || ch == '\n') ch = ';';
      fmt::print(os, "{},{},,,,,,,,,,,,{},{}\n", fmt_g(x(0)), fmt_g(x(1)), scenario, e);
    }
  }
}

EffectiveTensorField read_tensor_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read tensor file '" + path + "'");
  EffectiveTensorField f;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    if (cols.size() < 13) throw UsageError("malformed tensor row: " + line);
    f.points.push_back(make_vec(parse_number(cols[0]), parse_number(cols[1])));
    if (cols[2].empty()) {
      f.tensors.emplace_back();
      f.errors.push_back(cols.size() > 14 ? cols[14] : "missing tensor");
      continue;
    }
    EffectiveTensor t;
    t.A << parse_number(cols[2]), parse_number(cols[3]), parse_number(cols[4]), parse_number(cols[5]);
    t.theta = parse_number(cols[6]);
    t.theta_discrete = parse_number(cols[7]);
    t.gamma_measure = parse_number(cols[8]);
    t.gamma_discrete = parse_number(cols[9]);
    t.detD = parse_number(cols[10]);
    t.residual = parse_number(cols[11]);
    t.Nc = static_cast<int>(parse_number(cols[12]));
    f.tensors.push_back(t);
    f.errors.emplace_back();
  }
  return f;
}

int cmd_cell(Context& ctx) {
  const Scenario sc = scenario(ctx.settings);
  CellOptions opt;
  opt.Nc = ctx.settings.integer("Nc").value_or(64);
  const std::vector<VecN> pts = parse_points(require_text(ctx.settings, "points"));
  const EffectiveTensorField f = tensor_field(pts, sc.A, sc.tf, sc.cell, opt);
  emit(ctx.settings, "tensors.csv", &ctx.out, [&](std::ostream& os) { write_tensor_csv(os, f, sc.name); });
  return f.all_ok() ? 0 : 1;
}

void write_field(std::ostream& os, const Grid2& g, const std::vector<double>& values) {
  fmt::print(os, "x,y,l\n");
  for (int c = 0; c < g.size(); ++c) {
    if (std::isnan(values[c])) continue;
    const Vec2 x = g.center(c);
    fmt::print(os, "{},{},{}\n", fmt_g(x.x()), fmt_g(x.y()), fmt_g(values[c]));
  }
}

int report_run(Context& ctx, const RunResult& r, const std::string& what) {
  if (r.ok) return 0;
  fmt::print(ctx.err, "{} run failed: {}\n", what, r.failure);
  return 1;
}

int cmd_micro(Context& ctx) {
  const Settings& s = ctx.settings;
  MicroConfig c;
  apply(scenario(s), c);
  c.eps = single_eps(s, 1.0 / 8);
  c.r = s.number("r").value_or(c.r);
  c.cells_per_eps = s.integer("cells_per_eps").value_or(c.cells_per_eps);
  c.T = s.number("T").value_or(c.T);
  c.dt = s.number("dt").value_or(c.dt);
  c.cg_tol = s.number("cg_tol").value_or(c.cg_tol);
  c.coef = coefficients(s);
  c.init = initial_data(s);
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  MicroSolver solver(c);
  const RunResult r = run_micro(solver);
  emit(s, "micro_series.csv", &ctx.out, [&](std::ostream& os) { write_series_csv(os, r); });
  emit(s, "micro_field.csv", nullptr, [&](std::ostream& os) { write_field(os, solver.grid().grid, micro_field(solver)); });
  return report_run(ctx, r, "micro");
}

int cmd_macro(Context& ctx) {
  const Settings& s = ctx.settings;
  MacroConfig c;
  const Scenario sc = scenario(s);
  apply(sc, c);
  c.H = s.number("H").value_or(c.H);
  c.T = s.number("T").value_or(c.T);
  c.dt = s.number("dt").value_or(c.dt);
  c.n_gamma = s.integer("nGamma").value_or(c.n_gamma);
  c.cell_opt.Nc = s.integer("Nc").value_or(c.cell_opt.Nc);
  c.cg_tol = s.number("cg_tol").value_or(c.cg_tol);
  if (auto g = s.text("geometry")) c.porosity = c.gamma = geometry(*g);
  c.coef = coefficients(s);
  c.init = initial_data(s);
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (auto path = s.text("tensors")) {
    EffectiveTensorField f = read_tensor_csv(*path);
    const std::vector<VecN> nodes = macro_nodes(c);
    if (f.points.size() != nodes.size()) throw UsageError("tensor file does not match the macro grid");
    for (std::size_t k = 0; k < nodes.size(); ++k)
      if ((f.points[k] - nodes[k]).norm() > 1e-9) throw UsageError("tensor file points differ from the macro nodes");
    c.tensors = std::move(f);
  }
  MacroSolver solver(c);
  const RunResult r = run_macro(solver);
  emit(s, "macro_series.csv", &ctx.out, [&](std::ostream& os) { write_series_csv(os, r); });
  emit(s, "macro_field.csv", nullptr, [&](std::ostream& os) {
    const GridFunction f = macro_field(solver);
    write_field(os, f.grid, f.values);
  });
  return report_run(ctx, r, "macro");
}

int cmd_converge(Context& ctx) {
  const Settings& s = ctx.settings;
  StudyConfig st;
  st.scenario = scenario(s).name;
  if (auto e = s.numbers("epsilon_list")) st.eps = *e;
  if (auto e = s.text("eps")) st.eps = parse_number_list(*e);
  st.r = s.number("r").value_or(st.r);
  st.cells_per_eps = s.integer("cells_per_eps").value_or(st.cells_per_eps);
  st.Nc = s.integer("Nc").value_or(st.Nc);
  st.H = s.number("H").value_or(st.H);
  st.n_gamma = s.integer("nGamma").value_or(st.n_gamma);
  st.T = s.number("T").value_or(st.T);
  st.dt = s.number("dt").value_or(st.dt);
  if (auto rule = s.text("dt_rule")) {
    if (*rule == "fixed") st.dt_rule = DtRule::kFixed;
    else if (*rule == "proportional") st.dt_rule = DtRule::kProportional;
    else throw UsageError("dt_rule must be 'fixed' or 'proportional'");
  }
  st.radius = s.number("radius").value_or(st.radius);
  st.l0_amp = s.number("l0_amp").value_or(st.l0_amp);
  if (auto g = s.text("geometry")) st.geometry = geometry(*g);
  st.coef = coefficients(s);
  st.cg_tol = s.number("cg_tol").value_or(st.cg_tol);
  st.threads = s.integer("threads").value_or(st.threads);
  if (auto o = s.text("outdir")) st.outdir = *o;
  try {
    st.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  const ConvergenceReport rep = convergence_study(st);
  if (st.outdir.empty()) write_convergence_csv(ctx.out, rep);
  fmt::print(ctx.err, "complete={} monotone={} halved={} energy_monotone={}\n", rep.complete ? 1 : 0, rep.monotone ? 1 : 0,
             rep.halved ? 1 : 0, rep.energy_monotone ? 1 : 0);
  for (const ConvergenceRow& row : rep.rows)
    if (!row.failure.empty()) fmt::print(ctx.err, "eps={}: {}\n", fmt_g(row.eps), row.failure);
  return rep.verdict() ? 0 : 1;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Locally periodic homogenization: geometry, cell problems, micro and macro solvers, convergence study",
               "lphom"};
  app.require_subcommand(1, 1);
  std::string config_path;
  std::map<std::string, std::string> flags;
  const std::pair<const char*, const char*> commands[] = {
      {"geom", "partition summary for a scenario"},
      {"check-unfold", "unfolding and boundary unfolding identities"},
      {"cell", "effective tensors at points"},
      {"micro", "microscopic run at one eps"},
      {"macro", "homogenized run"},
      {"converge", "eps sweep comparing micro and macro solutions"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value settings file");
    for (const std::string& key : config_keys()) {
      const std::string opt = "--" + key;
      sub->add_option_function<std::string>(opt, [&flags, key](const std::string& v) { flags[key] = v; }, "setting " + key);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n" << app.help();
    return 2;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  try {
    Settings settings;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw UsageError("cannot read config file '" + config_path + "'");
      settings = Settings::parse(in, config_path);
    }
    for (const auto& [k, v] : flags) settings.set(k, v);
    Context ctx{settings, out, err};
    if (cmd == "geom") return cmd_geom(ctx);
    if (cmd == "check-unfold") return cmd_check_unfold(ctx);
    if (cmd == "cell") return cmd_cell(ctx);
    if (cmd == "micro") return cmd_micro(ctx);
    if (cmd == "macro") return cmd_macro(ctx);
    return cmd_converge(ctx);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n" << app.get_subcommand(cmd)->help();
    return 2;
  } catch (const std::exception& e) {
    err << cmd << " failed: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lphom
