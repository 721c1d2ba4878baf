#include <fstream>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "expcap/errors.hpp"
#include "expcap/experiments.hpp"

using namespace expcap;

namespace {

struct Extra {
  std::string shape = "square";
  std::string field;
  std::string function = "bump";
  std::string weight = "lebesgue";
  std::string kind = "green";
  std::string problem = "interior";
  std::string side = "interior";
  std::string dump;
};

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open " + path);
    }
  }
  std::ostream& os() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

Table summary() {
  Table t;
  t.header = {"quantity", "value"};
  return t;
}

void dump_field(const std::string& path, const Field& f, const Grid& g, WeightKind kind) {
  if (!path.empty()) write_field_csv(path, f, g, kind);
}

Field named_field(const std::string& name, const KernelSet& ks) {
  const Grid& g = ks.grid();
  if (name == "ones") return Field::Ones(g.num_interior());
  if (name == "rho") return g.rho;
  if (name == "zeta0") return ks.zeta0();
  if (name == "bump") return cutoff(g, 0.5, 0.5, 0.4);
  throw std::invalid_argument("unknown field function " + name);
}

InteriorMeasure interior_measure(const ExperimentConfig& cfg, const Grid& g) {
  InteriorMeasure mu;
  if (cfg.mass > 0) mu.atoms = {{g.nearest_interior(cfg.atom_x, cfg.atom_y), cfg.mass}};
  if (cfg.density > 0) mu.density = Field::Constant(g.num_interior(), cfg.density);
  return mu;
}

BoundaryMeasure boundary_measure(const ExperimentConfig& cfg, const Grid& g) {
  BoundaryMeasure mu;
  if (cfg.mass > 0) mu.atoms = {{g.nearest_boundary(cfg.atom_x, cfg.atom_y), cfg.mass}};
  if (cfg.boundary_value > 0) mu.density = Field::Constant(g.num_boundary(), cfg.boundary_value);
  return mu;
}

void report_solve(Table& t, const SolveReport& s, const Grid& g) {
  t.add({"iterations", fmt(s.iterations)});
  t.add({"residual", fmt(s.residual)});
  t.add({"absorption", fmt(s.absorption)});
  t.add({"absorption_rho", fmt(s.absorption_rho)});
  t.add({"mass_estimate", fmt(s.mass_estimate)});
  t.add({"monotone", s.monotone_flag ? "true" : "false"});
  t.add({"max_u", fmt(s.u.maxCoeff())});
  t.add({"keller_osserman", fmt(keller_osserman_check(s.u, g))});
}

int cmd_norms(const ExperimentConfig& cfg, const Extra& ex, Output& out) {
  Field f;
  Grid g;
  WeightKind kind;
  if (!ex.field.empty()) {
    LoadedField lf = read_field_csv(ex.field);
    g = build_grid(lf.shape, lf.n);
    f = lf.values;
    kind = lf.kind;
  } else {
    KernelSet ks = assemble(build_grid(cfg.shape, cfg.n));
    g = ks.grid();
    f = named_field(ex.function, ks);
    kind = weight_kind_from_string(ex.weight);
  }
  if (f.size() != g.num_interior()) throw GridMismatch("field does not match its grid");
  NFunction nf = exponential_pair();
  Field w = g.weights(kind);
  Table t = summary();
  t.add({"luxemburg_P", fmt(luxemburg_norm(f, w, nf, Side::P))});
  t.add({"luxemburg_Pstar", fmt(luxemburg_norm(f, w, nf, Side::Pstar))});
  t.add({"orlicz_Pstar", fmt(orlicz_norm(f, w, nf, Side::Pstar).value)});
  t.add({"llnl", fmt(llnl_norm(f, g, kind))});
  t.add({"integral_abs", fmt(integrate(f.cwiseAbs(), g, kind))});
  t.write(out.os());
  return 0;
}

int cmd_kernel(const ExperimentConfig& cfg, const Extra& ex, Output& out) {
  KernelSet ks = assemble(build_grid(cfg.shape, cfg.n));
  const Grid& g = ks.grid();
  Table t = summary();
  t.add({"lambda", fmt(ks.lambda())});
  t.add({"eigen_residual", fmt(ks.eigen_residual())});
  Field f;
  if (ex.kind == "green") {
    f = green_potential(ks, interior_measure(cfg, g));
  } else if (ex.kind == "poisson") {
    f = poisson_potential(ks, boundary_measure(cfg, g));
  } else if (ex.kind == "eigen") {
    f = ks.rho_star();
  } else if (ex.kind == "zeta0") {
    f = ks.zeta0();
  } else if (ex.kind == "green-matrix") {
    if (ex.dump.empty()) throw std::invalid_argument("green-matrix needs --dump");
    write_green_matrix_csv(ex.dump, ks);
    t.write(out.os());
    return 0;
  } else {
    throw std::invalid_argument("unknown kernel kind " + ex.kind);
  }
  t.add({"max", fmt(f.maxCoeff())});
  t.add({"min", fmt(f.minCoeff())});
  t.add({"integral", fmt(integrate(f, g, WeightKind::Lebesgue))});
  t.add({"integral_rho", fmt(integrate(f, g, WeightKind::Rho))});
  t.write(out.os());
  dump_field(ex.dump, f, g, WeightKind::Lebesgue);
  return 0;
}

int cmd_solve(const ExperimentConfig& cfg, const Extra& ex, Output& out) {
  KernelSet ks = assemble(build_grid(cfg.shape, cfg.n));
  const Grid& g = ks.grid();
  Table t = summary();
  Field u;
  if (ex.problem == "interior") {
    SolveReport s = solve_interior(interior_measure(cfg, g), ks);
    report_solve(t, s, g);
    u = s.u;
  } else if (ex.problem == "boundary") {
    SolveReport s = solve_boundary(boundary_measure(cfg, g), ks);
    report_solve(t, s, g);
    u = s.u;
  } else if (ex.problem == "punctured") {
    CompactSet K = target_set(g, cfg.target_x, cfg.target_y, cfg.target_size);
    BoundaryMeasure mu;
    mu.density = Field::Constant(g.num_boundary(), cfg.boundary_value);
    SolveReport s = solve_punctured(mu, K.nodes, cfg.source_mass, ks);
    report_solve(t, s, g);
    u = s.u;
  } else if (ex.problem == "theorem-a") {
    TheoremAReport r = theorem_a_scheme(boundary_measure(cfg, g), ks);
    Table lv;
    lv.header = {"k", "mass_estimate", "bound", "min_increment"};
    for (const auto& l : r.levels) lv.add({fmt(l.k), fmt(l.mass_estimate), fmt(l.bound), fmt(l.min_increment)});
    lv.write(out.os());
    std::cerr << "max violation " << r.max_violation << ", bound " << (r.bound_ok ? "holds" : "fails") << "\n";
    dump_field(ex.dump, r.final.u, g, WeightKind::Lebesgue);
    return 0;
  } else {
    throw std::invalid_argument("unknown problem " + ex.problem);
  }
  t.write(out.os());
  dump_field(ex.dump, u, g, WeightKind::Lebesgue);
  return 0;
}

int cmd_capacity(const ExperimentConfig& cfg, const Extra& ex, Output& out) {
  KernelSet ks = assemble(build_grid(cfg.shape, cfg.n));
  const Grid& g = ks.grid();
  CompactSet K;
  if (ex.side == "interior") {
    K = target_set(g, cfg.target_x, cfg.target_y, cfg.target_size);
  } else if (ex.side == "boundary") {
    std::vector<int> nodes;
    if (cfg.target_size > 0) {
      nodes = {g.nearest_boundary(cfg.target_x, cfg.target_y)};
      if (cfg.target_size > 1) nodes = g.dilate_boundary(nodes, (cfg.target_size - 1) / 2);
    }
    K = boundary_set(nodes, "boundary" + fmt(cfg.target_size));
  } else {
    throw std::invalid_argument("unknown side " + ex.side);
  }
  CapacityOptions o;
  o.rings = cfg.rings.empty() ? 1 : cfg.rings.front();
  CapacityEstimate e = estimate_capacity(K, ks, o);
  write_capacity_csv_header(out.os());
  write_capacity_csv_row(out.os(), e);
  std::cerr << "relative gap " << e.relative_gap() << ", Luxemburg primal " << e.primal_luxemburg << "\n";
  if (!ex.dump.empty()) {
    if (K.on_boundary) {
      std::ofstream f(ex.dump);
      f << "index,x,y,value\n";
      f.precision(17);
      for (int b = 0; b < g.num_boundary(); ++b) f << b << ',' << g.bx[b] << ',' << g.by[b] << ',' << e.eta_star[b] << '\n';
    } else {
      dump_field(ex.dump, e.eta_star, g, WeightKind::Lebesgue);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Orlicz norms, capacities and the exponential absorption equation on grids"};
  app.set_config("--config", "", "key = value file");
  app.fallthrough();
  app.require_subcommand(1);

  ExperimentConfig cfg;
  Extra ex;
  auto* o_shape = app.add_option("--shape", ex.shape, "interval, square or disk");
  auto* o_n = app.add_option("--n", cfg.n, "interior nodes per axis");
  auto* o_ladder = app.add_option("--ladder", cfg.ladder, "grid ladder");
  app.add_option("--masses", cfg.masses, "mass ladder");
  app.add_option("--mass", cfg.mass, "atom mass");
  app.add_option("--density", cfg.density, "constant interior density");
  app.add_option("--atom-x", cfg.atom_x);
  app.add_option("--atom-y", cfg.atom_y);
  app.add_option("--target-x", cfg.target_x);
  auto* o_ty = app.add_option("--target-y", cfg.target_y);
  app.add_option("--target-size", cfg.target_size, "0, 1, 3 or 5 nodes");
  app.add_option("--radii", cfg.radii);
  app.add_option("--rings", cfg.rings);
  app.add_option("--slope-tol", cfg.slope_tol);
  app.add_option("--threshold-tol", cfg.threshold_tol);
  app.add_option("--extend-slope", cfg.extend_slope);
  app.add_option("--residual-tol", cfg.residual_tol);
  app.add_option("--source-mass", cfg.source_mass);
  app.add_option("--boundary-value", cfg.boundary_value);
  app.add_option("--output", cfg.output, "CSV output path, stdout when empty");
  app.add_option("--field", ex.field, "field CSV for norms");
  app.add_option("--function", ex.function, "ones, rho, zeta0 or bump");
  app.add_option("--weight", ex.weight, "lebesgue or rho");
  app.add_option("--kind", ex.kind, "green, poisson, eigen, zeta0 or green-matrix");
  app.add_option("--problem", ex.problem, "interior, boundary, punctured or theorem-a");
  app.add_option("--side", ex.side, "interior or boundary");
  app.add_option("--dump", ex.dump, "per-field CSV output");

  std::map<std::string, CLI::App*> sub;
  for (const char* name : {"norms", "kernel", "solve", "capacity", "removability", "theorem-b", "moderate",
                           "boundary-probe", "converge"})
    sub[name] = app.add_subcommand(name);
  sub["norms"]->description("Luxemburg, Orlicz and L ln L norms of a field");
  sub["kernel"]->description("Green, Poisson, eigenfunction or torsion kernels");
  sub["solve"]->description("solve the absorption problem with measure data");
  sub["capacity"]->description("primal and dual capacity estimates");
  sub["removability"]->description("point-mass admissibility threshold");
  sub["theorem-b"]->description("vanishing inequality for shrinking test functions");
  sub["moderate"]->description("punctured solve and the extension verdict");
  sub["boundary-probe"]->description("boundary capacity minimizers and the est integral");
  sub["converge"]->description("refinement tables for the kernels and capacities");

  CLI11_PARSE(app, argc, argv);

  auto unset = [](CLI::Option* o) { return o->count() == 0; };
  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (unset(o_shape) && name == "removability") ex.shape = "disk";
    if (unset(o_n) && name == "moderate") cfg.n = 128;
    if (unset(o_n) && (name == "norms" || name == "kernel" || name == "solve" || name == "capacity")) cfg.n = 32;
    if (unset(o_ladder) && name == "boundary-probe") cfg.ladder = {16, 32, 64};
    if (unset(o_ladder) && name == "converge") cfg.ladder = {16, 32, 64, 128};
    if (unset(o_ty) && name == "boundary-probe") cfg.target_y = 0.0;
    cfg.shape = shape_from_string(ex.shape);
    cfg.name = name;
    cfg.validate();
    Output out(cfg.output);

    if (name == "norms") return cmd_norms(cfg, ex, out);
    if (name == "kernel") return cmd_kernel(cfg, ex, out);
    if (name == "solve") return cmd_solve(cfg, ex, out);
    if (name == "capacity") return cmd_capacity(cfg, ex, out);
    if (name == "removability") {
      ThresholdResult r = run_removability_threshold(cfg);
      r.table.write(out.os());
      std::cerr << "threshold " << r.m_star << " in (" << r.lower << ", " << r.upper << "), "
                << (r.pass ? "PASS" : "FAIL") << "\n";
    } else if (name == "theorem-b") {
      TheoremBResult r = run_theorem_b_inequality(cfg);
      r.interior.write(out.os());
      out.os() << '\n';
      r.boundary.write(out.os());
      std::cerr << "interior " << (r.interior_holds ? "holds" : "fails") << ", boundary "
                << (r.boundary_holds ? "holds" : "fails") << ", max Fubini " << r.max_fubini << "\n";
    } else if (name == "moderate") {
      ModerateResult r = run_moderate_extension(cfg);
      r.table.write(out.os());
      std::cerr << to_string(r.verdict) << " slope " << r.slope << " residual " << r.residual << "\n";
    } else if (name == "boundary-probe") {
      ProbeResult r = run_boundary_probe(cfg);
      r.table.write(out.os());
      std::cerr << "minimizer est slope in h " << r.minimizer_slope << ", fixed spread " << r.fixed_spread << "\n";
    } else if (name == "converge") {
      run_convergence_suite(cfg).table.write(out.os());
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
