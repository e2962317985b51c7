#include "kinetics/runner.hpp"

#include <omp.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

#include "kinetics/frame_transform.hpp"

namespace kinetics {

namespace {

std::ofstream open_csv(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << std::setprecision(12);
  return os;
}

KineticModel make_model(const RunConfig& c, const CollisionTables& tables) {
  return KineticModel(c.phase_grid(), c.wall_motion(), tables, c.weight(), c.gamma_stride,
                      c.gamma_time_stride);
}

struct SteadyRun {
  CollisionTables tables;
  std::unique_ptr<KineticModel> model;
  SteadyResult result;
  PositivityReport positivity;
};

SteadyRun solve_steady(const RunConfig& c, std::ostream& log) {
  SteadyRun s;
  const PhaseGrid grid = c.phase_grid();
  s.tables = CollisionTables::build(grid.velocity, c.design_points);
  s.model = std::make_unique<KineticModel>(make_model(c, s.tables));
  s.result = nonlinear_periodic_solve(*s.model, c.solver_settings());
  s.positivity = positivity_check(grid.velocity, to_F(grid.velocity, s.result.solution.f));
  render_summary(log, s.result.report);
  log << "positivity: min F " << s.positivity.min_value << " (max " << s.positivity.max_value << ") at |v| "
      << std::hypot(s.positivity.velocity[0], s.positivity.velocity[1], s.positivity.velocity[2])
      << (s.positivity.pass ? "  pass\n" : "  FAIL\n");
  if (!c.report.empty()) write_solver_csv(c.report, s.result.report);
  return s;
}

int steady(const RunConfig& c, std::ostream& log) {
  const SteadyRun s = solve_steady(c, log);
  if (!c.out.empty()) {
    const auto& vg = s.model->velocity();
    write_snapshot(c.out, to_F(vg, s.result.solution.f), vg.v_max(), c.weight());
  }
  const auto& r = s.result.report;
  const bool ok = r.converged && r.stayed_in_ball && s.positivity.pass;
  return ok ? exit_pass : exit_numerical;
}

int stability(const RunConfig& c, std::ostream& log) {
  const SteadyRun s = solve_steady(c, log);
  const double scale = c.delta > 0.0 ? s.result.report.c_hat * c.delta : 1e-2;
  const auto f0 = default_initial_perturbation(*s.model, c.f0_amplitude * scale, c.seed);
  MarchOptions opt;
  opt.mass_fix = c.mass_fix;
  const StabilityRun run = ibvp_march(*s.model, s.result.solution, f0, c.periods, opt);
  const DecayFit fit = decay_rate_fit(run);
  render_summary(log, run, fit);
  if (!c.out.empty()) write_stability_csv(c.out, run);
  const bool ok = !run.blew_up && fit.accepted && fit.rate > 0.0 && s.positivity.pass;
  return ok ? exit_pass : exit_numerical;
}

int kernels(const RunConfig& c, std::ostream& log) {
  std::ofstream file;
  std::ostream* os = &log;
  if (!c.out.empty()) {
    file = open_csv(c.out);
    os = &file;
  }
  *os << std::setprecision(12) << "section,a,b,value\n";
  for (int i = 0; i <= 60; ++i) {
    const double r = 0.1 * i;
    *os << "nu," << r << ",," << collision_frequency(r) << '\n';
  }
  const Velocity v{1.0, 0.0, 0.0};
  for (int i = -40; i <= 40; ++i) {
    if (i == 10) continue;  // u == v
    const Velocity u{0.1 * i, 0.3, 0.0};
    *os << "k_loss," << u[0] << ',' << u[1] << ',' << kernel_loss(v, u) << '\n';
    *os << "k_gain," << u[0] << ',' << u[1] << ',' << kernel_gain(v, u) << '\n';
  }
  const auto k1 = verify_k1_bound(10000, c.seed);
  *os << "k1_bound,fitted,analytic," << k1.fitted_constant << '\n';
  *os << "k1_bound,analytic,," << k1.analytic_constant << '\n';
  const VelocityGrid vg(c.vmax, c.nv);
  const auto k2 = verify_k2_bound(vg, c.q, c.beta);
  for (std::size_t i = 0; i < k2.speeds.size(); ++i) *os << "k2_ratio," << k2.speeds[i] << ",," << k2.ratios[i] << '\n';
  return k1.holds ? exit_pass : exit_numerical;
}

int cycles(const RunConfig& c, std::ostream& log) {
  const FrameClock clock(c.wall_motion());
  const ForceField force = ForceField::from_clock(clock);
  const FlowMap flow(force);
  const VelocityGrid vg(c.vmax, c.nv);
  const ModifiedMultiplier nu_tilde(vg, force.tabulated(), c.weight(), true);
  const WeightFunction wf = c.weight();
  CycleMeasureOptions opt;
  opt.t0 = c.cycle_t0;
  opt.ks = c.cycle_k;
  opt.samples = c.cycle_samples;
  opt.seed = c.seed;
  const auto est = cycle_measure_estimate(
      flow, opt, [&](double t, double x, const Velocity& v) { return nu_tilde(t, x, v); },
      [&](const Velocity& v) {
        const double s2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        return std::exp(0.25 * s2) * std::pow(2.0 * std::numbers::pi, 0.75) / wf(v);
      });
  std::ofstream file;
  std::ostream* os = &log;
  if (!c.out.empty()) {
    file = open_csv(c.out);
    os = &file;
  }
  *os << std::setprecision(12) << "k,estimate,stderr\n";
  for (const auto& e : est) *os << e.k << ',' << e.estimate << ',' << e.standard_error << '\n';
  return exit_pass;
}

int verify(const RunConfig& c, std::ostream& log) {
  const auto results = run_suite(c.suite, c);
  bool ok = true;
  for (const auto& r : results) {
    log << (r.pass ? "PASS " : "FAIL ") << '[' << r.tag << "] " << r.name;
    if (!r.detail.empty()) log << "  " << r.detail;
    log << '\n';
    ok = ok && r.pass;
  }
  return ok ? exit_pass : exit_numerical;
}

}  // namespace

int run(const std::string& subcommand, const RunConfig& config, std::ostream& log) {
  validate(config);
  if (const std::size_t threads = effective_threads(config); threads > 0)
    omp_set_num_threads(static_cast<int>(threads));
  log << std::setprecision(6);
  if (subcommand == "print-config") {
    log << to_json(config).dump(2) << '\n';
    return exit_pass;
  }
  if (subcommand == "steady") return steady(config, log);
  if (subcommand == "stability") return stability(config, log);
  if (subcommand == "kernels") return kernels(config, log);
  if (subcommand == "cycles") return cycles(config, log);
  if (subcommand == "verify") return verify(config, log);
  throw ConfigError("unknown subcommand '" + subcommand + "'");
}

int run_guarded(const std::string& subcommand, const RunConfig& config, std::ostream& log) {
  try {
    return run(subcommand, config, log);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_numerical;
  }
}

void write_solver_csv(const std::string& path, const SolverReport& report) {
  std::ofstream os = open_csv(path);
  os << "stage,iter,lambda,residual,contraction\n";
  std::size_t k = 0;
  for (const auto& r : report.bootstrap.rungs)
    os << "rung," << k++ << ',' << r.lambda << ',' << r.solve.residual << ',' << r.contraction << '\n';
  double previous = 0.0;
  for (const auto& o : report.outer) {
    const double ratio = previous > 0.0 ? o.change / previous : 0.0;
    os << "outer," << o.iteration << ",0," << o.change << ',' << ratio << '\n';
    previous = o.change;
  }
}

void render_summary(std::ostream& os, const SolverReport& r) {
  os << "steady: " << (r.converged ? "converged" : "NOT converged") << " after " << r.outer.size()
     << " outer iterations\n";
  os << "  lambda0 " << r.bootstrap.lambda0 << ", resolvent bound " << r.bootstrap.resolvent_bound << ", "
     << r.bootstrap.rungs.size() << " rungs" << (r.bootstrap.schedule_capped ? " (schedule capped)" : "") << '\n';
  if (!r.outer.empty()) os << "  ||w f_per||_inf " << r.outer.back().weighted_sup << ", c_hat " << r.c_hat << '\n';
  os << "  ball check " << (r.stayed_in_ball ? "pass" : "FAIL") << ", max slice mass " << r.max_slice_mass
     << ", source odd moment " << r.source_mass << '\n';
}

void render_summary(std::ostream& os, const StabilityRun& run, const DecayFit& fit) {
  os << "stability: " << run.completed << '/' << run.periods << " periods"
     << (run.blew_up ? " (aborted: growth beyond threshold)" : "") << '\n';
  os << "  ||w f0|| " << run.initial_weighted_sup << ", final ||w f|| "
     << (run.history.empty() ? 0.0 : run.history.back().weighted_sup) << '\n';
  os << "  decay rate " << fit.rate << ", R^2 " << fit.r_squared << ", monotone tail "
     << (fit.monotone_tail ? "yes" : "no") << (fit.accepted ? "" : ", fit rejected: " + fit.reason) << '\n';
  os << "  max mass correction " << run.max_mass_correction << '\n';
}

// ---------------------------------------------------------------------------

namespace {

RunConfig small_config(const RunConfig& base, double delta) {
  RunConfig c = base;
  c.delta = delta;
  c.nv = 8;
  c.vmax = 4.8;
  c.nx = 8;
  c.nt = 16;
  return c;
}

CheckResult check(std::string name, std::string tag, bool pass, std::string detail = {}) {
  return {std::move(name), std::move(tag), pass, std::move(detail)};
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(3) << x;
  return os.str();
}

}  // namespace

std::vector<CheckResult> run_suite(const std::string& suite, const RunConfig& config) {
  const bool all = suite == "all";
  const bool trivial = all || suite == "trivial";
  const bool derived = all || suite == "derived";
  const bool paper = all || suite == "paper";
  std::vector<CheckResult> out;

  if (trivial) {
    {
      const RunConfig c = small_config(config, 0.0);
      const auto tables = CollisionTables::build(c.phase_grid().velocity);
      const KineticModel model = make_model(c, tables);
      const auto res = nonlinear_periodic_solve(model, c.solver_settings());
      const double sup = norm_weighted_sup(model.grid(), res.solution.f, model.weight());
      out.push_back(check("null forcing gives f_per = 0", "trivial", sup <= c.tol_fix, "||w f|| " + fmt(sup)));
      const auto md = mass_conservation_check(model, 1);
      out.push_back(check("equilibrium march keeps mass", "trivial", md.max_drift <= 1e-12, "drift " + fmt(md.max_drift)));
      const auto pos = positivity_check(model.velocity(), to_F(model.velocity(), res.solution.f));
      out.push_back(check("F_per = mu is positive", "trivial", pos.pass && pos.min_value > 0.0));
      const auto pr = periodic_residual(model.grid(), res.solution.f, res.solution.f);
      out.push_back(check("stored periodic field has zero residual", "trivial", pr.l2 == 0.0 && pr.sup == 0.0));
    }
    {
      const VelocityGrid vg(config.vmax, config.nv);
      const WallQuadrature quad(vg);
      std::vector<double> outgoing(vg.sqrt_mu().begin(), vg.sqrt_mu().end()), in(vg.size());
      double err = 0.0;
      for (int w = 0; w < 2; ++w) {
        p_gamma_wall(quad, outgoing, w, in);
        for (std::size_t i = 0; i < vg.size(); ++i)
          if (on_side(vg.node(i)[0], w, TraceSide::incoming)) err = std::max(err, std::abs(in[i] - vg.sqrt_mu()[i]));
      }
      out.push_back(check("P_gamma reproduces sqrt(mu)", "trivial", err <= 1e-14, "error " + fmt(err)));
    }
    {
      std::vector<double> a, d(12, 0.25);
      for (int i = 0; i < 12; ++i) a.push_back(std::pow(0.125, i));
      const auto r1 = iteration_lemma_check(a, 1, 0.0);
      const auto r2 = iteration_lemma_check(d, 1, 0.25);
      out.push_back(check("iteration lemma on geometric and constant data", "trivial",
                          r1.hypothesis && r1.conclusion && r2.hypothesis && r2.conclusion));
    }
    {
      std::vector<double> t, v;
      for (int i = 0; i <= 600; ++i) {
        t.push_back(0.01 * i);
        v.push_back(2.0 * std::exp(-0.3 * t.back()));
      }
      const auto fit = decay_rate_fit(t, v, 1.0);
      out.push_back(check("decay fit recovers an exact exponential", "trivial",
                          fit.accepted && std::abs(fit.rate - 0.3) <= 1e-6, "rate " + fmt(fit.rate)));
    }
    {
      const RunConfig parsed = config_from_json(nlohmann::json::parse(to_json(config).dump()));
      out.push_back(check("config round trip", "trivial", parsed == config));
    }
  }

  if (derived) {
    const RunConfig c = small_config(config, 0.02);
    const auto tables = CollisionTables::build(c.phase_grid().velocity);
    const KineticModel model = make_model(c, tables);
    const TransportStepper stepper(model);
    const SolverSettings s = c.solver_settings();
    const auto g = model.nonlinear_volume_source(model.grid().make_field());
    const auto r = model.nonlinear_wall_source(model.grid().make_trace(TraceSide::outgoing));
    const double lambda0 = measured_lambda0(model.collision());
    {
      DistributionField g2 = g;
      g2.scale(3.0);
      BoundaryTrace r2 = r;
      for (auto& x : r2.values()) x *= 3.0;
      const auto a = periodic_linear_solve(stepper, &g, &r, lambda0, false, s);
      const auto b = periodic_linear_solve(stepper, &g2, &r2, lambda0, false, s);
      DistributionField d = b.f;
      d.axpy(-3.0, a.f);
      const double rel = norm_l2(model.grid(), d) / norm_l2(model.grid(), b.f);
      out.push_back(check("linear solve scales with its data", "derived", rel <= 1e-10, "rel " + fmt(rel)));
    }
    {
      const auto f = periodic_linear_solve(stepper, &g, &r, 0.0, true, s);
      double m = 0.0;
      for (double x : slice_mass(model.grid(), f.f)) m = std::max(m, std::abs(x));
      out.push_back(check("lambda = 0 solve keeps zero mass", "derived", m <= 1e-8, "mass " + fmt(m)));
    }
    {
      KIterationReport kr;
      k_fixed_point(stepper, &g, &r, lambda0, s, &kr);
      out.push_back(check("K iteration contracts", "derived", kr.max_energy_ratio() <= 0.55,
                          "ratio " + fmt(kr.max_energy_ratio())));
      BoundaryIterationReport br;
      boundary_fixed_point(stepper, &g, &r, 0.0, 50, s, &br);
      out.push_back(check("boundary iteration contracts", "derived",
                          br.max_ratio() <= br.predicted_factor + 0.05, "ratio " + fmt(br.max_ratio())));
      const auto lemma = iteration_lemma_check(br.residuals, 1, 0.0);
      out.push_back(check("iteration lemma on boundary residuals", "derived", lemma.hypothesis && lemma.conclusion));
    }
    {
      // Box truncation dominates the defect, so this one runs on the configured velocity grid.
      const VelocityGrid vg(config.vmax, config.nv);
      const CollisionForm form(vg, config.design_points);
      const auto f = smooth_random_velocity_field(vg, model.weight(), c.seed);
      const auto h = smooth_random_velocity_field(vg, model.weight(), c.seed + 1);
      const auto d = gamma_conservation(form, f, h);
      out.push_back(check("Gamma conserves the collision invariants", "derived", d.max() <= 1e-5, "defect " + fmt(d.max())));
    }
  }

  if (paper) {
    {
      const RunConfig c = small_config(config, 0.02);
      const auto tables = CollisionTables::build(c.phase_grid().velocity);
      const KineticModel model = make_model(c, tables);
      const auto& vg = model.velocity();
      const auto& st = model.space_time();
      double worst = 0.0;
      for (std::size_t it = 0; it < st.nt(); ++it) {
        double m = 0.0;
        for (std::size_t ix = 0; ix < st.nx(); ++ix)
          for (std::size_t iv = 0; iv < vg.size(); ++iv)
            m += model.force()(st.t(it), st.x(ix)) * vg.node(iv)[0] * vg.mu()[iv];
        worst = std::max(worst, std::abs(m) * vg.cell_volume() * st.dx());
      }
      out.push_back(check("forcing source has zero mass", "paper", worst <= 1e-12, "moment " + fmt(worst)));
      const auto rw = model.nonlinear_wall_source(model.grid().make_trace(TraceSide::outgoing));
      double mass = 0.0;
      for (std::size_t it = 0; it < st.nt(); ++it)
        for (int w = 0; w < 2; ++w) mass = std::max(mass, std::abs(incoming_mass(model.quadrature(), rw.wall(it, w), w)));
      out.push_back(check("wall source has zero mass flux", "paper", mass <= 1e-14, "flux " + fmt(mass)));
    }
    {
      const auto k1 = verify_k1_bound(2000, config.seed);
      out.push_back(check("loss kernel bound", "paper", k1.holds, "constant " + fmt(k1.fitted_constant)));
      const CollisionOperator op(VelocityGrid(config.vmax, 8));
      const auto& k = op.k_matrix();
      const double asym = (k - k.transpose()).cwiseAbs().maxCoeff() / k.cwiseAbs().maxCoeff();
      out.push_back(check("K is symmetric", "paper", asym <= 1e-10, "asymmetry " + fmt(asym)));
      const double r0 = 0.0;
      const double nu0 = collision_frequency(r0);
      out.push_back(check("nu(0) = 4 sqrt(2 pi)", "paper", std::abs(nu0 - 4.0 * std::sqrt(2.0 * std::numbers::pi)) <= 1e-12,
                          "nu(0) " + fmt(nu0)));
    }
  }
  return out;
}

}  // namespace kinetics
