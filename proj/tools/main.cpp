#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "homog/cell.hpp"
#include "homog/config.hpp"
#include "homog/convergence.hpp"
#include "homog/czdecomp.hpp"
#include "homog/dioph.hpp"
#include "homog/ergodic.hpp"
#include "homog/gbar.hpp"
#include "homog/halfspace.hpp"

using namespace homog;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCheckFailed = 2;
constexpr const char* kVersion = "0.1.0";

struct Global {
  std::string config_path;
  std::string out = "out";
  int threads = 1;
};

// Loads the configuration and records every effective run parameter in it,
// so the hash identifies the run.
class Run {
 public:
  Run(const Global& g, std::string command) : g_(g), command_(std::move(command)) {
    if (!g_.config_path.empty()) cfg_ = Config::load(g_.config_path);
    fs::create_directories(g_.out);
    start_ = std::chrono::steady_clock::now();
  }

  const Config& config() const { return cfg_; }
  template <class T>
  void param(const std::string& name, const T& v) {
    std::ostringstream os;
    os << std::setprecision(17) << v;
    cfg_.set("run." + command_ + "." + name, os.str());
  }
  void param_list(const std::string& name, const std::vector<double>& v) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
    cfg_.set("run." + command_ + "." + name, os.str());
  }
  std::string hash() const { return cfg_.hash_hex(); }
  fs::path path(const std::string& file) const { return fs::path(g_.out) / file; }

  std::ofstream csv(const std::string& file, const std::string& header) {
    std::ofstream os(path(file));
    if (!os) throw Error("cannot write " + path(file).string());
    os << std::setprecision(17) << header << "\n";
    outputs_.push_back(file);
    return os;
  }
  void write_json(const std::string& file, const json& j) {
    std::ofstream os(path(file));
    if (!os) throw Error("cannot write " + path(file).string());
    os << j.dump(2) << "\n";
    outputs_.push_back(file);
  }

  int finish(bool checks_pass, const json& checks) {
    json m;
    m["command"] = command_;
    m["version"] = kVersion;
    m["config_hash"] = hash();
    m["config"] = cfg_.values();
    m["threads"] = g_.threads;
    m["outputs"] = outputs_;
    m["checks"] = checks;
    m["checks_pass"] = checks_pass;
    m["runtime_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    std::ofstream os(path("manifest.json"));
    os << m.dump(2) << "\n";
    std::cout << command_ << ": " << (checks_pass ? "checks pass" : "checks FAILED") << ", outputs in " << g_.out
              << " (config " << hash() << ")\n";
    return checks_pass ? kExitOk : kExitCheckFailed;
  }

 private:
  Global g_;
  std::string command_;
  Config cfg_;
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

std::vector<double> parse_direction(const std::string& text) {
  if (text.empty() || text == "golden") return golden_direction();
  std::vector<double> n;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) n.push_back(std::stod(tok));
  double s = 0;
  for (double v : n) s += v * v;
  if (n.size() < 2 || !(s > 0)) throw InvalidArgument("--n expects comma-separated components");
  for (double& v : n) v /= std::sqrt(s);
  return n;
}

std::vector<double> powers_of_two(const std::vector<int>& exps) {
  std::vector<double> out;
  for (int k : exps) out.push_back(std::ldexp(1.0, -k));
  return out;
}

// ------------------------------------------------------------------ cell

struct CellArgs {
  int resolution = 64;
  double tol = 1e-10;
  int grid = 32;
};

int run_cell(const Global& g, const CellArgs& args) {
  Run run(g, "cell");
  run.param("resolution", args.resolution);
  run.param("tol", args.tol);
  run.param("grid", args.grid);
  const PeriodicTensor a = tensor_from_config(run.config());
  CellOptions opt;
  opt.resolution = args.resolution;
  opt.tol = args.tol;
  opt.threads = g.threads;
  const CellSolution sol = solve_corrector(a, opt);
  const int d = sol.dim, L = sol.sysdim;
  std::ostringstream header;
  header << "y1,y2";
  for (int beta = 0; beta < d; ++beta)
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) header << ",chi_" << beta << "_" << i << "_" << j;
  if (d == 2) {
    auto os = run.csv("chi.csv", header.str());
    for (int p = 0; p < args.grid; ++p)
      for (int q = 0; q < args.grid; ++q) {
        const std::vector<double> y{static_cast<double>(p) / args.grid, static_cast<double>(q) / args.grid};
        os << y[0] << "," << y[1];
        for (int beta = 0; beta < d; ++beta)
          for (int i = 0; i < L; ++i)
            for (int j = 0; j < L; ++j) os << "," << sol.value(beta, i, j, y);
        os << "\n";
      }
  }
  const auto [lo, hi] = tensor_eigen_range(sol.abar, d, L);
  json j;
  j["abar"] = sol.abar;
  j["dim"] = d;
  j["sysdim"] = L;
  j["residual"] = sol.residual;
  j["iterations"] = sol.iterations;
  j["eigen_range"] = {lo, hi};
  run.write_json("abar.json", j);
  const bool ok = sol.residual <= args.tol && lo > 0;
  return run.finish(ok, {{"residual_below_tol", sol.residual <= args.tol}, {"abar_elliptic", lo > 0}});
}

// ------------------------------------------------------------------ dioph

struct DiophArgs {
  std::string n;
  double kappa = 1.5;
  int xi = 1000;
  int samples = 1000;
};

int run_dioph(const Global& g, const DiophArgs& args) {
  Run run(g, "dioph");
  run.param("n", args.n);
  run.param("kappa", args.kappa);
  run.param("xi", args.xi);
  run.param("samples", args.samples);
  bool ok = true;
  json summary;
  if (!args.n.empty()) {
    const Direction d = dioph_constant(parse_direction(args.n), args.kappa, args.xi);
    const Frame f = build_frame(d.n);
    summary["n"] = d.n;
    summary["A_lb"] = d.A_lb;
    summary["argmin"] = d.argmin;
    std::vector<std::vector<double>> M(f.M.rows(), std::vector<double>(f.M.cols()));
    for (int r = 0; r < f.M.rows(); ++r)
      for (int c = 0; c < f.M.cols(); ++c) M[r][c] = f.M(r, c);
    summary["frame"] = M;
    const double orth = (f.M.transpose() * f.M - Eigen::MatrixXd::Identity(f.M.rows(), f.M.cols())).norm();
    summary["frame_orthogonality_error"] = orth;
    ok = ok && orth <= 1e-12 && d.A_lb >= 0 && d.A_lb <= 1;
  }
  const ConvexDomain dom = domain_from_config(run.config());
  const DiophStatistics st = dioph_statistics(dom, args.samples, args.kappa, args.xi, g.threads);
  {
    auto os = run.csv("dioph.csv", "s,x1,x2,n1,n2,A_lb");
    for (const auto& s : st.samples)
      os << s.s << "," << s.x.x() << "," << s.x.y() << "," << s.n.x() << "," << s.n.y() << "," << s.A_lb << "\n";
  }
  {
    auto os = run.csv("weak_norm.csv", "t,measure,value");
    for (const auto& w : st.weak) os << w.t << "," << w.measure << "," << w.value << "\n";
  }
  bool clamp = true;
  for (const auto& s : st.samples) clamp = clamp && s.A_lb >= 0 && s.A_lb <= 1;
  summary["weak_sup"] = st.weak_sup;
  summary["rational_samples"] = st.rational_samples;
  summary["rational_fraction"] = st.rational_fraction;
  run.write_json("summary.json", summary);
  ok = ok && clamp;
  return run.finish(ok, {{"A_lb_in_unit_interval", clamp}});
}

// ------------------------------------------------------------------ ergodic

struct ErgodicArgs {
  std::string n;
  double kappa = 1.5;
  int xi = 200;
  std::vector<int> eta_exps{2, 3, 4, 5, 6, 7, 8};
  std::vector<int> ks{1, 2, 3};
  std::string window = "gaussian";
  double radius = 1.0;
  unsigned long long seed = 1;
  int modes = 5;
  int cutoff = 3;
};

int run_ergodic(const Global& g, const ErgodicArgs& args) {
  Run run(g, "ergodic");
  run.param("n", args.n.empty() ? "golden" : args.n);
  run.param("kappa", args.kappa);
  run.param("xi", args.xi);
  run.param("window", args.window);
  run.param("radius", args.radius);
  run.param("seed", args.seed);
  run.param("modes", args.modes);
  run.param("cutoff", args.cutoff);
  std::vector<double> ks(args.ks.begin(), args.ks.end());
  run.param_list("k", ks);
  const std::vector<double> etas = powers_of_two(args.eta_exps);
  run.param_list("eta", etas);
  const Direction dir = dioph_constant(parse_direction(args.n), args.kappa, args.xi);
  const SmoothWindow psi =
      args.window == "bump" ? SmoothWindow::bump(1, args.radius) : SmoothWindow::gaussian(1, args.radius);
  const PeriodicField K = run.config().has("K")
                              ? [&] {
                                  ModeBuilder mb(2, 1);
                                  for (auto& [xi, c] : parse_mode_list(run.config().get("K"), 2)) mb.add_mode(xi, 0, c);
                                  return mb.build();
                                }()
                              : random_band_limited(2, args.modes, args.cutoff, args.seed);
  const ErgodicTable t = verify_ergodic(psi, K, dir, etas, args.ks, 1e-10, g.threads);
  {
    auto os = run.csv("ergodic.csv", "eta,k,error,bound,pass");
    for (const auto& r : t.rows) os << r.eta << "," << r.k << "," << r.error << "," << r.bound << "," << r.pass << "\n";
  }
  run.write_json("summary.json", {{"A_lb", dir.A_lb}, {"slope", t.slope}, {"all_pass", t.all_pass}});
  return run.finish(t.all_pass, {{"bound_holds", t.all_pass}});
}

// ------------------------------------------------------------------ decompose

struct DecomposeArgs {
  int eps_exp = 10;
  double delta = 0.02;
  double kappa = 1.5;
  int xi = 200;
  int samples = 10000;
};

int run_decompose(const Global& g, const DecomposeArgs& args) {
  Run run(g, "decompose");
  const double eps = std::ldexp(1.0, -args.eps_exp);
  run.param("epsilon", eps);
  run.param("delta", args.delta);
  run.param("kappa", args.kappa);
  run.param("xi", args.xi);
  run.param("samples", args.samples);
  const ConvexDomain dom = domain_from_config(run.config());
  DecomposeOptions opt;
  opt.threads = g.threads;
  const CubePartition part = decompose_diophantine(dom, eps, args.delta, args.kappa, args.xi, opt);
  const PartitionChecks chk = check_partition(part, dom, diophantine_driver(dom, eps, args.delta, args.kappa, args.xi),
                                              args.samples, opt.samples_per_side, g.threads);
  {
    auto os = run.csv("cubes.csv", "level,size,c1,c2,anchor1,anchor2,A_lb");
    for (const auto& r : part.cubes) {
      const Eigen::Vector2d c = r.cube.center();
      os << r.cube.level << "," << r.cube.size() << "," << c.x() << "," << c.y() << "," << r.anchor.x() << ","
         << r.anchor.y() << "," << r.anchor_A << "\n";
    }
  }
  json counts;
  for (const auto& [m, c] : part.count_per_level) counts[std::to_string(m)] = c;
  run.write_json("summary.json", {{"cubes", part.cubes.size()},
                                  {"count_per_level", counts},
                                  {"size_min", chk.size_min},
                                  {"size_max", chk.size_max},
                                  {"c_lower", chk.c_lower},
                                  {"C_upper", chk.C_upper},
                                  {"counting_constant", chk.counting_constant},
                                  {"coverage_misses", chk.coverage_misses},
                                  {"cubes_missing_boundary", chk.cubes_missing_boundary},
                                  {"essinf_violations", chk.essinf_violations},
                                  {"neighbor_violations", chk.neighbor_violations},
                                  {"overlaps", chk.overlaps},
                                  {"anchor_failures", chk.anchor_failures}});
  return run.finish(chk.ok() && chk.anchor_failures == 0,
                    {{"properties", chk.ok()}, {"anchors", chk.anchor_failures == 0}});
}

// ------------------------------------------------------------------ layer

struct LayerArgs {
  std::string n;
  double T = 30;
  double shift = 0;
  int res_theta = 32;
  int res_t = 400;
  double tol = 1e-10;
};

int run_layer(const Global& g, const LayerArgs& args) {
  Run run(g, "layer");
  run.param("n", args.n.empty() ? "golden" : args.n);
  run.param("T", args.T);
  run.param("shift", args.shift);
  run.param("res_theta", args.res_theta);
  run.param("res_t", args.res_t);
  run.param("tol", args.tol);
  const PeriodicTensor a = tensor_from_config(run.config());
  const TwoScaleBoundaryDatum datum = datum_from_config(run.config(), a.dim(), a.sysdim());
  const std::vector<double> n = parse_direction(args.n);
  LayerOptions opt;
  opt.res_theta = args.res_theta;
  opt.res_t = args.res_t;
  opt.tol = args.tol;
  opt.threads = g.threads;
  opt.check_decay = false;
  const LayerSolution sol = solve_layer(a, build_frame(n), datum.terms().at(0).fast, args.shift, args.shift + args.T, opt);
  {
    auto os = run.csv("decay.csv", "t,dt_norm,tan_norm,norm");
    for (const auto& d : sol.decay) os << d.t << "," << d.dt_norm << "," << d.tan_norm << "," << d.total() << "\n";
  }
  bool settled = true;
  try {
    layer_tail(sol);
  } catch (const Error&) {
    settled = false;
  }
  const DecayFit fit = decay_fit(sol, sol.a + 1, sol.T);
  run.write_json("tail.json", {{"tail", sol.tail},
                               {"A_lb", dioph_constant(n, 1.5, 200).A_lb},
                               {"residual", sol.residual},
                               {"iterations", sol.iterations},
                               {"decay_rate", fit.rate},
                               {"decay_order", fit.order},
                               {"monotone", fit.monotone},
                               {"settled", settled}});
  const bool res_ok = sol.residual <= args.tol;
  return run.finish(res_ok && settled, {{"residual_below_tol", res_ok}, {"tail_settled", settled}});
}

// ------------------------------------------------------------------ gbar

struct GbarArgs {
  int samples = 512;
  double kappa = 1.5;
  int xi = 200;
  int cell_res = 64;
  double T = 30;
};

int run_gbar(const Global& g, const GbarArgs& args) {
  Run run(g, "gbar");
  run.param("samples", args.samples);
  run.param("kappa", args.kappa);
  run.param("xi", args.xi);
  run.param("cell_res", args.cell_res);
  run.param("T", args.T);
  const PeriodicTensor a = tensor_from_config(run.config());
  const ConvexDomain dom = domain_from_config(run.config());
  const TwoScaleBoundaryDatum datum = datum_from_config(run.config(), a.dim(), a.sysdim());
  CellOptions copt;
  copt.resolution = args.cell_res;
  copt.threads = g.threads;
  const CellSolution adj = adjoint_corrector(a, copt);
  GbarOptions gopt;
  gopt.T = args.T;
  gopt.layer.check_decay = false;
  WeightCache cache(a, adj, gopt);
  const GbarProfile prof = gbar_profile(dom, datum, cache, args.kappa, args.xi, args.samples, g.threads);
  {
    auto os = run.csv("gbar.csv", "s,x1,x2,n1,n2,A_lb,gbar,identity_part,corrector_part,layer_part");
    for (const auto& s : prof.samples)
      os << s.s << "," << s.x.x() << "," << s.x.y() << "," << s.n.n[0] << "," << s.n.n[1] << "," << s.n.A_lb << ","
         << s.gbar[0] << "," << s.components[0][0] << "," << s.components[1][0] << "," << s.components[2][0] << "\n";
  }
  {
    auto os = run.csv("increments.csv", "i,j,dg,dn,A,ratio");
    for (const auto& c : prof.increments)
      os << c.i << "," << c.j << "," << c.dg << "," << c.dn << "," << c.A << "," << c.ratio << "\n";
  }
  const bool finite = std::isfinite(prof.max_ratio) && std::isfinite(prof.seminorm_half);
  run.write_json("summary.json", {{"samples", prof.samples.size()},
                                  {"rational_samples", prof.rational_samples},
                                  {"max_ratio", prof.max_ratio},
                                  {"seminorm_half", prof.seminorm_half}});
  return run.finish(finite, {{"finite_statistics", finite}});
}

// ------------------------------------------------------------------ converge

struct ConvergeArgs {
  std::vector<int> eps_exps{6, 7, 8, 9};
  double h_factor = 8;
  double q = 2;
  int samples = 512;
  int cell_res = 64;
  bool mesh_check = true;
};

int run_converge(const Global& g, const ConvergeArgs& args) {
  Run run(g, "converge");
  RateConfig cfg;
  cfg.epsilons = powers_of_two(args.eps_exps);
  run.param_list("epsilons", cfg.epsilons);
  run.param("h_factor", args.h_factor);
  run.param("q", args.q);
  run.param("samples", args.samples);
  run.param("cell_res", args.cell_res);
  run.param("mesh_check", args.mesh_check);
  cfg.a = tensor_from_config(run.config());
  cfg.dom = domain_from_config(run.config());
  cfg.g = datum_from_config(run.config(), cfg.a.dim(), cfg.a.sysdim());
  cfg.h_factor = args.h_factor;
  cfg.q = args.q;
  cfg.gbar_samples = args.samples;
  cfg.cell_res = args.cell_res;
  cfg.mesh_check = args.mesh_check;
  cfg.threads = g.threads;
  cfg.config_hash = run.hash();
  const RateStudy st = rate_study(cfg);
  {
    auto os = run.csv("records.csv",
                      "epsilon,h,q,error_Lq,error_coarse,mesh_floor,valid,nodes,osc_method,osc_iterations,"
                      "hom_iterations,runtime,config_hash");
    for (const auto& r : st.records)
      os << r.epsilon << "," << r.h << "," << r.q << "," << r.error_Lq << "," << r.error_coarse << "," << r.mesh_floor
         << "," << r.valid << "," << r.nodes << "," << r.osc.method << "," << r.osc.iterations << ","
         << r.hom.iterations << "," << r.runtime << "," << r.config_hash << "\n";
  }
  {
    auto os = run.csv("gbar.csv", "s,A_lb,gbar");
    for (const auto& s : st.profile.samples) os << s.s << "," << s.n.A_lb << "," << s.gbar[0] << "\n";
  }
  run.write_json("summary.json", {{"slope", st.slope},
                                  {"band", {1.0 / 3.0, 0.5}},
                                  {"all_valid", st.all_valid},
                                  {"monotone", st.monotone},
                                  {"abar", st.abar},
                                  {"gbar_seconds", st.gbar_seconds}});
  return run.finish(st.all_valid, {{"mesh_floor_below_10_percent", st.all_valid}, {"monotone", st.monotone}});
}

// ------------------------------------------------------------------ efunc

struct EfuncArgs {
  std::vector<int> eps_exps{6, 7, 8, 9, 10, 11, 12};
  double delta = 0.02;
  double q = 2;
  double kappa = 1.5;
  int xi = 200;
};

int run_efunc(const Global& g, const EfuncArgs& args) {
  Run run(g, "efunc");
  EfuncConfig cfg;
  cfg.epsilons = powers_of_two(args.eps_exps);
  run.param_list("epsilons", cfg.epsilons);
  run.param("delta", args.delta);
  run.param("q", args.q);
  run.param("kappa", args.kappa);
  run.param("xi", args.xi);
  cfg.dom = domain_from_config(run.config());
  cfg.delta = args.delta;
  cfg.kappa = args.kappa;
  cfg.Xi = args.xi;
  cfg.efunc.q = args.q;
  cfg.efunc.threads = g.threads;
  cfg.decompose.threads = g.threads;
  const EfuncStudy st = error_functional_study(cfg);
  bool nonneg = true;
  {
    auto os = run.csv("efunc.csv", "epsilon,norm_q,gamma_area,min_value,points,cubes,runtime");
    for (const auto& r : st.records) {
      nonneg = nonneg && r.min_value >= 0;
      os << r.epsilon << "," << r.norm_q << "," << r.gamma_area << "," << r.min_value << "," << r.points << ","
         << r.cubes << "," << r.runtime << "\n";
    }
  }
  run.write_json("summary.json", {{"slope", st.slope}, {"target", st.target}});
  return run.finish(nonneg, {{"nonnegative", nonneg}, {"slope_meets_target", st.slope >= st.target}});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic homogenization of oscillating Dirichlet problems"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--config", g.config_path, "Key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.set_version_flag("--version", kVersion);

  CellArgs cell;
  auto* c = app.add_subcommand("cell", "Cell correctors and the homogenized tensor");
  c->add_option("--resolution", cell.resolution, "Grid per axis (power of two >= 8)");
  c->add_option("--tol", cell.tol, "Relative residual");
  c->add_option("--grid", cell.grid, "Output grid per axis for chi.csv");

  DiophArgs dioph;
  auto* d = app.add_subcommand("dioph", "Diophantine constants and boundary statistics");
  d->add_option("--n", dioph.n, "Direction (comma separated or 'golden')");
  d->add_option("--kappa", dioph.kappa, "Diophantine exponent");
  d->add_option("--xi", dioph.xi, "Lattice cutoff");
  d->add_option("--samples", dioph.samples, "Boundary samples");

  ErgodicArgs erg;
  auto* e = app.add_subcommand("ergodic", "Quasiperiodic quadrature against its error bound");
  e->add_option("--n", erg.n, "Direction (comma separated or 'golden')");
  e->add_option("--kappa", erg.kappa, "Diophantine exponent");
  e->add_option("--xi", erg.xi, "Lattice cutoff");
  e->add_option("--eta-exp", erg.eta_exps, "eta = 2^-k for each k");
  e->add_option("--k", erg.ks, "Derivative orders");
  e->add_option("--window", erg.window, "gaussian or bump")->check(CLI::IsMember({"gaussian", "bump"}));
  e->add_option("--radius", erg.radius, "Window scale");
  e->add_option("--seed", erg.seed, "Seed of the random field (when the config has no K)");
  e->add_option("--modes", erg.modes, "Conjugate pairs in the random field");
  e->add_option("--cutoff", erg.cutoff, "Largest |xi|_inf of the random field");

  DecomposeArgs dec;
  auto* k = app.add_subcommand("decompose", "Stopping-time cube decomposition of the boundary");
  k->add_option("--eps-exp", dec.eps_exp, "eps = 2^-k");
  k->add_option("--delta", dec.delta, "Exponent loss delta");
  k->add_option("--kappa", dec.kappa, "Diophantine exponent");
  k->add_option("--xi", dec.xi, "Lattice cutoff");
  k->add_option("--samples", dec.samples, "Boundary samples for the coverage check");

  LayerArgs lay;
  auto* l = app.add_subcommand("layer", "Half-space boundary layer with data from g.0.fast");
  l->add_option("--n", lay.n, "Normal (comma separated or 'golden')");
  l->add_option("--T", lay.T, "Layer depth");
  l->add_option("--shift", lay.shift, "Offset a of the half-space");
  l->add_option("--res-theta", lay.res_theta, "Fourier grid per torus axis");
  l->add_option("--res-t", lay.res_t, "Elements in t");
  l->add_option("--tol", lay.tol, "Relative residual");

  GbarArgs gb;
  auto* b = app.add_subcommand("gbar", "Homogenized boundary datum along the boundary");
  b->add_option("--samples", gb.samples, "Boundary samples (>= 16)");
  b->add_option("--kappa", gb.kappa, "Diophantine exponent");
  b->add_option("--xi", gb.xi, "Lattice cutoff");
  b->add_option("--cell-res", gb.cell_res, "Cell problem resolution");
  b->add_option("--T", gb.T, "Layer depth");

  ConvergeArgs conv;
  auto* v = app.add_subcommand("converge", "Rate study of ||u_eps - ubar||_q^q");
  v->add_option("--eps-exp", conv.eps_exps, "eps = 2^-k for each k (at least four)");
  v->add_option("--h-factor", conv.h_factor, "h = eps / factor (>= 8)");
  v->add_option("--q", conv.q, "Exponent q >= 2");
  v->add_option("--samples", conv.samples, "gbar samples");
  v->add_option("--cell-res", conv.cell_res, "Cell problem resolution");
  v->add_option("--mesh-check", conv.mesh_check, "Also solve at 2h to certify the mesh floor");

  EfuncArgs ef;
  auto* f = app.add_subcommand("efunc", "Scaling of the error functional outside the boundary layer");
  f->add_option("--eps-exp", ef.eps_exps, "eps = 2^-k for each k");
  f->add_option("--delta", ef.delta, "Exponent loss delta");
  f->add_option("--q", ef.q, "Exponent q");
  f->add_option("--kappa", ef.kappa, "Diophantine exponent");
  f->add_option("--xi", ef.xi, "Lattice cutoff");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*c) return run_cell(g, cell);
    if (*d) return run_dioph(g, dioph);
    if (*e) return run_ergodic(g, erg);
    if (*k) return run_decompose(g, dec);
    if (*l) return run_layer(g, lay);
    if (*b) return run_gbar(g, gb);
    if (*v) return run_converge(g, conv);
    if (*f) return run_efunc(g, ef);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
