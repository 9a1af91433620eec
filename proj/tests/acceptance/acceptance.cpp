#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "homog/cell.hpp"
#include "homog/convergence.hpp"
#include "homog/czdecomp.hpp"
#include "homog/ergodic.hpp"
#include "homog/gbar.hpp"
#include "homog/halfspace.hpp"

using namespace homog;

namespace {

constexpr double kPi = 3.141592653589793;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

PeriodicTensor study_coefficient() {
  return PeriodicTensor::isotropic(
      ModeBuilder(2, 1).add_constant(0, 2.0).add_sin({1, 0}, 0, 1.0).add_cos({0, 1}, 0, 0.5).build(), 1, 0.2);
}

PeriodicTensor layer_coefficient() {
  return PeriodicTensor::isotropic(ModeBuilder(2, 1)
                                       .add_constant(0, 2.0)
                                       .add_sin({1, 0}, 0, 0.5)
                                       .add_cos({0, 1}, 0, 0.4)
                                       .add_cos({1, 1}, 0, 0.3)
                                       .build(),
                                   1, 0.3);
}

Outcome cell_laminate() {
  const auto t0 = std::chrono::steady_clock::now();
  const PeriodicTensor a =
      PeriodicTensor::isotropic(ModeBuilder(2, 1).add_constant(0, 2.0).add_sin({1, 0}, 0, 1.0).build(), 1, 1.0 / 3);
  CellOptions opt;
  opt.resolution = 128;
  const CellSolution sol = solve_corrector(a, opt);
  const double rt = seconds_since(t0);
  const double e11 = std::abs(sol.abar_entry(0, 0, 0, 0) - std::sqrt(3.0));
  const double e22 = std::abs(sol.abar_entry(1, 1, 0, 0) - 2.0);
  std::ostringstream os;
  os << "|a11-sqrt3|=" << fmt("%.2e", e11) << " |a22-2|=" << fmt("%.2e", e22) << " runtime=" << fmt("%.2fs", rt);
  return {e11 <= 1e-8 && e22 <= 1e-8 && rt < 5, os.str()};
}

Outcome ergodic_bound_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const Direction dir = dioph_constant(golden_direction(), 1.5, 200);
  const SmoothWindow psi = SmoothWindow::gaussian(1, 1.0);
  std::vector<double> etas;
  for (int k = 2; k <= 8; ++k) etas.push_back(std::ldexp(1.0, -k));
  int total = 0, passed = 0;
  double worst = 0;
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const PeriodicField K = random_band_limited(2, 5, 3, seed);
    const ErgodicTable t = verify_ergodic(psi, K, dir, etas, {1, 2, 3});
    for (const auto& r : t.rows) {
      ++total;
      passed += r.pass;
      if (r.bound > 0) worst = std::max(worst, r.error / r.bound);
    }
  }
  const double rt = seconds_since(t0);
  std::ostringstream os;
  os << passed << "/" << total << " inequalities hold, max error/bound=" << fmt("%.3e", worst)
     << " runtime=" << fmt("%.2fs", rt);
  return {passed == total && rt < 10, os.str()};
}

Outcome decomposition_properties() {
  const auto dom = ConvexDomain::disc();
  const double delta = 0.02;
  bool ok = true;
  double cmin = 1e300, cmax = 0, Cmin = 1e300, Cmax = 0, pu_worst = 0, rt_max = 0;
  std::ostringstream os;
  for (int k : {8, 10, 12}) {
    const auto t0 = std::chrono::steady_clock::now();
    const double eps = std::ldexp(1.0, -k);
    const CubePartition part = decompose_diophantine(dom, eps, delta, 1.5, 200);
    const PartitionChecks chk = check_partition(part, dom, diophantine_driver(dom, eps, delta, 1.5, 200), 10000);
    const PartitionOfUnity pu(part);
    for (int i = 0; i < 10000; ++i) {
      const Eigen::Vector2d x = dom.chart(2 * kPi * (i + 0.5) / 10000).point;
      double sum = 0;
      for (const auto& e : pu.evaluate(x)) sum += e.value;
      pu_worst = std::max(pu_worst, std::abs(sum - 1));
    }
    const double rt = seconds_since(t0);
    rt_max = std::max(rt_max, rt);
    ok = ok && chk.ok() && rt < 30;
    cmin = std::min(cmin, chk.c_lower), cmax = std::max(cmax, chk.c_lower);
    Cmin = std::min(Cmin, chk.C_upper), Cmax = std::max(Cmax, chk.C_upper);
    os << "eps=2^-" << k << ": cubes=" << part.cubes.size() << " c=" << fmt("%.3g", chk.c_lower)
       << " C=" << fmt("%.3g", chk.C_upper) << " misses=" << chk.coverage_misses + chk.cubes_missing_boundary +
                                                                 chk.essinf_violations + chk.neighbor_violations +
                                                                 chk.overlaps
       << " (" << fmt("%.1fs", rt) << "); ";
  }
  const bool stable = cmax <= 2 * cmin && Cmax <= 2 * Cmin;
  os << "sum psi-1 max=" << fmt("%.2e", pu_worst);
  return {ok && stable && pu_worst <= 1e-10, os.str()};
}

Outcome halfspace_layer() {
  const auto n = golden_direction();
  const Frame f = build_frame(n);
  auto t0 = std::chrono::steady_clock::now();
  const LayerSolution s = solve_layer(PeriodicTensor::identity(2, 1, 0.5), f,
                                      ModeBuilder(2, 1).add_cos({1, 0}, 0, 1.0).build(), 0.0, 30.0);
  double rt_max = seconds_since(t0);
  const double exact = 2 * kPi * std::abs(f.N(0, 0));
  const DecayFit fit = decay_fit(s, 1.0, 4.0);
  const double rel = std::abs(fit.rate / exact - 1);
  const PeriodicTensor a = layer_coefficient();
  const PeriodicField V0 =
      ModeBuilder(2, 1).add_constant(0, 1.0).add_cos({1, 0}, 0, 1.0).add_sin({0, 1}, 0, 0.7).build();
  LayerOptions opt;
  t0 = std::chrono::steady_clock::now();
  const LayerSolution s1 = solve_layer(a, f, V0, 0.0, 30.0, opt);
  rt_max = std::max(rt_max, seconds_since(t0));
  opt.hmax = s1.mesh.hmax;
  opt.res_t = 0;
  t0 = std::chrono::steady_clock::now();
  const LayerSolution s2 = solve_layer(a, f, V0, 0.0, 60.0, opt);
  rt_max = std::max(rt_max, seconds_since(t0));
  const double drift = std::abs(s1.tail[0] - s2.tail[0]);
  std::ostringstream os;
  os << "rate=" << fmt("%.5f", fit.rate) << " exact=" << fmt("%.5f", exact) << " rel=" << fmt("%.2e", rel)
     << " tail=" << fmt("%.2e", std::abs(s.tail[0])) << " drift(T=30,60)=" << fmt("%.2e", drift)
     << " max solve=" << fmt("%.2fs", rt_max);
  return {rel <= 0.05 && std::abs(s.tail[0]) <= 1e-8 && drift <= 1e-5 && rt_max < 60, os.str()};
}

Outcome gbar_identities() {
  const PeriodicTensor a = layer_coefficient();
  CellOptions copt;
  copt.tol = 1e-12;
  const CellSolution adj = adjoint_corrector(a, copt);
  const auto n = golden_direction();
  const Direction dir = dioph_constant(n, 1.5, 200);
  const BoundaryWeight w(a, adj, n);
  const TwoScaleBoundaryDatum g0({DatumTerm{SlowFactor::constant(1.0), PeriodicField::constant(2, {1.7})}});
  const double e_const = std::abs(compute_gbar(0.0, {0, 0}, dir, w, g0, 64).gbar[0] - 1.7);

  const PeriodicTensor I = PeriodicTensor::identity(2, 1, 0.5);
  const CellSolution adjI = adjoint_corrector(I, copt);
  const BoundaryWeight wI(I, adjI, n);
  const TwoScaleBoundaryDatum gm({DatumTerm{
      SlowFactor::constant(1.0),
      ModeBuilder(2, 1).add_constant(0, 0.3).add_cos({1, 0}, 0, 1.0).add_sin({2, 1}, 0, 0.5).build()}});
  const double e_id = std::abs(compute_gbar(0.0, {0, 0}, dir, wI, gm, 64).gbar[0] - 0.3);

  WeightCache cache(a, adj);
  std::vector<std::pair<double, double>> pairs;
  for (int i = 0; i < 20; ++i) {
    const double s = 0.137 + 2 * kPi * i / 20;
    pairs.push_back({s, s + 1e-3 * (1 + i % 4)});
  }
  const TwoScaleBoundaryDatum gc({DatumTerm{SlowFactor::constant(1.0),
                                            ModeBuilder(2, 1).add_cos({1, 0}, 0, 1.0).add_sin({1, 1}, 0, 0.5).build()}});
  const GbarProfile prof = gbar_pairs(ConvexDomain::disc(), gc, cache, 1.5, 200, pairs);
  std::ostringstream os;
  os << "|gbar-g0|=" << fmt("%.2e", e_const) << " |gbar-mean|(a=Id)=" << fmt("%.2e", e_id)
     << " continuity pairs=" << prof.increments.size() << " max ratio=" << fmt("%.4g", prof.max_ratio);
  const bool bounded = prof.increments.size() == 20 && std::isfinite(prof.max_ratio);
  return {e_const <= 1e-6 && e_id <= 1e-8 && bounded, os.str()};
}

Outcome desk_convergence(int threads) {
  RateConfig cfg;
  cfg.a = study_coefficient();
  SlowFactor slow;
  slow.modes = {{0, cplx(1.0, 0.0)}, {1, cplx(0.25, 0.0)}, {-1, cplx(0.25, 0.0)}};
  cfg.g = TwoScaleBoundaryDatum(
      {DatumTerm{slow, ModeBuilder(2, 1).add_constant(0, 0.5).add_cos({1, 1}, 0, 1.0).build()}});
  for (int k = 6; k <= 9; ++k) cfg.epsilons.push_back(std::ldexp(1.0, -k));
  cfg.threads = threads;
  const RateStudy st = rate_study(cfg);
  std::ostringstream os;
  double worst_floor = 0;
  for (const auto& r : st.records) {
    worst_floor = std::max(worst_floor, r.mesh_floor / r.error_Lq);
    std::printf("    eps=%-10g h=%-12g E=%.6e E(2h)=%.6e floor/E=%.4f valid=%d nodes=%lld %.1fs\n", r.epsilon, r.h,
                r.error_Lq, r.error_coarse, r.mesh_floor / r.error_Lq, r.valid, static_cast<long long>(r.nodes),
                r.runtime);
  }
  os << "slope=" << fmt("%.4f", st.slope) << " (>= 0.30) max floor/E=" << fmt("%.4f", worst_floor)
     << " (<= 0.10) gbar profile " << st.profile.samples.size() << " samples in " << fmt("%.0fs", st.gbar_seconds);
  return {st.slope >= 0.30 && st.all_valid, os.str()};
}

Outcome efunc_scaling(int threads) {
  const auto t0 = std::chrono::steady_clock::now();
  EfuncConfig cfg;
  for (int k = 6; k <= 12; ++k) cfg.epsilons.push_back(std::ldexp(1.0, -k));
  cfg.efunc.threads = threads;
  cfg.decompose.threads = threads;
  const EfuncStudy st = error_functional_study(cfg);
  const double rt = seconds_since(t0);
  std::vector<double> eps, gam;
  std::ostringstream os;
  os << "norms:";
  for (const auto& r : st.records) {
    os << " " << fmt("%.4g", r.norm_q);
    eps.push_back(r.epsilon);
    gam.push_back(r.gamma_area);
  }
  os << "; slope=" << fmt("%.4f", st.slope) << " (>= 0.30) |Gamma| slope=" << fmt("%.3f", fit_slope(eps, gam))
     << " runtime=" << fmt("%.1fs", rt);
  return {st.slope >= 0.30 && rt < 120, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> only, allow;
  int threads = 1;
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--allow-fail", allow, "Criteria whose failure does not change the exit code");
  app.add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);
  const std::set<int> sel(only.begin(), only.end()), allowed(allow.begin(), allow.end());

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"cell laminate means", cell_laminate},
      {"ergodic bound", ergodic_bound_check},
      {"decomposition properties", decomposition_properties},
      {"half-space layer", halfspace_layer},
      {"gbar identities", gbar_identities},
      {"desk-scale convergence", [threads] { return desk_convergence(threads); }},
      {"error functional scaling", [threads] { return efunc_scaling(threads); }},
  };
  int hard_failures = 0, failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!sel.empty() && !sel.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    std::printf("[%s] %d %s: %s (%.1fs)\n", out.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                out.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
    if (!out.pass) {
      ++failures;
      if (!allowed.count(id)) ++hard_failures;
    }
  }
  std::printf("%d criteria failed, %d outside the allowed set\n", failures, hard_failures);
  return hard_failures == 0 ? 0 : 1;
}
