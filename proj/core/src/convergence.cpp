#include "homog/convergence.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "homog/cell.hpp"
#include "homog/parallel.hpp"

namespace homog {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Assembles the P1 operator with element coefficient K(centroid) (row-major 2 x 2).
template <class Coefficient>
LatticeOperator assemble(const HexMesh& mesh, Coefficient&& coeff) {
  LatticeOperator A;
  A.rows = mesh.rows();
  A.resize(mesh.nodes());
  A.kind = mesh.kind();
  mesh.for_each_element([&](const std::array<std::int64_t, 3>& id, const std::array<Eigen::Vector2d, 3>& x,
                            bool upper) {
    if (signed_area(x) <= 0) return;
    double K[4];
    coeff((x[0] + x[1] + x[2]) / 3.0, K);
    const Eigen::Matrix3d S = p1_stiffness(x, K);
    if (!upper) {
      A.e[id[0]] += static_cast<float>(S(0, 1));
      A.n[id[0]] += static_cast<float>(S(0, 2));
      A.nw[id[1]] += static_cast<float>(S(1, 2));
    } else {
      A.n[id[0]] += static_cast<float>(S(0, 1));
      A.e[id[2]] += static_cast<float>(S(1, 2));
      A.nw[id[0]] += static_cast<float>(S(0, 2));
    }
  });
  return A;
}

SolveStats run_solver(LatticeOperator&& A, std::vector<double>& x, double h, const FemOptions& opt) {
  if (h >= opt.direct_min_h) return solve_direct(A, x);
  MultigridOptions mg = opt.mg;
  mg.tol = opt.tol;
  Multigrid solver(std::move(A), mg);
  return solver.solve(x);
}

void check_symmetric(const PeriodicTensor& a) {
  if (a.dim() != 2 || a.sysdim() != 1) throw InvalidArgument("finite elements: d = 2 and L = 1 only");
  if (!a.is_symmetric(1e-12)) throw InvalidArgument("finite elements: the coefficient must be symmetric");
}

}  // namespace

namespace {

// Without the h <= eps/8 guard; the mesh check of a study runs one level coarser.
DiscreteSolution oscillating(const PeriodicTensor& a, const TwoScaleBoundaryDatum& g,
                             std::shared_ptr<const HexMesh> mesh, double epsilon, const FemOptions& opt) {
  check_symmetric(a);
  if (!(epsilon > 0)) throw InvalidArgument("solve_oscillating: epsilon must be positive");
  if (g.sysdim() != 1 || g.dim() != 2) throw InvalidArgument("solve_oscillating: scalar datum in d = 2 required");
  DiscreteSolution sol;
  sol.mesh = mesh;
  sol.h = mesh->max_diameter();
  sol.values.assign(mesh->nodes(), 0.0);
  const auto& bid = mesh->boundary_node_ids();
  for (std::size_t k = 0; k < bid.size(); ++k) {
    const Eigen::Vector2d y = mesh->boundary_positions()[k] / epsilon;
    const double yy[2] = {y.x(), y.y()};
    g.evaluate(mesh->boundary_parameters()[k], yy, &sol.values[bid[k]]);
  }
  std::vector<double> av(a.entries());
  LatticeOperator A = assemble(*mesh, [&](const Eigen::Vector2d& c, double* K) {
    const double y[2] = {c.x() / epsilon, c.y() / epsilon};
    a.evaluate(y, av.data());
    K[0] = av[a.index(0, 0, 0, 0)], K[1] = av[a.index(0, 1, 0, 0)];
    K[2] = av[a.index(1, 0, 0, 0)], K[3] = av[a.index(1, 1, 0, 0)];
  });
  sol.stats = run_solver(std::move(A), sol.values, mesh->spacing(), opt);
  return sol;
}

}  // namespace

DiscreteSolution solve_oscillating(const PeriodicTensor& a, const TwoScaleBoundaryDatum& g,
                                   std::shared_ptr<const HexMesh> mesh, double epsilon, const FemOptions& opt) {
  if (mesh->spacing() > epsilon / 8 * (1 + 1e-12))
    throw InvalidArgument("solve_oscillating: h must not exceed eps/8");
  return oscillating(a, g, std::move(mesh), epsilon, opt);
}

DiscreteSolution solve_oscillating(const PeriodicTensor& a, const TwoScaleBoundaryDatum& g, const ConvexDomain& dom,
                                   double epsilon, double h, const FemOptions& opt) {
  if (h > epsilon / 8 * (1 + 1e-12)) throw InvalidArgument("solve_oscillating: h must not exceed eps/8");
  return solve_oscillating(a, g, std::make_shared<const HexMesh>(dom, h, opt.alpha), epsilon, opt);
}

double BoundaryProfile::operator()(double t) const {
  if (s.empty()) throw InvalidArgument("BoundaryProfile: empty profile");
  if (s.size() == 1) return values[0];
  const double w = wrap_angle(t);
  // Samples are sorted on [0, 2 pi); the last interval wraps to the first sample.
  const std::size_t n = s.size();
  const std::size_t hi = static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), w) - s.begin()) % n;
  const std::size_t lo = (hi + n - 1) % n;
  double gap = s[hi] - s[lo], off = w - s[lo];
  if (gap <= 0) gap += kTwoPi;
  if (off < 0) off += kTwoPi;
  const double theta = std::clamp(off / gap, 0.0, 1.0);
  return (1 - theta) * values[lo] + theta * values[hi];
}

BoundaryProfile BoundaryProfile::from_gbar(const GbarProfile& prof) {
  BoundaryProfile out;
  for (const auto& smp : prof.samples) {
    out.s.push_back(wrap_angle(smp.s));
    out.values.push_back(smp.gbar.at(0));
  }
  std::vector<std::size_t> order(out.s.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return out.s[a] < out.s[b]; });
  BoundaryProfile sorted;
  for (auto i : order) {
    sorted.s.push_back(out.s[i]);
    sorted.values.push_back(out.values[i]);
  }
  return sorted;
}

DiscreteSolution solve_homogenized(const std::vector<double>& abar, const BoundaryProfile& profile,
                                   std::shared_ptr<const HexMesh> mesh, const FemOptions& opt) {
  if (abar.size() != 4) throw InvalidArgument("solve_homogenized: abar must have 4 entries (d = 2, L = 1)");
  if (std::abs(abar[1] - abar[2]) > 1e-12 * (std::abs(abar[0]) + std::abs(abar[3])))
    throw InvalidArgument("solve_homogenized: abar must be symmetric");
  DiscreteSolution sol;
  sol.mesh = mesh;
  sol.h = mesh->max_diameter();
  sol.values.assign(mesh->nodes(), 0.0);
  const auto& bid = mesh->boundary_node_ids();
  for (std::size_t k = 0; k < bid.size(); ++k) sol.values[bid[k]] = profile(mesh->boundary_parameters()[k]);
  LatticeOperator A = assemble(*mesh, [&](const Eigen::Vector2d&, double* K) {
    for (int q = 0; q < 4; ++q) K[q] = abar[q];
  });
  sol.stats = run_solver(std::move(A), sol.values, mesh->spacing(), opt);
  return sol;
}

DiscreteSolution solve_homogenized(const std::vector<double>& abar, const BoundaryProfile& profile,
                                   const ConvexDomain& dom, double h, const FemOptions& opt) {
  return solve_homogenized(abar, profile, std::make_shared<const HexMesh>(dom, h, opt.alpha), opt);
}

namespace {

// P1 interpolant of u at x, by locating x in the lattice triangulation; the
// nearest active vertex is used where no element contains x.
double interpolate(const DiscreteSolution& u, const Eigen::Vector2d& x) {
  const HexMesh& m = *u.mesh;
  const Eigen::Vector2d uv = m.lattice_coordinates(x);
  const int i = static_cast<int>(std::floor(uv.x())), j = static_cast<int>(std::floor(uv.y()));
  const double fu = uv.x() - i, fv = uv.y() - j;
  int vi[3], vj[3];
  if (fu + fv <= 1.0) {
    vi[0] = i, vj[0] = j, vi[1] = i + 1, vj[1] = j, vi[2] = i, vj[2] = j + 1;
  } else {
    vi[0] = i + 1, vj[0] = j, vi[1] = i + 1, vj[1] = j + 1, vi[2] = i, vj[2] = j + 1;
  }
  std::int64_t id[3];
  bool ok = true;
  for (int k = 0; k < 3; ++k) {
    id[k] = m.rows().id(vi[k], vj[k]);
    ok = ok && id[k] >= 0 && m.kind()[id[k]] >= 0;
  }
  if (ok) {
    const std::array<Eigen::Vector2d, 3> p{m.position(vi[0], vj[0]), m.position(vi[1], vj[1]),
                                           m.position(vi[2], vj[2])};
    const double A = signed_area(p);
    if (A > 0) {
      const double l1 = signed_area({p[0], x, p[2]}) / A, l2 = signed_area({p[0], p[1], x}) / A;
      const double l0 = 1 - l1 - l2;
      return l0 * u.values[id[0]] + l1 * u.values[id[1]] + l2 * u.values[id[2]];
    }
  }
  double best = 1e300, v = 0;
  for (int di = -1; di <= 2; ++di)
    for (int dj = -1; dj <= 2; ++dj) {
      const std::int64_t q = m.rows().id(i + di, j + dj);
      if (q < 0 || m.kind()[q] < 0) continue;
      const double d = (m.position(i + di, j + dj) - x).squaredNorm();
      if (d < best) best = d, v = u.values[q];
    }
  return v;
}

}  // namespace

double error_norm(const DiscreteSolution& u1, const DiscreteSolution& u2, double q, int refine) {
  if (q < 2) throw InvalidArgument("error_norm: q must be at least 2");
  if (refine < 1) throw InvalidArgument("error_norm: refine must be positive");
  const bool same = u1.mesh == u2.mesh ||
                    (u1.mesh->spacing() == u2.mesh->spacing() && u1.mesh->alpha() == u2.mesh->alpha() &&
                     u1.mesh->nodes() == u2.mesh->nodes());
  const DiscreteSolution& fine = u1.mesh->spacing() <= u2.mesh->spacing() ? u1 : u2;
  const DiscreteSolution& coarse = &fine == &u1 ? u2 : u1;
  std::vector<double> other;
  const std::vector<double>* ov = &coarse.values;
  if (!same) {
    const HexMesh& m = *fine.mesh;
    other.assign(m.nodes(), 0.0);
    const LatticeRows& R = m.rows();
    for (int r = 0; r < R.rows(); ++r)
      for (int i = R.lo[r]; i <= R.hi[r]; ++i) {
        const std::int64_t p = R.offset[r] + (i - R.lo[r]);
        if (m.kind()[p] >= 0) other[p] = interpolate(coarse, m.position(i, R.j0 + r));
      }
    ov = &other;
  }
  static const double qa[7][3] = {{1.0 / 3, 1.0 / 3, 1.0 / 3},
                                  {0.0597158717897698, 0.4701420641051151, 0.4701420641051151},
                                  {0.4701420641051151, 0.0597158717897698, 0.4701420641051151},
                                  {0.4701420641051151, 0.4701420641051151, 0.0597158717897698},
                                  {0.7974269853530873, 0.1012865073234563, 0.1012865073234563},
                                  {0.1012865073234563, 0.7974269853530873, 0.1012865073234563},
                                  {0.1012865073234563, 0.1012865073234563, 0.7974269853530873}};
  static const double qw[7] = {0.225,
                               0.1323941527885062,
                               0.1323941527885062,
                               0.1323941527885062,
                               0.1259391805448271,
                               0.1259391805448271,
                               0.1259391805448271};
  double acc = 0;
  fine.mesh->for_each_element([&](const std::array<std::int64_t, 3>& id, const std::array<Eigen::Vector2d, 3>& x,
                                  bool) {
    const double A = signed_area(x);
    if (A <= 0) return;
    double e[3];
    for (int k = 0; k < 3; ++k) e[k] = fine.values[id[k]] - (*ov)[id[k]];
    if (q == 2 && refine == 1) {
      acc += A / 6 * (e[0] * e[0] + e[1] * e[1] + e[2] * e[2] + e[0] * e[1] + e[1] * e[2] + e[2] * e[0]);
      return;
    }
    const double sub = A / (refine * refine);
    // Barycentric sub-triangles of a refine x refine split.
    for (int a = 0; a < refine; ++a)
      for (int b = 0; a + b < refine; ++b)
        for (int up = 0; up < 2; ++up) {
          if (up && a + b + 1 >= refine) continue;
          double c[3][2];
          if (!up) {
            c[0][0] = a, c[0][1] = b, c[1][0] = a + 1, c[1][1] = b, c[2][0] = a, c[2][1] = b + 1;
          } else {
            c[0][0] = a + 1, c[0][1] = b, c[1][0] = a + 1, c[1][1] = b + 1, c[2][0] = a, c[2][1] = b + 1;
          }
          for (int k = 0; k < 7; ++k) {
            double l1 = 0, l2 = 0;
            for (int v = 0; v < 3; ++v) {
              l1 += qa[k][v] * c[v][0] / refine;
              l2 += qa[k][v] * c[v][1] / refine;
            }
            const double val = (1 - l1 - l2) * e[0] + l1 * e[1] + l2 * e[2];
            acc += qw[k] * sub * std::pow(std::abs(val), q);
          }
        }
  });
  return acc;
}

double fit_slope(const std::vector<double>& eps, const std::vector<double>& values) {
  if (eps.size() != values.size() || eps.size() < 2) throw InvalidArgument("fit_slope: need matching samples");
  const double n = static_cast<double>(eps.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    if (!(eps[i] > 0) || !(values[i] > 0)) throw InvalidArgument("fit_slope: positive samples required");
    mx += std::log(eps[i]);
    my += std::log(values[i]);
  }
  mx /= n, my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double dx = std::log(eps[i]) - mx;
    sxy += dx * (std::log(values[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

RateStudy rate_study(const RateConfig& cfg) {
  if (cfg.epsilons.size() < 4) throw InvalidArgument("rate_study: at least four eps values required");
  if (cfg.h_factor < 8) throw InvalidArgument("rate_study: h must not exceed eps/8");
  check_symmetric(cfg.a);
  RateStudy study;
  const auto tg = std::chrono::steady_clock::now();
  CellOptions copt;
  copt.resolution = cfg.cell_res;
  copt.threads = cfg.threads;
  const CellSolution cell = solve_corrector(cfg.a, copt);
  const CellSolution adj = adjoint_corrector(cfg.a, copt);
  study.abar = cell.abar;
  GbarOptions gopt = cfg.gbar;
  gopt.layer.check_decay = false;
  WeightCache cache(cfg.a, adj, gopt);
  study.profile = gbar_profile(cfg.dom, cfg.g, cache, cfg.kappa, cfg.Xi, cfg.gbar_samples, cfg.threads);
  const BoundaryProfile prof = BoundaryProfile::from_gbar(study.profile);
  study.gbar_seconds = seconds_since(tg);

  std::vector<double> eps = cfg.epsilons;
  std::sort(eps.begin(), eps.end(), std::greater<double>());
  FemOptions fem = cfg.fem;
  fem.threads = cfg.threads;
  auto measure = [&](double e, double h, SolveStats* so, SolveStats* sh, std::int64_t* nodes) {
    auto mesh = std::make_shared<const HexMesh>(cfg.dom, h, fem.alpha);
    if (nodes) *nodes = mesh->nodes();
    double err = 0;
    {
      const DiscreteSolution ue = oscillating(cfg.a, cfg.g, mesh, e, fem);
      const DiscreteSolution ub = solve_homogenized(study.abar, prof, mesh, fem);
      err = error_norm(ue, ub, cfg.q);
      if (so) *so = ue.stats;
      if (sh) *sh = ub.stats;
    }
    return err;
  };
  std::vector<double> errs;
  for (double e : eps) {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentRecord rec;
    rec.epsilon = e;
    rec.h = e / cfg.h_factor;
    rec.q = cfg.q;
    rec.config_hash = cfg.config_hash;
    if (cfg.mesh_check) rec.error_coarse = measure(e, 2 * rec.h, nullptr, nullptr, nullptr);
    rec.error_Lq = measure(e, rec.h, &rec.osc, &rec.hom, &rec.nodes);
    if (cfg.mesh_check) {
      rec.mesh_floor = std::abs(rec.error_Lq - rec.error_coarse) / 3;
      rec.valid = rec.mesh_floor <= 0.1 * rec.error_Lq;
    }
    rec.runtime = seconds_since(t0);
    study.all_valid = study.all_valid && rec.valid;
    if (!study.records.empty() && rec.error_Lq > study.records.back().error_Lq) study.monotone = false;
    study.records.push_back(rec);
    errs.push_back(rec.error_Lq);
  }
  study.slope = fit_slope(eps, errs);
  return study;
}

EfuncStudy error_functional_study(const EfuncConfig& cfg) {
  if (cfg.epsilons.size() < 2) throw InvalidArgument("error_functional_study: at least two eps values required");
  EfuncStudy study;
  study.target = 1.0 / 3.0 - 2 * cfg.delta;
  std::vector<double> eps, vals;
  for (double e : cfg.epsilons) {
    const auto t0 = std::chrono::steady_clock::now();
    const CubePartition part = decompose_diophantine(cfg.dom, e, cfg.delta, cfg.kappa, cfg.Xi, cfg.decompose);
    const EfuncNorm nrm = error_functional_norm(part, cfg.dom, e, cfg.efunc);
    EfuncRecord rec;
    rec.epsilon = e;
    rec.norm_q = nrm.norm_q;
    rec.gamma_area = nrm.gamma_area;
    rec.min_value = nrm.min_value;
    rec.points = nrm.points;
    rec.cubes = part.cubes.size();
    rec.runtime = seconds_since(t0);
    study.records.push_back(rec);
    eps.push_back(e);
    vals.push_back(nrm.norm_q);
  }
  study.slope = fit_slope(eps, vals);
  return study;
}

}  // namespace homog
