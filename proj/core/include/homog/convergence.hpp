#pragma once

#include <memory>
#include <string>
#include <vector>

#include "homog/czdecomp.hpp"
#include "homog/fields.hpp"
#include "homog/gbar.hpp"
#include "homog/hexmesh.hpp"
#include "homog/multigrid.hpp"

namespace homog {

struct FemOptions {
  double tol = 1e-10;                // relative residual of the iterative solve
  double direct_min_h = 1.0 / 256;   // sparse factorization when h >= direct_min_h
  double alpha = 0.3;                // boundary fitting depth in units of h
  MultigridOptions mg{};
  int threads = 1;
};

// P1 solution on a boundary-fitted triangular lattice mesh (scalar problems).
struct DiscreteSolution {
  std::shared_ptr<const HexMesh> mesh;
  std::vector<double> values;  // per lattice node, 0 on unused points
  double h = 0;                // largest element diameter
  SolveStats stats;
};

// -div(a(x/eps) grad u) = 0 in the domain, u(x) = g(x, x/eps) on boundary nodes.
// Refuses h > eps/8.
DiscreteSolution solve_oscillating(const PeriodicTensor& a, const TwoScaleBoundaryDatum& g, const ConvexDomain& dom,
                                   double epsilon, double h, const FemOptions& opt = {});
DiscreteSolution solve_oscillating(const PeriodicTensor& a, const TwoScaleBoundaryDatum& g,
                                   std::shared_ptr<const HexMesh> mesh, double epsilon, const FemOptions& opt = {});

// Samples of a boundary function against the chart parameter, read back by
// periodic linear interpolation.
struct BoundaryProfile {
  std::vector<double> s;
  std::vector<double> values;
  double operator()(double t) const;
  static BoundaryProfile from_gbar(const GbarProfile& prof);
};

// -div(abar grad u) = 0 with u = profile on boundary nodes; abar in
// PeriodicTensor layout (d*d entries for L = 1).
DiscreteSolution solve_homogenized(const std::vector<double>& abar, const BoundaryProfile& profile,
                                   const ConvexDomain& dom, double h, const FemOptions& opt = {});
DiscreteSolution solve_homogenized(const std::vector<double>& abar, const BoundaryProfile& profile,
                                   std::shared_ptr<const HexMesh> mesh, const FemOptions& opt = {});

// int |u1 - u2|^q over the meshed domain, q >= 2. On different meshes the
// coarser solution is interpolated onto the finer mesh. Each element is split
// into refine^2 pieces with a degree-5 rule (q = 2 with refine = 1 is exact).
double error_norm(const DiscreteSolution& u1, const DiscreteSolution& u2, double q, int refine = 1);

// Least-squares slope of log(values) against log(eps).
double fit_slope(const std::vector<double>& eps, const std::vector<double>& values);

struct ExperimentRecord {
  double epsilon = 0;
  double h = 0;
  double q = 2;
  double error_Lq = 0;     // ||u_eps - ubar||_q^q at h
  double error_coarse = 0; // same at 2h
  double mesh_floor = 0;   // |E_h - E_2h| / 3
  bool valid = true;       // mesh_floor <= 0.1 * error_Lq
  double runtime = 0;
  std::int64_t nodes = 0;
  SolveStats osc, hom;
  std::string config_hash;
};

struct RateConfig {
  PeriodicTensor a;
  TwoScaleBoundaryDatum g;
  ConvexDomain dom = ConvexDomain::disc();
  std::vector<double> epsilons;
  double h_factor = 8;  // h = eps / h_factor
  double q = 2;
  int gbar_samples = 512;
  GbarOptions gbar{};
  int cell_res = 64;
  double kappa = 1.5;
  int Xi = 200;
  FemOptions fem{};
  bool mesh_check = true;
  std::string config_hash;
  int threads = 1;
};

struct RateStudy {
  std::vector<ExperimentRecord> records;
  double slope = 0;
  bool all_valid = true;
  bool monotone = true;  // error nonincreasing as eps decreases
  std::vector<double> abar;
  GbarProfile profile;
  double gbar_seconds = 0;
};

RateStudy rate_study(const RateConfig& cfg);

struct EfuncConfig {
  ConvexDomain dom = ConvexDomain::disc();
  std::vector<double> epsilons;
  double delta = 0.02;
  double kappa = 1.5;
  int Xi = 200;
  EfuncOptions efunc{};
  DecomposeOptions decompose{};
};

struct EfuncRecord {
  double epsilon = 0;
  double norm_q = 0;
  double gamma_area = 0;
  double min_value = 0;
  long points = 0;
  std::size_t cubes = 0;
  double runtime = 0;
};

struct EfuncStudy {
  std::vector<EfuncRecord> records;
  double slope = 0;
  double target = 0;  // 1/3 - 2 delta
};

EfuncStudy error_functional_study(const EfuncConfig& cfg);

}  // namespace homog
