#pragma once

#include <array>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <Eigen/Dense>

#include "homog/cell.hpp"
#include "homog/dioph.hpp"
#include "homog/fields.hpp"
#include "homog/halfspace.hpp"

namespace homog {

struct GbarOptions {
  int quadrature_res = 64;  // torus grid for the mean, >= layer resolution
  double T = 30.0;          // layer depth
  int max_doublings = 3;    // T (and the t-resolution) doubles while the layer has not decayed
  LayerOptions layer{};
};

// Periodic boundary weight omega(n, theta) = h (d_t U) b^{dd} for the plane with
// unit normal n. U_k = nu.y e_k + chi*_{nu,k} + W_k with nu = -n the inward
// normal and W_k the adjoint boundary layer with datum -chi*_{nu,k}.
class BoundaryWeight {
 public:
  BoundaryWeight(const PeriodicTensor& a, const CellSolution& adjoint, const std::vector<double>& n,
                 const GbarOptions& opt = {});
  BoundaryWeight(const PeriodicTensor& a, const CellSolution& adjoint, const std::vector<double>& n,
                 const Frame& frame, const GbarOptions& opt = {});

  int sysdim() const { return L_; }
  const std::vector<double>& normal() const { return n_; }
  const Eigen::MatrixXd& h() const { return h_; }
  const std::vector<LayerSolution>& layers() const { return layers_; }

  // The three pieces of omega(theta): b^{dd} part, corrector part, layer part.
  // Each is L x L and they sum to omega.
  std::array<Eigen::MatrixXd, 3> pieces(const double* theta) const;
  Eigen::MatrixXd omega(const double* theta) const;
  // omega on a res x res grid, entry (i, j) at [(i * L + j) * res * res + p].
  std::vector<double> grid(int res) const;
  // The three pieces on a res x res grid, piece q entry (i, j) at [((q * L + i) * L + j) * res * res + p].
  std::vector<double> piece_grid(int res) const;
  // Largest entry of |mean(omega) - Id| on the res x res grid.
  double normalization_error(int res) const;

 private:
  void build(const PeriodicTensor& a, const CellSolution& adjoint, const Frame& frame, const GbarOptions& opt);
  int L_ = 1;
  std::vector<double> n_;
  std::vector<double> nu_;
  Eigen::MatrixXd h_;
  PeriodicTensor a_;
  // Gradient of chi*_{nu,k}: field with components (k * L + l) * 2 + beta.
  PeriodicField grad_chi_;
  std::vector<LayerSolution> layers_;
};

// Thread-safe insert-or-get cache of boundary weights keyed by the normal
// quantized to 1e-12.
class WeightCache {
 public:
  WeightCache(const PeriodicTensor& a, const CellSolution& adjoint, const GbarOptions& opt = {});
  std::shared_ptr<const BoundaryWeight> get(const std::vector<double>& n);
  std::size_t size() const;
  const GbarOptions& options() const { return opt_; }

 private:
  PeriodicTensor a_;
  const CellSolution* adjoint_;
  GbarOptions opt_;
  mutable std::mutex mutex_;
  std::map<std::pair<long long, long long>, std::shared_ptr<const BoundaryWeight>> cache_;
};

struct GbarSample {
  double s = 0;
  Eigen::Vector2d x = Eigen::Vector2d::Zero();
  Direction n;
  std::vector<double> gbar;
  // Contributions of the identity, corrector and layer pieces; they sum to gbar.
  std::array<std::vector<double>, 3> components;
  int quadrature_res = 0;
};

// gbar(x) = mean over theta of omega(n(x), theta) g(x, theta) on a res x res grid.
GbarSample compute_gbar(double s, const Eigen::Vector2d& x, const Direction& n, const BoundaryWeight& w,
                        const TwoScaleBoundaryDatum& g, int res);
GbarSample compute_gbar(const ConvexDomain& dom, double s, const TwoScaleBoundaryDatum& g, WeightCache& cache,
                        double kappa = 1.5, int Xi = 200);

// omega~^eps(x) = omega(n(xbar), x / eps mod 1) for x on the tangent plane at xbar.
Eigen::MatrixXd tilde_omega(const BoundaryWeight& w, double epsilon, const Eigen::Vector2d& x);

struct GbarIncrement {
  int i = 0, j = 0;  // sample indices
  double dg = 0;     // |gbar_i - gbar_j|
  double dn = 0;     // |n_i - n_j|
  double A = 0;      // min of the two Diophantine constants
  double ratio = 0;  // dg A^{3/2} / dn
};

struct GbarProfile {
  std::vector<GbarSample> samples;
  std::vector<GbarIncrement> increments;  // consecutive pairs with both A_lb > 0
  double max_ratio = 0;
  double seminorm_half = 0;  // discrete W^{1/2,1} seminorm of the first component
  int rational_samples = 0;
};

GbarProfile gbar_profile(const ConvexDomain& dom, const TwoScaleBoundaryDatum& g, WeightCache& cache, double kappa,
                         int Xi, int samples, int threads = 1);

// Discrete W^{s,1} seminorm of periodic boundary samples (chart parameter s_i,
// points x_i, values v_i) with trapezoid weights along the boundary.
double boundary_seminorm(const ConvexDomain& dom, const std::vector<double>& s, const std::vector<double>& values,
                         double order);

// Continuity ratios |gbar(n1) - gbar(n2)| A^{3/2} / |n1 - n2| for pairs of
// nearby boundary points with Diophantine normals.
GbarProfile gbar_pairs(const ConvexDomain& dom, const TwoScaleBoundaryDatum& g, WeightCache& cache, double kappa,
                       int Xi, const std::vector<std::pair<double, double>>& pairs, int threads = 1);

}  // namespace homog
