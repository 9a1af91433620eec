#pragma once

#include <vector>

#include "homog/dioph.hpp"
#include "homog/fields.hpp"

namespace homog {

struct LayerOptions {
  int res_theta = 32;     // Fourier grid per torus axis (even, >= 8)
  int res_t = 400;        // elements in t
  double h0 = 1e-3;       // first element length at t = a
  double growth = 1.05;   // geometric growth of the graded part
  double hmax = 0;        // uniform spacing after grading; 0 picks it so the mesh has res_t elements
  double tol = 1e-10;     // relative residual of the linear solve
  int max_iter = 0;       // 0 means 20 times the element count
  bool check_decay = true;
  double decay_threshold = 1e-4;  // gradient norm in the last element relative to the peak
  int threads = 1;
};

// Graded t-mesh on [a, T]: geometric from h0 up to hmax, then uniform.
struct LayerMesh {
  std::vector<double> t;
  double hmax = 0;
};
LayerMesh make_layer_mesh(double a, double T, const LayerOptions& opt);

struct DecaySample {
  double t = 0;         // element midpoint
  double dt_norm = 0;   // || d_t V ||_{L^2(T^d)}
  double tan_norm = 0;  // || N^T grad_theta V ||_{L^2(T^d)}
  double total() const { return dt_norm + tan_norm; }
};

// V(theta, t) for theta in T^2 and t in [a, T], stored as half-spectrum
// Fourier coefficients per t-node: coeff[(k * L + i) * S + r * (res/2+1) + c].
struct LayerSolution {
  int sysdim = 1;
  int res = 0;
  std::vector<double> n;
  Frame frame;
  double a = 0;
  double T = 0;
  LayerMesh mesh;
  std::vector<cplx> coeff;
  std::vector<cplx> flux0;  // conormal flux at t = a, half spectrum per component
  std::vector<double> tail;
  std::vector<DecaySample> decay;
  double residual = 0;
  int iterations = 0;
  bool symmetric = true;

  int half() const { return res / 2 + 1; }
  int spectrum() const { return res * half(); }
  int nodes() const { return static_cast<int>(mesh.t.size()); }
  cplx coefficient(int node, int comp, int xi1, int xi2) const;
  double value(int comp, const std::vector<double>& theta, double t) const;
  // Trace derivative d_t V(theta, a) by one-sided second-order differencing,
  // returned on a res x res grid per component (row-major).
  std::vector<double> trace_derivative_grid() const;
};

// Node-0 data V0(theta + a n) on the half spectrum of a res x res grid.
std::vector<cplx> layer_data(const PeriodicField& V0, const std::vector<double>& n, double a, int res);

// Solves -D.(b(theta + t n) D V) = 0 with D = (N^T grad_theta, d_t), b = M^T a M,
// V(., a) = data, homogeneous Neumann for the zero mode and Dirichlet for the
// other modes at t = T.
LayerSolution solve_layer(const PeriodicTensor& a, const Frame& frame, const std::vector<cplx>& data, double a_shift,
                          double T, const LayerOptions& opt = {});
LayerSolution solve_layer(const PeriodicTensor& a, const Frame& frame, const PeriodicField& V0, double a_shift,
                          double T, const LayerOptions& opt = {});

// Zero mode at t = T. Throws when the gradient at T has not decayed.
std::vector<double> layer_tail(const LayerSolution& sol, double threshold = 1e-4);

struct DecayFit {
  double rate = 0;      // exponential: norm ~ exp(-rate (t - a))
  double order = 0;     // polynomial: norm ~ (t - a)^{-order}
  int samples = 0;
  bool monotone = true; // envelope nonincreasing after the initial layer
};
// Fits over element midpoints in [t_lo, t_hi] whose norm exceeds floor * peak.
DecayFit decay_fit(const LayerSolution& sol, double t_lo, double t_hi, double floor = 1e-12);

struct ContinuityResult {
  double difference = 0;  // sup over theta of |d_t (V1 - V2)(theta, a)|
  double dn = 0;          // |n1 - n2|
  double A = 0;           // A_lb(n2)
  double shape = 0;       // dn / A^{3/2} (1 + dn / A)
  double ratio = 0;       // difference / shape
};
ContinuityResult layer_continuity(const PeriodicTensor& a, const Direction& n1, const Direction& n2,
                                  const PeriodicField& V0, double a_shift, double T, const LayerOptions& opt = {});

}  // namespace homog
