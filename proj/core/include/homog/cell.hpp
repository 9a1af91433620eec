#pragma once

#include <vector>

#include "homog/fields.hpp"

namespace homog {

struct CellOptions {
  int resolution = 64;
  double tol = 1e-10;
  int max_iter = 0;  // 0 selects 10 * resolution
  int threads = 1;
};

// Periodic correctors chi^beta (L x L matrix fields) in Fourier form on an
// N^d grid (FFT index layout) together with the homogenized tensor.
struct CellSolution {
  int dim = 0;
  int sysdim = 0;
  int resolution = 0;
  // chi[beta * L + j] holds L blocks of N^d coefficients; block k is chi^beta_{kj}.
  std::vector<std::vector<cplx>> chi;
  std::vector<double> abar;  // PeriodicTensor index layout, d*d*L*L entries
  double residual = 0;       // largest relative residual over all columns
  int iterations = 0;        // largest iteration count over all columns
  bool adjoint = false;

  std::size_t grid_size() const;
  int index(int beta, [[maybe_unused]] int i, int j) const { return beta * sysdim + j; }
  cplx coefficient(int beta, int i, int j, const Lattice& xi) const;
  // chi^beta_{ij}(y) by Fourier synthesis.
  double value(int beta, int i, int j, const std::vector<double>& y) const;
  // d/dy_gamma chi^beta_{ij}(y).
  double gradient(int beta, int i, int j, int gamma, const std::vector<double>& y) const;
  // chi^beta as a PeriodicField with L*L components (i*L + j), modes with
  // |c| <= drop * max|c| omitted.
  PeriodicField field(int beta, double drop = 0.0) const;
  double abar_entry(int alpha, int beta, int i, int j) const {
    return abar[((alpha * dim + beta) * sysdim + i) * sysdim + j];
  }
};

CellSolution solve_corrector(const PeriodicTensor& a, const CellOptions& opt = {});
CellSolution adjoint_corrector(const PeriodicTensor& a, const CellOptions& opt = {});

// abar^{ab}_{ij} = <a^{ab}_{ij}> + <a^{ag}_{ik} d_g chi^b_{kj}>, exact over the mode table of a.
std::vector<double> homogenized_tensor(const CellSolution& sol, const PeriodicTensor& a);

// Galerkin operator B(u, v) = <a grad u, grad v> and right side <-a e_beta, grad v>
// for the (beta, j) column; used by energy-identity checks.
struct CellEnergy {
  double form = 0;  // B(chi, chi)
  double rhs = 0;   // right side paired with chi
};
CellEnergy cell_energy(const CellSolution& sol, const PeriodicTensor& a, int beta, int j);

// Smallest and largest eigenvalue of the symmetric part of abar (dL x dL).
std::pair<double, double> tensor_eigen_range(const std::vector<double>& t, int dim, int sysdim);

}  // namespace homog
