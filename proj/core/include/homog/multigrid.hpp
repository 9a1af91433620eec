#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace homog {

// Row-compressed index set of a triangular lattice. Node (i, j) with
// lo[j - j0] <= i <= hi[j - j0] has id offset[j - j0] + i - lo[j - j0].
// Neighbours of (i, j): (i +- 1, j), (i, j +- 1), (i + 1, j - 1), (i - 1, j + 1).
struct LatticeRows {
  int j0 = 0;
  std::vector<int> lo, hi;
  std::vector<std::int64_t> offset;
  std::int64_t size = 0;

  int rows() const { return static_cast<int>(lo.size()); }
  std::int64_t id(int i, int j) const {
    const int r = j - j0;
    if (r < 0 || r >= rows() || i < lo[r] || i > hi[r]) return -1;
    return offset[r] + (i - lo[r]);
  }
  void finalize();
};

// Symmetric 7-point operator on a lattice. Couplings are stored at the lower
// endpoint: e to (i+1, j), n to (i, j+1), nw to (i-1, j+1). The diagonal is
// shift - (sum of the six couplings), so shift is the row sum and vanishes
// wherever constants are in the kernel. kind is 0 for unknowns, 1 for
// Dirichlet nodes and -1 for unused lattice points.
struct LatticeOperator {
  LatticeRows rows;
  std::vector<signed char> kind;
  std::vector<float> shift, e, n, nw;

  std::int64_t size() const { return rows.size; }
  void resize(std::int64_t n_nodes);
  // r = b - A x on unknowns (b may be empty for b = 0); returns ||r||_2.
  double residual(const std::vector<double>& x, const std::vector<double>* b, std::vector<double>* r) const;
};

struct MultigridOptions {
  int pre = 2;
  int post = 2;
  std::int64_t coarse_size = 3000;  // direct solve below this many nodes
  double tol = 1e-10;              // relative residual
  int max_cycles = 200;
};

struct SolveStats {
  std::string method;
  int iterations = 0;
  double residual = 0;  // relative residual
  double seconds = 0;
  int levels = 0;
};

// Geometric multigrid with Galerkin coarse operators and linear interpolation
// on the nested lattice hierarchy (every second node in each direction).
class Multigrid {
 public:
  Multigrid(LatticeOperator fine, const MultigridOptions& opt = {});
  ~Multigrid();
  Multigrid(const Multigrid&) = delete;
  Multigrid& operator=(const Multigrid&) = delete;

  // x holds Dirichlet values on kind == 1 nodes; solves A x = 0 on unknowns.
  SolveStats solve(std::vector<double>& x) const;
  int levels() const;
  const LatticeOperator& fine() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Sparse LDL^T solve of the same problem.
SolveStats solve_direct(const LatticeOperator& op, std::vector<double>& x);

}  // namespace homog
