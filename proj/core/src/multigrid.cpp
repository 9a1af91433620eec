#include "homog/multigrid.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "homog/fields.hpp"

namespace homog {

namespace {

constexpr int kDirs[6][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {-1, 1}, {1, -1}};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// A((i, j), (i + di, j + dj)) for a neighbour direction or the diagonal; 0 outside the lattice.
double coupling(const LatticeOperator& A, int i, int j, int di, int dj) {
  const LatticeRows& R = A.rows;
  std::int64_t q = -1;
  const float* w = nullptr;
  if (di == 1 && dj == 0) {
    q = R.id(i, j), w = A.e.data();
  } else if (di == -1 && dj == 0) {
    q = R.id(i - 1, j), w = A.e.data();
  } else if (di == 0 && dj == 1) {
    q = R.id(i, j), w = A.n.data();
  } else if (di == 0 && dj == -1) {
    q = R.id(i, j - 1), w = A.n.data();
  } else if (di == -1 && dj == 1) {
    q = R.id(i, j), w = A.nw.data();
  } else if (di == 1 && dj == -1) {
    q = R.id(i + 1, j - 1), w = A.nw.data();
  } else if (di == 0 && dj == 0) {
    const std::int64_t p = R.id(i, j);
    if (p < 0) return 0.0;
    double d = A.shift[p];
    for (const auto& dd : kDirs) d -= coupling(A, i, j, dd[0], dd[1]);
    return d;
  }
  if (q < 0 || R.id(i + di, j + dj) < 0) return 0.0;
  return w[q];
}

// Sums over the neighbours q of p = (i, j) in row r: sw = sum A(p, q), swx = sum A(p, q) x_q.
inline void neighbour_sums(const LatticeOperator& A, const double* x, int r, int i, std::int64_t p, double& sw,
                           double& swx) {
  const LatticeRows& R = A.rows;
  const int lo = R.lo[r], hi = R.hi[r];
  sw = 0, swx = 0;
  auto add = [&](double w, std::int64_t q) {
    sw += w;
    swx += w * x[q];
  };
  if (i < hi) add(A.e[p], p + 1);
  if (i > lo) add(A.e[p - 1], p - 1);
  if (r + 1 < R.rows()) {
    const int l1 = R.lo[r + 1], h1 = R.hi[r + 1];
    const std::int64_t o1 = R.offset[r + 1] - l1;
    if (i >= l1 && i <= h1) add(A.n[p], o1 + i);
    if (i - 1 >= l1 && i - 1 <= h1) add(A.nw[p], o1 + i - 1);
  }
  if (r > 0) {
    const int l0 = R.lo[r - 1], h0 = R.hi[r - 1];
    const std::int64_t o0 = R.offset[r - 1] - l0;
    if (i >= l0 && i <= h0) add(A.n[o0 + i], o0 + i);
    if (i + 1 >= l0 && i + 1 <= h0) add(A.nw[o0 + i + 1], o0 + i + 1);
  }
}

// (b - A x)_p written as b_p - shift_p x_p - sum A(p, q) (x_q - x_p).
inline double node_residual(const LatticeOperator& A, const double* x, double bp, int r, int i, std::int64_t p) {
  double sw, swx;
  neighbour_sums(A, x, r, i, p, sw, swx);
  return bp - A.shift[p] * x[p] - (swx - sw * x[p]);
}

void gauss_seidel(const LatticeOperator& A, std::vector<double>& x, const std::vector<double>* b, bool forward) {
  const LatticeRows& R = A.rows;
  const int nr = R.rows();
  for (int rr = 0; rr < nr; ++rr) {
    const int r = forward ? rr : nr - 1 - rr;
    const int lo = R.lo[r], hi = R.hi[r];
    for (int k = 0; k <= hi - lo; ++k) {
      const int i = forward ? lo + k : hi - k;
      const std::int64_t p = R.offset[r] + (i - lo);
      if (A.kind[p] != 0) continue;
      double sw, swx;
      neighbour_sums(A, x.data(), r, i, p, sw, swx);
      x[p] = ((b ? (*b)[p] : 0.0) - swx) / (A.shift[p] - sw);
    }
  }
}

// Coarse parents of fine node (i, j) with prolongation weights.
int parents(int i, int j, int (&pi)[2], int (&pj)[2], double (&w)[2]) {
  const bool ie = (i & 1) == 0, je = (j & 1) == 0;
  auto half = [](int v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); };
  if (ie && je) {
    pi[0] = half(i), pj[0] = half(j), w[0] = 1.0;
    return 1;
  }
  if (!ie && je) {
    pi[0] = half(i - 1), pj[0] = half(j), pi[1] = half(i + 1), pj[1] = half(j);
  } else if (ie && !je) {
    pi[0] = half(i), pj[0] = half(j - 1), pi[1] = half(i), pj[1] = half(j + 1);
  } else {
    pi[0] = half(i + 1), pj[0] = half(j - 1), pi[1] = half(i - 1), pj[1] = half(j + 1);
  }
  w[0] = w[1] = 0.5;
  return 2;
}

int ceil_half(int v) { return v >= 0 ? (v + 1) / 2 : -((-v) / 2); }
int floor_half(int v) { return v >= 0 ? v / 2 : -((-v + 1) / 2); }

LatticeOperator coarsen(const LatticeOperator& F) {
  const LatticeRows& R = F.rows;
  LatticeOperator C;
  const int J0 = ceil_half(R.j0), J1 = floor_half(R.j0 + R.rows() - 1);
  C.rows.j0 = J0;
  for (int J = J0; J <= J1; ++J) {
    const int r = 2 * J - R.j0;
    C.rows.lo.push_back(ceil_half(R.lo[r]));
    C.rows.hi.push_back(std::max(ceil_half(R.lo[r]), floor_half(R.hi[r])));
  }
  C.rows.finalize();
  C.resize(C.rows.size);
  for (int J = J0; J <= J1; ++J) {
    const int r = J - J0;
    for (int I = C.rows.lo[r]; I <= C.rows.hi[r]; ++I) {
      const std::int64_t P = C.rows.offset[r] + (I - C.rows.lo[r]);
      const std::int64_t pf = R.id(2 * I, 2 * J);
      C.kind[P] = pf < 0 ? -1 : (F.kind[pf] == 0 ? 0 : (F.kind[pf] == 1 ? 1 : -1));
    }
  }
  auto fine_free = [&](int i, int j) {
    const std::int64_t p = R.id(i, j);
    return p >= 0 && F.kind[p] == 0;
  };
  auto coarse_free = [&](int I, int J) {
    const std::int64_t P = C.rows.id(I, J);
    return P >= 0 && C.kind[P] == 0;
  };
  // Window of fine offsets [-4, 4]^2 around 2I.
  constexpr int W = 9, c0 = 4;
  for (int J = J0; J <= J1; ++J) {
    const int r = J - J0;
    for (int I = C.rows.lo[r]; I <= C.rows.hi[r]; ++I) {
      const std::int64_t P = C.rows.offset[r] + (I - C.rows.lo[r]);
      if (C.kind[P] != 0) continue;
      double ap[W][W] = {};
      const int ci = 2 * I, cj = 2 * J;
      for (int s = -1; s < 6; ++s) {
        const int di = s < 0 ? 0 : kDirs[s][0], dj = s < 0 ? 0 : kDirs[s][1];
        const int pi = ci + di, pj = cj + dj;
        if (!fine_free(pi, pj)) continue;
        const double wp = s < 0 ? 1.0 : 0.5;
        ap[c0 + di][c0 + dj] += wp * coupling(F, pi, pj, 0, 0);
        for (const auto& d : kDirs) {
          if (!fine_free(pi + d[0], pj + d[1])) continue;
          ap[c0 + di + d[0]][c0 + dj + d[1]] += wp * coupling(F, pi, pj, d[0], d[1]);
        }
      }
      auto apply_to = [&](int dI, int dJ) {
        const int I2 = I + dI, J2 = J + dJ;
        if (!coarse_free(I2, J2)) return 0.0;
        double acc = 0;
        for (int s = -1; s < 6; ++s) {
          const int di = s < 0 ? 0 : kDirs[s][0], dj = s < 0 ? 0 : kDirs[s][1];
          const int qi = 2 * I2 + di, qj = 2 * J2 + dj;
          const int wi = qi - ci + c0, wj = qj - cj + c0;
          if (wi < 0 || wi >= W || wj < 0 || wj >= W) continue;
          if (!fine_free(qi, qj)) continue;
          acc += (s < 0 ? 1.0 : 0.5) * ap[wi][wj];
        }
        return acc;
      };
      double row = apply_to(0, 0);
      for (const auto& d : kDirs) row += apply_to(d[0], d[1]);
      C.shift[P] = static_cast<float>(row);
      C.e[P] = static_cast<float>(apply_to(1, 0));
      C.n[P] = static_cast<float>(apply_to(0, 1));
      C.nw[P] = static_cast<float>(apply_to(-1, 1));
    }
  }
  return C;
}

struct DirectSolver {
  std::vector<std::int64_t> unknowns;
  std::vector<std::int64_t> index;  // node -> unknown or -1
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;

  explicit DirectSolver(const LatticeOperator& A) {
    const LatticeRows& R = A.rows;
    index.assign(A.size(), -1);
    for (std::int64_t p = 0; p < A.size(); ++p)
      if (A.kind[p] == 0) {
        index[p] = static_cast<std::int64_t>(unknowns.size());
        unknowns.push_back(p);
      }
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(unknowns.size() * 7);
    for (int r = 0; r < R.rows(); ++r) {
      const int j = R.j0 + r;
      for (int i = R.lo[r]; i <= R.hi[r]; ++i) {
        const std::int64_t p = R.offset[r] + (i - R.lo[r]);
        if (A.kind[p] != 0) continue;
        trip.emplace_back(index[p], index[p], coupling(A, i, j, 0, 0));
        for (const auto& d : kDirs) {
          const std::int64_t q = R.id(i + d[0], j + d[1]);
          if (q < 0 || A.kind[q] != 0) continue;
          const double v = coupling(A, i, j, d[0], d[1]);
          if (v != 0.0) trip.emplace_back(index[p], index[q], v);
        }
      }
    }
    Eigen::SparseMatrix<double> M(static_cast<Eigen::Index>(unknowns.size()),
                                  static_cast<Eigen::Index>(unknowns.size()));
    M.setFromTriplets(trip.begin(), trip.end());
    ldlt.compute(M);
    if (ldlt.info() != Eigen::Success) throw ConvergenceError("direct solve: factorization failed");
  }

  // Solves for the unknowns of x given b (b may be null) and Dirichlet values in x.
  void solve(const LatticeOperator& A, std::vector<double>& x, const std::vector<double>* b) const {
    const LatticeRows& R = A.rows;
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(unknowns.size()));
    for (int r = 0; r < R.rows(); ++r) {
      const int j = R.j0 + r;
      for (int i = R.lo[r]; i <= R.hi[r]; ++i) {
        const std::int64_t p = R.offset[r] + (i - R.lo[r]);
        if (A.kind[p] != 0) continue;
        double v = b ? (*b)[p] : 0.0;
        for (const auto& d : kDirs) {
          const std::int64_t q = R.id(i + d[0], j + d[1]);
          if (q < 0 || A.kind[q] == 0) continue;
          v -= coupling(A, i, j, d[0], d[1]) * x[q];
        }
        rhs[index[p]] = v;
      }
    }
    const Eigen::VectorXd sol = ldlt.solve(rhs);
    for (std::size_t k = 0; k < unknowns.size(); ++k) x[unknowns[k]] = sol[static_cast<Eigen::Index>(k)];
  }
};

}  // namespace

void LatticeRows::finalize() {
  offset.assign(lo.size(), 0);
  size = 0;
  for (std::size_t r = 0; r < lo.size(); ++r) {
    offset[r] = size;
    size += hi[r] - lo[r] + 1;
  }
}

void LatticeOperator::resize(std::int64_t n_nodes) {
  kind.assign(n_nodes, -1);
  shift.assign(n_nodes, 0.0f);
  e.assign(n_nodes, 0.0f);
  n.assign(n_nodes, 0.0f);
  nw.assign(n_nodes, 0.0f);
}

double LatticeOperator::residual(const std::vector<double>& x, const std::vector<double>* b,
                                 std::vector<double>* r) const {
  double acc = 0;
  if (r) r->assign(size(), 0.0);
  for (int row = 0; row < rows.rows(); ++row)
    for (int i = rows.lo[row]; i <= rows.hi[row]; ++i) {
      const std::int64_t p = rows.offset[row] + (i - rows.lo[row]);
      if (kind[p] != 0) continue;
      const double v = node_residual(*this, x.data(), b ? (*b)[p] : 0.0, row, i, p);
      if (r) (*r)[p] = v;
      acc += v * v;
    }
  return std::sqrt(acc);
}

struct Multigrid::Impl {
  MultigridOptions opt;
  std::vector<LatticeOperator> ops;
  mutable std::vector<std::vector<double>> x, b;
  std::unique_ptr<DirectSolver> coarse;

  // Residual of level l restricted into b[l + 1].
  void restrict_residual(int l, const std::vector<double>& xl) const {
    const LatticeOperator& A = ops[l];
    const LatticeOperator& C = ops[l + 1];
    const LatticeRows& R = A.rows;
    std::vector<double>& bc = b[l + 1];
    std::fill(bc.begin(), bc.end(), 0.0);
    for (int r = 0; r < R.rows(); ++r) {
      const int j = R.j0 + r;
      for (int i = R.lo[r]; i <= R.hi[r]; ++i) {
        const std::int64_t p = R.offset[r] + (i - R.lo[r]);
        if (A.kind[p] != 0) continue;
        const double res = node_residual(A, xl.data(), l > 0 ? b[l][p] : 0.0, r, i, p);
        int pi[2], pj[2];
        double w[2];
        const int np = parents(i, j, pi, pj, w);
        for (int k = 0; k < np; ++k) {
          const std::int64_t P = C.rows.id(pi[k], pj[k]);
          if (P >= 0 && C.kind[P] == 0) bc[P] += w[k] * res;
        }
      }
    }
  }

  void prolong_add(int l, std::vector<double>& xl) const {
    const LatticeOperator& A = ops[l];
    const LatticeOperator& C = ops[l + 1];
    const LatticeRows& R = A.rows;
    const std::vector<double>& xc = x[l + 1];
    for (int r = 0; r < R.rows(); ++r) {
      const int j = R.j0 + r;
      for (int i = R.lo[r]; i <= R.hi[r]; ++i) {
        const std::int64_t p = R.offset[r] + (i - R.lo[r]);
        if (A.kind[p] != 0) continue;
        int pi[2], pj[2];
        double w[2];
        const int np = parents(i, j, pi, pj, w);
        for (int k = 0; k < np; ++k) {
          const std::int64_t P = C.rows.id(pi[k], pj[k]);
          if (P >= 0 && C.kind[P] == 0) xl[p] += w[k] * xc[P];
        }
      }
    }
  }

  void cycle(int l, std::vector<double>& xl) const {
    const int last = static_cast<int>(ops.size()) - 1;
    const std::vector<double>* bl = l > 0 ? &b[l] : nullptr;
    if (l == last) {
      coarse->solve(ops[l], xl, bl);
      return;
    }
    for (int k = 0; k < opt.pre; ++k) gauss_seidel(ops[l], xl, bl, true);
    restrict_residual(l, xl);
    std::fill(x[l + 1].begin(), x[l + 1].end(), 0.0);
    cycle(l + 1, x[l + 1]);
    prolong_add(l, xl);
    for (int k = 0; k < opt.post; ++k) gauss_seidel(ops[l], xl, bl, false);
  }
};

Multigrid::Multigrid(LatticeOperator fine, const MultigridOptions& opt) : impl_(std::make_unique<Impl>()) {
  impl_->opt = opt;
  impl_->ops.push_back(std::move(fine));
  while (impl_->ops.back().size() > opt.coarse_size && impl_->ops.back().rows.rows() > 3) {
    LatticeOperator c = coarsen(impl_->ops.back());
    std::int64_t unknowns = 0;
    for (auto k : c.kind) unknowns += k == 0;
    if (unknowns == 0) break;
    impl_->ops.push_back(std::move(c));
  }
  impl_->x.resize(impl_->ops.size());
  impl_->b.resize(impl_->ops.size());
  for (std::size_t l = 1; l < impl_->ops.size(); ++l) {
    impl_->x[l].assign(impl_->ops[l].size(), 0.0);
    impl_->b[l].assign(impl_->ops[l].size(), 0.0);
  }
  impl_->coarse = std::make_unique<DirectSolver>(impl_->ops.back());
}

Multigrid::~Multigrid() = default;

int Multigrid::levels() const { return static_cast<int>(impl_->ops.size()); }
const LatticeOperator& Multigrid::fine() const { return impl_->ops.front(); }

SolveStats Multigrid::solve(std::vector<double>& x) const {
  const auto t0 = std::chrono::steady_clock::now();
  const LatticeOperator& A = impl_->ops.front();
  if (static_cast<std::int64_t>(x.size()) != A.size()) throw InvalidArgument("Multigrid::solve: size mismatch");
  SolveStats st;
  st.method = "multigrid";
  st.levels = levels();
  for (std::int64_t p = 0; p < A.size(); ++p)
    if (A.kind[p] == 0) x[p] = 0.0;
  const double r0 = A.residual(x, nullptr, nullptr);
  if (r0 == 0) {
    st.seconds = seconds_since(t0);
    return st;
  }
  double rel = 1.0;
  for (st.iterations = 1; st.iterations <= impl_->opt.max_cycles; ++st.iterations) {
    impl_->cycle(0, x);
    rel = A.residual(x, nullptr, nullptr) / r0;
    if (rel <= impl_->opt.tol) break;
  }
  st.iterations = std::min(st.iterations, impl_->opt.max_cycles);
  st.residual = rel;
  st.seconds = seconds_since(t0);
  if (rel > impl_->opt.tol) throw ConvergenceError("multigrid: residual did not reach the tolerance");
  return st;
}

SolveStats solve_direct(const LatticeOperator& op, std::vector<double>& x) {
  const auto t0 = std::chrono::steady_clock::now();
  if (static_cast<std::int64_t>(x.size()) != op.size()) throw InvalidArgument("solve_direct: size mismatch");
  SolveStats st;
  st.method = "direct";
  st.levels = 1;
  for (std::int64_t p = 0; p < op.size(); ++p)
    if (op.kind[p] == 0) x[p] = 0.0;
  const double r0 = op.residual(x, nullptr, nullptr);
  DirectSolver ds(op);
  ds.solve(op, x, nullptr);
  st.iterations = 1;
  st.residual = r0 > 0 ? op.residual(x, nullptr, nullptr) / r0 : 0.0;
  st.seconds = seconds_since(t0);
  return st;
}

}  // namespace homog
