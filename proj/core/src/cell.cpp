#include "homog/cell.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "homog/fft.hpp"
#include "homog/parallel.hpp"

namespace homog {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

using Vec = std::vector<cplx>;

double dot(const Vec& u, const Vec& v) {
  double s = 0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i].real() * v[i].real() + u[i].imag() * v[i].imag();
  return s;
}

void axpy(double a, const Vec& x, Vec& y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

// Fourier-Galerkin discretization of u -> -div(a grad u) on mean-zero L-vector
// fields with modes |xi_k| < N/2, products dealiased on a 3N/2 grid.
class CellOperator {
 public:
  CellOperator(const PeriodicTensor& a, int n) : d_(a.dim()), L_(a.sysdim()), n_(n), m_(3 * n / 2) {
    ns_ = 1;
    ms_ = 1;
    for (int i = 0; i < d_; ++i) {
      ns_ *= n_;
      ms_ *= m_;
    }
    freq_.resize(ns_ * d_);
    active_.resize(ns_);
    to_pad_.resize(ns_);
    for (std::size_t p = 0; p < ns_; ++p) {
      std::size_t r = p, q = 0, stride = 1;
      bool act = true;
      std::vector<int> xi(d_);
      for (int ax = d_ - 1; ax >= 0; --ax) {
        const int k = static_cast<int>(r % n_);
        r /= n_;
        xi[ax] = signed_frequency(k, n_);
        if (std::abs(xi[ax]) == n_ / 2) act = false;
      }
      for (int ax = d_ - 1; ax >= 0; --ax) {
        const int km = ((xi[ax] % m_) + m_) % m_;
        q += static_cast<std::size_t>(km) * stride;
        stride *= m_;
      }
      for (int ax = 0; ax < d_; ++ax) freq_[p * d_ + ax] = xi[ax];
      active_[p] = act && p != 0;
      to_pad_[p] = q;
    }
    fft_ = std::make_unique<FftN>(std::vector<int>(d_, m_));
    coeff_.assign(a.entries(), std::vector<double>(ms_));
    std::vector<double> y(d_), val(a.entries());
    for (std::size_t p = 0; p < ms_; ++p) {
      std::size_t r = p;
      for (int ax = d_ - 1; ax >= 0; --ax) {
        y[ax] = static_cast<double>(r % m_) / m_;
        r /= m_;
      }
      a.evaluate(y.data(), val.data());
      for (int e = 0; e < a.entries(); ++e) coeff_[e][p] = val[e];
    }
    mean_ = a.mean();
    a_ = &a;
  }

  std::size_t size() const { return ns_ * L_; }
  std::size_t grid() const { return ns_; }
  int xi(std::size_t p, int ax) const { return freq_[p * d_ + ax]; }
  bool active(std::size_t p) const { return active_[p]; }
  int tindex(int al, int be, int i, int j) const { return ((al * d_ + be) * L_ + i) * L_ + j; }

  void project(Vec& u) const {
    for (int k = 0; k < L_; ++k)
      for (std::size_t p = 0; p < ns_; ++p)
        if (!active_[p]) u[k * ns_ + p] = 0;
  }

  void apply(const Vec& u, Vec& out) const {
    std::vector<Vec> grad(d_ * L_, Vec(ms_));
    for (int g = 0; g < d_; ++g)
      for (int k = 0; k < L_; ++k) {
        Vec& buf = grad[g * L_ + k];
        std::fill(buf.begin(), buf.end(), cplx(0.0, 0.0));
        for (std::size_t p = 0; p < ns_; ++p)
          if (active_[p]) buf[to_pad_[p]] = cplx(0.0, kTwoPi * xi(p, g)) * u[k * ns_ + p];
        fft_->backward(buf.data());
      }
    Vec flux(ms_);
    std::fill(out.begin(), out.end(), cplx(0.0, 0.0));
    const double scale = 1.0 / static_cast<double>(ms_);
    for (int al = 0; al < d_; ++al)
      for (int i = 0; i < L_; ++i) {
        std::fill(flux.begin(), flux.end(), cplx(0.0, 0.0));
        for (int g = 0; g < d_; ++g)
          for (int k = 0; k < L_; ++k) {
            const auto& c = coeff_[tindex(al, g, i, k)];
            const Vec& gr = grad[g * L_ + k];
            for (std::size_t q = 0; q < ms_; ++q) flux[q] += c[q] * gr[q].real();
          }
        fft_->forward(flux.data());
        for (std::size_t p = 0; p < ns_; ++p)
          if (active_[p])
            out[i * ns_ + p] -= cplx(0.0, kTwoPi * xi(p, al)) * flux[to_pad_[p]] * scale;
      }
  }

  // div(a e_beta) column j, exact from the mode table of a.
  Vec rhs(int beta, int j) const {
    Vec f(size(), cplx(0.0, 0.0));
    for (const auto& m : a_->field().modes()) {
      std::size_t p = 0;
      bool inside = true;
      for (int ax = 0; ax < d_; ++ax) {
        if (std::abs(m.xi[ax]) >= n_ / 2) inside = false;
        p = p * n_ + static_cast<std::size_t>(((m.xi[ax] % n_) + n_) % n_);
      }
      if (!inside || !active_[p]) continue;
      for (int i = 0; i < L_; ++i) {
        cplx acc = 0;
        for (int al = 0; al < d_; ++al) acc += cplx(0.0, kTwoPi * m.xi[al]) * m.c[tindex(al, beta, i, j)];
        f[i * ns_ + p] = acc;
      }
    }
    return f;
  }

  // Inverse of the mean-coefficient operator, mode by mode.
  void precondition(const Vec& r, Vec& z) const {
    Eigen::MatrixXcd K(L_, L_);
    Eigen::VectorXcd b(L_);
    for (std::size_t p = 0; p < ns_; ++p) {
      if (!active_[p]) {
        for (int k = 0; k < L_; ++k) z[k * ns_ + p] = 0;
        continue;
      }
      if (L_ == 1) {
        double s = 0;
        for (int al = 0; al < d_; ++al)
          for (int g = 0; g < d_; ++g) s += mean_[tindex(al, g, 0, 0)] * xi(p, al) * xi(p, g);
        z[p] = r[p] / (kTwoPi * kTwoPi * s);
        continue;
      }
      for (int i = 0; i < L_; ++i) {
        b(i) = r[i * ns_ + p];
        for (int k = 0; k < L_; ++k) {
          double s = 0;
          for (int al = 0; al < d_; ++al)
            for (int g = 0; g < d_; ++g) s += mean_[tindex(al, g, i, k)] * xi(p, al) * xi(p, g);
          K(i, k) = kTwoPi * kTwoPi * s;
        }
      }
      Eigen::VectorXcd x = K.partialPivLu().solve(b);
      for (int k = 0; k < L_; ++k) z[k * ns_ + p] = x(k);
    }
  }

 private:
  int d_, L_, n_, m_;
  std::size_t ns_ = 0, ms_ = 0;
  std::vector<int> freq_;
  std::vector<bool> active_;
  std::vector<std::size_t> to_pad_;
  std::unique_ptr<FftN> fft_;
  std::vector<std::vector<double>> coeff_;
  std::vector<double> mean_;
  const PeriodicTensor* a_ = nullptr;
};

struct SolveStats {
  double residual = 0;
  int iterations = 0;
};

SolveStats pcg(const CellOperator& op, const Vec& f, Vec& u, double tol, int max_iter) {
  const double fn = std::sqrt(dot(f, f));
  std::fill(u.begin(), u.end(), cplx(0.0, 0.0));
  if (fn == 0) return {0.0, 0};
  Vec r = f, z(u.size()), p(u.size()), q(u.size());
  op.project(r);
  op.precondition(r, z);
  p = z;
  double rz = dot(r, z);
  for (int it = 1; it <= max_iter; ++it) {
    op.apply(p, q);
    const double alpha = rz / dot(p, q);
    axpy(alpha, p, u);
    axpy(-alpha, q, r);
    op.project(r);
    const double rn = std::sqrt(dot(r, r)) / fn;
    if (rn <= tol) return {rn, it};
    op.precondition(r, z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
  }
  throw ConvergenceError("cell: conjugate gradient did not reach tolerance within the iteration cap");
}

SolveStats bicgstab(const CellOperator& op, const Vec& f, Vec& u, double tol, int max_iter) {
  const double fn = std::sqrt(dot(f, f));
  std::fill(u.begin(), u.end(), cplx(0.0, 0.0));
  if (fn == 0) return {0.0, 0};
  const std::size_t n = u.size();
  Vec r = f, r0 = f, p(n, 0.0), v(n, 0.0), s(n), t(n), ph(n), sh(n);
  op.project(r);
  r0 = r;
  double rho = 1, alpha = 1, omega = 1;
  for (int it = 1; it <= max_iter; ++it) {
    const double rho_new = dot(r0, r);
    if (rho_new == 0) break;
    const double beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    op.precondition(p, ph);
    op.apply(ph, v);
    alpha = rho / dot(r0, v);
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    op.project(s);
    if (std::sqrt(dot(s, s)) / fn <= tol) {
      axpy(alpha, ph, u);
      return {std::sqrt(dot(s, s)) / fn, it};
    }
    op.precondition(s, sh);
    op.apply(sh, t);
    omega = dot(t, s) / dot(t, t);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] += alpha * ph[i] + omega * sh[i];
      r[i] = s[i] - omega * t[i];
    }
    op.project(r);
    const double rn = std::sqrt(dot(r, r)) / fn;
    if (rn <= tol) return {rn, it};
  }
  throw ConvergenceError("cell: BiCGSTAB did not reach tolerance within the iteration cap");
}

bool power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

CellSolution solve_impl(const PeriodicTensor& a, const CellOptions& opt, bool adjoint) {
  if (!power_of_two(opt.resolution) || opt.resolution < 8)
    throw InvalidArgument("cell: resolution must be a power of two >= 8");
  if (!(opt.tol > 0)) throw InvalidArgument("cell: tolerance must be positive");
  const int d = a.dim(), L = a.sysdim();
  CellOperator op(a, opt.resolution);
  const int cap = opt.max_iter > 0 ? opt.max_iter : 10 * opt.resolution;
  const bool sym = a.is_symmetric(1e-14);
  CellSolution sol;
  sol.dim = d;
  sol.sysdim = L;
  sol.resolution = opt.resolution;
  sol.adjoint = adjoint;
  sol.chi.assign(d * L, Vec(op.size(), cplx(0.0, 0.0)));
  std::vector<SolveStats> stats(d * L);
  parallel_for(d * L, opt.threads, [&](std::size_t col) {
    const int beta = static_cast<int>(col) / L, j = static_cast<int>(col) % L;
    Vec f = op.rhs(beta, j);
    stats[col] = sym ? pcg(op, f, sol.chi[col], opt.tol, cap) : bicgstab(op, f, sol.chi[col], opt.tol, cap);
  });
  for (const auto& s : stats) {
    sol.residual = std::max(sol.residual, s.residual);
    sol.iterations = std::max(sol.iterations, s.iterations);
  }
  sol.abar = homogenized_tensor(sol, a);
  return sol;
}

}  // namespace

std::size_t CellSolution::grid_size() const {
  std::size_t n = 1;
  for (int i = 0; i < dim; ++i) n *= resolution;
  return n;
}

cplx CellSolution::coefficient(int beta, int i, int j, const Lattice& xi) const {
  if (static_cast<int>(xi.size()) != dim) throw InvalidArgument("CellSolution: wrong lattice dimension");
  std::size_t p = 0;
  for (int ax = 0; ax < dim; ++ax) {
    if (std::abs(xi[ax]) >= resolution / 2) return {0.0, 0.0};
    p = p * resolution + static_cast<std::size_t>(((xi[ax] % resolution) + resolution) % resolution);
  }
  return chi.at(index(beta, i, j))[i * grid_size() + p];
}

double CellSolution::value(int beta, int i, int j, const std::vector<double>& y) const {
  return field(beta).evaluate(y, i * sysdim + j);
}

double CellSolution::gradient(int beta, int i, int j, int gamma, const std::vector<double>& y) const {
  const auto& c = chi.at(index(beta, i, j));
  const std::size_t ns = grid_size();
  double acc = 0;
  for (std::size_t p = 0; p < ns; ++p) {
    const cplx v = c[i * ns + p];
    if (v == cplx(0.0, 0.0)) continue;
    std::size_t r = p;
    double phase = 0;
    int xg = 0;
    for (int ax = dim - 1; ax >= 0; --ax) {
      const int k = signed_frequency(static_cast<int>(r % resolution), resolution);
      r /= resolution;
      phase += k * y[ax];
      if (ax == gamma) xg = k;
    }
    acc += (cplx(0.0, kTwoPi * xg) * v * std::exp(cplx(0.0, kTwoPi * phase))).real();
  }
  return acc;
}

PeriodicField CellSolution::field(int beta, double drop) const {
  const std::size_t ns = grid_size();
  const int L = sysdim;
  double mx = 0;
  for (int j = 0; j < L; ++j)
    for (const auto& v : chi.at(beta * L + j)) mx = std::max(mx, std::abs(v));
  std::vector<FieldMode> modes;
  for (std::size_t p = 0; p < ns; ++p) {
    FieldMode fm{Lattice(dim), std::vector<cplx>(L * L, cplx(0.0, 0.0))};
    bool keep = false;
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) {
        const cplx v = chi[beta * L + j][i * ns + p];
        if (std::abs(v) > drop * mx && v != cplx(0.0, 0.0)) keep = true;
        fm.c[i * L + j] = v;
      }
    if (!keep) continue;
    std::size_t r = p;
    for (int ax = dim - 1; ax >= 0; --ax) {
      fm.xi[ax] = signed_frequency(static_cast<int>(r % resolution), resolution);
      r /= resolution;
    }
    modes.push_back(std::move(fm));
  }
  if (modes.empty()) modes.push_back({Lattice(dim, 0), std::vector<cplx>(L * L, cplx(0.0, 0.0))});
  return PeriodicField(dim, L * L, std::move(modes));
}

std::vector<double> homogenized_tensor(const CellSolution& sol, const PeriodicTensor& a) {
  if (sol.dim != a.dim() || sol.sysdim != a.sysdim())
    throw InvalidArgument("homogenized_tensor: solution and coefficient shapes differ");
  if (static_cast<int>(sol.chi.size()) != sol.dim * sol.sysdim)
    throw InvalidArgument("homogenized_tensor: solution has no correctors");
  const int d = a.dim(), L = a.sysdim(), N = sol.resolution;
  const std::size_t ns = sol.grid_size();
  std::vector<double> t = a.mean();
  for (const auto& m : a.field().modes()) {
    std::size_t p = 0;
    bool inside = true;
    for (int ax = 0; ax < d; ++ax) {
      if (std::abs(m.xi[ax]) >= N / 2) inside = false;
      p = p * N + static_cast<std::size_t>((((-m.xi[ax]) % N) + N) % N);
    }
    if (!inside) continue;
    // a-hat(xi) pairs with chi-hat(-xi); d_g chi-hat(-xi) = -2 pi i xi_g chi-hat(-xi).
    for (int al = 0; al < d; ++al)
      for (int be = 0; be < d; ++be)
        for (int i = 0; i < L; ++i)
          for (int j = 0; j < L; ++j) {
            cplx acc = 0;
            for (int g = 0; g < d; ++g)
              for (int k = 0; k < L; ++k)
                acc += m.c[a.index(al, g, i, k)] * cplx(0.0, -kTwoPi * m.xi[g]) *
                       sol.chi[be * L + j][k * ns + p];
            t[a.index(al, be, i, j)] += acc.real();
          }
  }
  return t;
}

CellSolution solve_corrector(const PeriodicTensor& a, const CellOptions& opt) {
  return solve_impl(a, opt, false);
}

CellSolution adjoint_corrector(const PeriodicTensor& a, const CellOptions& opt) {
  return solve_impl(a.adjoint(), opt, true);
}

CellEnergy cell_energy(const CellSolution& sol, const PeriodicTensor& a, int beta, int j) {
  CellOperator op(a, sol.resolution);
  const Vec& u = sol.chi.at(beta * sol.sysdim + j);
  Vec au(u.size());
  op.apply(u, au);
  return {dot(u, au), dot(op.rhs(beta, j), u)};
}

std::pair<double, double> tensor_eigen_range(const std::vector<double>& t, int dim, int sysdim) {
  const int n = dim * sysdim;
  Eigen::MatrixXd A(n, n);
  for (int al = 0; al < dim; ++al)
    for (int be = 0; be < dim; ++be)
      for (int i = 0; i < sysdim; ++i)
        for (int j = 0; j < sysdim; ++j)
          A(al * sysdim + i, be * sysdim + j) = t[((al * dim + be) * sysdim + i) * sysdim + j];
  Eigen::MatrixXd S = 0.5 * (A + A.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

}  // namespace homog
