#include "homog/halfspace.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "homog/fft.hpp"
#include "homog/parallel.hpp"

namespace homog {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
const cplx kI(0.0, 1.0);

// Half spectrum of an N x N real grid; mode s = r * H + c has xi = (signed(r), c).
struct HalfSpectrum {
  int N = 0, H = 0, S = 0;
  explicit HalfSpectrum(int n) : N(n), H(n / 2 + 1), S(n * (n / 2 + 1)) {}
  int xi1(int s) const { return signed_frequency(s / H, N); }
  int xi2(int s) const { return s % H; }
  bool active(int s) const { return std::abs(xi1(s)) < N / 2 && xi2(s) < N / 2; }
  double weight(int s) const { return active(s) ? (xi2(s) == 0 ? 1.0 : 2.0) : 0.0; }
  int padded(int s, int P) const {
    const int r = ((xi1(s) % P) + P) % P;
    return r * (P / 2 + 1) + xi2(s);
  }
};

class LayerOperator {
 public:
  LayerOperator(const PeriodicTensor& b, const Eigen::Vector2d& n, const Eigen::Vector2d& Ncol, const LayerMesh& mesh,
                int N, int threads)
      : L_(b.sysdim()), spec_(N), P_(3 * N / 2 + (3 * N / 2) % 2), mesh_(&mesh), threads_(threads), fft_(P_, P_) {
    const int K = elements();
    c_.resize(spec_.S);
    for (int s = 0; s < spec_.S; ++s) c_[s] = Ncol.x() * spec_.xi1(s) + Ncol.y() * spec_.xi2(s);
    pad_.resize(spec_.S);
    for (int s = 0; s < spec_.S; ++s) pad_[s] = spec_.padded(s, P_);
    const int E = 4 * L_ * L_;
    const std::size_t G = static_cast<std::size_t>(P_) * P_;
    bgrid_.assign(static_cast<std::size_t>(K) * E * G, 0.0);
    parallel_for(K, threads_, [&](std::size_t e) {
      const double tm = 0.5 * (mesh.t[e] + mesh.t[e + 1]);
      std::vector<double> out(E);
      double y[2];
      for (int p0 = 0; p0 < P_; ++p0)
        for (int p1 = 0; p1 < P_; ++p1) {
          y[0] = static_cast<double>(p0) / P_ + tm * n.x();
          y[1] = static_cast<double>(p1) / P_ + tm * n.y();
          b.evaluate(y, out.data());
          for (int q = 0; q < E; ++q) bgrid_[(e * E + q) * G + p0 * P_ + p1] = out[q];
        }
    });
  }

  int elements() const { return static_cast<int>(mesh_->t.size()) - 1; }
  int nodes() const { return static_cast<int>(mesh_->t.size()); }
  int L() const { return L_; }
  const HalfSpectrum& spec() const { return spec_; }
  double c(int s) const { return c_[s]; }
  std::size_t size() const { return static_cast<std::size_t>(nodes()) * L_ * spec_.S; }
  std::size_t at(int k, int i, int s) const { return (static_cast<std::size_t>(k) * L_ + i) * spec_.S + s; }

  void apply(const std::vector<cplx>& x, std::vector<cplx>& y) const {
    const int K = elements(), S = spec_.S, HP = P_ / 2 + 1;
    const std::size_t G = static_cast<std::size_t>(P_) * P_;
    const double inv = 1.0 / static_cast<double>(G);
    std::vector<cplx> ft(static_cast<std::size_t>(K) * L_ * S), fn(ft.size());
    parallel_for(K, threads_, [&](std::size_t e) {
      const double h = mesh_->t[e + 1] - mesh_->t[e];
      std::vector<cplx> spec(static_cast<std::size_t>(P_) * HP);
      std::vector<double> gt(L_ * G), gn(L_ * G), f(G);
      for (int j = 0; j < L_; ++j) {
        std::fill(spec.begin(), spec.end(), cplx(0.0));
        for (int s = 0; s < S; ++s)
          if (spec_.active(s)) spec[pad_[s]] = kI * (kTwoPi * c_[s] * 0.5) * (x[at(e, j, s)] + x[at(e + 1, j, s)]);
        fft_.backward(spec.data(), gt.data() + j * G);
        std::fill(spec.begin(), spec.end(), cplx(0.0));
        for (int s = 0; s < S; ++s)
          if (spec_.active(s)) spec[pad_[s]] = (x[at(e + 1, j, s)] - x[at(e, j, s)]) / h;
        fft_.backward(spec.data(), gn.data() + j * G);
      }
      const double* B = bgrid_.data() + e * 4 * L_ * L_ * G;
      auto entry = [&](int al, int be, int i, int j) { return B + (((al * 2 + be) * L_ + i) * L_ + j) * G; };
      for (int al = 0; al < 2; ++al)
        for (int i = 0; i < L_; ++i) {
          std::fill(f.begin(), f.end(), 0.0);
          for (int j = 0; j < L_; ++j) {
            const double* b0 = entry(al, 0, i, j);
            const double* b1 = entry(al, 1, i, j);
            const double* g0 = gt.data() + j * G;
            const double* g1 = gn.data() + j * G;
            for (std::size_t p = 0; p < G; ++p) f[p] += b0[p] * g0[p] + b1[p] * g1[p];
          }
          fft_.forward(f.data(), spec.data());
          cplx* dst = (al == 0 ? ft.data() : fn.data()) + (e * L_ + i) * S;
          for (int s = 0; s < S; ++s) dst[s] = spec_.active(s) ? spec[pad_[s]] * inv : cplx(0.0);
        }
    });
    y.assign(size(), cplx(0.0));
    parallel_for(nodes(), threads_, [&](std::size_t k) {
      for (int i = 0; i < L_; ++i)
        for (int s = 0; s < S; ++s) {
          if (!spec_.active(s)) continue;
          const cplx tau = -kI * (kTwoPi * c_[s] * 0.5);
          cplx acc = 0;
          if (k > 0) {
            const std::size_t e = k - 1;
            const double h = mesh_->t[e + 1] - mesh_->t[e];
            acc += h * tau * ft[(e * L_ + i) * S + s] + fn[(e * L_ + i) * S + s];
          }
          if (static_cast<int>(k) < K) {
            const std::size_t e = k;
            const double h = mesh_->t[e + 1] - mesh_->t[e];
            acc += h * tau * ft[(e * L_ + i) * S + s] - fn[(e * L_ + i) * S + s];
          }
          y[at(k, i, s)] = acc;
        }
    });
  }

 private:
  int L_;
  HalfSpectrum spec_;
  int P_;
  const LayerMesh* mesh_;
  int threads_;
  RealFft2 fft_;
  std::vector<double> c_;
  std::vector<int> pad_;
  std::vector<double> bgrid_;
};

// Block tridiagonal solve of the mean-coefficient operator, one system per mode.
class ModePreconditioner {
 public:
  ModePreconditioner(const LayerOperator& op, const std::vector<double>& bbar, const LayerMesh& mesh) : op_(&op) {
    const int L = op.L(), S = op.spec().S, K = op.elements();
    const int LL = L * L;
    sys_.resize(S);
    for (int s = 0; s < S; ++s) {
      if (!op.spec().active(s)) continue;
      Sys& q = sys_[s];
      const bool zero = op.spec().xi1(s) == 0 && op.spec().xi2(s) == 0;
      q.first = 1;
      q.m = zero ? K : K - 1;
      if (q.m <= 0) continue;
      const cplx tau = kI * (kTwoPi * op.c(s));
      // Element blocks: entries (p, q) with p, q in {0, 1}.
      auto element = [&](int e, int p, int qq) {
        const double h = mesh.t[e + 1] - mesh.t[e];
        const double sp = p ? 1.0 : -1.0, sq = qq ? 1.0 : -1.0;
        const cplx tp[2] = {std::conj(tau) * 0.5, cplx(sp / h)};
        const cplx tq[2] = {tau * 0.5, cplx(sq / h)};
        Eigen::MatrixXcd blk = Eigen::MatrixXcd::Zero(L, L);
        for (int al = 0; al < 2; ++al)
          for (int be = 0; be < 2; ++be)
            for (int i = 0; i < L; ++i)
              for (int j = 0; j < L; ++j) blk(i, j) += h * tp[al] * tq[be] * bbar[((al * 2 + be) * L + i) * L + j];
        return blk;
      };
      std::vector<Eigen::MatrixXcd> D(q.m, Eigen::MatrixXcd::Zero(L, L)), U(q.m), Lo(q.m);
      for (int r = 0; r < q.m; ++r) {
        const int k = r + 1;
        D[r] += element(k - 1, 1, 1);
        if (k < K) D[r] += element(k, 0, 0);
        if (r + 1 < q.m) {
          U[r] = element(k, 0, 1);
          Lo[r] = element(k, 1, 0);
        }
      }
      q.pinv.resize(static_cast<std::size_t>(q.m) * LL);
      q.w.resize(static_cast<std::size_t>(q.m) * LL);
      q.lo.resize(static_cast<std::size_t>(q.m) * LL);
      Eigen::MatrixXcd Pinv_prev;
      for (int r = 0; r < q.m; ++r) {
        Eigen::MatrixXcd P = D[r];
        if (r > 0) P -= Lo[r - 1] * Pinv_prev * U[r - 1];
        Eigen::MatrixXcd Pinv = P.inverse();
        Eigen::MatrixXcd W = r + 1 < q.m ? Eigen::MatrixXcd(Pinv * U[r]) : Eigen::MatrixXcd::Zero(L, L);
        Eigen::MatrixXcd Lr = r + 1 < q.m ? Lo[r] : Eigen::MatrixXcd::Zero(L, L);
        for (int i = 0; i < L; ++i)
          for (int j = 0; j < L; ++j) {
            q.pinv[r * LL + i * L + j] = Pinv(i, j);
            q.w[r * LL + i * L + j] = W(i, j);
            q.lo[r * LL + i * L + j] = Lr(i, j);
          }
        Pinv_prev = Pinv;
      }
    }
  }

  void apply(const std::vector<cplx>& r, std::vector<cplx>& z) const {
    const int L = op_->L(), S = op_->spec().S, LL = L * L;
    z.assign(r.size(), cplx(0.0));
    std::vector<cplx> zz, tmp(L);
    for (int s = 0; s < S; ++s) {
      const Sys& q = sys_[s];
      if (q.m <= 0) continue;
      zz.assign(static_cast<std::size_t>(q.m) * L, cplx(0.0));
      for (int k = 0; k < q.m; ++k) {
        for (int i = 0; i < L; ++i) {
          cplx v = r[op_->at(k + q.first, i, s)];
          if (k > 0)
            for (int j = 0; j < L; ++j) v -= q.lo[(k - 1) * LL + i * L + j] * zz[(k - 1) * L + j];
          tmp[i] = v;
        }
        for (int i = 0; i < L; ++i) {
          cplx v = 0;
          for (int j = 0; j < L; ++j) v += q.pinv[k * LL + i * L + j] * tmp[j];
          zz[k * L + i] = v;
        }
      }
      for (int k = q.m - 2; k >= 0; --k)
        for (int i = 0; i < L; ++i) {
          cplx v = zz[k * L + i];
          for (int j = 0; j < L; ++j) v -= q.w[k * LL + i * L + j] * zz[(k + 1) * L + j];
          zz[k * L + i] = v;
        }
      for (int k = 0; k < q.m; ++k)
        for (int i = 0; i < L; ++i) z[op_->at(k + q.first, i, s)] = zz[k * L + i];
    }
  }

 private:
  struct Sys {
    int first = 1;
    int m = 0;
    std::vector<cplx> pinv, w, lo;
  };
  const LayerOperator* op_;
  std::vector<Sys> sys_;
};

}  // namespace

LayerMesh make_layer_mesh(double a, double T, const LayerOptions& opt) {
  if (!(T > a)) throw InvalidArgument("layer mesh: T must exceed a");
  if (opt.hmax <= 0 && opt.res_t < 2) throw InvalidArgument("layer mesh: at least two elements required");
  if (!(opt.h0 > 0) || !(opt.growth >= 1)) throw InvalidArgument("layer mesh: bad grading parameters");
  const double len = T - a;
  auto graded = [&](double hmax, double& total) {
    std::vector<double> h;
    total = 0;
    double step = opt.h0;
    while (step < hmax && total + step < len) {
      h.push_back(step);
      total += step;
      step *= opt.growth;
      if (opt.growth == 1.0) break;
    }
    return h;
  };
  LayerMesh mesh;
  std::vector<double> steps;
  if (opt.hmax > 0) {
    double total = 0;
    steps = graded(opt.hmax, total);
    const int nu = std::max(1, static_cast<int>(std::ceil((len - total) / opt.hmax - 1e-9)));
    for (int i = 0; i < nu; ++i) steps.push_back((len - total) / nu);
    mesh.hmax = opt.hmax;
  } else if (opt.h0 * opt.res_t >= len) {
    steps.assign(opt.res_t, len / opt.res_t);
    mesh.hmax = len / opt.res_t;
  } else {
    // Pick hmax so that the uniform tail has spacing hmax and the mesh has res_t elements.
    auto mismatch = [&](double hmax, std::vector<double>* out) {
      double total = 0;
      std::vector<double> g = graded(hmax, total);
      const int nu = opt.res_t - static_cast<int>(g.size());
      if (nu < 1) return -1.0;
      if (out) {
        *out = g;
        for (int i = 0; i < nu; ++i) out->push_back((len - total) / nu);
      }
      return (len - total) / nu - hmax;
    };
    double lo = opt.h0, hi = len;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mismatch(mid, nullptr) > 0)
        lo = mid;
      else
        hi = mid;
    }
    if (mismatch(lo, &steps) < 0) steps.assign(opt.res_t, len / opt.res_t);
    mesh.hmax = steps.back();
  }
  mesh.t.push_back(a);
  for (double h : steps) mesh.t.push_back(mesh.t.back() + h);
  mesh.t.back() = T;
  return mesh;
}

cplx LayerSolution::coefficient(int node, int comp, int xi1, int xi2) const {
  if (xi2 < 0) return std::conj(coefficient(node, comp, -xi1, -xi2));
  if (std::abs(xi1) >= res / 2 || xi2 >= res / 2) return 0.0;
  const int r = ((xi1 % res) + res) % res;
  return coeff[(static_cast<std::size_t>(node) * sysdim + comp) * spectrum() + r * half() + xi2];
}

double LayerSolution::value(int comp, const std::vector<double>& theta, double t) const {
  if (theta.size() != 2) throw InvalidArgument("LayerSolution::value: theta must have two entries");
  if (t < mesh.t.front() || t > mesh.t.back()) throw InvalidArgument("LayerSolution::value: t outside [a, T]");
  const auto it = std::upper_bound(mesh.t.begin(), mesh.t.end(), t);
  const int e = std::clamp(static_cast<int>(it - mesh.t.begin()) - 1, 0, nodes() - 2);
  const double u = (t - mesh.t[e]) / (mesh.t[e + 1] - mesh.t[e]);
  const HalfSpectrum sp(res);
  double v = 0;
  for (int s = 0; s < sp.S; ++s) {
    if (!sp.active(s)) continue;
    const cplx c = (1 - u) * coeff[(static_cast<std::size_t>(e) * sysdim + comp) * sp.S + s] +
                   u * coeff[(static_cast<std::size_t>(e + 1) * sysdim + comp) * sp.S + s];
    const double ph = kTwoPi * (sp.xi1(s) * theta[0] + sp.xi2(s) * theta[1]);
    v += sp.weight(s) * (c * std::exp(kI * ph)).real();
  }
  return v;
}

std::vector<double> LayerSolution::trace_derivative_grid() const {
  if (nodes() < 3) throw Error("trace derivative needs at least three t-nodes");
  const double h0 = mesh.t[1] - mesh.t[0], h1 = mesh.t[2] - mesh.t[1];
  const double c0 = -(2 * h0 + h1) / (h0 * (h0 + h1)), c1 = (h0 + h1) / (h0 * h1), c2 = -h0 / (h1 * (h0 + h1));
  const HalfSpectrum sp(res);
  RealFft2 fft(res, res);
  std::vector<double> out(static_cast<std::size_t>(sysdim) * res * res);
  std::vector<cplx> spec(sp.S);
  for (int i = 0; i < sysdim; ++i) {
    for (int s = 0; s < sp.S; ++s)
      spec[s] = sp.active(s) ? c0 * coeff[(0 * sysdim + i) * sp.S + s] +
                                   c1 * coeff[(static_cast<std::size_t>(1) * sysdim + i) * sp.S + s] +
                                   c2 * coeff[(static_cast<std::size_t>(2) * sysdim + i) * sp.S + s]
                             : cplx(0.0);
    fft.backward(spec.data(), out.data() + static_cast<std::size_t>(i) * res * res);
  }
  return out;
}

std::vector<cplx> layer_data(const PeriodicField& V0, const std::vector<double>& n, double a, int res) {
  if (V0.dim() != 2 || n.size() != 2) throw InvalidArgument("layer_data: d = 2 only");
  const HalfSpectrum sp(res);
  std::vector<cplx> data(static_cast<std::size_t>(V0.comps()) * sp.S, cplx(0.0));
  for (const auto& m : V0.modes()) {
    const int x1 = m.xi[0], x2 = m.xi[1];
    if (x2 < 0 || std::abs(x1) >= res / 2 || x2 >= res / 2) continue;
    const cplx phase = std::exp(kI * (kTwoPi * a * (x1 * n[0] + x2 * n[1])));
    const int s = (((x1 % res) + res) % res) * sp.H + x2;
    for (int i = 0; i < V0.comps(); ++i) data[static_cast<std::size_t>(i) * sp.S + s] = m.c[i] * phase;
  }
  return data;
}

LayerSolution solve_layer(const PeriodicTensor& a, const Frame& frame, const std::vector<cplx>& data, double a_shift,
                          double T, const LayerOptions& opt) {
  if (a.dim() != 2) throw InvalidArgument("solve_layer: d = 2 only");
  if (opt.res_theta < 8 || opt.res_theta % 2) throw InvalidArgument("solve_layer: res_theta must be even and >= 8");
  if (opt.hmax <= 0 && opt.res_t < 8) throw InvalidArgument("solve_layer: res_t must be >= 8");
  if (frame.M.rows() != 2 || frame.M.cols() != 2) throw InvalidArgument("solve_layer: frame must be 2 x 2");
  const int L = a.sysdim();
  const HalfSpectrum sp(opt.res_theta);
  if (data.size() != static_cast<std::size_t>(L) * sp.S) throw InvalidArgument("solve_layer: data size mismatch");

  LayerSolution sol;
  sol.sysdim = L;
  sol.res = opt.res_theta;
  sol.frame = frame;
  const Eigen::Vector2d n = frame.M.col(1), Ncol = frame.M.col(0);
  sol.n = {n.x(), n.y()};
  sol.a = a_shift;
  sol.T = T;
  sol.mesh = make_layer_mesh(a_shift, T, opt);

  const PeriodicTensor b = a.rotated(frame.M);
  sol.symmetric = b.is_symmetric();
  LayerOperator op(b, n, Ncol, sol.mesh, opt.res_theta, opt.threads);
  ModePreconditioner pre(op, b.mean(), sol.mesh);
  const int K = op.elements();
  const std::size_t nn = op.size();

  std::vector<char> freemask(nn, 0);
  std::vector<double> w(nn, 0.0);
  for (int k = 0; k <= K; ++k)
    for (int i = 0; i < L; ++i)
      for (int s = 0; s < sp.S; ++s) {
        if (!sp.active(s)) continue;
        const bool zero = s == 0;
        const bool fr = (k > 0 && k < K) || (k == K && zero);
        freemask[op.at(k, i, s)] = fr;
        w[op.at(k, i, s)] = fr ? sp.weight(s) : 0.0;
      }
  auto dot = [&](const std::vector<cplx>& x, const std::vector<cplx>& y) {
    double acc = 0;
    for (std::size_t p = 0; p < nn; ++p) acc += w[p] * (std::conj(x[p]) * y[p]).real();
    return acc;
  };
  auto mask = [&](std::vector<cplx>& x) {
    for (std::size_t p = 0; p < nn; ++p)
      if (!freemask[p]) x[p] = 0.0;
  };

  std::vector<cplx> xD(nn, cplx(0.0));
  for (int i = 0; i < L; ++i)
    for (int s = 0; s < sp.S; ++s)
      if (sp.active(s)) xD[op.at(0, i, s)] = data[static_cast<std::size_t>(i) * sp.S + s];
  std::vector<cplx> rhs;
  op.apply(xD, rhs);
  for (auto& v : rhs) v = -v;
  mask(rhs);

  std::vector<cplx> x(nn, cplx(0.0)), r = rhs, z, p, Ap;
  const double bnorm = std::sqrt(dot(rhs, rhs));
  const int max_iter = opt.max_iter > 0 ? opt.max_iter : 20 * K;
  int it = 0;
  double rel = bnorm > 0 ? 1.0 : 0.0;
  if (bnorm > 0 && sol.symmetric) {
    pre.apply(r, z);
    p = z;
    double rz = dot(r, z);
    for (it = 1; it <= max_iter; ++it) {
      op.apply(p, Ap);
      mask(Ap);
      const double alpha = rz / dot(p, Ap);
      for (std::size_t q = 0; q < nn; ++q) {
        x[q] += alpha * p[q];
        r[q] -= alpha * Ap[q];
      }
      rel = std::sqrt(dot(r, r)) / bnorm;
      if (rel <= opt.tol) break;
      pre.apply(r, z);
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t q = 0; q < nn; ++q) p[q] = z[q] + beta * p[q];
    }
  } else if (bnorm > 0) {
    // BiCGSTAB on the real inner product of the weighted space.
    std::vector<cplx> r0 = r, v(nn, cplx(0.0)), s(nn), t, ph, sh;
    p.assign(nn, cplx(0.0));
    double rho = 1, alpha = 1, omega = 1;
    for (it = 1; it <= max_iter; ++it) {
      const double rho_new = dot(r0, r);
      if (rho_new == 0) break;
      const double beta = (rho_new / rho) * (alpha / omega);
      rho = rho_new;
      for (std::size_t q = 0; q < nn; ++q) p[q] = r[q] + beta * (p[q] - omega * v[q]);
      pre.apply(p, ph);
      op.apply(ph, v);
      mask(v);
      alpha = rho / dot(r0, v);
      for (std::size_t q = 0; q < nn; ++q) s[q] = r[q] - alpha * v[q];
      if (std::sqrt(dot(s, s)) / bnorm <= opt.tol) {
        for (std::size_t q = 0; q < nn; ++q) x[q] += alpha * ph[q];
        r = s;
        rel = std::sqrt(dot(r, r)) / bnorm;
        break;
      }
      pre.apply(s, sh);
      op.apply(sh, t);
      mask(t);
      omega = dot(t, s) / dot(t, t);
      for (std::size_t q = 0; q < nn; ++q) {
        x[q] += alpha * ph[q] + omega * sh[q];
        r[q] = s[q] - omega * t[q];
      }
      rel = std::sqrt(dot(r, r)) / bnorm;
      if (rel <= opt.tol) break;
    }
  }
  if (rel > opt.tol) throw ConvergenceError("solve_layer: linear solver did not converge");
  sol.iterations = it;
  sol.residual = rel;
  for (std::size_t q = 0; q < nn; ++q) x[q] += xD[q];
  sol.coeff = x;

  std::vector<cplx> Ax;
  op.apply(x, Ax);
  sol.flux0.assign(static_cast<std::size_t>(L) * sp.S, cplx(0.0));
  for (int i = 0; i < L; ++i)
    for (int s = 0; s < sp.S; ++s) sol.flux0[static_cast<std::size_t>(i) * sp.S + s] = -Ax[op.at(0, i, s)];

  sol.tail.resize(L);
  for (int i = 0; i < L; ++i) sol.tail[i] = x[op.at(K, i, 0)].real();
  sol.decay.resize(K);
  double peak = 0;
  for (int e = 0; e < K; ++e) {
    const double h = sol.mesh.t[e + 1] - sol.mesh.t[e];
    double d2 = 0, t2 = 0;
    for (int i = 0; i < L; ++i)
      for (int s = 0; s < sp.S; ++s) {
        if (!sp.active(s)) continue;
        const cplx d = (x[op.at(e + 1, i, s)] - x[op.at(e, i, s)]) / h;
        const cplx m = 0.5 * (x[op.at(e + 1, i, s)] + x[op.at(e, i, s)]) * (kTwoPi * op.c(s));
        d2 += sp.weight(s) * std::norm(d);
        t2 += sp.weight(s) * std::norm(m);
      }
    sol.decay[e] = {0.5 * (sol.mesh.t[e] + sol.mesh.t[e + 1]), std::sqrt(d2), std::sqrt(t2)};
    peak = std::max(peak, sol.decay[e].total());
  }
  if (opt.check_decay && sol.decay.back().total() > opt.decay_threshold * peak)
    throw Error("solve_layer: gradient has not decayed at T; increase T");
  return sol;
}

LayerSolution solve_layer(const PeriodicTensor& a, const Frame& frame, const PeriodicField& V0, double a_shift,
                          double T, const LayerOptions& opt) {
  if (V0.comps() != a.sysdim()) throw InvalidArgument("solve_layer: datum has the wrong number of components");
  const Eigen::Vector2d n = frame.M.col(1);
  return solve_layer(a, frame, layer_data(V0, {n.x(), n.y()}, a_shift, opt.res_theta), a_shift, T, opt);
}

std::vector<double> layer_tail(const LayerSolution& sol, double threshold) {
  if (sol.decay.empty()) throw InvalidArgument("layer_tail: unsolved layer");
  double peak = 0;
  for (const auto& d : sol.decay) peak = std::max(peak, d.total());
  if (sol.decay.back().total() > threshold * peak) throw Error("layer_tail: insufficient decay at T");
  return sol.tail;
}

DecayFit decay_fit(const LayerSolution& sol, double t_lo, double t_hi, double floor) {
  DecayFit fit;
  double peak = 0;
  for (const auto& d : sol.decay) peak = std::max(peak, d.total());
  std::vector<double> ts, ls;
  for (const auto& d : sol.decay)
    if (d.t >= t_lo && d.t <= t_hi && d.total() > floor * peak) {
      ts.push_back(d.t - sol.a);
      ls.push_back(std::log(d.total()));
    }
  fit.samples = static_cast<int>(ts.size());
  auto slope = [&](const std::vector<double>& X) {
    const double n = static_cast<double>(X.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      mx += X[i];
      my += ls[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      sxy += (X[i] - mx) * (ls[i] - my);
      sxx += (X[i] - mx) * (X[i] - mx);
    }
    return sxx > 0 ? sxy / sxx : 0.0;
  };
  if (fit.samples >= 2) {
    fit.rate = -slope(ts);
    std::vector<double> lt(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) lt[i] = std::log(ts[i]);
    fit.order = -slope(lt);
  } else {
    fit.rate = std::numeric_limits<double>::infinity();
    fit.order = std::numeric_limits<double>::infinity();
  }
  double prev = std::numeric_limits<double>::infinity();
  for (double lo = t_lo; lo < t_hi; lo += 1.0) {
    double env = 0;
    bool any = false;
    for (const auto& d : sol.decay)
      if (d.t >= lo && d.t < lo + 1.0) {
        env = std::max(env, d.total());
        any = true;
      }
    if (!any) continue;
    if (env > prev * (1 + 1e-9) + 1e-300) fit.monotone = false;
    prev = env;
  }
  return fit;
}

ContinuityResult layer_continuity(const PeriodicTensor& a, const Direction& n1, const Direction& n2,
                                  const PeriodicField& V0, double a_shift, double T, const LayerOptions& opt) {
  if (!(n2.A_lb > 0)) throw InvalidArgument("layer_continuity: the reference direction must be Diophantine");
  const LayerSolution s1 = solve_layer(a, build_frame(n1.n), V0, a_shift, T, opt);
  const LayerSolution s2 = solve_layer(a, build_frame(n2.n), V0, a_shift, T, opt);
  const std::vector<double> d1 = s1.trace_derivative_grid(), d2 = s2.trace_derivative_grid();
  ContinuityResult out;
  for (std::size_t p = 0; p < d1.size(); ++p) out.difference = std::max(out.difference, std::abs(d1[p] - d2[p]));
  double dn2 = 0;
  for (std::size_t i = 0; i < n1.n.size(); ++i) dn2 += (n1.n[i] - n2.n[i]) * (n1.n[i] - n2.n[i]);
  out.dn = std::sqrt(dn2);
  out.A = n2.A_lb;
  out.shape = out.dn / std::pow(out.A, 1.5) * (1 + out.dn / out.A);
  out.ratio = out.shape > 0 ? out.difference / out.shape : 0.0;
  return out;
}

}  // namespace homog
