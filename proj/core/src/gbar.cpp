#include "homog/gbar.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "homog/fft.hpp"
#include "homog/parallel.hpp"

namespace homog {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// All components of a field on a res x res grid, component c at [c * res * res + p].
std::vector<double> synthesize(const PeriodicField& f, int res) {
  const std::size_t G = static_cast<std::size_t>(res) * res;
  std::vector<double> out(static_cast<std::size_t>(f.comps()) * G, 0.0);
  bool fits = true;
  for (const auto& m : f.modes())
    if (std::abs(m.xi[0]) >= res / 2 || std::abs(m.xi[1]) >= res / 2) fits = false;
  if (!fits) {
    std::vector<double> y(2), v(f.comps());
    for (int p0 = 0; p0 < res; ++p0)
      for (int p1 = 0; p1 < res; ++p1) {
        y[0] = static_cast<double>(p0) / res;
        y[1] = static_cast<double>(p1) / res;
        f.evaluate(y.data(), v.data());
        for (int c = 0; c < f.comps(); ++c) out[c * G + p0 * res + p1] = v[c];
      }
    return out;
  }
  const int H = res / 2 + 1;
  RealFft2 fft(res, res);
  std::vector<cplx> spec(static_cast<std::size_t>(res) * H);
  for (int c = 0; c < f.comps(); ++c) {
    std::fill(spec.begin(), spec.end(), cplx(0.0));
    for (const auto& m : f.modes()) {
      if (m.xi[1] < 0) continue;
      const int r = ((m.xi[0] % res) + res) % res;
      spec[r * H + m.xi[1]] = m.c[c];
    }
    fft.backward(spec.data(), out.data() + c * G);
  }
  return out;
}

// Half-spectrum coefficients of resolution `src` synthesized on a res x res grid.
void synthesize_half(const cplx* coeff, int src, int res, double* out) {
  const int Hs = src / 2 + 1, H = res / 2 + 1;
  std::vector<cplx> spec(static_cast<std::size_t>(res) * H, cplx(0.0));
  for (int r = 0; r < src; ++r)
    for (int c = 0; c < Hs; ++c) {
      const int x1 = signed_frequency(r, src);
      if (std::abs(x1) >= src / 2 || c >= src / 2) continue;
      if (std::abs(x1) >= res / 2 || c >= res / 2) continue;
      spec[(((x1 % res) + res) % res) * H + c] = coeff[r * Hs + c];
    }
  RealFft2 fft(res, res);
  fft.backward(spec.data(), out);
}

}  // namespace

BoundaryWeight::BoundaryWeight(const PeriodicTensor& a, const CellSolution& adjoint, const std::vector<double>& n,
                               const GbarOptions& opt) {
  if (n.size() != 2) throw InvalidArgument("BoundaryWeight: d = 2 only");
  build(a, adjoint, build_frame({-n[0], -n[1]}), opt);
  n_ = n;
}

BoundaryWeight::BoundaryWeight(const PeriodicTensor& a, const CellSolution& adjoint, const std::vector<double>& n,
                               const Frame& frame, const GbarOptions& opt) {
  if (n.size() != 2) throw InvalidArgument("BoundaryWeight: d = 2 only");
  if (std::abs(frame.M(0, 1) + n[0]) > 1e-12 || std::abs(frame.M(1, 1) + n[1]) > 1e-12)
    throw InvalidArgument("BoundaryWeight: frame must send e_d to the inward normal");
  build(a, adjoint, frame, opt);
  n_ = n;
}

void BoundaryWeight::build(const PeriodicTensor& a, const CellSolution& adjoint, const Frame& frame,
                           const GbarOptions& opt) {
  if (a.dim() != 2 || adjoint.dim != 2) throw InvalidArgument("BoundaryWeight: d = 2 only");
  if (!adjoint.adjoint) throw InvalidArgument("BoundaryWeight: an adjoint cell solution is required");
  if (adjoint.sysdim != a.sysdim()) throw InvalidArgument("BoundaryWeight: cell solution does not match a");
  L_ = a.sysdim();
  const int L = L_;
  nu_ = {frame.M(0, 1), frame.M(1, 1)};
  a_ = a.adjoint();

  // abar n.n equals the transpose of abar* nu.nu.
  Eigen::MatrixXd ann(L, L);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j) {
      double v = 0;
      for (int al = 0; al < 2; ++al)
        for (int be = 0; be < 2; ++be) v += adjoint.abar_entry(al, be, j, i) * nu_[al] * nu_[be];
      ann(i, j) = v;
    }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(ann);
  if (!lu.isInvertible() || lu.rcond() < 1e-12) throw Error("BoundaryWeight: abar n.n is singular");
  h_ = lu.inverse();

  const std::size_t ns = adjoint.grid_size();
  const int N = adjoint.resolution;
  std::vector<FieldMode> grad_modes;
  std::vector<std::vector<FieldMode>> data_modes(L);
  for (std::size_t p = 0; p < ns; ++p) {
    const int x0 = signed_frequency(static_cast<int>(p / N), N), x1 = signed_frequency(static_cast<int>(p % N), N);
    FieldMode gm{Lattice{x0, x1}, std::vector<cplx>(static_cast<std::size_t>(L) * L * 2, cplx(0.0))};
    bool any = false;
    for (int k = 0; k < L; ++k) {
      FieldMode dm{Lattice{x0, x1}, std::vector<cplx>(L, cplx(0.0))};
      for (int l = 0; l < L; ++l) {
        cplx c = 0;
        for (int g = 0; g < 2; ++g) c += nu_[g] * adjoint.chi[g * L + k][l * ns + p];
        if (c == cplx(0.0)) continue;
        any = true;
        dm.c[l] = -c;
        gm.c[(k * L + l) * 2 + 0] = cplx(0.0, kTwoPi * x0) * c;
        gm.c[(k * L + l) * 2 + 1] = cplx(0.0, kTwoPi * x1) * c;
      }
      data_modes[k].push_back(std::move(dm));
    }
    if (any) grad_modes.push_back(std::move(gm));
  }
  if (grad_modes.empty()) grad_modes.push_back({Lattice{0, 0}, std::vector<cplx>(static_cast<std::size_t>(L) * L * 2)});
  grad_chi_ = PeriodicField(2, L * L * 2, std::move(grad_modes));

  layers_.clear();
  for (int k = 0; k < L; ++k) {
    const PeriodicField V0(2, L, std::move(data_modes[k]));
    LayerOptions lopt = opt.layer;
    double T = opt.T;
    for (int doubling = 0;; ++doubling) {
      try {
        layers_.push_back(solve_layer(a_, frame, V0, 0.0, T, lopt));
        break;
      } catch (const InvalidArgument&) {
        throw;
      } catch (const Error&) {
        if (!lopt.check_decay || doubling >= opt.max_doublings) throw;
      }
      T *= 2;
      lopt.res_t *= 2;
    }
  }
}

std::array<Eigen::MatrixXd, 3> BoundaryWeight::pieces(const double* theta) const {
  const int L = L_;
  std::vector<double> av(a_.entries()), gc(grad_chi_.comps());
  a_.evaluate(theta, av.data());
  grad_chi_.evaluate(theta, gc.data());
  Eigen::MatrixXd sid = Eigen::MatrixXd::Zero(L, L), schi = sid, sw = sid;
  for (int k = 0; k < L; ++k)
    for (int j = 0; j < L; ++j) {
      for (int al = 0; al < 2; ++al)
        for (int be = 0; be < 2; ++be) {
          sid(k, j) += nu_[al] * nu_[be] * av[a_.index(al, be, j, k)];
          for (int l = 0; l < L; ++l) schi(k, j) += nu_[al] * av[a_.index(al, be, j, l)] * gc[(k * L + l) * 2 + be];
        }
      const LayerSolution& ly = layers_[k];
      const int res = ly.res, H = ly.half();
      for (int s = 0; s < ly.spectrum(); ++s) {
        const int x1 = signed_frequency(s / H, res), x2 = s % H;
        if (std::abs(x1) >= res / 2 || x2 >= res / 2) continue;
        const double w = x2 == 0 ? 1.0 : 2.0;
        const cplx ph = std::exp(cplx(0.0, kTwoPi * (x1 * theta[0] + x2 * theta[1])));
        sw(k, j) += w * (ly.flux0[static_cast<std::size_t>(j) * ly.spectrum() + s] * ph).real();
      }
    }
  return {h_ * sid, h_ * schi, h_ * sw};
}

Eigen::MatrixXd BoundaryWeight::omega(const double* theta) const {
  const auto p = pieces(theta);
  return p[0] + p[1] + p[2];
}

namespace {

// Pieces of omega on a res x res grid: piece q, entry (i, j) at [((q * L + i) * L + j) * G + p].
std::vector<double> piece_grids(const PeriodicTensor& astar, const PeriodicField& grad_chi,
                                const std::vector<LayerSolution>& layers, const std::vector<double>& nu,
                                const Eigen::MatrixXd& h, int res) {
  const int L = astar.sysdim();
  const std::size_t G = static_cast<std::size_t>(res) * res;
  const std::vector<double> A = synthesize(astar.field(), res);
  const std::vector<double> C = synthesize(grad_chi, res);
  std::vector<double> W(static_cast<std::size_t>(L) * L * G);
  for (int k = 0; k < L; ++k) {
    const LayerSolution& ly = layers[k];
    if (ly.res > res) throw InvalidArgument("gbar: quadrature resolution below the layer resolution");
    for (int j = 0; j < L; ++j)
      synthesize_half(ly.flux0.data() + static_cast<std::size_t>(j) * ly.spectrum(), ly.res, res,
                      W.data() + (k * L + j) * G);
  }
  std::vector<double> sig(3 * static_cast<std::size_t>(L) * L * G, 0.0);
  auto S = [&](int q, int k, int j) { return sig.data() + ((q * L + k) * L + j) * G; };
  for (int k = 0; k < L; ++k)
    for (int j = 0; j < L; ++j) {
      double* sid = S(0, k, j);
      double* sch = S(1, k, j);
      for (int al = 0; al < 2; ++al)
        for (int be = 0; be < 2; ++be) {
          const double* ajk = A.data() + astar.index(al, be, j, k) * G;
          for (std::size_t p = 0; p < G; ++p) sid[p] += nu[al] * nu[be] * ajk[p];
          for (int l = 0; l < L; ++l) {
            const double* ajl = A.data() + astar.index(al, be, j, l) * G;
            const double* gk = C.data() + ((k * L + l) * 2 + be) * G;
            for (std::size_t p = 0; p < G; ++p) sch[p] += nu[al] * ajl[p] * gk[p];
          }
        }
      std::copy(W.begin() + (k * L + j) * G, W.begin() + (k * L + j + 1) * G, S(2, k, j));
    }
  std::vector<double> out(sig.size(), 0.0);
  for (int q = 0; q < 3; ++q)
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) {
        double* o = out.data() + ((q * L + i) * L + j) * G;
        for (int k = 0; k < L; ++k) {
          const double hik = h(i, k);
          const double* s = S(q, k, j);
          for (std::size_t p = 0; p < G; ++p) o[p] += hik * s[p];
        }
      }
  return out;
}

}  // namespace

std::vector<double> BoundaryWeight::piece_grid(int res) const {
  return piece_grids(a_, grad_chi_, layers_, nu_, h_, res);
}

std::vector<double> BoundaryWeight::grid(int res) const {
  const std::size_t G = static_cast<std::size_t>(res) * res, LL = static_cast<std::size_t>(L_) * L_;
  const std::vector<double> pg = piece_grid(res);
  std::vector<double> out(LL * G, 0.0);
  for (int q = 0; q < 3; ++q)
    for (std::size_t p = 0; p < LL * G; ++p) out[p] += pg[q * LL * G + p];
  return out;
}

double BoundaryWeight::normalization_error(int res) const {
  const std::size_t G = static_cast<std::size_t>(res) * res;
  const std::vector<double> g = grid(res);
  double err = 0;
  for (int i = 0; i < L_; ++i)
    for (int j = 0; j < L_; ++j) {
      double m = 0;
      for (std::size_t p = 0; p < G; ++p) m += g[(i * L_ + j) * G + p];
      err = std::max(err, std::abs(m / static_cast<double>(G) - (i == j ? 1.0 : 0.0)));
    }
  return err;
}

WeightCache::WeightCache(const PeriodicTensor& a, const CellSolution& adjoint, const GbarOptions& opt)
    : a_(a), adjoint_(&adjoint), opt_(opt) {}

std::shared_ptr<const BoundaryWeight> WeightCache::get(const std::vector<double>& n) {
  const std::pair<long long, long long> key{std::llround(n.at(0) * 1e12), std::llround(n.at(1) * 1e12)};
  {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  auto w = std::make_shared<const BoundaryWeight>(a_, *adjoint_, n, opt_);
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.emplace(key, std::move(w)).first->second;
}

std::size_t WeightCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return cache_.size();
}

GbarSample compute_gbar(double s, const Eigen::Vector2d& x, const Direction& n, const BoundaryWeight& w,
                        const TwoScaleBoundaryDatum& g, int res) {
  const int L = w.sysdim();
  if (g.sysdim() != L || g.dim() != 2) throw InvalidArgument("compute_gbar: datum does not match the weight");
  if (n.n.size() != 2 || std::abs(n.n[0] - w.normal()[0]) > 1e-9 || std::abs(n.n[1] - w.normal()[1]) > 1e-9)
    throw InvalidArgument("compute_gbar: layer was solved for a different normal");
  const std::size_t G = static_cast<std::size_t>(res) * res;
  const std::vector<double> pg = w.piece_grid(res);
  std::vector<double> gv(static_cast<std::size_t>(L) * G), y(2), tmp(L);
  for (int p0 = 0; p0 < res; ++p0)
    for (int p1 = 0; p1 < res; ++p1) {
      y[0] = static_cast<double>(p0) / res;
      y[1] = static_cast<double>(p1) / res;
      g.evaluate(s, y.data(), tmp.data());
      for (int j = 0; j < L; ++j) gv[j * G + p0 * res + p1] = tmp[j];
    }
  GbarSample out;
  out.s = s;
  out.x = x;
  out.n = n;
  out.quadrature_res = res;
  out.gbar.assign(L, 0.0);
  for (int q = 0; q < 3; ++q) {
    out.components[q].assign(L, 0.0);
    for (int i = 0; i < L; ++i) {
      double acc = 0;
      for (int j = 0; j < L; ++j) {
        const double* o = pg.data() + ((q * L + i) * L + j) * G;
        const double* gj = gv.data() + j * G;
        for (std::size_t p = 0; p < G; ++p) acc += o[p] * gj[p];
      }
      out.components[q][i] = acc / static_cast<double>(G);
      out.gbar[i] += out.components[q][i];
    }
  }
  return out;
}

GbarSample compute_gbar(const ConvexDomain& dom, double s, const TwoScaleBoundaryDatum& g, WeightCache& cache,
                        double kappa, int Xi) {
  const ChartPoint cp = dom.chart(s);
  const std::vector<double> n{cp.normal.x(), cp.normal.y()};
  const Direction dir = dioph_constant(n, kappa, Xi);
  const auto w = cache.get(n);
  return compute_gbar(s, cp.point, dir, *w, g, cache.options().quadrature_res);
}

Eigen::MatrixXd tilde_omega(const BoundaryWeight& w, double epsilon, const Eigen::Vector2d& x) {
  if (!(epsilon > 0)) throw InvalidArgument("tilde_omega: epsilon must be positive");
  const double theta[2] = {x.x() / epsilon - std::floor(x.x() / epsilon), x.y() / epsilon - std::floor(x.y() / epsilon)};
  return w.omega(theta);
}

double boundary_seminorm(const ConvexDomain& dom, const std::vector<double>& s, const std::vector<double>& values,
                         double order) {
  const std::size_t n = s.size();
  if (values.size() != n || n < 3) throw InvalidArgument("boundary_seminorm: need matching samples, at least 3");
  std::vector<Eigen::Vector2d> x(n);
  std::vector<double> wt(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = dom.chart(s[i]).point;
    const double sp = s[(i + n - 1) % n], sn = s[(i + 1) % n];
    const double ds = 0.5 * (wrap_angle(sn - s[i]) + wrap_angle(s[i] - sp));
    wt[i] = std::abs(ds) * dom.chart_speed(s[i]);
  }
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const double r = (x[i] - x[j]).norm();
      acc += std::abs(values[i] - values[j]) / std::pow(r, 1.0 + order) * wt[i] * wt[j];
    }
  return acc;
}

namespace {

GbarIncrement increment(const GbarSample& a, const GbarSample& b, int i, int j) {
  GbarIncrement inc;
  inc.i = i;
  inc.j = j;
  double dg = 0, dn = 0;
  for (std::size_t c = 0; c < a.gbar.size(); ++c) dg += (a.gbar[c] - b.gbar[c]) * (a.gbar[c] - b.gbar[c]);
  for (int c = 0; c < 2; ++c) dn += (a.n.n[c] - b.n.n[c]) * (a.n.n[c] - b.n.n[c]);
  inc.dg = std::sqrt(dg);
  inc.dn = std::sqrt(dn);
  inc.A = std::min(a.n.A_lb, b.n.A_lb);
  inc.ratio = inc.dn > 0 ? inc.dg * std::pow(inc.A, 1.5) / inc.dn : 0.0;
  return inc;
}

}  // namespace

GbarProfile gbar_profile(const ConvexDomain& dom, const TwoScaleBoundaryDatum& g, WeightCache& cache, double kappa,
                         int Xi, int samples, int threads) {
  if (samples < 16) throw InvalidArgument("gbar_profile: at least 16 samples required");
  GbarProfile prof;
  prof.samples.resize(samples);
  parallel_for(samples, threads, [&](std::size_t i) {
    prof.samples[i] = compute_gbar(dom, kTwoPi * static_cast<double>(i) / samples, g, cache, kappa, Xi);
  });
  std::vector<double> s(samples), v(samples);
  for (int i = 0; i < samples; ++i) {
    s[i] = prof.samples[i].s;
    v[i] = prof.samples[i].gbar[0];
    if (prof.samples[i].n.A_lb <= 0) ++prof.rational_samples;
  }
  for (int i = 0; i < samples; ++i) {
    const int j = (i + 1) % samples;
    if (prof.samples[i].n.A_lb <= 0 || prof.samples[j].n.A_lb <= 0) continue;
    prof.increments.push_back(increment(prof.samples[i], prof.samples[j], i, j));
    prof.max_ratio = std::max(prof.max_ratio, prof.increments.back().ratio);
  }
  prof.seminorm_half = boundary_seminorm(dom, s, v, 0.5);
  return prof;
}

GbarProfile gbar_pairs(const ConvexDomain& dom, const TwoScaleBoundaryDatum& g, WeightCache& cache, double kappa,
                       int Xi, const std::vector<std::pair<double, double>>& pairs, int threads) {
  GbarProfile prof;
  prof.samples.resize(2 * pairs.size());
  parallel_for(prof.samples.size(), threads, [&](std::size_t i) {
    const double s = i % 2 ? pairs[i / 2].second : pairs[i / 2].first;
    prof.samples[i] = compute_gbar(dom, s, g, cache, kappa, Xi);
  });
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const GbarSample& a = prof.samples[2 * p];
    const GbarSample& b = prof.samples[2 * p + 1];
    if (a.n.A_lb <= 0 || b.n.A_lb <= 0) {
      prof.rational_samples += (a.n.A_lb <= 0) + (b.n.A_lb <= 0);
      continue;
    }
    prof.increments.push_back(increment(a, b, static_cast<int>(2 * p), static_cast<int>(2 * p + 1)));
    prof.max_ratio = std::max(prof.max_ratio, prof.increments.back().ratio);
  }
  return prof;
}

}  // namespace homog
