#include "homog/ergodic.hpp"

#include <cmath>
#include <functional>
#include <mutex>
#include <numbers>
#include <random>
#include <set>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/hermite.hpp>

#include "homog/parallel.hpp"

namespace homog {

namespace {

constexpr double kPi = std::numbers::pi;

using GK = boost::math::quadrature::gauss_kronrod<double, 31>;

// Derivatives of g(s) = -1/(1-s^2) = 1/(s^2-1).
double bump_exponent_derivative(int j, double s) {
  if (j == 0) return -1.0 / (1.0 - s * s);
  const double f = std::tgamma(j + 1.0) * (j % 2 ? -1.0 : 1.0) * 0.5;
  return f * (std::pow(s - 1.0, -j - 1) - std::pow(s + 1.0, -j - 1));
}

double integrate_abs_1d(const std::function<double(double)>& f, double lo, double hi, int panels) {
  double acc = 0;
  const double h = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p)
    acc += GK::integrate([&](double s) { return std::abs(f(s)); }, lo + p * h, lo + (p + 1) * h, 12, 1e-13);
  return acc;
}

}  // namespace

SmoothWindow::SmoothWindow(Kind kind, int m, double r)
    : kind_(kind), m_(m), r_(r), cache_mutex_(std::make_shared<std::mutex>()) {
  if (m < 1 || m > 2) throw InvalidArgument("SmoothWindow: dimension must be 1 or 2");
  if (!(r > 0)) throw InvalidArgument("SmoothWindow: scale must be positive");
}

SmoothWindow SmoothWindow::gaussian(int m, double r) { return SmoothWindow(Kind::Gaussian, m, r); }
SmoothWindow SmoothWindow::bump(int m, double r) { return SmoothWindow(Kind::Bump, m, r); }

double SmoothWindow::profile_derivative(int k, double s) const {
  if (kind_ == Kind::Gaussian) {
    const double u = std::sqrt(kPi) * s;
    return (k % 2 ? -1.0 : 1.0) * std::pow(kPi, 0.5 * k) * boost::math::hermite(k, u) * std::exp(-u * u);
  }
  if (std::abs(s) >= 1.0) return 0.0;
  std::vector<double> f(k + 1);
  f[0] = std::exp(bump_exponent_derivative(0, s));
  for (int n = 1; n <= k; ++n) {
    double acc = 0;
    for (int j = 0; j < n; ++j)
      acc += boost::math::binomial_coefficient<double>(n - 1, j) * bump_exponent_derivative(j + 1, s) * f[n - 1 - j];
    f[n] = acc;
  }
  return f[k];
}

double SmoothWindow::support_radius() const {
  return kind_ == Kind::Gaussian ? std::sqrt(16.0 * std::log(10.0) / kPi) : 1.0;
}

double SmoothWindow::value(const std::vector<double>& z) const {
  if (static_cast<int>(z.size()) != m_) throw InvalidArgument("SmoothWindow: point has wrong dimension");
  double v = 1;
  for (double c : z) v *= profile_derivative(0, c / r_);
  return v;
}

double SmoothWindow::profile_l1(int k) const {
  const double R = support_radius();
  if (k == 0) {
    if (kind_ == Kind::Gaussian) return 1.0;
    return GK::integrate([&](double s) { return profile_derivative(0, s); }, -1.0, 1.0, 15, 1e-14);
  }
  if (kind_ == Kind::Gaussian) {
    // Total variation of phi^{(k-1)}: its extrema sit at the zeros of H_k and alternate in sign.
    const double L = std::sqrt(2.0 * k + 2.0);
    const int steps = 20000;
    double acc = 0;
    auto h = [&](double u) { return boost::math::hermite(k, u); };
    for (int i = 0; i < steps; ++i) {
      double a = -L + 2.0 * L * i / steps, b = -L + 2.0 * L * (i + 1) / steps;
      double fa = h(a), fb = h(b);
      if (fa == 0) {
        acc += std::abs(profile_derivative(k - 1, a / std::sqrt(kPi)));
        continue;
      }
      if (fa * fb > 0) continue;
      for (int it = 0; it < 200 && b - a > 1e-16; ++it) {
        const double c = 0.5 * (a + b);
        const double fc = h(c);
        if ((fc < 0) == (fa < 0)) {
          a = c;
          fa = fc;
        } else {
          b = c;
        }
      }
      if (fb == 0) continue;
      acc += std::abs(profile_derivative(k - 1, 0.5 * (a + b) / std::sqrt(kPi)));
    }
    return 2.0 * acc;
  }
  return integrate_abs_1d([&](double s) { return profile_derivative(k, s); }, -R, R, 64);
}

double SmoothWindow::integral() const { return std::pow(r_ * profile_l1(0), m_); }

double SmoothWindow::derivative_l1(int k) const {
  if (k < 0 || k > k_max()) throw InvalidArgument("SmoothWindow: derivative order out of range");
  std::lock_guard<std::mutex> lock(*cache_mutex_);
  auto it = cache_.find(k);
  if (it != cache_.end()) return it->second;
  double v;
  if (m_ == 1)
    v = std::pow(r_, 1.0 - k) * profile_l1(k);
  else
    v = derivative_l1_numeric(k);
  cache_[k] = v;
  return v;
}

double SmoothWindow::derivative_l1_numeric(int k) const {
  const double R = support_radius();
  if (m_ == 1) {
    return std::pow(r_, 1.0 - k) *
           integrate_abs_1d([&](double s) { return profile_derivative(k, s); }, -R, R, 256);
  }
  const int panels = 48;
  auto inner = [&](double s1) {
    return integrate_abs_1d(
        [&](double s2) {
          double sq = 0;
          for (int a = 0; a <= k; ++a) {
            const double c = boost::math::binomial_coefficient<double>(k, a);
            const double v = profile_derivative(a, s1) * profile_derivative(k - a, s2);
            sq += c * v * v;
          }
          return std::sqrt(sq);
        },
        -R, R, 16);
  };
  double acc = 0;
  const double h = 2.0 * R / panels;
  for (int p = 0; p < panels; ++p)
    acc += GK::integrate(inner, -R + p * h, -R + (p + 1) * h, 4, 1e-9);
  return std::pow(r_, 2.0 - k) * acc;
}

double SmoothWindow::fourier(const std::vector<double>& w) const {
  if (kind_ != Kind::Gaussian) throw InvalidArgument("SmoothWindow: closed-form transform needs a Gaussian");
  double sq = 0;
  for (double v : w) sq += v * v;
  return std::pow(r_, m_) * std::exp(-kPi * r_ * r_ * sq);
}

cplx quasiperiodic_integral(const SmoothWindow& psi, const PeriodicField& K, const Frame& frame,
                            double eta) {
  if (!(eta > 0)) throw InvalidArgument("quasiperiodic_integral: eta must be positive");
  if (K.comps() != 1) throw InvalidArgument("quasiperiodic_integral: scalar K expected");
  const int d = K.dim();
  if (frame.N.rows() != d || frame.N.cols() != psi.dim())
    throw InvalidArgument("quasiperiodic_integral: frame does not match K and Psi");
  if (psi.kind() != SmoothWindow::Kind::Gaussian)
    return {quasiperiodic_integral_quadrature(psi, K, frame, eta), 0.0};
  cplx acc = 0;
  std::vector<double> w(psi.dim());
  for (const auto& m : K.modes()) {
    for (int j = 0; j < psi.dim(); ++j) {
      double s = 0;
      for (int i = 0; i < d; ++i) s += frame.N(i, j) * m.xi[i];
      w[j] = -s / eta;
    }
    acc += m.c[0] * psi.fourier(w);
  }
  return acc;
}

double quasiperiodic_integral_quadrature(const SmoothWindow& psi, const PeriodicField& K,
                                         const Frame& frame, double eta, double tol) {
  if (!(eta > 0)) throw InvalidArgument("quasiperiodic_integral: eta must be positive");
  const int d = K.dim();
  const int m = psi.dim();
  const double R = psi.support_radius() * psi.scale();
  double fmax = 0;
  for (const auto& md : K.modes()) {
    double s = 0;
    for (int j = 0; j < m; ++j) {
      double p = 0;
      for (int i = 0; i < d; ++i) p += frame.N(i, j) * md.xi[i];
      s += p * p;
    }
    fmax = std::max(fmax, std::sqrt(s) / eta);
  }
  const int panels = static_cast<int>(std::ceil(2.0 * R * fmax)) + 8;
  const double h = 2.0 * R / panels;
  std::vector<double> y(d), z(m);
  auto integrand = [&](const std::vector<double>& zz) {
    for (int i = 0; i < d; ++i) {
      double s = 0;
      for (int j = 0; j < m; ++j) s += frame.N(i, j) * zz[j];
      y[i] = s / eta;
    }
    double kv = 0;
    K.evaluate(y.data(), &kv);
    return psi.value(zz) * kv;
  };
  double acc = 0;
  if (m == 1) {
    for (int p = 0; p < panels; ++p)
      acc += GK::integrate([&](double s) { z[0] = s; return integrand(z); }, -R + p * h, -R + (p + 1) * h, 15, tol);
    return acc;
  }
  for (int p = 0; p < panels; ++p) {
    acc += GK::integrate(
        [&](double s1) {
          double inner = 0;
          for (int q = 0; q < panels; ++q)
            inner += GK::integrate(
                [&](double s2) {
                  std::vector<double> zz{s1, s2};
                  return integrand(zz);
                },
                -R + q * h, -R + (q + 1) * h, 10, tol);
          return inner;
        },
        -R + p * h, -R + (p + 1) * h, 10, tol);
  }
  return acc;
}

double ergodic_bound(const SmoothWindow& psi, const PeriodicField& K, const Direction& dir,
                     double eta, int k) {
  if (dir.A_lb <= 0) throw InvalidArgument("ergodic_bound: rational direction, the bound is vacuous");
  if (K.dim() != static_cast<int>(dir.n.size())) throw InvalidArgument("ergodic_bound: dimension mismatch");
  if (K.cutoff() > dir.Xi)
    throw InvalidArgument("ergodic_bound: K has modes outside the Diophantine cutoff box");
  if (!(eta > 0)) throw InvalidArgument("ergodic_bound: eta must be positive");
  double sum = 0;
  for (const auto& m : K.modes()) {
    double sq = 0;
    bool zero = true;
    for (int v : m.xi) {
      sq += static_cast<double>(v) * v;
      zero = zero && v == 0;
    }
    if (zero) continue;
    sum += std::abs(m.c[0]) * std::pow(std::sqrt(sq), dir.kappa * k);
  }
  if (sum == 0) return 0.0;
  return std::pow(eta / dir.A_lb, k) * psi.derivative_l1(k) * sum;
}

ErgodicTable verify_ergodic(const SmoothWindow& psi, const PeriodicField& K, const Direction& dir,
                            const std::vector<double>& etas, const std::vector<int>& ks, double slack,
                            int threads) {
  Frame frame = build_frame(dir.n);
  const double mean = K.mean().at(0);
  for (int k : ks) psi.derivative_l1(k);
  std::vector<double> errors(etas.size());
  parallel_for(etas.size(), threads, [&](std::size_t i) {
    if (!(etas[i] > 0)) throw InvalidArgument("verify_ergodic: eta must be positive");
    cplx v = quasiperiodic_integral(psi, K, frame, etas[i]);
    errors[i] = std::abs(v - mean * psi.integral());
  });
  ErgodicTable tab;
  tab.all_pass = true;
  for (std::size_t i = 0; i < etas.size(); ++i)
    for (int k : ks) {
      ErgodicRow r;
      r.eta = etas[i];
      r.k = k;
      r.error = errors[i];
      r.bound = ergodic_bound(psi, K, dir, etas[i], k);
      r.pass = r.error <= r.bound + slack;
      tab.all_pass = tab.all_pass && r.pass;
      tab.rows.push_back(r);
    }
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < etas.size(); ++i)
    if (errors[i] > 1e-300) pts.emplace_back(std::log(etas[i]), std::log(errors[i]));
  if (pts.size() >= 2) {
    double mx = 0, my = 0;
    for (auto& p : pts) {
      mx += p.first;
      my += p.second;
    }
    mx /= pts.size();
    my /= pts.size();
    double sxy = 0, sxx = 0;
    for (auto& p : pts) {
      sxy += (p.first - mx) * (p.second - my);
      sxx += (p.first - mx) * (p.first - mx);
    }
    tab.slope = sxx > 0 ? sxy / sxx : 0.0;
  } else {
    tab.slope = std::numeric_limits<double>::infinity();
  }
  return tab;
}

PeriodicField random_band_limited(int dim, int modes, int cutoff, unsigned long long seed) {
  if (cutoff < 1 || modes < 1) throw InvalidArgument("random_band_limited: modes and cutoff must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(-cutoff, cutoff);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::set<Lattice> used;
  std::vector<FieldMode> table;
  table.push_back({Lattice(dim, 0), {cplx(gauss(rng), 0.0)}});
  while (static_cast<int>(used.size()) < modes) {
    Lattice xi(dim);
    for (auto& v : xi) v = pick(rng);
    Lattice neg(dim);
    bool zero = true;
    for (int i = 0; i < dim; ++i) {
      neg[i] = -xi[i];
      zero = zero && xi[i] == 0;
    }
    if (zero || used.count(xi) || used.count(neg)) continue;
    used.insert(xi);
    table.push_back({xi, {cplx(gauss(rng), gauss(rng))}});
  }
  return PeriodicField(dim, 1, std::move(table));
}

}  // namespace homog
