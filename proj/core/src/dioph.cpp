#include "homog/dioph.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "homog/parallel.hpp"

namespace homog {

namespace {

void check_unit(const std::vector<double>& n) {
  if (n.size() < 2) throw InvalidArgument("direction must have dimension >= 2");
  double s = 0;
  for (double v : n) s += v * v;
  if (std::abs(std::sqrt(s) - 1.0) > 1e-10) throw InvalidArgument("direction must be a unit vector");
}

double projection_norm(const std::vector<double>& n, const Lattice& xi) {
  double dotp = 0, sq = 0;
  for (std::size_t i = 0; i < n.size(); ++i) dotp += n[i] * xi[i];
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double v = xi[i] - dotp * n[i];
    sq += v * v;
  }
  return std::sqrt(sq);
}

double lattice_norm(const Lattice& xi) {
  double s = 0;
  for (int v : xi) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

void minimize_2d(const std::vector<double>& n, double kappa, int Xi, Direction& out) {
  // p(xi) = xi_major * n_minor - xi_minor * n_major up to sign; |p| is the
  // distance of xi to the line R n.
  const int major = std::abs(n[1]) >= std::abs(n[0]) ? 1 : 0;
  const int minor = 1 - major;
  const double nm = n[major], nn = n[minor];
  double best = 1.0;
  Lattice arg;
  for (int a = 0; a <= Xi; ++a) {
    // xi_major = a, xi_minor near a * nn / nm.
    const double centre = a * nn / nm;
    const double width = best / (std::abs(nm) * std::pow(std::max(a, 1), kappa));
    long lo = static_cast<long>(std::floor(centre - width));
    long hi = static_cast<long>(std::ceil(centre + width));
    lo = std::max<long>(lo, -Xi);
    hi = std::min<long>(hi, Xi);
    for (long b = lo; b <= hi; ++b) {
      if (a == 0 && b <= 0) continue;
      Lattice xi(2);
      xi[major] = a;
      xi[minor] = static_cast<int>(b);
      const double p = std::abs(std::fma(static_cast<double>(b), nm, -a * nn));
      const double f = p * std::pow(lattice_norm(xi), kappa);
      if (f < best) {
        best = f;
        arg = xi;
      }
    }
  }
  out.A_lb = best;
  out.argmin = arg;
}

void minimize_brute(const std::vector<double>& n, double kappa, int Xi, Direction& out) {
  const int d = static_cast<int>(n.size());
  double best = 1.0;
  Lattice arg, xi(d, -Xi);
  while (true) {
    bool zero = true;
    for (int v : xi) zero = zero && v == 0;
    if (!zero) {
      const double f = projection_norm(n, xi) * std::pow(lattice_norm(xi), kappa);
      if (f < best) {
        best = f;
        arg = xi;
      }
    }
    int ax = 0;
    while (ax < d && ++xi[ax] > Xi) xi[ax++] = -Xi;
    if (ax == d) break;
  }
  out.A_lb = best;
  out.argmin = arg;
}

}  // namespace

double default_kappa(int dim) { return dim == 2 ? 1.5 : 1.0; }

std::vector<double> golden_direction() {
  const double phi = 0.5 * (1.0 + std::sqrt(5.0));
  const double r = std::sqrt(1.0 + phi * phi);
  return {1.0 / r, phi / r};
}

Direction dioph_constant(const std::vector<double>& n, double kappa, int Xi) {
  check_unit(n);
  const int d = static_cast<int>(n.size());
  if (!(kappa > 1.0 / (d - 1))) throw InvalidArgument("dioph_constant: kappa must exceed 1/(d-1)");
  if (Xi < 1) throw InvalidArgument("dioph_constant: lattice cutoff must be >= 1");
  Direction dir;
  dir.n = n;
  dir.kappa = kappa;
  dir.Xi = Xi;
  if (d == 2)
    minimize_2d(n, kappa, Xi, dir);
  else
    minimize_brute(n, kappa, Xi, dir);
  dir.A_lb = std::clamp(dir.A_lb, 0.0, 1.0);
  return dir;
}

Frame build_frame(const std::vector<double>& n) {
  check_unit(n);
  const int d = static_cast<int>(n.size());
  Eigen::VectorXd nv = Eigen::Map<const Eigen::VectorXd>(n.data(), d);
  Eigen::VectorXd ed = Eigen::VectorXd::Unit(d, d - 1);
  Frame f;
  if (nv(d - 1) >= 0) {
    Eigen::VectorXd v = ed + nv;
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(d, d) - 2.0 * v * v.transpose() / v.squaredNorm();
    Eigen::VectorXd flip = Eigen::VectorXd::Ones(d);
    flip(d - 1) = -1;
    f.M = H * flip.asDiagonal();
  } else {
    Eigen::VectorXd v = ed - nv;
    f.M = Eigen::MatrixXd::Identity(d, d) - 2.0 * v * v.transpose() / v.squaredNorm();
  }
  f.N = f.M.leftCols(d - 1);
  return f;
}

DiophStatistics dioph_statistics(const ConvexDomain& dom, int samples, double kappa, int Xi,
                                 int threads) {
  if (samples < 10) throw InvalidArgument("dioph_statistics: at least 10 samples required");
  DiophStatistics st;
  st.samples.resize(samples);
  const double ds = 2.0 * std::numbers::pi / samples;
  parallel_for(samples, threads, [&](std::size_t k) {
    const double s = ds * static_cast<double>(k);
    const ChartPoint cp = dom.chart(s);
    DiophSample& smp = st.samples[k];
    smp.s = s;
    smp.x = cp.point;
    smp.n = cp.normal;
    smp.A_lb = dioph_constant({cp.normal.x(), cp.normal.y()}, kappa, Xi).A_lb;
  });
  std::vector<double> weight(samples);
  for (int k = 0; k < samples; ++k) {
    weight[k] = dom.chart_speed(st.samples[k].s) * ds;
    if (st.samples[k].A_lb == 0) ++st.rational_samples;
  }
  st.rational_fraction = static_cast<double>(st.rational_samples) / samples;
  for (int e = 0; e <= 120; ++e) {
    const double t = std::pow(10.0, 0.1 * e);
    double m = 0;
    for (int k = 0; k < samples; ++k) {
      const double A = st.samples[k].A_lb;
      if (A > 0 && 1.0 / A > t) m += weight[k];
    }
    WeakNormPoint w{t, m, t * m};
    st.weak_sup = std::max(st.weak_sup, w.value);
    st.weak.push_back(w);
  }
  return st;
}

}  // namespace homog
