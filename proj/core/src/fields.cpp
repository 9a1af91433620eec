#include "homog/fields.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace homog {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

bool positive_half(const Lattice& xi) {
  for (int v : xi) {
    if (v > 0) return true;
    if (v < 0) return false;
  }
  return false;
}

bool is_zero(const Lattice& xi) {
  return std::all_of(xi.begin(), xi.end(), [](int v) { return v == 0; });
}

Lattice negate(const Lattice& xi) {
  Lattice m(xi.size());
  for (std::size_t i = 0; i < xi.size(); ++i) m[i] = -xi[i];
  return m;
}

}  // namespace

double wrap_angle(double s) {
  double w = std::fmod(s, kTwoPi);
  if (w < 0) w += kTwoPi;
  if (w >= kTwoPi) w = 0;
  return w;
}

// ---------------------------------------------------------------- PeriodicField

PeriodicField::PeriodicField(int dim, int comps, std::vector<FieldMode> modes)
    : dim_(dim), comps_(comps) {
  if (dim < 1) throw InvalidArgument("PeriodicField: dimension must be positive");
  if (comps < 1) throw InvalidArgument("PeriodicField: component count must be positive");
  std::map<Lattice, std::vector<cplx>> table;
  for (auto& m : modes) {
    if (static_cast<int>(m.xi.size()) != dim)
      throw InvalidArgument("PeriodicField: lattice vector has wrong dimension");
    if (static_cast<int>(m.c.size()) != comps)
      throw InvalidArgument("PeriodicField: coefficient block has wrong size");
    auto [it, fresh] = table.emplace(m.xi, m.c);
    if (!fresh) throw InvalidArgument("PeriodicField: duplicate lattice vector");
  }
  std::vector<std::pair<Lattice, std::vector<cplx>>> completed;
  for (auto& [xi, c] : table) {
    double scale = 1.0;
    for (auto& v : c) scale = std::max(scale, std::abs(v));
    if (is_zero(xi)) {
      for (auto& v : c) {
        if (std::abs(v.imag()) > 1e-12 * scale)
          throw InvalidArgument("PeriodicField: zero mode must be real");
        v = cplx(v.real(), 0.0);
      }
      continue;
    }
    auto partner = table.find(negate(xi));
    if (partner == table.end()) {
      std::vector<cplx> conj(c.size());
      for (std::size_t k = 0; k < c.size(); ++k) conj[k] = std::conj(c[k]);
      completed.emplace_back(negate(xi), conj);
    } else {
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (std::abs(partner->second[k] - std::conj(c[k])) > 1e-12 * scale)
          throw InvalidArgument("PeriodicField: coefficients at xi and -xi are not conjugate");
      }
    }
  }
  for (auto& p : completed) table.emplace(p.first, p.second);
  modes_.clear();
  for (auto& [xi, c] : table) modes_.push_back({xi, c});
  build_cache();
}

void PeriodicField::build_cache() {
  cutoff_ = 0;
  mean_.assign(comps_, 0.0);
  half_xi_.clear();
  half_re_.clear();
  half_im_.clear();
  for (const auto& m : modes_) {
    for (int v : m.xi) cutoff_ = std::max(cutoff_, std::abs(v));
    if (is_zero(m.xi)) {
      for (int k = 0; k < comps_; ++k) mean_[k] = m.c[k].real();
      continue;
    }
    if (!positive_half(m.xi)) continue;
    for (int v : m.xi) half_xi_.push_back(v);
    for (int k = 0; k < comps_; ++k) {
      half_re_.push_back(2.0 * m.c[k].real());
      half_im_.push_back(2.0 * m.c[k].imag());
    }
  }
}

PeriodicField PeriodicField::constant(int dim, const std::vector<double>& value) {
  FieldMode m{Lattice(dim, 0), {}};
  for (double v : value) m.c.emplace_back(v, 0.0);
  return PeriodicField(dim, static_cast<int>(value.size()), {m});
}

void PeriodicField::evaluate(const double* y, double* out) const {
  for (int k = 0; k < comps_; ++k) out[k] = mean_[k];
  const std::size_t nh = half_xi_.size() / std::max(dim_, 1);
  for (std::size_t m = 0; m < nh; ++m) {
    double phase = 0;
    for (int i = 0; i < dim_; ++i) phase += half_xi_[m * dim_ + i] * y[i];
    phase -= std::floor(phase);
    const double cs = std::cos(kTwoPi * phase);
    const double sn = std::sin(kTwoPi * phase);
    const double* re = &half_re_[m * comps_];
    const double* im = &half_im_[m * comps_];
    for (int k = 0; k < comps_; ++k) out[k] += re[k] * cs - im[k] * sn;
  }
}

std::vector<double> PeriodicField::evaluate(const std::vector<double>& y) const {
  if (static_cast<int>(y.size()) != dim_)
    throw InvalidArgument("PeriodicField::evaluate: point has wrong dimension");
  std::vector<double> out(comps_);
  evaluate(y.data(), out.data());
  return out;
}

double PeriodicField::evaluate(const std::vector<double>& y, int comp) const {
  return evaluate(y).at(comp);
}

cplx PeriodicField::coefficient(const Lattice& xi, int comp) const {
  for (const auto& m : modes_)
    if (m.xi == xi) return m.c.at(comp);
  return {0.0, 0.0};
}

std::vector<double> PeriodicField::mean() const { return mean_; }

bool PeriodicField::is_constant() const {
  for (const auto& m : modes_) {
    if (is_zero(m.xi)) continue;
    for (const auto& v : m.c)
      if (v != cplx(0.0, 0.0)) return false;
  }
  return true;
}

PeriodicField PeriodicField::component(int comp) const {
  if (comp < 0 || comp >= comps_) throw InvalidArgument("PeriodicField: component out of range");
  std::vector<FieldMode> ms;
  for (const auto& m : modes_) ms.push_back({m.xi, {m.c[comp]}});
  return PeriodicField(dim_, 1, ms);
}

PeriodicField PeriodicField::scaled(double s) const {
  std::vector<FieldMode> ms = modes_;
  for (auto& m : ms)
    for (auto& v : m.c) v *= s;
  return PeriodicField(dim_, comps_, ms);
}

PeriodicField PeriodicField::operator+(const PeriodicField& o) const {
  if (o.dim_ != dim_ || o.comps_ != comps_)
    throw InvalidArgument("PeriodicField: shape mismatch in sum");
  std::map<Lattice, std::vector<cplx>> table;
  for (const auto& m : modes_) table[m.xi] = m.c;
  for (const auto& m : o.modes_) {
    auto& c = table[m.xi];
    if (c.empty()) c.assign(comps_, cplx(0.0, 0.0));
    for (int k = 0; k < comps_; ++k) c[k] += m.c[k];
  }
  std::vector<FieldMode> ms;
  for (auto& [xi, c] : table) ms.push_back({xi, c});
  return PeriodicField(dim_, comps_, ms);
}

// ---------------------------------------------------------------- ModeBuilder

ModeBuilder::ModeBuilder(int dim, int comps) : dim_(dim), comps_(comps) {}

ModeBuilder& ModeBuilder::add_mode(const Lattice& xi, int comp, cplx c) {
  if (static_cast<int>(xi.size()) != dim_) throw InvalidArgument("ModeBuilder: wrong dimension");
  if (comp < 0 || comp >= comps_) throw InvalidArgument("ModeBuilder: component out of range");
  for (auto& m : modes_) {
    if (m.xi == xi) {
      m.c[comp] += c;
      return *this;
    }
  }
  FieldMode m{xi, std::vector<cplx>(comps_, cplx(0.0, 0.0))};
  m.c[comp] = c;
  modes_.push_back(m);
  return *this;
}

ModeBuilder& ModeBuilder::add_constant(int comp, double v) {
  return add_mode(Lattice(dim_, 0), comp, cplx(v, 0.0));
}

ModeBuilder& ModeBuilder::add_cos(const Lattice& xi, int comp, double amp) {
  if (is_zero(xi)) return add_constant(comp, amp);
  add_mode(xi, comp, cplx(0.5 * amp, 0.0));
  return add_mode(negate(xi), comp, cplx(0.5 * amp, 0.0));
}

ModeBuilder& ModeBuilder::add_sin(const Lattice& xi, int comp, double amp) {
  if (is_zero(xi)) return *this;
  add_mode(xi, comp, cplx(0.0, -0.5 * amp));
  return add_mode(negate(xi), comp, cplx(0.0, 0.5 * amp));
}

PeriodicField ModeBuilder::build() const { return PeriodicField(dim_, comps_, modes_); }

// ---------------------------------------------------------------- PeriodicTensor

PeriodicTensor::PeriodicTensor(int dim, int sysdim, PeriodicField field, double lambda)
    : dim_(dim), sysdim_(sysdim), lambda_(lambda), field_(std::move(field)) {
  if (dim < 2) throw InvalidArgument("PeriodicTensor: dimension must be at least 2");
  if (sysdim < 1) throw InvalidArgument("PeriodicTensor: system size must be positive");
  if (!(lambda > 0 && lambda < 1)) throw InvalidArgument("PeriodicTensor: lambda must lie in (0,1)");
  if (field_.dim() != dim || field_.comps() != entries())
    throw InvalidArgument("PeriodicTensor: field shape does not match (d,d,L,L)");
}

PeriodicTensor PeriodicTensor::constant(int dim, int sysdim, const std::vector<double>& value,
                                        double lambda) {
  return PeriodicTensor(dim, sysdim, PeriodicField::constant(dim, value), lambda);
}

PeriodicTensor PeriodicTensor::identity(int dim, int sysdim, double lambda) {
  std::vector<double> v(dim * dim * sysdim * sysdim, 0.0);
  for (int a = 0; a < dim; ++a)
    for (int i = 0; i < sysdim; ++i) v[((a * dim + a) * sysdim + i) * sysdim + i] = 1.0;
  return constant(dim, sysdim, v, lambda);
}

PeriodicTensor PeriodicTensor::isotropic(const PeriodicField& s, int sysdim, double lambda) {
  if (s.comps() != 1) throw InvalidArgument("PeriodicTensor::isotropic: scalar field expected");
  const int d = s.dim();
  const int n = d * d * sysdim * sysdim;
  std::vector<FieldMode> ms;
  for (const auto& m : s.modes()) {
    FieldMode fm{m.xi, std::vector<cplx>(n, cplx(0.0, 0.0))};
    for (int a = 0; a < d; ++a)
      for (int i = 0; i < sysdim; ++i) fm.c[((a * d + a) * sysdim + i) * sysdim + i] = m.c[0];
    ms.push_back(fm);
  }
  return PeriodicTensor(d, sysdim, PeriodicField(d, n, ms), lambda);
}

std::vector<double> PeriodicTensor::evaluate(const std::vector<double>& y) const {
  return field_.evaluate(y);
}

PeriodicTensor PeriodicTensor::adjoint() const {
  std::vector<FieldMode> ms;
  for (const auto& m : field_.modes()) {
    FieldMode fm{m.xi, std::vector<cplx>(entries())};
    for (int a = 0; a < dim_; ++a)
      for (int b = 0; b < dim_; ++b)
        for (int i = 0; i < sysdim_; ++i)
          for (int j = 0; j < sysdim_; ++j) fm.c[index(a, b, i, j)] = m.c[index(b, a, j, i)];
    ms.push_back(fm);
  }
  return PeriodicTensor(dim_, sysdim_, PeriodicField(dim_, entries(), ms), lambda_);
}

PeriodicTensor PeriodicTensor::rotated(const Eigen::MatrixXd& M) const {
  if (M.rows() != dim_ || M.cols() != dim_)
    throw InvalidArgument("PeriodicTensor::rotated: matrix has wrong size");
  std::vector<FieldMode> ms;
  for (const auto& m : field_.modes()) {
    FieldMode fm{m.xi, std::vector<cplx>(entries(), cplx(0.0, 0.0))};
    for (int i = 0; i < sysdim_; ++i)
      for (int j = 0; j < sysdim_; ++j)
        for (int a = 0; a < dim_; ++a)
          for (int b = 0; b < dim_; ++b) {
            cplx acc = 0;
            for (int g = 0; g < dim_; ++g)
              for (int h = 0; h < dim_; ++h) acc += M(g, a) * m.c[index(g, h, i, j)] * M(h, b);
            fm.c[index(a, b, i, j)] = acc;
          }
    ms.push_back(fm);
  }
  return PeriodicTensor(dim_, sysdim_, PeriodicField(dim_, entries(), ms), lambda_);
}

bool PeriodicTensor::is_symmetric(double tol) const {
  for (const auto& m : field_.modes())
    for (int a = 0; a < dim_; ++a)
      for (int b = 0; b < dim_; ++b)
        for (int i = 0; i < sysdim_; ++i)
          for (int j = 0; j < sysdim_; ++j)
            if (std::abs(m.c[index(a, b, i, j)] - m.c[index(b, a, j, i)]) > tol) return false;
  return true;
}

EllipticityCertificate validate_ellipticity(const PeriodicTensor& a, int grid_n) {
  if (grid_n < 2) throw InvalidArgument("validate_ellipticity: grid_n must be at least 2");
  const int d = a.dim();
  const int L = a.sysdim();
  const int n = d * L;
  long total = 1;
  for (int i = 0; i < d; ++i) total *= grid_n;
  EllipticityCertificate cert;
  cert.min_eig = std::numeric_limits<double>::infinity();
  cert.max_eig = -std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  std::vector<double> y(d), val(a.entries());
  Eigen::MatrixXd A(n, n);
  for (long p = 0; p < total; ++p) {
    long r = p;
    for (int i = 0; i < d; ++i) {
      y[i] = static_cast<double>(r % grid_n) / grid_n;
      r /= grid_n;
    }
    a.evaluate(y.data(), val.data());
    for (int al = 0; al < d; ++al)
      for (int be = 0; be < d; ++be)
        for (int i = 0; i < L; ++i)
          for (int j = 0; j < L; ++j) A(al * L + i, be * L + j) = val[a.index(al, be, i, j)];
    Eigen::MatrixXd S = 0.5 * (A + A.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    cert.min_eig = std::min(cert.min_eig, lo);
    cert.max_eig = std::max(cert.max_eig, hi);
    const double margin = std::min(lo - a.lambda(), 1.0 / a.lambda() - hi);
    if (margin < worst) {
      worst = margin;
      cert.worst_point = y;
    }
  }
  cert.lambda_observed = std::min(cert.min_eig, 1.0 / cert.max_eig);
  cert.pass = cert.min_eig >= a.lambda() && cert.max_eig <= 1.0 / a.lambda();
  return cert;
}

// ---------------------------------------------------------------- boundary datum

double SlowFactor::evaluate(double s) const {
  double v = 0;
  for (const auto& [k, c] : modes) v += (c * std::exp(cplx(0.0, k * s))).real();
  return v;
}

SlowFactor SlowFactor::constant(double v) { return SlowFactor{{{0, cplx(v, 0.0)}}}; }

TwoScaleBoundaryDatum::TwoScaleBoundaryDatum(std::vector<DatumTerm> terms)
    : terms_(std::move(terms)) {
  if (terms_.empty()) throw InvalidArgument("TwoScaleBoundaryDatum: at least one term required");
  dim_ = terms_.front().fast.dim();
  sysdim_ = terms_.front().fast.comps();
  for (const auto& t : terms_)
    if (t.fast.dim() != dim_ || t.fast.comps() != sysdim_)
      throw InvalidArgument("TwoScaleBoundaryDatum: inconsistent fast factors");
}

void TwoScaleBoundaryDatum::evaluate(double s, const double* y, double* out) const {
  std::vector<double> tmp(sysdim_);
  for (int k = 0; k < sysdim_; ++k) out[k] = 0;
  for (const auto& t : terms_) {
    const double sv = t.slow.evaluate(s);
    t.fast.evaluate(y, tmp.data());
    for (int k = 0; k < sysdim_; ++k) out[k] += sv * tmp[k];
  }
}

double TwoScaleBoundaryDatum::evaluate(double s, const std::vector<double>& y) const {
  std::vector<double> out(sysdim_);
  evaluate(s, y.data(), out.data());
  return out[0];
}

bool TwoScaleBoundaryDatum::is_fast_constant() const {
  return std::all_of(terms_.begin(), terms_.end(),
                     [](const DatumTerm& t) { return t.fast.is_constant(); });
}

// ---------------------------------------------------------------- ConvexDomain

ConvexDomain::ConvexDomain(double a, double b) : a_(a), b_(b) {
  if (!(a > 0 && b > 0)) throw InvalidArgument("ConvexDomain: semi-axes must be positive");
}

ConvexDomain ConvexDomain::disc(double radius) { return ConvexDomain(radius, radius); }
ConvexDomain ConvexDomain::ellipse(double a, double b) { return ConvexDomain(a, b); }

std::string ConvexDomain::describe() const {
  std::ostringstream os;
  if (is_disc())
    os << "disc(" << a_ << ")";
  else
    os << "ellipse(" << a_ << "," << b_ << ")";
  return os.str();
}

ChartPoint ConvexDomain::chart(double s) const {
  const double c = std::cos(s), sn = std::sin(s);
  ChartPoint p;
  p.point = {a_ * c, b_ * sn};
  Eigen::Vector2d nrm(b_ * c, a_ * sn);
  p.normal = nrm.normalized();
  const double q = a_ * a_ * sn * sn + b_ * b_ * c * c;
  p.curvature = a_ * b_ / (q * std::sqrt(q));
  return p;
}

double ConvexDomain::chart_speed(double s) const {
  const double c = std::cos(s), sn = std::sin(s);
  return std::sqrt(a_ * a_ * sn * sn + b_ * b_ * c * c);
}

double ConvexDomain::chart_parameter(const Eigen::Vector2d& x) const {
  return wrap_angle(std::atan2(x.y() / b_, x.x() / a_));
}

double ConvexDomain::perimeter() const {
  if (is_disc()) return kTwoPi * a_;
  const int n = 4096;
  double acc = 0;
  for (int i = 0; i < n; ++i) acc += chart_speed(kTwoPi * i / n);
  return acc * kTwoPi / n;
}

double ConvexDomain::area() const { return std::numbers::pi * a_ * b_; }

double ConvexDomain::curvature_min() const {
  const double lo = std::min(a_, b_), hi = std::max(a_, b_);
  return lo / (hi * hi);
}

double ConvexDomain::curvature_max() const {
  const double lo = std::min(a_, b_), hi = std::max(a_, b_);
  return hi / (lo * lo);
}

double ConvexDomain::level(const Eigen::Vector2d& x) const {
  const double u = x.x() / a_, v = x.y() / b_;
  return u * u + v * v - 1.0;
}

double ConvexDomain::distance_to_boundary(const Eigen::Vector2d& x) const {
  if (is_disc()) return std::abs(a_ - x.norm());
  double best_s = 0, best = std::numeric_limits<double>::infinity();
  const int n = 256;
  for (int i = 0; i < n; ++i) {
    const double s = kTwoPi * i / n;
    const double dd = (chart(s).point - x).squaredNorm();
    if (dd < best) {
      best = dd;
      best_s = s;
    }
  }
  double s = best_s;
  for (int it = 0; it < 50; ++it) {
    const double c = std::cos(s), sn = std::sin(s);
    const Eigen::Vector2d p(a_ * c, b_ * sn), dp(-a_ * sn, b_ * c), ddp(-a_ * c, -b_ * sn);
    const double f = (p - x).dot(dp);
    const double fp = dp.squaredNorm() + (p - x).dot(ddp);
    if (fp <= 0) break;
    const double step = f / fp;
    s -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return std::min(std::sqrt(best), (chart(s).point - x).norm());
}

std::pair<double, double> ConvexDomain::level_range(const Eigen::Vector2d& lo,
                                                    const Eigen::Vector2d& hi) const {
  const Eigen::Vector2d near(std::clamp(0.0, lo.x(), hi.x()), std::clamp(0.0, lo.y(), hi.y()));
  double mx = -std::numeric_limits<double>::infinity();
  for (int cx = 0; cx < 2; ++cx)
    for (int cy = 0; cy < 2; ++cy)
      mx = std::max(mx, level({cx ? hi.x() : lo.x(), cy ? hi.y() : lo.y()}));
  return {level(near), mx};
}

ChartPoint boundary_chart_eval(const ConvexDomain& dom, double s) {
  if (!std::isfinite(s) || s < 0 || s >= kTwoPi)
    throw InvalidArgument("boundary_chart_eval: chart parameter outside [0, 2 pi)");
  return dom.chart(s);
}

}  // namespace homog
