#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace homog {

using cplx = std::complex<double>;
using Lattice = std::vector<int>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

// One Fourier coefficient block c(xi) of a periodic field.
struct FieldMode {
  Lattice xi;
  std::vector<cplx> c;
};

// Real-valued Z^d-periodic field with `comps` components, stored as a finite
// Fourier table f(y) = sum_xi c(xi) exp(2 pi i xi.y).
class PeriodicField {
 public:
  PeriodicField() = default;
  // Missing conjugate partners are completed; inconsistent pairs throw.
  PeriodicField(int dim, int comps, std::vector<FieldMode> modes);

  static PeriodicField constant(int dim, const std::vector<double>& value);

  int dim() const { return dim_; }
  int comps() const { return comps_; }
  int cutoff() const { return cutoff_; }
  const std::vector<FieldMode>& modes() const { return modes_; }

  void evaluate(const double* y, double* out) const;
  std::vector<double> evaluate(const std::vector<double>& y) const;
  double evaluate(const std::vector<double>& y, int comp) const;

  cplx coefficient(const Lattice& xi, int comp) const;
  std::vector<double> mean() const;
  bool is_constant() const;

  PeriodicField component(int comp) const;
  PeriodicField scaled(double s) const;
  PeriodicField operator+(const PeriodicField& o) const;

 private:
  void build_cache();

  int dim_ = 0;
  int comps_ = 0;
  int cutoff_ = 0;
  std::vector<FieldMode> modes_;
  std::vector<double> half_xi_;
  std::vector<double> half_re_;
  std::vector<double> half_im_;
  std::vector<double> mean_;
};

// Accumulates real trigonometric terms into a conjugate-symmetric mode table.
class ModeBuilder {
 public:
  ModeBuilder(int dim, int comps);
  ModeBuilder& add_constant(int comp, double v);
  ModeBuilder& add_cos(const Lattice& xi, int comp, double amp);
  ModeBuilder& add_sin(const Lattice& xi, int comp, double amp);
  ModeBuilder& add_mode(const Lattice& xi, int comp, cplx c);
  PeriodicField build() const;

 private:
  int dim_;
  int comps_;
  std::vector<FieldMode> modes_;
};

// Coefficient a^{alpha beta}_{ij}(y), d x d blocks of L x L matrices.
class PeriodicTensor {
 public:
  PeriodicTensor() = default;
  PeriodicTensor(int dim, int sysdim, PeriodicField field, double lambda);

  static PeriodicTensor constant(int dim, int sysdim, const std::vector<double>& value,
                                 double lambda);
  static PeriodicTensor identity(int dim, int sysdim, double lambda);
  // a^{alpha beta}_{ij} = delta_{alpha beta} delta_{ij} s(y)
  static PeriodicTensor isotropic(const PeriodicField& s, int sysdim, double lambda);

  int dim() const { return dim_; }
  int sysdim() const { return sysdim_; }
  double lambda() const { return lambda_; }
  int entries() const { return dim_ * dim_ * sysdim_ * sysdim_; }
  int index(int alpha, int beta, int i, int j) const {
    return ((alpha * dim_ + beta) * sysdim_ + i) * sysdim_ + j;
  }
  const PeriodicField& field() const { return field_; }
  int cutoff() const { return field_.cutoff(); }

  void evaluate(const double* y, double* out) const { field_.evaluate(y, out); }
  std::vector<double> evaluate(const std::vector<double>& y) const;
  std::vector<double> mean() const { return field_.mean(); }

  PeriodicTensor adjoint() const;
  // b = M^T a M acting on the spatial indices.
  PeriodicTensor rotated(const Eigen::MatrixXd& M) const;
  bool is_symmetric(double tol = 1e-14) const;
  bool is_constant() const { return field_.is_constant(); }

 private:
  int dim_ = 0;
  int sysdim_ = 0;
  double lambda_ = 0;
  PeriodicField field_;
};

struct EllipticityCertificate {
  double min_eig = 0;
  double max_eig = 0;
  double lambda_observed = 0;
  bool pass = false;
  std::vector<double> worst_point;
};

EllipticityCertificate validate_ellipticity(const PeriodicTensor& a, int grid_n);

// Smooth boundary factor as a trigonometric series in the chart parameter s.
struct SlowFactor {
  std::vector<std::pair<int, cplx>> modes;
  double evaluate(double s) const;
  static SlowFactor constant(double v);
};

struct DatumTerm {
  SlowFactor slow;
  PeriodicField fast;
};

// g(x, y) = sum_m s_m(x) p_m(y), x addressed by its chart parameter.
class TwoScaleBoundaryDatum {
 public:
  TwoScaleBoundaryDatum() = default;
  explicit TwoScaleBoundaryDatum(std::vector<DatumTerm> terms);

  int sysdim() const { return sysdim_; }
  int dim() const { return dim_; }
  const std::vector<DatumTerm>& terms() const { return terms_; }

  void evaluate(double s, const double* y, double* out) const;
  double evaluate(double s, const std::vector<double>& y) const;
  bool is_fast_constant() const;

 private:
  int dim_ = 0;
  int sysdim_ = 0;
  std::vector<DatumTerm> terms_;
};

struct ChartPoint {
  Eigen::Vector2d point;
  Eigen::Vector2d normal;
  double curvature = 0;
};

// Origin-centred disc or axis-aligned ellipse in d = 2, charted by the angle s.
class ConvexDomain {
 public:
  static ConvexDomain disc(double radius = 1.0);
  static ConvexDomain ellipse(double a, double b);

  bool is_disc() const { return a_ == b_; }
  double semi_a() const { return a_; }
  double semi_b() const { return b_; }
  std::string describe() const;

  ChartPoint chart(double s) const;
  double chart_speed(double s) const;
  double chart_parameter(const Eigen::Vector2d& x) const;
  double perimeter() const;
  double area() const;
  double curvature_min() const;
  double curvature_max() const;
  Eigen::Vector2d interior_reference() const { return Eigen::Vector2d::Zero(); }

  // Negative inside; (x/a)^2 + (y/b)^2 - 1.
  double level(const Eigen::Vector2d& x) const;
  bool contains(const Eigen::Vector2d& x) const { return level(x) < 0; }
  double distance_to_boundary(const Eigen::Vector2d& x) const;
  // Range of the level function over the box [lo, hi].
  std::pair<double, double> level_range(const Eigen::Vector2d& lo,
                                        const Eigen::Vector2d& hi) const;

 private:
  ConvexDomain(double a, double b);
  double a_ = 1;
  double b_ = 1;
};

ChartPoint boundary_chart_eval(const ConvexDomain& dom, double s);

double wrap_angle(double s);

}  // namespace homog
