#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "homog/dioph.hpp"
#include "homog/fields.hpp"

namespace homog {

// Window Psi on R^m (m = 1 or 2) formed as a tensor product of a 1-D profile
// scaled by r: Psi(z) = prod_i phi(z_i / r).
//   Gaussian: phi(s) = exp(-pi s^2)
//   Bump:     phi(s) = exp(-1 / (1 - s^2)) for |s| < 1, else 0
class SmoothWindow {
 public:
  enum class Kind { Gaussian, Bump };

  static SmoothWindow gaussian(int m = 1, double r = 1.0);
  static SmoothWindow bump(int m = 1, double r = 1.0);

  Kind kind() const { return kind_; }
  int dim() const { return m_; }
  double scale() const { return r_; }
  int k_max() const { return 6; }

  double value(const std::vector<double>& z) const;
  // k-th derivative of the 1-D profile phi at s (unscaled).
  double profile_derivative(int k, double s) const;
  // Half-width of the region outside which Psi is below 1e-16 (or zero).
  double support_radius() const;

  double integral() const;
  // int |grad^k Psi| with the Frobenius norm of the k-tensor.
  double derivative_l1(int k) const;
  // Numerical evaluation of the same quantity, independent of the closed form.
  double derivative_l1_numeric(int k) const;
  // Fourier transform int Psi(z) exp(-2 pi i w.z) dz; Gaussian only.
  double fourier(const std::vector<double>& w) const;

 private:
  SmoothWindow(Kind kind, int m, double r);
  double profile_l1(int k) const;
  Kind kind_;
  int m_;
  double r_;
  mutable std::map<int, double> cache_;
  std::shared_ptr<std::mutex> cache_mutex_;
};

struct QuadratureReport {
  double value = 0;        // real part of the integral
  double imag = 0;         // imaginary part (round-off for real K)
  double homogenized = 0;  // K-hat(0) int Psi
  double error = 0;
  std::map<int, double> bound_k;
  double eta = 0;
  double A = 0;
  double kappa = 0;
};

// int Psi(z) K(N z / eta) dz by the mode sum of closed-form transforms.
cplx quasiperiodic_integral(const SmoothWindow& psi, const PeriodicField& K, const Frame& frame,
                            double eta);
// Same integral by adaptive Gauss-Kronrod quadrature on the support of Psi.
double quasiperiodic_integral_quadrature(const SmoothWindow& psi, const PeriodicField& K,
                                         const Frame& frame, double eta, double tol = 1e-10);

// (eta / A)^k * int|grad^k Psi| * sum_{xi != 0} |K-hat(xi)| |xi|^{kappa k}.
double ergodic_bound(const SmoothWindow& psi, const PeriodicField& K, const Direction& dir,
                     double eta, int k);

struct ErgodicRow {
  double eta = 0;
  int k = 0;
  double error = 0;
  double bound = 0;
  bool pass = false;
};

struct ErgodicTable {
  std::vector<ErgodicRow> rows;
  double slope = 0;  // least-squares slope of log error against log eta (rows with error > 0)
  bool all_pass = false;
};

ErgodicTable verify_ergodic(const SmoothWindow& psi, const PeriodicField& K, const Direction& dir,
                            const std::vector<double>& etas, const std::vector<int>& ks,
                            double slack = 1e-10, int threads = 1);

// Real field with a random mean and `modes` random conjugate pairs, |xi|_inf <= cutoff.
PeriodicField random_band_limited(int dim, int modes, int cutoff, unsigned long long seed);

}  // namespace homog
