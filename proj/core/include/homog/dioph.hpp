#pragma once

#include <vector>

#include <Eigen/Dense>

#include "homog/fields.hpp"

namespace homog {

struct Direction {
  std::vector<double> n;
  double kappa = 1.5;
  double A_lb = 0;  // min over 0 < |xi|_inf <= Xi of |(Id - n n^T) xi| |xi|^kappa, clamped to [0,1]
  int Xi = 0;
  Lattice argmin;   // minimizing lattice vector (empty when the clamp is active)
};

struct Frame {
  Eigen::MatrixXd M;  // orthogonal, M e_d = n
  Eigen::MatrixXd N;  // first d-1 columns of M
};

double default_kappa(int dim);

// Unit vector proportional to (1, golden ratio).
std::vector<double> golden_direction();

Direction dioph_constant(const std::vector<double>& n, double kappa, int Xi);

// Householder frame: reflect about e_d + n when n.e_d >= 0 and compose with the
// flip of the last axis, otherwise reflect about e_d - n.
Frame build_frame(const std::vector<double>& n);

struct DiophSample {
  double s = 0;
  Eigen::Vector2d x;
  Eigen::Vector2d n;
  double A_lb = 0;
};

struct WeakNormPoint {
  double t = 0;
  double measure = 0;  // boundary measure of {A^{-1} > t} among samples with A_lb > 0
  double value = 0;    // t * measure^{1/(d-1)}
};

struct DiophStatistics {
  std::vector<DiophSample> samples;
  std::vector<WeakNormPoint> weak;
  double weak_sup = 0;
  int rational_samples = 0;  // samples with A_lb == 0
  double rational_fraction = 0;
};

DiophStatistics dioph_statistics(const ConvexDomain& dom, int samples, double kappa, int Xi,
                                 int threads = 1);

}  // namespace homog
