#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "homog/fields.hpp"

namespace homog {

// Triadic cube of side 3^level centred at k * 3^level (d = 2).
struct TriadicCube {
  int level = 0;
  std::array<long long, 2> k{0, 0};

  double size() const;
  Eigen::Vector2d center() const;
  bool contains(const Eigen::Vector2d& x) const;  // half-open box
  bool operator<(const TriadicCube& o) const {
    return level != o.level ? level < o.level : k < o.k;
  }
  bool operator==(const TriadicCube& o) const { return level == o.level && k == o.k; }
};

struct CubeHash {
  std::size_t operator()(const TriadicCube& c) const {
    std::size_t h = static_cast<std::size_t>(c.level) * 0x9E3779B97F4A7C15ull;
    h ^= static_cast<std::size_t>(c.k[0]) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    h ^= static_cast<std::size_t>(c.k[1]) + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    return h;
  }
};

// Scalar function on the boundary addressed by the chart parameter.
struct BoundaryFunction {
  std::function<double(double s)> eval;
  double floor = 0;  // lower bound F >= floor > 0
};

// F(s) = eps^{1-delta} / A(n(s)) with A computed at lattice cutoff Xi; +inf when A = 0.
BoundaryFunction diophantine_driver(const ConvexDomain& dom, double epsilon, double delta, double kappa,
                                    int Xi);

struct CubeRecord {
  TriadicCube cube;
  double essinf = 0;    // sampled essinf of F over 3 cube cap boundary
  bool anchored = false;
  double anchor_s = 0;  // chart parameter of the anchor
  Eigen::Vector2d anchor = Eigen::Vector2d::Zero();
  double anchor_A = 0;
};

struct DecomposeOptions {
  int samples_per_side = 32;
  int max_depth = 38;
  int threads = 1;
};

struct CubePartition {
  std::vector<CubeRecord> cubes;  // sorted by (level, centre)
  int top_level = 0;
  int depth = 0;
  double epsilon = 0;
  double delta = 0;
  double kappa = 0;
  int Xi = 0;
  std::map<int, int> count_per_level;

  int find(const TriadicCube& c) const;  // index or -1
  // Index of the cube containing the point, or -1.
  int locate(const Eigen::Vector2d& x) const;

  std::vector<int> levels() const;  // distinct levels, ascending
  void rebuild_index();

 private:
  std::unordered_map<TriadicCube, int, CubeHash> index_;
};

// Stopping-time decomposition. Throws InvalidArgument when the floor is not
// positive and Error when the depth cap is exceeded.
CubePartition decompose(const ConvexDomain& dom, const BoundaryFunction& F,
                        const DecomposeOptions& opt = {});

// Full pipeline for F = eps^{1-delta} A^{-1}: decomposition plus anchors.
CubePartition decompose_diophantine(const ConvexDomain& dom, double epsilon, double delta, double kappa,
                                    int Xi, const DecomposeOptions& opt = {});

// Picks in each 3 cube cap boundary the sample with the largest A and records
// whether A * size >= eps^{1-delta}. Returns the number of cubes that fail.
int anchor_points(CubePartition& part, const ConvexDomain& dom, double kappa, int Xi,
                  int samples_per_side = 32, int threads = 1);

// Adjacency with exact integer arithmetic (closed boxes touch).
bool cubes_touch(const TriadicCube& a, const TriadicCube& b);
bool cubes_overlap(const TriadicCube& a, const TriadicCube& b);

struct PartitionChecks {
  int samples = 0;
  int coverage_misses = 0;       // (i)
  int cubes_missing_boundary = 0;  // (ii)
  int essinf_violations = 0;     // (iii)
  int neighbor_violations = 0;   // (v), exact over all adjacent pairs
  int overlaps = 0;              // disjointness, exact
  int anchor_failures = 0;
  double size_min = 0;
  double size_max = 0;
  double c_lower = 0;  // size_min / eps^{1-delta}
  double C_upper = 0;  // size_max / eps^{(1-delta)/2}
  double counting_constant = 0;  // (iv): max_n #{size >= 3^n} 3^{n} / H{F >= 3^{n-2}}
  bool ok() const {
    return coverage_misses == 0 && cubes_missing_boundary == 0 && essinf_violations == 0 &&
           neighbor_violations == 0 && overlaps == 0;
  }
};

PartitionChecks check_partition(const CubePartition& part, const ConvexDomain& dom,
                                const BoundaryFunction& F, int samples = 10000,
                                int samples_per_side = 32, int threads = 1);

// psi = zeta_Q / sum zeta, zeta_Q = 1_Q * eta_{size(Q)} with a tensor bump
// mollifier supported in [-1/6, 1/6]^2, so supp zeta_Q = (4/3) Q.
class PartitionOfUnity {
 public:
  explicit PartitionOfUnity(const CubePartition& part);

  struct Entry {
    int cube = 0;
    double value = 0;
  };
  // All nonzero psi at x. Throws Error when sum zeta < 1/4 on the union of cubes.
  std::vector<Entry> evaluate(const Eigen::Vector2d& x) const;
  double psi(int cube, const Eigen::Vector2d& x) const;
  double zeta(int cube, const Eigen::Vector2d& x) const;
  double zeta_sum(const Eigen::Vector2d& x) const;
  // Cumulative distribution of the 1-D mollifier on [-1/6, 1/6].
  static double mollifier_cdf(double t);
  static double mollifier(double t);

  // max over sampled points of |d^k psi| size^k along axis and diagonal
  // directions, by central differences, for k = 1..3.
  std::array<double, 3> derivative_constants(int max_cubes = 10, int points = 64) const;

 private:
  std::vector<int> candidates(const Eigen::Vector2d& x, double grow) const;
  const CubePartition* part_;
  std::vector<int> levels_;
};

// E(x0) = sum_Q (size^3/eps^2 ^ 1) dist(x0, bdry) / |x0 - anchor|^2 size. Throws
// when x0 is outside the domain or inside Gamma = Omega cap (union of 5Q).
double error_functional(const CubePartition& part, const ConvexDomain& dom, const Eigen::Vector2d& x0,
                        double epsilon);
bool in_boundary_layer(const CubePartition& part, const Eigen::Vector2d& x0);

struct EfuncOptions {
  double q = 2;
  double angular_factor = 4;  // angular points per unit (arc length / distance to boundary)
  double panel_ratio = 1.25;  // geometric grading of the radial panels
  int radial_nodes = 2;       // Gauss-Legendre nodes per radial panel
  int threads = 1;
};

struct EfuncNorm {
  double norm_q = 0;       // int over Omega minus Gamma of E^q
  double gamma_area = 0;   // |Gamma|
  double min_value = 0;    // smallest sampled E
  long points = 0;         // quadrature points outside Gamma
};

EfuncNorm error_functional_norm(const CubePartition& part, const ConvexDomain& dom, double epsilon,
                                const EfuncOptions& opt = {});

}  // namespace homog
