#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "homog/fields.hpp"
#include "homog/multigrid.hpp"

namespace homog {

// Boundary-fitted equilateral triangulation of a convex domain. Lattice node
// (i, j) sits at h (i + j/2, j sqrt(3)/2). Nodes deeper than alpha h inside
// the domain are unknowns; lattice neighbours of unknowns that are not
// themselves unknowns are moved onto the boundary along the chart and carry
// Dirichlet data. Elements are the lattice triangles whose three vertices
// are active.
class HexMesh {
 public:
  HexMesh(const ConvexDomain& dom, double h, double alpha = 0.3);

  const ConvexDomain& domain() const { return dom_; }
  double spacing() const { return h_; }
  double alpha() const { return alpha_; }
  const LatticeRows& rows() const { return rows_; }
  const std::vector<signed char>& kind() const { return kind_; }
  std::int64_t nodes() const { return rows_.size; }
  std::int64_t unknowns() const { return unknowns_; }
  std::int64_t boundary_nodes() const { return static_cast<std::int64_t>(bnode_.size()); }

  Eigen::Vector2d lattice_point(int i, int j) const;
  // Node position (boundary nodes at their projected location).
  Eigen::Vector2d position(int i, int j) const;
  // Index into the boundary arrays, or -1.
  std::int64_t boundary_index(std::int64_t node) const;
  const std::vector<std::int64_t>& boundary_node_ids() const { return bnode_; }
  const std::vector<Eigen::Vector2d>& boundary_positions() const { return bpos_; }
  const std::vector<double>& boundary_parameters() const { return bs_; }

  // Visits every element as (ids, positions, upper). Lower triangles are
  // {(i,j),(i+1,j),(i,j+1)}, upper ones {(i+1,j),(i+1,j+1),(i,j+1)}.
  template <class F>
  void for_each_element(F&& f) const {
    for (int r = 0; r + 1 < rows_.rows(); ++r) {
      const int j = rows_.j0 + r;
      for (int i = rows_.lo[r] - 1; i <= rows_.hi[r]; ++i) {
        const std::int64_t a = rows_.id(i, j), b = rows_.id(i + 1, j), c = rows_.id(i, j + 1),
                           d = rows_.id(i + 1, j + 1);
        if (a >= 0 && b >= 0 && c >= 0 && kind_[a] >= 0 && kind_[b] >= 0 && kind_[c] >= 0)
          f(std::array<std::int64_t, 3>{a, b, c},
            std::array<Eigen::Vector2d, 3>{position(i, j), position(i + 1, j), position(i, j + 1)}, false);
        if (b >= 0 && d >= 0 && c >= 0 && kind_[b] >= 0 && kind_[d] >= 0 && kind_[c] >= 0)
          f(std::array<std::int64_t, 3>{b, d, c},
            std::array<Eigen::Vector2d, 3>{position(i + 1, j), position(i + 1, j + 1), position(i, j + 1)}, true);
      }
    }
  }

  // Largest element diameter, element count and the count of elements with
  // non-positive area that touch an unknown (must be zero).
  double max_diameter() const { return diameter_; }
  std::int64_t elements() const { return elements_; }
  std::int64_t inverted() const { return inverted_; }
  double covered_area() const { return area_; }

  // Lattice coordinates of a point: x = h (u + v/2), y = h v sqrt(3)/2.
  Eigen::Vector2d lattice_coordinates(const Eigen::Vector2d& x) const;

 private:
  ConvexDomain dom_;
  double h_;
  double alpha_;
  LatticeRows rows_;
  std::vector<signed char> kind_;
  std::int64_t unknowns_ = 0;
  std::vector<std::int64_t> bnode_;
  std::vector<Eigen::Vector2d> bpos_;
  std::vector<double> bs_;
  double diameter_ = 0;
  std::int64_t elements_ = 0;
  std::int64_t inverted_ = 0;
  double area_ = 0;
};

// P1 element stiffness for a constant 2 x 2 coefficient K (row-major
// k00, k01, k10, k11) on triangle p; S(a, b) = area grad phi_a . K grad phi_b.
Eigen::Matrix3d p1_stiffness(const std::array<Eigen::Vector2d, 3>& p, const double* K);
double signed_area(const std::array<Eigen::Vector2d, 3>& p);

}  // namespace homog
