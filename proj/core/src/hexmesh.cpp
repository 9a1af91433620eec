#include "homog/hexmesh.hpp"

#include <algorithm>
#include <cmath>

namespace homog {

namespace {

const double kS3 = std::sqrt(3.0) / 2.0;

double signed_distance(const ConvexDomain& dom, const Eigen::Vector2d& x) {
  if (dom.is_disc()) return x.norm() - dom.semi_a();
  const double d = dom.distance_to_boundary(x);
  return dom.contains(x) ? -d : d;
}

// Interval of x in row height y where the signed distance is below -depth,
// empty (lo > hi) when there is none.
std::pair<double, double> inner_interval(const ConvexDomain& dom, double y, double depth) {
  const double b = dom.semi_b(), a = dom.semi_a();
  if (std::abs(y) >= b) return {1.0, -1.0};
  const double xm = a * std::sqrt(1.0 - (y / b) * (y / b));
  if (signed_distance(dom, {0.0, y}) >= -depth) return {1.0, -1.0};
  auto edge = [&](double sgn) {
    double in = 0.0, out = sgn * xm;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (in + out);
      if (signed_distance(dom, {mid, y}) < -depth)
        in = mid;
      else
        out = mid;
    }
    return in;
  };
  return {edge(-1.0), edge(1.0)};
}

}  // namespace

HexMesh::HexMesh(const ConvexDomain& dom, double h, double alpha) : dom_(dom), h_(h), alpha_(alpha) {
  if (!(h > 0) || !(alpha > 0 && alpha < 0.5)) throw InvalidArgument("HexMesh: bad spacing or alpha");
  const double depth = alpha * h;
  const int jmax = static_cast<int>(std::ceil(dom.semi_b() / (kS3 * h))) + 2;
  const int nrows = 2 * jmax + 1;
  std::vector<int> ilo(nrows), ihi(nrows);
  for (int r = 0; r < nrows; ++r) {
    const int j = r - jmax;
    const double y = kS3 * h * j;
    const auto iv = inner_interval(dom, y, depth);
    if (iv.first > iv.second) {
      ilo[r] = 1, ihi[r] = 0;
      continue;
    }
    // Strict inequality sd < -depth on the lattice points.
    ilo[r] = static_cast<int>(std::ceil(iv.first / h - 0.5 * j - 1e-12));
    ihi[r] = static_cast<int>(std::floor(iv.second / h - 0.5 * j + 1e-12));
    while (ilo[r] <= ihi[r] && signed_distance(dom, lattice_point(ilo[r], j)) >= -depth) ++ilo[r];
    while (ihi[r] >= ilo[r] && signed_distance(dom, lattice_point(ihi[r], j)) >= -depth) --ihi[r];
  }
  auto interior = [&](int i, int j) {
    const int r = j + jmax;
    return r >= 0 && r < nrows && ilo[r] <= ihi[r] && i >= ilo[r] && i <= ihi[r];
  };
  int first = -1, last = -1;
  std::vector<int> lo(nrows), hi(nrows);
  for (int r = 0; r < nrows; ++r) {
    int l = 1 << 30, u = -(1 << 30);
    if (ilo[r] <= ihi[r]) l = std::min(l, ilo[r] - 1), u = std::max(u, ihi[r] + 1);
    if (r > 0 && ilo[r - 1] <= ihi[r - 1]) l = std::min(l, ilo[r - 1] - 1), u = std::max(u, ihi[r - 1]);
    if (r + 1 < nrows && ilo[r + 1] <= ihi[r + 1]) l = std::min(l, ilo[r + 1]), u = std::max(u, ihi[r + 1] + 1);
    lo[r] = l, hi[r] = u;
    if (l <= u) {
      if (first < 0) first = r;
      last = r;
    }
  }
  if (first < 0) throw Error("HexMesh: spacing too coarse for the domain");
  rows_.j0 = first - jmax;
  for (int r = first; r <= last; ++r) {
    rows_.lo.push_back(lo[r] <= hi[r] ? lo[r] : 0);
    rows_.hi.push_back(lo[r] <= hi[r] ? hi[r] : 0);
  }
  rows_.finalize();
  kind_.assign(rows_.size, -1);
  static constexpr int dirs[6][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {-1, 1}, {1, -1}};
  for (int r = 0; r < rows_.rows(); ++r) {
    const int j = rows_.j0 + r;
    for (int i = rows_.lo[r]; i <= rows_.hi[r]; ++i) {
      const std::int64_t p = rows_.offset[r] + (i - rows_.lo[r]);
      if (interior(i, j)) {
        kind_[p] = 0;
        ++unknowns_;
        continue;
      }
      bool adj = false;
      for (const auto& d : dirs) adj = adj || interior(i + d[0], j + d[1]);
      if (!adj) continue;
      kind_[p] = 1;
      const double s = dom.chart_parameter(lattice_point(i, j));
      bnode_.push_back(p);
      bpos_.push_back(dom.chart(s).point);
      bs_.push_back(s);
    }
  }
  for_each_element([&](const std::array<std::int64_t, 3>& id, const std::array<Eigen::Vector2d, 3>& x, bool) {
    const double A = signed_area(x);
    const bool touches = kind_[id[0]] == 0 || kind_[id[1]] == 0 || kind_[id[2]] == 0;
    if (A <= 0) {
      if (touches) ++inverted_;
      return;
    }
    ++elements_;
    area_ += A;
    diameter_ = std::max({diameter_, (x[0] - x[1]).norm(), (x[1] - x[2]).norm(), (x[2] - x[0]).norm()});
  });
  if (inverted_ > 0) throw Error("HexMesh: boundary fitting produced inverted elements");
}

Eigen::Vector2d HexMesh::lattice_point(int i, int j) const { return {h_ * (i + 0.5 * j), h_ * kS3 * j}; }

Eigen::Vector2d HexMesh::position(int i, int j) const {
  const std::int64_t p = rows_.id(i, j);
  if (p >= 0 && kind_[p] == 1) return bpos_[boundary_index(p)];
  return lattice_point(i, j);
}

std::int64_t HexMesh::boundary_index(std::int64_t node) const {
  const auto it = std::lower_bound(bnode_.begin(), bnode_.end(), node);
  if (it == bnode_.end() || *it != node) return -1;
  return it - bnode_.begin();
}

Eigen::Vector2d HexMesh::lattice_coordinates(const Eigen::Vector2d& x) const {
  const double v = x.y() / (kS3 * h_);
  return {x.x() / h_ - 0.5 * v, v};
}

double signed_area(const std::array<Eigen::Vector2d, 3>& p) {
  const Eigen::Vector2d u = p[1] - p[0], w = p[2] - p[0];
  return 0.5 * (u.x() * w.y() - u.y() * w.x());
}

Eigen::Matrix3d p1_stiffness(const std::array<Eigen::Vector2d, 3>& p, const double* K) {
  const double A = signed_area(p);
  Eigen::Matrix<double, 2, 3> G;
  for (int a = 0; a < 3; ++a) {
    const Eigen::Vector2d& q1 = p[(a + 1) % 3];
    const Eigen::Vector2d& q2 = p[(a + 2) % 3];
    G(0, a) = (q1.y() - q2.y()) / (2 * A);
    G(1, a) = (q2.x() - q1.x()) / (2 * A);
  }
  Eigen::Matrix2d Km;
  Km << K[0], K[1], K[2], K[3];
  return A * G.transpose() * Km * G;
}

}  // namespace homog
