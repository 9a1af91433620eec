#include "homog/czdecomp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <unordered_set>

#include <boost/math/quadrature/gauss.hpp>

#include "homog/dioph.hpp"
#include "homog/parallel.hpp"

namespace homog {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

double pow3(int m) { return std::pow(3.0, m); }

long long ipow3(int e) {
  if (e < 0 || e > 39) throw Error("triadic exponent out of range");
  long long r = 1;
  for (int i = 0; i < e; ++i) r *= 3;
  return r;
}

long long floor_div(long long a, long long b) {
  long long q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

// Nested boundary sample grids: level m holds N_m = N_top 3^{top - m} equally
// spaced chart parameters, with arc-length spacing at most 3^m / per_side.
class BoundarySampler {
 public:
  BoundarySampler(const ConvexDomain& dom, int top, int per_side) : dom_(&dom), top_(top) {
    const double speed = std::max(dom.semi_a(), dom.semi_b());
    base_ = std::max<long long>(64, static_cast<long long>(std::ceil(per_side * kTwoPi * speed / pow3(top))));
  }

  long long count(int m) const {
    const int e = top_ - m;
    if (e < 0) return base_;
    const long long p = ipow3(e);
    if (p > (1LL << 62) / base_) throw Error("boundary sample grid too fine");
    return base_ * p;
  }
  double param(int m, long long j) const { return kTwoPi * static_cast<double>(j) / static_cast<double>(count(m)); }
  Eigen::Vector2d point(int m, long long j) const { return dom_->chart(param(m, j)).point; }

  // Indices of level-m samples lying in the half-open box [lo, hi).
  void collect(int m, const Eigen::Vector2d& lo, const Eigen::Vector2d& hi, std::vector<long long>& out) const {
    const long long n = count(m);
    const double a = dom_->semi_a(), b = dom_->semi_b();
    auto inside = [&](const Eigen::Vector2d& p) {
      return p.x() >= lo.x() && p.x() < hi.x() && p.y() >= lo.y() && p.y() < hi.y();
    };
    if (lo.x() <= 0 && hi.x() >= 0 && lo.y() <= 0 && hi.y() >= 0) {
      for (long long j = 0; j < n; ++j)
        if (inside(point(m, j))) out.push_back(j);
      return;
    }
    const double t0 = std::atan2(lo.y() / b, lo.x() / a);
    double tmin = t0, tmax = t0;
    for (int c = 1; c < 4; ++c) {
      const double x = (c & 1) ? hi.x() : lo.x(), y = (c & 2) ? hi.y() : lo.y();
      const double t = t0 + std::remainder(std::atan2(y / b, x / a) - t0, kTwoPi);
      tmin = std::min(tmin, t);
      tmax = std::max(tmax, t);
    }
    const double step = kTwoPi / static_cast<double>(n);
    const long long j0 = static_cast<long long>(std::floor(tmin / step)) - 1;
    const long long j1 = static_cast<long long>(std::ceil(tmax / step)) + 1;
    for (long long j = j0; j <= j1; ++j) {
      const long long jj = ((j % n) + n) % n;
      if (inside(point(m, jj))) out.push_back(jj);
    }
  }

 private:
  const ConvexDomain* dom_;
  int top_;
  long long base_;
};

struct PairHash {
  std::size_t operator()(const std::pair<long long, long long>& p) const {
    return CubeHash{}(TriadicCube{0, {p.first, p.second}});
  }
};

// Memoized values on the sample grids, filled in parallel batches.
class SampleMemo {
 public:
  SampleMemo(const BoundarySampler& smp, std::function<double(double)> fn, int threads)
      : smp_(&smp), fn_(std::move(fn)), threads_(threads) {}

  void fill(int m, std::vector<long long> js) {
    auto& tab = table_[m];
    std::sort(js.begin(), js.end());
    js.erase(std::unique(js.begin(), js.end()), js.end());
    std::vector<long long> todo;
    for (long long j : js)
      if (!tab.count(j)) todo.push_back(j);
    std::vector<double> vals(todo.size());
    parallel_for(todo.size(), threads_, [&](std::size_t i) { vals[i] = fn_(smp_->param(m, todo[i])); });
    for (std::size_t i = 0; i < todo.size(); ++i) tab.emplace(todo[i], vals[i]);
  }
  double get(int m, long long j) const { return table_.at(m).at(j); }

 private:
  const BoundarySampler* smp_;
  std::function<double(double)> fn_;
  int threads_;
  std::map<int, std::unordered_map<long long, double>> table_;
};

// Sampled minimum of F over each level-m cell, composed into minima over 3Q.
class CellMinima {
 public:
  CellMinima(const BoundarySampler& smp, SampleMemo& memo) : smp_(&smp), memo_(&memo) {}

  void prepare(int m, const std::vector<std::pair<long long, long long>>& cells) {
    auto& tab = table_[m];
    std::vector<std::pair<long long, long long>> todo;
    for (const auto& c : cells)
      if (!tab.count(c)) todo.push_back(c);
    std::sort(todo.begin(), todo.end());
    todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
    std::vector<std::vector<long long>> idx(todo.size());
    std::vector<long long> all;
    const double s = pow3(m);
    for (std::size_t i = 0; i < todo.size(); ++i) {
      const Eigen::Vector2d c(todo[i].first * s, todo[i].second * s);
      smp_->collect(m, c.array() - 0.5 * s, c.array() + 0.5 * s, idx[i]);
      all.insert(all.end(), idx[i].begin(), idx[i].end());
    }
    memo_->fill(m, std::move(all));
    for (std::size_t i = 0; i < todo.size(); ++i) {
      double v = kInf;
      for (long long j : idx[i]) v = std::min(v, memo_->get(m, j));
      tab.emplace(todo[i], v);
    }
  }
  void prepare_triple(int m, const std::vector<TriadicCube>& cubes) {
    std::vector<std::pair<long long, long long>> cells;
    for (const auto& q : cubes)
      for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy) cells.emplace_back(q.k[0] + dx, q.k[1] + dy);
    prepare(m, cells);
  }
  // essinf of F over 3Q cap boundary.
  double triple(const TriadicCube& q) const {
    const auto& tab = table_.at(q.level);
    double v = kInf;
    for (int dx = -1; dx <= 1; ++dx)
      for (int dy = -1; dy <= 1; ++dy) v = std::min(v, tab.at({q.k[0] + dx, q.k[1] + dy}));
    return v;
  }

 private:
  const BoundarySampler* smp_;
  SampleMemo* memo_;
  std::map<int, std::unordered_map<std::pair<long long, long long>, double, PairHash>> table_;
};

bool meets_boundary(const ConvexDomain& dom, const TriadicCube& q) {
  const double s = q.size();
  const Eigen::Vector2d c = q.center();
  const auto [lo, hi] = dom.level_range(c.array() - 0.5 * s, c.array() + 0.5 * s);
  return lo <= 0 && hi >= 0;
}

std::vector<TriadicCube> children(const TriadicCube& q) {
  std::vector<TriadicCube> out;
  for (int dx = -1; dx <= 1; ++dx)
    for (int dy = -1; dy <= 1; ++dy) out.push_back({q.level - 1, {3 * q.k[0] + dx, 3 * q.k[1] + dy}});
  return out;
}

// Level-m2 cubes whose closed box meets the closed box of q.
std::vector<TriadicCube> touching_at_level(const TriadicCube& q, int m2) {
  std::array<std::pair<long long, long long>, 2> range;
  const double ratio = pow3(q.level - m2);
  for (int a = 0; a < 2; ++a) {
    const double lo = ((2.0 * q.k[a] - 1.0) * ratio - 1.0) / 2.0;
    const double hi = ((2.0 * q.k[a] + 1.0) * ratio + 1.0) / 2.0;
    range[a] = {static_cast<long long>(std::floor(lo)) - 1, static_cast<long long>(std::ceil(hi)) + 1};
  }
  std::vector<TriadicCube> out;
  if ((range[0].second - range[0].first + 1) * (range[1].second - range[1].first + 1) > 1000000)
    throw Error("touching_at_level: candidate range too large");
  for (long long x = range[0].first; x <= range[0].second; ++x)
    for (long long y = range[1].first; y <= range[1].second; ++y) {
      const TriadicCube c{m2, {x, y}};
      if (cubes_touch(q, c)) out.push_back(c);
    }
  return out;
}

double mollifier_raw(double t) {
  const double u = 36.0 * t * t;
  return u < 1.0 ? std::exp(-1.0 / (1.0 - u)) : 0.0;
}

struct MollifierTable {
  static constexpr int kCells = 4096;
  double h = 0;
  double norm = 0;
  std::vector<double> cdf;

  MollifierTable() {
    h = (1.0 / 3.0) / kCells;
    cdf.assign(kCells + 1, 0.0);
    for (int i = 0; i < kCells; ++i) {
      const double a = -1.0 / 6.0 + i * h;
      cdf[i + 1] = cdf[i] + boost::math::quadrature::gauss<double, 15>::integrate(mollifier_raw, a, a + h);
    }
    norm = cdf[kCells];
    for (double& v : cdf) v /= norm;
  }

  double eval(double t) const {
    if (t <= -1.0 / 6.0) return 0.0;
    if (t >= 1.0 / 6.0) return 1.0;
    const double x = (t + 1.0 / 6.0) / h;
    const int i = std::min(kCells - 1, static_cast<int>(x));
    const double u = x - i;
    const double a = -1.0 / 6.0 + i * h;
    const double d0 = mollifier_raw(a) / norm * h, d1 = mollifier_raw(a + h) / norm * h;
    const double h00 = (1 + 2 * u) * (1 - u) * (1 - u), h10 = u * (1 - u) * (1 - u);
    const double h01 = u * u * (3 - 2 * u), h11 = u * u * (u - 1);
    return h00 * cdf[i] + h10 * d0 + h01 * cdf[i + 1] + h11 * d1;
  }
};

const MollifierTable& mollifier_table() {
  static const MollifierTable table;
  return table;
}

}  // namespace

double TriadicCube::size() const { return pow3(level); }

Eigen::Vector2d TriadicCube::center() const {
  const double s = size();
  return {static_cast<double>(k[0]) * s, static_cast<double>(k[1]) * s};
}

bool TriadicCube::contains(const Eigen::Vector2d& x) const {
  const double s = size();
  for (int a = 0; a < 2; ++a)
    if (static_cast<long long>(std::floor(x[a] / s + 0.5)) != k[a]) return false;
  return true;
}

bool cubes_touch(const TriadicCube& a, const TriadicCube& b) {
  const int mmin = std::min(a.level, b.level);
  const long long pa = ipow3(a.level - mmin), pb = ipow3(b.level - mmin);
  for (int i = 0; i < 2; ++i) {
    const long long alo = (2 * a.k[i] - 1) * pa, ahi = (2 * a.k[i] + 1) * pa;
    const long long blo = (2 * b.k[i] - 1) * pb, bhi = (2 * b.k[i] + 1) * pb;
    if (alo > bhi || blo > ahi) return false;
  }
  return true;
}

bool cubes_overlap(const TriadicCube& a, const TriadicCube& b) {
  const int mmin = std::min(a.level, b.level);
  const long long pa = ipow3(a.level - mmin), pb = ipow3(b.level - mmin);
  for (int i = 0; i < 2; ++i) {
    const long long alo = (2 * a.k[i] - 1) * pa, ahi = (2 * a.k[i] + 1) * pa;
    const long long blo = (2 * b.k[i] - 1) * pb, bhi = (2 * b.k[i] + 1) * pb;
    if (alo >= bhi || blo >= ahi) return false;
  }
  return true;
}

void CubePartition::rebuild_index() {
  std::sort(cubes.begin(), cubes.end(), [](const CubeRecord& x, const CubeRecord& y) { return x.cube < y.cube; });
  index_.clear();
  count_per_level.clear();
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    index_.emplace(cubes[i].cube, static_cast<int>(i));
    ++count_per_level[cubes[i].cube.level];
  }
}

std::vector<int> CubePartition::levels() const {
  std::vector<int> out;
  for (const auto& [m, n] : count_per_level) out.push_back(m);
  return out;
}

int CubePartition::find(const TriadicCube& c) const {
  const auto it = index_.find(c);
  return it == index_.end() ? -1 : it->second;
}

int CubePartition::locate(const Eigen::Vector2d& x) const {
  for (const auto& [m, n] : count_per_level) {
    const double s = pow3(m);
    const TriadicCube c{m, {static_cast<long long>(std::floor(x.x() / s + 0.5)),
                            static_cast<long long>(std::floor(x.y() / s + 0.5))}};
    const int i = find(c);
    if (i >= 0) return i;
  }
  return -1;
}

BoundaryFunction diophantine_driver(const ConvexDomain& dom, double epsilon, double delta, double kappa,
                                    int Xi) {
  if (!(epsilon > 0 && epsilon < 1)) throw InvalidArgument("diophantine_driver: epsilon must lie in (0,1)");
  if (!(delta >= 0 && delta < 1)) throw InvalidArgument("diophantine_driver: delta must lie in [0,1)");
  const double scale = std::pow(epsilon, 1.0 - delta);
  BoundaryFunction F;
  F.floor = scale;
  F.eval = [dom, scale, kappa, Xi](double s) {
    const Eigen::Vector2d n = dom.chart(s).normal;
    const double A = dioph_constant({n.x(), n.y()}, kappa, Xi).A_lb;
    return A > 0 ? scale / A : kInf;
  };
  return F;
}

CubePartition decompose(const ConvexDomain& dom, const BoundaryFunction& F, const DecomposeOptions& opt) {
  if (!(F.floor > 0)) throw InvalidArgument("decompose: F must have a positive floor");
  if (!F.eval) throw InvalidArgument("decompose: F is empty");
  if (opt.samples_per_side < 1) throw InvalidArgument("decompose: samples_per_side must be positive");

  const double a = dom.semi_a(), b = dom.semi_b();
  int top = static_cast<int>(std::floor(std::log(2.0 * std::max(a, b)) / std::log(3.0)));
  while (pow3(top) / 2 <= std::max(a, b)) ++top;

  BoundarySampler probe(dom, top, opt.samples_per_side);
  double global_min = kInf;
  {
    std::vector<double> v(static_cast<std::size_t>(probe.count(top)));
    parallel_for(v.size(), opt.threads, [&](std::size_t j) { v[j] = F.eval(probe.param(top, j)); });
    for (double x : v) global_min = std::min(global_min, x);
  }
  if (!std::isfinite(global_min)) throw InvalidArgument("decompose: F is infinite on every sample");
  while (global_min > pow3(top)) ++top;

  BoundarySampler smp(dom, top, opt.samples_per_side);
  SampleMemo memo(smp, F.eval, opt.threads);
  CellMinima minima(smp, memo);

  CubePartition part;
  part.top_level = top;
  std::vector<TriadicCube> current{{top, {0, 0}}};
  std::unordered_set<TriadicCube, CubeHash> bad_prev;
  int depth = 0;
  while (!current.empty()) {
    const int m = current.front().level;
    std::vector<std::vector<TriadicCube>> kids(current.size());
    std::vector<TriadicCube> all_kids;
    for (std::size_t i = 0; i < current.size(); ++i) {
      for (const auto& c : children(current[i]))
        if (meets_boundary(dom, c)) kids[i].push_back(c);
      all_kids.insert(all_kids.end(), kids[i].begin(), kids[i].end());
    }
    minima.prepare_triple(m - 1, all_kids);
    minima.prepare_triple(m, current);

    std::vector<TriadicCube> next, bad;
    const double third = pow3(m - 1);
    for (std::size_t i = 0; i < current.size(); ++i) {
      bool good = !kids[i].empty();
      for (const auto& c : kids[i])
        if (!(minima.triple(c) <= third)) {
          good = false;
          break;
        }
      if (good && !bad_prev.empty())
        for (const auto& nb : touching_at_level(current[i], m + 1))
          if (bad_prev.count(nb)) {
            good = false;
            break;
          }
      if (good)
        next.insert(next.end(), kids[i].begin(), kids[i].end());
      else
        bad.push_back(current[i]);
    }
    for (const auto& q : bad) {
      CubeRecord r;
      r.cube = q;
      r.essinf = minima.triple(q);
      part.cubes.push_back(r);
    }
    bad_prev = std::unordered_set<TriadicCube, CubeHash>(bad.begin(), bad.end());
    if (!next.empty() && ++depth > opt.max_depth) throw Error("decompose: depth cap exceeded");
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    current = std::move(next);
  }
  part.depth = depth;
  part.rebuild_index();
  return part;
}

int anchor_points(CubePartition& part, const ConvexDomain& dom, double kappa, int Xi, int samples_per_side,
                  int threads) {
  BoundarySampler smp(dom, part.top_level, samples_per_side);
  SampleMemo memo(
      smp,
      [&](double s) {
        const Eigen::Vector2d n = dom.chart(s).normal;
        return dioph_constant({n.x(), n.y()}, kappa, Xi).A_lb;
      },
      threads);
  std::map<int, std::vector<std::size_t>> by_level;
  for (std::size_t i = 0; i < part.cubes.size(); ++i) by_level[part.cubes[i].cube.level].push_back(i);
  const double target = std::pow(part.epsilon, 1.0 - part.delta);
  int failures = 0;
  for (const auto& [m, ids] : by_level) {
    std::vector<std::vector<long long>> idx(ids.size());
    std::vector<long long> all;
    const double s = pow3(m);
    for (std::size_t t = 0; t < ids.size(); ++t) {
      const Eigen::Vector2d c = part.cubes[ids[t]].cube.center();
      smp.collect(m, c.array() - 1.5 * s, c.array() + 1.5 * s, idx[t]);
      all.insert(all.end(), idx[t].begin(), idx[t].end());
    }
    memo.fill(m, all);
    for (std::size_t t = 0; t < ids.size(); ++t) {
      CubeRecord& r = part.cubes[ids[t]];
      double best = -1;
      long long arg = -1;
      for (long long j : idx[t]) {
        const double A = memo.get(m, j);
        if (A > best || (A == best && j < arg)) {
          best = A;
          arg = j;
        }
      }
      if (arg < 0) {
        r.anchor_s = dom.chart_parameter(r.cube.center());
        r.anchor_A = 0;
      } else {
        r.anchor_s = smp.param(m, arg);
        r.anchor_A = best;
      }
      r.anchor = dom.chart(r.anchor_s).point;
      r.anchored = r.anchor_A * s >= target;
      if (!r.anchored) ++failures;
    }
  }
  part.kappa = kappa;
  part.Xi = Xi;
  return failures;
}

CubePartition decompose_diophantine(const ConvexDomain& dom, double epsilon, double delta, double kappa, int Xi,
                                    const DecomposeOptions& opt) {
  CubePartition part = decompose(dom, diophantine_driver(dom, epsilon, delta, kappa, Xi), opt);
  part.epsilon = epsilon;
  part.delta = delta;
  anchor_points(part, dom, kappa, Xi, opt.samples_per_side, opt.threads);
  return part;
}

PartitionChecks check_partition(const CubePartition& part, const ConvexDomain& dom, const BoundaryFunction& F,
                                int samples, int samples_per_side, int threads) {
  PartitionChecks out;
  out.samples = samples;
  if (part.cubes.empty()) throw InvalidArgument("check_partition: empty partition");

  // (i) coverage on uniform chart samples, plus the boundary measure of the
  // superlevel sets of F for the counting bound.
  std::vector<double> Fs(samples), ds(samples);
  std::vector<int> owner(samples);
  parallel_for(samples, threads, [&](std::size_t i) {
    const double s = kTwoPi * (i + 0.5) / samples;
    Fs[i] = F.eval(s);
    ds[i] = dom.chart_speed(s) * kTwoPi / samples;
    owner[i] = part.locate(dom.chart(s).point);
  });
  for (int o : owner)
    if (o < 0) ++out.coverage_misses;

  // (ii) and (iii), recomputed independently of the construction memo.
  BoundarySampler smp(dom, part.top_level, samples_per_side);
  std::vector<int> miss(part.cubes.size()), viol(part.cubes.size());
  parallel_for(part.cubes.size(), threads, [&](std::size_t i) {
    const TriadicCube& q = part.cubes[i].cube;
    miss[i] = meets_boundary(dom, q) ? 0 : 1;
    const double s = q.size();
    const Eigen::Vector2d c = q.center();
    std::vector<long long> idx;
    smp.collect(q.level, c.array() - 1.5 * s, c.array() + 1.5 * s, idx);
    double v = kInf;
    for (long long j : idx) v = std::min(v, F.eval(smp.param(q.level, j)));
    viol[i] = v <= s ? 0 : 1;
  });
  for (std::size_t i = 0; i < part.cubes.size(); ++i) {
    out.cubes_missing_boundary += miss[i];
    out.essinf_violations += viol[i];
    out.anchor_failures += part.cubes[i].anchored ? 0 : 1;
  }

  // (v) and disjointness by exact integer adjacency.
  const std::vector<int> levels = part.levels();
  for (const auto& r : part.cubes) {
    for (int m2 : levels) {
      if (m2 >= r.cube.level + 2)
        for (const auto& nb : touching_at_level(r.cube, m2))
          if (part.find(nb) >= 0) ++out.neighbor_violations;
      if (m2 > r.cube.level) {
        const long long p = ipow3(m2 - r.cube.level);
        const TriadicCube anc{m2, {floor_div(r.cube.k[0] + (p - 1) / 2, p), floor_div(r.cube.k[1] + (p - 1) / 2, p)}};
        if (part.find(anc) >= 0) ++out.overlaps;
      }
    }
  }
  for (std::size_t i = 1; i < part.cubes.size(); ++i)
    if (part.cubes[i].cube == part.cubes[i - 1].cube) ++out.overlaps;

  out.size_min = kInf;
  out.size_max = 0;
  for (const auto& r : part.cubes) {
    out.size_min = std::min(out.size_min, r.cube.size());
    out.size_max = std::max(out.size_max, r.cube.size());
  }
  if (part.epsilon > 0) {
    out.c_lower = out.size_min / std::pow(part.epsilon, 1.0 - part.delta);
    out.C_upper = out.size_max / std::pow(part.epsilon, 0.5 * (1.0 - part.delta));
  }

  // (iv) counting bound, d - 1 = 1.
  out.counting_constant = 0;
  for (int n : levels) {
    int count = 0;
    for (const auto& r : part.cubes)
      if (r.cube.level >= n) ++count;
    double H = 0;
    const double thr = pow3(n - 2);
    for (int i = 0; i < samples; ++i)
      if (Fs[i] >= thr) H += ds[i];
    const double ratio = H > 0 ? count * pow3(n) / H : kInf;
    out.counting_constant = std::max(out.counting_constant, ratio);
  }
  return out;
}

PartitionOfUnity::PartitionOfUnity(const CubePartition& part) : part_(&part), levels_(part.levels()) {
  if (part.cubes.empty()) throw InvalidArgument("PartitionOfUnity: empty partition");
}

double PartitionOfUnity::mollifier(double t) { return mollifier_raw(t) / mollifier_table().norm; }

double PartitionOfUnity::mollifier_cdf(double t) { return mollifier_table().eval(t); }

std::vector<int> PartitionOfUnity::candidates(const Eigen::Vector2d& x, double grow) const {
  std::vector<int> out;
  for (int m : levels_) {
    const double s = pow3(m);
    const double u = x.x() / s, v = x.y() / s;
    const long long x0 = static_cast<long long>(std::floor(u - grow / 2)), x1 = static_cast<long long>(std::ceil(u + grow / 2));
    const long long y0 = static_cast<long long>(std::floor(v - grow / 2)), y1 = static_cast<long long>(std::ceil(v + grow / 2));
    for (long long kx = x0; kx <= x1; ++kx)
      for (long long ky = y0; ky <= y1; ++ky) {
        if (std::abs(u - kx) >= grow / 2 || std::abs(v - ky) >= grow / 2) continue;
        const int i = part_->find({m, {kx, ky}});
        if (i >= 0) out.push_back(i);
      }
  }
  return out;
}

double PartitionOfUnity::zeta(int cube, const Eigen::Vector2d& x) const {
  const TriadicCube& q = part_->cubes.at(cube).cube;
  const double s = q.size();
  const Eigen::Vector2d c = q.center();
  double v = 1;
  for (int a = 0; a < 2; ++a) {
    const double t = (c[a] - x[a]) / s;
    v *= mollifier_cdf(t + 0.5) - mollifier_cdf(t - 0.5);
  }
  return v;
}

double PartitionOfUnity::zeta_sum(const Eigen::Vector2d& x) const {
  double z = 0;
  for (int i : candidates(x, 4.0 / 3.0)) z += zeta(i, x);
  return z;
}

double PartitionOfUnity::psi(int cube, const Eigen::Vector2d& x) const {
  const double z = zeta_sum(x);
  return z > 0 ? zeta(cube, x) / z : 0.0;
}

std::vector<PartitionOfUnity::Entry> PartitionOfUnity::evaluate(const Eigen::Vector2d& x) const {
  std::vector<Entry> out;
  double z = 0;
  for (int i : candidates(x, 4.0 / 3.0)) {
    const double v = zeta(i, x);
    if (v > 0) {
      out.push_back({i, v});
      z += v;
    }
  }
  if (part_->locate(x) >= 0 && z < 0.25 * (1 - 1e-12))
    throw Error("PartitionOfUnity: sum of cut-offs below 1/4 on the union of cubes");
  for (auto& e : out) e.value /= z;
  std::sort(out.begin(), out.end(), [](const Entry& a, const Entry& b) { return a.cube < b.cube; });
  return out;
}

std::array<double, 3> PartitionOfUnity::derivative_constants(int max_cubes, int points) const {
  std::array<double, 3> C{0, 0, 0};
  const int n = static_cast<int>(part_->cubes.size());
  const int picks = std::min(max_cubes, n);
  const std::array<Eigen::Vector2d, 4> dirs{Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1),
                                            Eigen::Vector2d(1, 1) / std::sqrt(2.0),
                                            Eigen::Vector2d(1, -1) / std::sqrt(2.0)};
  const int side = std::max(2, static_cast<int>(std::sqrt(static_cast<double>(points))));
  for (int p = 0; p < picks; ++p) {
    const int i = static_cast<int>(static_cast<long long>(p) * n / picks);
    const TriadicCube& q = part_->cubes[i].cube;
    const double s = q.size(), h = 5e-3 * s;
    const Eigen::Vector2d c = q.center();
    for (int u = 0; u < side; ++u)
      for (int v = 0; v < side; ++v) {
        const Eigen::Vector2d x = c + s * Eigen::Vector2d((u + 0.5) / side - 0.5, (v + 0.5) / side - 0.5);
        for (const auto& d : dirs) {
          auto f = [&](double t) { return psi(i, x + t * h * d); };
          const double fm2 = f(-2), fm1 = f(-1), f0 = f(0), f1 = f(1), f2 = f(2);
          C[0] = std::max(C[0], std::abs(f1 - fm1) / (2 * h) * s);
          C[1] = std::max(C[1], std::abs(f1 - 2 * f0 + fm1) / (h * h) * s * s);
          C[2] = std::max(C[2], std::abs(f2 - 2 * f1 + 2 * fm1 - fm2) / (2 * h * h * h) * s * s * s);
        }
      }
  }
  return C;
}

bool in_boundary_layer(const CubePartition& part, const Eigen::Vector2d& x0) {
  for (const auto& [m, cnt] : part.count_per_level) {
    const double s = pow3(m);
    const double u = x0.x() / s, v = x0.y() / s;
    for (long long kx = static_cast<long long>(std::floor(u - 2.5)); kx <= static_cast<long long>(std::ceil(u + 2.5)); ++kx) {
      if (std::abs(u - kx) >= 2.5) continue;
      for (long long ky = static_cast<long long>(std::floor(v - 2.5)); ky <= static_cast<long long>(std::ceil(v + 2.5)); ++ky) {
        if (std::abs(v - ky) >= 2.5) continue;
        if (part.find({m, {kx, ky}}) >= 0) return true;
      }
    }
  }
  return false;
}

namespace {

struct AnchorArrays {
  std::vector<double> x, y, w;
};

AnchorArrays anchor_arrays(const CubePartition& part, double epsilon) {
  AnchorArrays a;
  const double e2 = epsilon * epsilon;
  for (const auto& r : part.cubes) {
    const double s = r.cube.size();
    a.x.push_back(r.anchor.x());
    a.y.push_back(r.anchor.y());
    a.w.push_back(std::min(s * s * s / e2, 1.0) * s);
  }
  return a;
}

double functional_sum(const AnchorArrays& a, const Eigen::Vector2d& x0, double dist) {
  const double px = x0.x(), py = x0.y();
  const std::size_t n = a.w.size();
  const double* ax = a.x.data();
  const double* ay = a.y.data();
  const double* aw = a.w.data();
  double acc = 0;
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = px - ax[i], dy = py - ay[i];
    acc += aw[i] / (dx * dx + dy * dy);
  }
  return dist * acc;
}

}  // namespace

double error_functional(const CubePartition& part, const ConvexDomain& dom, const Eigen::Vector2d& x0,
                        double epsilon) {
  if (!dom.contains(x0)) throw InvalidArgument("error_functional: point outside the domain");
  if (in_boundary_layer(part, x0)) throw InvalidArgument("error_functional: point inside the boundary layer");
  return functional_sum(anchor_arrays(part, epsilon), x0, dom.distance_to_boundary(x0));
}

EfuncNorm error_functional_norm(const CubePartition& part, const ConvexDomain& dom, double epsilon,
                                const EfuncOptions& opt) {
  if (part.cubes.empty()) throw InvalidArgument("error_functional_norm: empty partition");
  if (!(opt.panel_ratio > 1) || opt.radial_nodes < 1 || !(opt.angular_factor > 0))
    throw InvalidArgument("error_functional_norm: bad quadrature options");
  const AnchorArrays arr = anchor_arrays(part, epsilon);
  const double a = dom.semi_a(), b = dom.semi_b();
  double smin = kInf;
  for (const auto& r : part.cubes) smin = std::min(smin, r.cube.size());
  const double rho0 = std::min(0.5, smin / (4.0 * std::max(a, b)));

  // Scaled polar coordinates x = (a r cos t, b r sin t), rho = 1 - r.
  std::vector<double> rho_nodes, rho_w;
  {
    std::vector<double> gx, gw;
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(opt.radial_nodes);
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(opt.radial_nodes, opt.radial_nodes);
    for (int i = 1; i < opt.radial_nodes; ++i) J(i, i - 1) = J(i - 1, i) = i / std::sqrt(4.0 * i * i - 1.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
    for (int i = 0; i < opt.radial_nodes; ++i) {
      gx.push_back(es.eigenvalues()(i));
      gw.push_back(2.0 * es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
    }
    double lo = rho0;
    while (lo < 1.0) {
      const double hi = std::min(1.0, lo * opt.panel_ratio);
      for (int i = 0; i < opt.radial_nodes; ++i) {
        rho_nodes.push_back(0.5 * (lo + hi) + 0.5 * (hi - lo) * gx[i]);
        rho_w.push_back(0.5 * (hi - lo) * gw[i]);
      }
      lo = hi;
    }
  }
  const std::size_t rings = rho_nodes.size();
  std::vector<double> ring_norm(rings, 0.0), ring_gamma(rings, 0.0), ring_min(rings, kInf);
  std::vector<long> ring_pts(rings, 0);
  parallel_for(rings, opt.threads, [&](std::size_t k) {
    const double rho = rho_nodes[k], r = 1.0 - rho;
    const long nt = std::max<long>(32, static_cast<long>(std::ceil(opt.angular_factor * kTwoPi * r / rho)));
    const double w = rho_w[k] * a * b * r * kTwoPi / nt;
    for (long j = 0; j < nt; ++j) {
      const double t = kTwoPi * (j + 0.5) / nt;
      const Eigen::Vector2d x(a * r * std::cos(t), b * r * std::sin(t));
      if (in_boundary_layer(part, x)) {
        ring_gamma[k] += w;
        continue;
      }
      const double E = functional_sum(arr, x, dom.distance_to_boundary(x));
      ring_norm[k] += w * std::pow(E, opt.q);
      ring_min[k] = std::min(ring_min[k], E);
      ++ring_pts[k];
    }
  });
  EfuncNorm out;
  out.gamma_area = std::numbers::pi * a * b * (1.0 - (1.0 - rho0) * (1.0 - rho0));
  out.min_value = kInf;
  for (std::size_t k = 0; k < rings; ++k) {
    out.norm_q += ring_norm[k];
    out.gamma_area += ring_gamma[k];
    out.min_value = std::min(out.min_value, ring_min[k]);
    out.points += ring_pts[k];
  }
  return out;
}

}  // namespace homog
