#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "homog/fields.hpp"

namespace homog {

// Flat key = value configuration. Lines starting with '#' are comments.
//
//   a.dim = 2
//   a.sysdim = 1
//   a.lambda = 0.3
//   a.scalar = (0,0; 2,0) (1,0; 0,-0.5)      isotropic s(y) Id
//   a.entry.0.1.0.0 = (1,1; 0.1,0)            one tensor entry a^{01}_{00}
//   domain = disc | disc(r) | ellipse(a,b)
//   g.0.slow = (0; 1,0) (1; 0.5,0)            Re sum_k c_k exp(i k s)
//   g.0.fast = (0,0; 1,0) (1,0; 0.5,0)        scalar fast factor
//   g.0.fast.1 = ...                          component 1 when sysdim > 1
class Config {
 public:
  Config() = default;
  static Config parse(const std::string& text);
  static Config load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback = "") const;
  double number(const std::string& key, double fallback) const;
  long integer(const std::string& key, long fallback) const;
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }

  std::string canonical() const;
  std::uint64_t hash() const;
  std::string hash_hex() const;

 private:
  std::map<std::string, std::string> values_;
};

// Parses "(x1,..,xd; re, im) ..." into lattice/coefficient pairs.
std::vector<std::pair<Lattice, cplx>> parse_mode_list(const std::string& text, int dim);

PeriodicTensor tensor_from_config(const Config& cfg, const std::string& prefix = "a");
ConvexDomain domain_from_config(const Config& cfg);
TwoScaleBoundaryDatum datum_from_config(const Config& cfg, int dim, int sysdim);

}  // namespace homog
