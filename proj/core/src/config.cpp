#include "homog/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <sstream>

namespace homog {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<double> split_numbers(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw InvalidArgument("config: cannot parse number '" + tok + "'");
    }
    if (used != tok.size()) throw InvalidArgument("config: cannot parse number '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidArgument("config: line " + std::to_string(lineno) + " has no '='");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InvalidArgument("config: line " + std::to_string(lineno) + " has no key");
    cfg.values_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::number(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  auto v = split_numbers(it->second);
  if (v.size() != 1) throw InvalidArgument("config: key " + key + " expects one number");
  return v[0];
}

long Config::integer(const std::string& key, long fallback) const {
  const double v = number(key, static_cast<double>(fallback));
  if (v != std::floor(v)) throw InvalidArgument("config: key " + key + " expects an integer");
  return static_cast<long>(v);
}

std::string Config::canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::uint64_t Config::hash() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string Config::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

std::vector<std::pair<Lattice, cplx>> parse_mode_list(const std::string& text, int dim) {
  std::vector<std::pair<Lattice, cplx>> out;
  static const std::regex group(R"(\(([^()]*)\))");
  std::string rest = text;
  auto begin = std::sregex_iterator(text.begin(), text.end(), group);
  std::string leftover = std::regex_replace(text, group, "");
  if (!trim(leftover).empty()) throw InvalidArgument("config: stray text in mode list '" + text + "'");
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    const std::string body = (*it)[1];
    const auto semi = body.find(';');
    if (semi == std::string::npos) throw InvalidArgument("config: mode '" + body + "' lacks ';'");
    auto xi = split_numbers(body.substr(0, semi));
    auto c = split_numbers(body.substr(semi + 1));
    if (static_cast<int>(xi.size()) != dim)
      throw InvalidArgument("config: mode '" + body + "' has wrong lattice dimension");
    if (c.empty() || c.size() > 2) throw InvalidArgument("config: mode '" + body + "' needs re[,im]");
    Lattice l;
    for (double v : xi) {
      if (v != std::floor(v)) throw InvalidArgument("config: lattice entries must be integers");
      l.push_back(static_cast<int>(v));
    }
    out.emplace_back(l, cplx(c[0], c.size() > 1 ? c[1] : 0.0));
  }
  return out;
}

PeriodicTensor tensor_from_config(const Config& cfg, const std::string& prefix) {
  const int d = static_cast<int>(cfg.integer(prefix + ".dim", 2));
  const int L = static_cast<int>(cfg.integer(prefix + ".sysdim", 1));
  const double lambda = cfg.number(prefix + ".lambda", 0.25);
  const int n = d * d * L * L;
  ModeBuilder mb(d, n);
  bool any = false;
  if (cfg.has(prefix + ".scalar")) {
    for (auto& [xi, c] : parse_mode_list(cfg.get(prefix + ".scalar"), d))
      for (int a = 0; a < d; ++a)
        for (int i = 0; i < L; ++i) mb.add_mode(xi, ((a * d + a) * L + i) * L + i, c);
    any = true;
  }
  const std::string entry = prefix + ".entry.";
  for (const auto& [key, val] : cfg.values()) {
    if (key.rfind(entry, 0) != 0) continue;
    auto idx = split_numbers(std::regex_replace(key.substr(entry.size()), std::regex("\\."), ","));
    if (idx.size() != 4) throw InvalidArgument("config: tensor entry key needs four indices: " + key);
    const int al = static_cast<int>(idx[0]), be = static_cast<int>(idx[1]);
    const int i = static_cast<int>(idx[2]), j = static_cast<int>(idx[3]);
    if (al < 0 || al >= d || be < 0 || be >= d || i < 0 || i >= L || j < 0 || j >= L)
      throw InvalidArgument("config: tensor entry index out of range: " + key);
    for (auto& [xi, c] : parse_mode_list(val, d)) mb.add_mode(xi, ((al * d + be) * L + i) * L + j, c);
    any = true;
  }
  if (!any) return PeriodicTensor::identity(d, L, lambda);
  return PeriodicTensor(d, L, mb.build(), lambda);
}

ConvexDomain domain_from_config(const Config& cfg) {
  const std::string s = cfg.get("domain", "disc");
  std::smatch m;
  if (s == "disc") return ConvexDomain::disc(1.0);
  if (std::regex_match(s, m, std::regex(R"(disc\s*\(([^)]*)\))"))) {
    auto v = split_numbers(m[1]);
    if (v.size() != 1) throw InvalidArgument("config: disc(r) expects one radius");
    return ConvexDomain::disc(v[0]);
  }
  if (std::regex_match(s, m, std::regex(R"(ellipse\s*\(([^)]*)\))"))) {
    auto v = split_numbers(m[1]);
    if (v.size() != 2) throw InvalidArgument("config: ellipse(a,b) expects two semi-axes");
    return ConvexDomain::ellipse(v[0], v[1]);
  }
  throw InvalidArgument("config: unknown domain '" + s + "'");
}

TwoScaleBoundaryDatum datum_from_config(const Config& cfg, int dim, int sysdim) {
  std::vector<DatumTerm> terms;
  for (int m = 0;; ++m) {
    const std::string base = "g." + std::to_string(m);
    if (!cfg.has(base + ".slow") && !cfg.has(base + ".fast") && !cfg.has(base + ".fast.0")) break;
    DatumTerm t;
    if (cfg.has(base + ".slow")) {
      for (auto& [k, c] : parse_mode_list(cfg.get(base + ".slow"), 1)) t.slow.modes.emplace_back(k[0], c);
    } else {
      t.slow = SlowFactor::constant(1.0);
    }
    ModeBuilder mb(dim, sysdim);
    for (int i = 0; i < sysdim; ++i) {
      std::string key = base + ".fast." + std::to_string(i);
      if (!cfg.has(key) && i == 0) key = base + ".fast";
      for (auto& [xi, c] : parse_mode_list(cfg.get(key), dim)) mb.add_mode(xi, i, c);
    }
    t.fast = mb.build();
    terms.push_back(std::move(t));
  }
  if (terms.empty()) {
    terms.push_back({SlowFactor::constant(1.0), PeriodicField::constant(dim, std::vector<double>(sysdim, 1.0))});
  }
  return TwoScaleBoundaryDatum(std::move(terms));
}

}  // namespace homog
