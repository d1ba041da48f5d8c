#include "relaxbc/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "relaxbc/error.hpp"

namespace relaxbc {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

// section -> key -> value, plus the order keys appeared in (for messages)
struct RawConfig {
  std::map<std::string, std::map<std::string, std::string>> kv;
  std::set<std::string> consumed;  // "section.key"
};

RawConfig tokenize(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        fail(Err::Parse, "line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        fail(Err::Parse, "line " + std::to_string(lineno) + ": empty section name");
      raw.kv[section];
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(Err::Parse, "line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty())
      fail(Err::Parse, "line " + std::to_string(lineno) + ": key outside any section");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      fail(Err::Parse, "line " + std::to_string(lineno) + ": empty key");
    auto& sec = raw.kv[section];
    if (sec.count(key))
      fail(Err::Parse, "line " + std::to_string(lineno) + ": duplicate key '" + section +
                           "." + key + "'");
    sec[key] = trim(line.substr(eq + 1));
  }
  return raw;
}

double parse_double(const std::string& s, const std::string& where,
                    std::vector<std::string>& bad) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    bad.push_back(where + ": not a number: '" + s + "'");
    return 0.0;
  }
  return v;
}

Index parse_index(const std::string& s, const std::string& where,
                  std::vector<std::string>& bad) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    bad.push_back(where + ": not an integer: '" + s + "'");
    return 0;
  }
  return static_cast<Index>(v);
}

std::vector<double> parse_numbers(const std::string& s, const std::string& where,
                                  std::vector<std::string>& bad) {
  std::vector<double> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(parse_double(tok, where, bad));
  return out;
}

Vec parse_vec(const std::string& s, const std::string& where, std::vector<std::string>& bad) {
  const std::vector<double> vals = parse_numbers(s, where, bad);
  Vec v(static_cast<Index>(vals.size()));
  for (size_t i = 0; i < vals.size(); ++i) v(static_cast<Index>(i)) = vals[i];
  return v;
}

Mat parse_mat(const std::string& s, const std::string& where, std::vector<std::string>& bad) {
  std::vector<std::vector<double>> rows;
  std::string row;
  std::istringstream in(s);
  while (std::getline(in, row, ';'))
    rows.push_back(parse_numbers(row, where, bad));
  while (!rows.empty() && rows.back().empty()) rows.pop_back();
  if (rows.empty()) {
    bad.push_back(where + ": empty matrix literal");
    return Mat();
  }
  const size_t cols = rows[0].size();
  for (const auto& r : rows)
    if (r.size() != cols) {
      bad.push_back(where + ": ragged matrix literal");
      return Mat();
    }
  Mat m(static_cast<Index>(rows.size()), static_cast<Index>(cols));
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < cols; ++j)
      m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  return m;
}

class Reader {
 public:
  Reader(RawConfig& raw, std::vector<std::string>& bad) : raw_(raw), bad_(bad) {}

  bool has(const std::string& sec, const std::string& key) {
    auto s = raw_.kv.find(sec);
    return s != raw_.kv.end() && s->second.count(key) > 0;
  }

  std::string take(const std::string& sec, const std::string& key) {
    raw_.consumed.insert(sec + "." + key);
    return raw_.kv[sec][key];
  }

  void number(const std::string& sec, const std::string& key, double& dst) {
    if (has(sec, key)) dst = parse_double(take(sec, key), sec + "." + key, bad_);
  }
  void integer(const std::string& sec, const std::string& key, Index& dst) {
    if (has(sec, key)) dst = parse_index(take(sec, key), sec + "." + key, bad_);
  }
  void vector(const std::string& sec, const std::string& key, Vec& dst) {
    if (has(sec, key)) dst = parse_vec(take(sec, key), sec + "." + key, bad_);
  }
  void matrix(const std::string& sec, const std::string& key, Mat& dst) {
    if (has(sec, key)) dst = parse_mat(take(sec, key), sec + "." + key, bad_);
  }
  void require(const std::string& sec, const std::string& key) {
    if (!has(sec, key)) bad_.push_back(sec + "." + key + ": required key missing");
  }

  void finish() {
    for (const auto& [sec, keys] : raw_.kv)
      for (const auto& [key, value] : keys)
        if (!raw_.consumed.count(sec + "." + key))
          bad_.push_back(sec + "." + key + ": unknown key");
  }

 private:
  RawConfig& raw_;
  std::vector<std::string>& bad_;
};

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const Vec& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += fmt(v(i));
  }
  return out;
}

std::string fmt(const Mat& m) {
  std::string out;
  for (Index i = 0; i < m.rows(); ++i) {
    if (i) out += " ; ";
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out += ' ';
      out += fmt(m(i, j));
    }
  }
  return out;
}

void check_square(const Mat& m, Index n, const std::string& name,
                  std::vector<std::string>& bad) {
  if (m.rows() != n || m.cols() != n)
    bad.push_back(name + ": expected " + std::to_string(n) + "x" + std::to_string(n) +
                  ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  RawConfig raw = tokenize(text);
  std::vector<std::string> bad;
  Reader rd(raw, bad);
  RunConfig cfg;

  // --- system ---
  for (const char* key : {"n", "r", "a1", "q", "b"}) rd.require("system", key);
  rd.integer("system", "d", cfg.sys.d);
  rd.integer("system", "n", cfg.sys.n);
  rd.integer("system", "r", cfg.sys.r);
  const Index d = cfg.sys.d, n = cfg.sys.n, r = cfg.sys.r;
  if (d < 1 || d > 2) bad.push_back("system.d: must be 1 or 2");
  if (n < 2) bad.push_back("system.n: must be at least 2");
  if (r < 1 || r >= n) bad.push_back("system.r: must satisfy 1 <= r <= n - 1");

  cfg.sys.a.assign(static_cast<size_t>(std::max<Index>(d, 1)), Mat());
  rd.matrix("system", "a1", cfg.sys.a[0]);
  if (d == 2) {
    rd.require("system", "a2");
    rd.matrix("system", "a2", cfg.sys.a[1]);
  }
  rd.matrix("system", "q", cfg.sys.q);
  cfg.sys.a0 = Mat::Identity(n, n);
  rd.matrix("system", "a0", cfg.sys.a0);
  rd.matrix("system", "b", cfg.sys.b);

  if (n >= 2) {
    for (Index j = 0; j < d; ++j)
      if (cfg.sys.a[j].size())
        check_square(cfg.sys.a[j], n, "system.a" + std::to_string(j + 1), bad);
    if (cfg.sys.q.size()) check_square(cfg.sys.q, n, "system.q", bad);
    check_square(cfg.sys.a0, n, "system.a0", bad);
    if (cfg.sys.b.size()) {
      if (cfg.sys.b.cols() != n)
        bad.push_back("system.b: expected " + std::to_string(n) + " columns, got " +
                      std::to_string(cfg.sys.b.cols()));
      if (cfg.sys.b.rows() < 1 || cfg.sys.b.rows() > n)
        bad.push_back("system.b: row count out of range");
    }
  }

  // --- grid ---
  rd.number("grid", "x1_max", cfg.grid.x1_max);
  rd.integer("grid", "nx", cfg.grid.nx);
  rd.number("grid", "x2_max", cfg.grid.x2_max);
  rd.integer("grid", "nx2", cfg.grid.nx2);
  rd.number("grid", "t_max", cfg.grid.t_max);
  rd.number("grid", "cfl", cfg.grid.cfl);
  rd.number("grid", "y_max", cfg.grid.y_max);
  rd.number("grid", "z_max", cfg.grid.z_max);
  rd.integer("grid", "ny", cfg.grid.ny);
  rd.integer("grid", "nz", cfg.grid.nz);
  rd.number("grid", "tol_layer", cfg.grid.tol_layer);
  if (!(cfg.grid.x1_max > 0)) bad.push_back("grid.x1_max: must be positive");
  if (cfg.grid.nx < 16) bad.push_back("grid.nx: must be at least 16");
  if (!(cfg.grid.x2_max > 0)) bad.push_back("grid.x2_max: must be positive");
  if (d == 2 && cfg.grid.nx2 < 4) bad.push_back("grid.nx2: must be at least 4");
  if (!(cfg.grid.t_max > 0)) bad.push_back("grid.t_max: must be positive");
  if (!(cfg.grid.cfl > 0 && cfg.grid.cfl < 1)) bad.push_back("grid.cfl: must be in (0, 1)");
  if (cfg.grid.y_max < 0) bad.push_back("grid.y_max: must be nonnegative (0 = derived)");
  if (cfg.grid.z_max < 0) bad.push_back("grid.z_max: must be nonnegative (0 = derived)");
  if (cfg.grid.ny < 8) bad.push_back("grid.ny: must be at least 8");
  if (cfg.grid.nz < 8) bad.push_back("grid.nz: must be at least 8");
  if (!(cfg.grid.tol_layer > 0 && cfg.grid.tol_layer < 1))
    bad.push_back("grid.tol_layer: must be in (0, 1)");

  // --- data ---
  if (rd.has("data", "u0")) {
    const std::string name = rd.take("data", "u0");
    if (name == "zero")
      cfg.data.u0 = SpaceProfile::Zero;
    else if (name == "bump")
      cfg.data.u0 = SpaceProfile::Bump;
    else
      bad.push_back("data.u0: unknown profile '" + name + "'");
  }
  rd.number("data", "u0_center", cfg.data.u0_center);
  rd.number("data", "u0_width", cfg.data.u0_width);
  rd.integer("data", "u0_k2", cfg.data.u0_k2);
  rd.vector("data", "u0_weights", cfg.data.u0_weights);
  if (rd.has("data", "bc")) {
    const std::string name = rd.take("data", "bc");
    if (name == "zero")
      cfg.data.bc = TimeProfile::Zero;
    else if (name == "sin2_ramp")
      cfg.data.bc = TimeProfile::Sin2Ramp;
    else
      bad.push_back("data.bc: unknown profile '" + name + "'");
  }
  rd.number("data", "bc_period", cfg.data.bc_period);
  rd.vector("data", "bc_weights", cfg.data.bc_weights);
  if (!(cfg.data.u0_width > 0)) bad.push_back("data.u0_width: must be positive");
  if (!(cfg.data.bc_period > 0)) bad.push_back("data.bc_period: must be positive");

  if (cfg.data.u0_weights.size() == 0 && n > r) cfg.data.u0_weights = Vec::Zero(n - r);
  if (n > r && cfg.data.u0_weights.size() != n - r)
    bad.push_back("data.u0_weights: expected " + std::to_string(n - r) + " entries, got " +
                  std::to_string(cfg.data.u0_weights.size()));
  if (cfg.data.bc_weights.size() == 0 && cfg.sys.b.rows() > 0)
    cfg.data.bc_weights = Vec::Zero(cfg.sys.b.rows());
  if (cfg.sys.b.rows() > 0 && cfg.data.bc_weights.size() != cfg.sys.b.rows())
    bad.push_back("data.bc_weights: expected " + std::to_string(cfg.sys.b.rows()) +
                  " entries (one per boundary row), got " +
                  std::to_string(cfg.data.bc_weights.size()));

  // --- eps ---
  if (rd.has("eps", "values")) {
    const Vec v = parse_vec(rd.take("eps", "values"), "eps.values", bad);
    cfg.eps.assign(v.data(), v.data() + v.size());
  }
  if (cfg.eps.empty()) bad.push_back("eps.values: at least one value required");
  for (double e : cfg.eps)
    if (!(e > 0 && e <= 1)) {
      bad.push_back("eps.values: entries must lie in (0, 1]");
      break;
    }
  for (size_t i = 1; i < cfg.eps.size(); ++i)
    if (!(cfg.eps[i] < cfg.eps[i - 1])) {
      bad.push_back("eps.values: must be strictly decreasing");
      break;
    }

  rd.finish();
  if (!bad.empty()) {
    std::string msg = std::to_string(bad.size()) + " violation(s):";
    for (const auto& b : bad) msg += "\n  - " + b;
    fail(Err::Schema, msg);
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Err::Parse, "cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string print_config(const RunConfig& cfg) {
  std::ostringstream out;
  out << "[system]\n";
  out << "d = " << cfg.sys.d << "\n";
  out << "n = " << cfg.sys.n << "\n";
  out << "r = " << cfg.sys.r << "\n";
  for (Index j = 0; j < cfg.sys.d; ++j)
    out << "a" << (j + 1) << " = " << fmt(cfg.sys.a[j]) << "\n";
  out << "a0 = " << fmt(cfg.sys.a0) << "\n";
  out << "q = " << fmt(cfg.sys.q) << "\n";
  out << "b = " << fmt(cfg.sys.b) << "\n";

  out << "\n[grid]\n";
  out << "x1_max = " << fmt(cfg.grid.x1_max) << "\n";
  out << "nx = " << cfg.grid.nx << "\n";
  if (cfg.sys.d == 2) {
    out << "x2_max = " << fmt(cfg.grid.x2_max) << "\n";
    out << "nx2 = " << cfg.grid.nx2 << "\n";
  }
  out << "t_max = " << fmt(cfg.grid.t_max) << "\n";
  out << "cfl = " << fmt(cfg.grid.cfl) << "\n";
  out << "y_max = " << fmt(cfg.grid.y_max) << "\n";
  out << "z_max = " << fmt(cfg.grid.z_max) << "\n";
  out << "ny = " << cfg.grid.ny << "\n";
  out << "nz = " << cfg.grid.nz << "\n";
  out << "tol_layer = " << fmt(cfg.grid.tol_layer) << "\n";

  out << "\n[data]\n";
  out << "u0 = " << (cfg.data.u0 == SpaceProfile::Bump ? "bump" : "zero") << "\n";
  out << "u0_center = " << fmt(cfg.data.u0_center) << "\n";
  out << "u0_width = " << fmt(cfg.data.u0_width) << "\n";
  if (cfg.sys.d == 2) out << "u0_k2 = " << cfg.data.u0_k2 << "\n";
  out << "u0_weights = " << fmt(cfg.data.u0_weights) << "\n";
  out << "bc = " << (cfg.data.bc == TimeProfile::Sin2Ramp ? "sin2_ramp" : "zero") << "\n";
  out << "bc_period = " << fmt(cfg.data.bc_period) << "\n";
  out << "bc_weights = " << fmt(cfg.data.bc_weights) << "\n";

  out << "\n[eps]\n";
  out << "values =";
  for (double e : cfg.eps) out << ' ' << fmt(e);
  out << "\n";
  return out.str();
}

double space_shape(const DataSpec& data, double x1) {
  if (data.u0 == SpaceProfile::Zero) return 0.0;
  const double s = (x1 - data.u0_center) / data.u0_width;
  return std::exp(-s * s);
}

double time_ramp(const DataSpec& data, double t) {
  if (data.bc == TimeProfile::Zero || t <= 0) return 0.0;
  if (t >= data.bc_period) return 1.0;
  const double s = std::sin(0.5 * kPi * t / data.bc_period);
  return s * s;
}

Vec initial_state(const RunConfig& cfg, double x1, double x2) {
  double shape = space_shape(cfg.data, x1);
  if (cfg.sys.d == 2 && cfg.data.u0_k2 != 0)
    shape *= std::cos(2.0 * kPi * cfg.data.u0_k2 * x2 / cfg.grid.x2_max);
  return shape * cfg.data.u0_weights;
}

Vec boundary_data(const RunConfig& cfg, double t) {
  return time_ramp(cfg.data, t) * cfg.data.bc_weights;
}

}  // namespace relaxbc
