#pragma once

#include "common.hpp"

#include <nlohmann/json.hpp>
#include <unsupported/Eigen/NonLinearOptimization>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace icepite::effham {

// Table-style model parameters; J diagonal is ignored
struct OrbitalModelParams {
  int n_orb = 0;
  Mat t, U, J;
  std::string label;

  void validate() const {
    if (n_orb <= 0) throw std::invalid_argument("OrbitalModelParams: n_orb must be positive");
    for (const Mat* m : {&t, &U, &J})
      if (m->rows() != n_orb || m->cols() != n_orb)
        throw std::invalid_argument("OrbitalModelParams: dimension mismatch in " + label);
    if ((t - t.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw std::invalid_argument("OrbitalModelParams: t not symmetric");
    if ((U - U.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw std::invalid_argument("OrbitalModelParams: U not symmetric");
    for (int i = 0; i < n_orb; ++i) {
      if (U(i, i) <= 0) throw std::invalid_argument("OrbitalModelParams: U_ii must be positive");
      for (int j = 0; j < n_orb; ++j)
        if (i != j && J(i, j) < 0) throw std::invalid_argument("OrbitalModelParams: J_ij must be non-negative");
    }
  }
};

// per-system conventions that the tables leave open
struct Calibration {
  double gauge_deg = 0.0;          // rotation inside a degenerate KS pair
  std::vector<int> init_signs;     // signs applied to es1, es2, es3 when building initial states
  std::optional<double> threshold; // truncation default
};

struct SystemData {
  OrbitalModelParams params;
  Calibration calib;
};

// n_orb, then rows "i j t U J" (1-based), optional "key value..." lines, '#' comments
inline SystemData parse_system_data(const std::string& text, const std::string& label = "") {
  SystemData d;
  d.params.label = label;
  std::istringstream is(text);
  std::string line;
  bool have_n = false;
  while (std::getline(is, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string head;
    if (!(ls >> head)) continue;
    if (std::isalpha(static_cast<unsigned char>(head[0]))) {
      if (head == "label") {
        ls >> d.params.label;
      } else if (head == "gauge_deg") {
        ls >> d.calib.gauge_deg;
      } else if (head == "init_signs") {
        int s;
        while (ls >> s) d.calib.init_signs.push_back(s);
      } else if (head == "threshold") {
        double v;
        ls >> v;
        d.calib.threshold = v;
      } else {
        throw std::runtime_error("system data: unknown key '" + head + "'");
      }
      continue;
    }
    if (!have_n) {
      d.params.n_orb = std::stoi(head);
      std::string extra;
      if (ls >> extra) throw std::runtime_error("system data: expected n_orb alone on its first line");
      int n = d.params.n_orb;
      if (n <= 0 || n > 16) throw std::runtime_error("system data: bad n_orb");
      d.params.t = Mat::Zero(n, n);
      d.params.U = Mat::Zero(n, n);
      d.params.J = Mat::Zero(n, n);
      have_n = true;
      continue;
    }
    int i = std::stoi(head), j;
    double t, u, jj;
    if (!(ls >> j >> t >> u >> jj)) throw std::runtime_error("system data: malformed row '" + line + "'");
    int n = d.params.n_orb;
    if (i < 1 || j < 1 || i > n || j > n) throw std::runtime_error("system data: orbital index out of range");
    --i, --j;
    d.params.t(i, j) = d.params.t(j, i) = t;
    d.params.U(i, j) = d.params.U(j, i) = u;
    if (i != j) d.params.J(i, j) = d.params.J(j, i) = jj;
  }
  if (!have_n) throw std::runtime_error("system data: missing n_orb");
  d.params.validate();
  return d;
}

inline SystemData load_system_data(const std::string& path, const std::string& label = "") {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open system data file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_system_data(ss.str(), label);
}

enum class Basis { Wannier, KS };

// H = sum h_pq a+_p a_q + 1/2 sum v_ijkl a+_is a+_jr a_lr a_ks
struct SecondQuantizedHamiltonian {
  Basis basis = Basis::Wannier;
  int n_orb = 0;
  Mat one_body;
  std::vector<double> two_body;  // v[((i*n+j)*n+k)*n+l]
  Mat rotation;                  // Wannier a_i = sum_j rotation(i,j) c_j

  double v(int i, int j, int k, int l) const { return two_body[((i * n_orb + j) * n_orb + k) * n_orb + l]; }
  double& v(int i, int j, int k, int l) { return two_body[((i * n_orb + j) * n_orb + k) * n_orb + l]; }
};

inline SecondQuantizedHamiltonian build_wannier_hamiltonian(const OrbitalModelParams& p) {
  p.validate();
  int n = p.n_orb;
  SecondQuantizedHamiltonian h;
  h.basis = Basis::Wannier;
  h.n_orb = n;
  h.one_body = p.t;
  h.two_body.assign(static_cast<std::size_t>(n) * n * n * n, 0.0);
  h.rotation = Mat::Identity(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      h.v(i, j, i, j) += p.U(i, j);
      if (i != j) {
        h.v(i, j, j, i) += p.J(i, j);  // exchange
        h.v(i, i, j, j) += p.J(i, j);  // pair hopping
      }
    }
  return h;
}

struct KsGauge {
  double degenerate_angle = 0.0;  // radians, applied to the first 2-dim degenerate block
  double degeneracy_tol = 1e-8;
};

// eigenvectors of a symmetric matrix with a deterministic gauge
inline Eigh gauge_fixed_eigh(const Mat& t, const KsGauge& g = {}) {
  auto [e, c] = eigh(t);
  int n = static_cast<int>(e.size());
  bool rotated = false;
  for (int i = 0; i < n;) {
    int j = i;
    while (j + 1 < n && e[j + 1] - e[i] < g.degeneracy_tol) ++j;
    int d = j - i + 1;
    if (d > 1) {
      Mat proj = c.middleCols(i, d) * c.middleCols(i, d).transpose();
      std::vector<Vec> basis;
      for (int a = 0; a < n && static_cast<int>(basis.size()) < d; ++a) {
        Vec w = proj.col(a);
        for (auto& u : basis) w -= u * u.dot(w);
        if (w.norm() > 1e-6) basis.push_back(w / w.norm());
      }
      for (int k = 0; k < d; ++k) c.col(i + k) = basis[k];
    }
    i = j + 1;
  }
  for (int k = 0; k < n; ++k) {
    Eigen::Index m;
    c.col(k).cwiseAbs().maxCoeff(&m);
    if (c(m, k) < 0) c.col(k) *= -1.0;
  }
  if (g.degenerate_angle != 0.0) {
    for (int i = 0; i + 1 < n && !rotated; ++i) {
      if (e[i + 1] - e[i] < g.degeneracy_tol && (i + 2 >= n || e[i + 2] - e[i] >= g.degeneracy_tol)) {
        double cs = std::cos(g.degenerate_angle), sn = std::sin(g.degenerate_angle);
        Vec a = c.col(i), b = c.col(i + 1);
        c.col(i) = cs * a + sn * b;
        c.col(i + 1) = -sn * a + cs * b;
        rotated = true;
      }
    }
  }
  return {e, c};
}

inline SecondQuantizedHamiltonian rotate_orbitals(const SecondQuantizedHamiltonian& h, const Mat& c) {
  int n = h.n_orb;
  SecondQuantizedHamiltonian r = h;
  r.one_body = c.transpose() * h.one_body * c;
  // four quarter transforms
  std::vector<double> a = h.two_body, b(a.size(), 0.0);
  auto idx = [n](int i, int j, int k, int l) { return ((i * n + j) * n + k) * n + l; };
  for (int pass = 0; pass < 4; ++pass) {
    std::fill(b.begin(), b.end(), 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int l = 0; l < n; ++l) {
            double val = a[idx(i, j, k, l)];
            if (val == 0.0) continue;
            // rotate first index, then cycle indices so each pass hits a new one
            for (int p = 0; p < n; ++p) b[idx(j, k, l, p)] += val * c(i, p);
          }
    std::swap(a, b);
  }
  r.two_body = a;
  r.rotation = h.rotation * c;
  return r;
}

inline SecondQuantizedHamiltonian to_ks_basis(const SecondQuantizedHamiltonian& h, const KsGauge& g = {}) {
  if (h.basis != Basis::Wannier) throw std::invalid_argument("to_ks_basis: input must be in the Wannier basis");
  auto [e, c] = gauge_fixed_eigh(h.one_body, g);
  auto r = rotate_orbitals(h, c);
  r.basis = Basis::KS;
  for (int i = 0; i < h.n_orb; ++i)
    for (int j = 0; j < h.n_orb; ++j) r.one_body(i, j) = i == j ? e[i] : 0.0;
  return r;
}

// ---- Fock space, mode(i, spin) = i + n_orb*spin, spin 0 = up

inline int mode(int n_orb, int i, int spin) { return i + n_orb * spin; }

// apply a+_m (create) or a_m; returns 0 sign when annihilated
inline int apply_ladder(std::uint64_t& s, int m, bool create) {
  std::uint64_t bit = 1ull << m;
  if (create == static_cast<bool>(s & bit)) return 0;
  int sign = (popcount(s & (bit - 1)) & 1) ? -1 : 1;
  s ^= bit;
  return sign;
}

inline Mat fock_matrix(const SecondQuantizedHamiltonian& h) {
  int n = h.n_orb, nm = 2 * n;
  std::size_t dim = std::size_t{1} << nm;
  Mat m = Mat::Zero(dim, dim);
  for (std::uint64_t s0 = 0; s0 < dim; ++s0) {
    for (int sp = 0; sp < 2; ++sp)
      for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
          double hv = h.one_body(p, q);
          if (hv == 0.0) continue;
          std::uint64_t s = s0;
          int sg = apply_ladder(s, mode(n, q, sp), false);
          if (!sg) continue;
          sg *= apply_ladder(s, mode(n, p, sp), true);
          if (!sg) continue;
          m(s, s0) += sg * hv;
        }
    for (int sa = 0; sa < 2; ++sa)
      for (int sb = 0; sb < 2; ++sb)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
              for (int l = 0; l < n; ++l) {
                double vv = h.v(i, j, k, l);
                if (vv == 0.0) continue;
                std::uint64_t s = s0;
                int sg = apply_ladder(s, mode(n, k, sa), false);
                if (!sg) continue;
                sg *= apply_ladder(s, mode(n, l, sb), false);
                if (!sg) continue;
                sg *= apply_ladder(s, mode(n, j, sb), true);
                if (!sg) continue;
                sg *= apply_ladder(s, mode(n, i, sa), true);
                if (!sg) continue;
                m(s, s0) += 0.5 * sg * vv;
              }
  }
  return m;
}

// S^2 = S- S+ + Sz(Sz+1)
inline Mat spin_squared_matrix(int n_orb) {
  int nm = 2 * n_orb;
  std::size_t dim = std::size_t{1} << nm;
  Mat sp = Mat::Zero(dim, dim), sz = Mat::Zero(dim, dim);
  for (std::uint64_t s0 = 0; s0 < dim; ++s0) {
    std::uint64_t up = s0 & ((1ull << n_orb) - 1), dn = s0 >> n_orb;
    sz(s0, s0) = 0.5 * (popcount(up) - popcount(dn));
    for (int i = 0; i < n_orb; ++i) {
      std::uint64_t s = s0;
      int sg = apply_ladder(s, mode(n_orb, i, 1), false);
      if (!sg) continue;
      sg *= apply_ladder(s, mode(n_orb, i, 0), true);
      if (!sg) continue;
      sp(s, s0) += sg;
    }
  }
  return sp.transpose() * sp + sz * sz + sz;
}

inline double sz_of(std::uint64_t s, int n_orb) {
  std::uint64_t up = s & ((1ull << n_orb) - 1), dn = s >> n_orb;
  return 0.5 * (popcount(up) - popcount(dn));
}

struct FciResult {
  int n_electrons = 0;
  std::optional<double> sz;  // empty: all Sz sectors merged
  std::vector<std::uint64_t> dets;
  Vec energies;
  Mat eigenvectors;  // columns over dets
  std::vector<double> s2_values;
  std::vector<std::vector<int>> degeneracy_groups;
};

inline constexpr double default_tol_deg = 5e-3;

inline std::vector<std::vector<int>> group_levels(const Vec& e, double tol) {
  std::vector<std::vector<int>> g;
  for (int i = 0; i < e.size(); ++i) {
    if (g.empty() || e[i] - e[g.back().front()] > tol) g.push_back({});
    g.back().push_back(i);
  }
  return g;
}

inline FciResult fci_diagonalize(const SecondQuantizedHamiltonian& h, int n_electrons,
                                 std::optional<double> sz = std::nullopt) {
  int n = h.n_orb;
  if (n_electrons < 0 || n_electrons > 2 * n) throw std::invalid_argument("fci_diagonalize: bad electron count");
  FciResult r;
  r.n_electrons = n_electrons;
  r.sz = sz;
  for (std::uint64_t s = 0; s < (1ull << (2 * n)); ++s)
    if (popcount(s) == n_electrons && (!sz || std::abs(sz_of(s, n) - *sz) < 1e-9)) r.dets.push_back(s);
  if (r.dets.empty()) throw std::invalid_argument("fci_diagonalize: empty sector");
  Mat full = fock_matrix(h), s2 = spin_squared_matrix(n);
  Eigen::Index d = static_cast<Eigen::Index>(r.dets.size());
  Mat hs(d, d), ss(d, d);
  for (Eigen::Index a = 0; a < d; ++a)
    for (Eigen::Index b = 0; b < d; ++b) {
      hs(a, b) = full(r.dets[a], r.dets[b]);
      ss(a, b) = s2(r.dets[a], r.dets[b]);
    }
  auto [e, v] = eigh(hs);
  // resolve degenerate blocks into S^2 eigenvectors
  auto groups = group_levels(e, 1e-9);
  for (auto& g : groups) {
    if (g.size() < 2) continue;
    Mat blk = v.middleCols(g.front(), g.size());
    Mat sb = blk.transpose() * ss * blk;
    auto [sv, sw] = eigh(sb);
    v.middleCols(g.front(), g.size()) = blk * sw;
  }
  r.energies = e;
  r.eigenvectors = v;
  for (Eigen::Index k = 0; k < d; ++k) r.s2_values.push_back(v.col(k).dot(ss * v.col(k)));
  r.degeneracy_groups = group_levels(e, default_tol_deg);
  return r;
}

// ---- excitation table

struct Multiplet {
  double energy;  // mean over components
  double s2;
  int degeneracy;
};

struct ExcitationRow {
  std::string name;
  double lo, hi;  // near-degenerate splits reported as (min, max)
};

struct ExcitationTable {
  std::vector<ExcitationRow> rows;
  std::vector<Multiplet> multiplets;
  std::string diagnostic;  // empty when the template matched

  const ExcitationRow& row(const std::string& name) const {
    for (auto& r : rows)
      if (r.name == name) return r;
    throw std::out_of_range("ExcitationTable: no row " + name);
  }
};

inline std::vector<Multiplet> multiplets_of(const FciResult& res, double tol = default_tol_deg) {
  std::vector<Multiplet> out;
  std::vector<int> used(res.energies.size(), 0);
  for (auto& g : group_levels(res.energies, tol)) {
    // split each level group by spin
    std::map<int, std::vector<int>> by_s;
    for (int i : g) by_s[static_cast<int>(std::lround(res.s2_values[i]))].push_back(i);
    for (auto& [s, idx] : by_s) {
      double e = 0;
      for (int i : idx) e += res.energies[i];
      out.push_back({e / idx.size(), static_cast<double>(s), static_cast<int>(idx.size())});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](auto& a, auto& b) { return a.energy < b.energy; });
  return out;
}

// template 3A2 < 1E < 1A1 < 3E over an all-Sz FCI result
inline ExcitationTable excitation_table(const FciResult& res, double tol = default_tol_deg) {
  ExcitationTable t;
  t.multiplets = multiplets_of(res, tol);
  auto is_trip = [](const Multiplet& m) { return std::abs(m.s2 - 2.0) < 1e-3; };
  auto is_sing = [](const Multiplet& m) { return std::abs(m.s2) < 1e-3; };
  const auto& ms = t.multiplets;
  if (ms.empty() || !is_trip(ms[0])) {
    t.diagnostic = "ground multiplet is not a triplet";
    return t;
  }
  double e3a2 = ms[0].energy;
  std::vector<double> e1e, e3e;
  std::optional<double> e1a1;
  for (std::size_t i = 1; i < ms.size(); ++i) {
    const auto& m = ms[i];
    if (is_sing(m)) {
      if (e1e.size() < 2) {
        for (int c = 0; c < m.degeneracy && e1e.size() < 2; ++c) e1e.push_back(m.energy);
      } else if (!e1a1) {
        e1a1 = m.energy;
      }
    } else if (is_trip(m) && e1a1 && e3e.size() < 6) {
      for (int c = 0; c < m.degeneracy && e3e.size() < 6; ++c) e3e.push_back(m.energy);
    }
  }
  if (e1e.size() < 2 || !e1a1 || e3e.size() < 6) {
    t.diagnostic = "multiplet pattern does not match 3A2 < 1E < 1A1 < 3E";
    return t;
  }
  double e_lo = e1e[0], e_hi = e1e[1];
  double t_lo = e3e.front(), t_hi = e3e.back();
  auto mm = [](double a, double b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
  auto add = [&](std::string n, std::pair<double, double> p) { t.rows.push_back({std::move(n), p.first, p.second}); };
  add("3A2->3E", mm(t_lo - e3a2, t_hi - e3a2));
  add("3A2->1A1", mm(*e1a1 - e3a2, *e1a1 - e3a2));
  add("3A2->1E", mm(e_lo - e3a2, e_hi - e3a2));
  add("1E->1A1", mm(*e1a1 - e_hi, *e1a1 - e_lo));
  add("1A1->3E", mm(t_lo - *e1a1, t_hi - *e1a1));
  return t;
}

// ---- determinant labels

inline std::vector<std::string> default_orbital_names(int n_orb) {
  if (n_orb == 3) return {"a1", "ex", "ey"};
  std::vector<std::string> v;
  for (int i = 0; i < n_orb; ++i) v.push_back("o" + std::to_string(i));
  return v;
}

inline std::string det_label(std::uint64_t s, int n_orb, const std::vector<std::string>& names) {
  std::string out;
  for (int i = 0; i < n_orb; ++i) {
    if (s >> mode(n_orb, i, 0) & 1) out += names[i] + "↑";
    if (s >> mode(n_orb, i, 1) & 1) out += names[i] + "↓";
  }
  return out.empty() ? "vac" : out;
}

inline nlohmann::json fci_to_json(const FciResult& r, int n_orb, const ExcitationTable* table = nullptr) {
  auto names = default_orbital_names(n_orb);
  nlohmann::json j;
  j["n_electrons"] = r.n_electrons;
  if (r.sz) j["sz"] = *r.sz;
  else j["sz"] = "all";
  j["energies"] = std::vector<double>(r.energies.data(), r.energies.data() + r.energies.size());
  j["s2"] = r.s2_values;
  std::vector<std::string> labels;
  for (auto& d : r.dets) labels.push_back(det_label(d, n_orb, names));
  j["determinants"] = labels;
  nlohmann::json states = nlohmann::json::array();
  for (int k = 0; k < r.eigenvectors.cols(); ++k) {
    nlohmann::json s;
    s["energy"] = r.energies[k];
    double s2 = r.s2_values[k];
    s["spin"] = std::abs(s2) < 1e-3 ? "singlet" : std::abs(s2 - 2) < 1e-3 ? "triplet" : std::abs(s2 - 0.75) < 1e-3 ? "doublet" : "other";
    std::vector<double> c(r.eigenvectors.rows());
    for (int i = 0; i < r.eigenvectors.rows(); ++i) c[i] = r.eigenvectors(i, k);
    s["coefficients"] = c;
    states.push_back(s);
  }
  j["states"] = states;
  if (table) {
    nlohmann::json rows = nlohmann::json::array();
    for (auto& row : table->rows) rows.push_back({{"transition", row.name}, {"lo", row.lo}, {"hi", row.hi}});
    j["excitations"] = rows;
    if (!table->diagnostic.empty()) j["diagnostic"] = table->diagnostic;
  }
  return j;
}

// ---- f(x) = b exp(-x/c) + e_inf

struct FitResult {
  double b = 0, c = 0, e_inf = 0;
  double residual_norm = 0;
};

inline FitResult fit_extrapolation(const std::vector<std::pair<double, double>>& pts) {
  if (pts.size() < 3) throw std::invalid_argument("fit_extrapolation: need at least 3 points");
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      if (pts[i].first == pts[j].first) throw std::invalid_argument("fit_extrapolation: x values must be distinct");

  double xmin = pts[0].first, xmax = pts[0].first, mean = 0, ylast = pts[0].second;
  for (auto& [x, y] : pts) {
    if (x > xmax) xmax = x, ylast = y;
    xmin = std::min(xmin, x);
    mean += y;
  }
  mean /= pts.size();
  double spread = 0;
  for (auto& [x, y] : pts) spread = std::max(spread, std::abs(y - mean));
  if (spread < 1e-14) return {0.0, xmax - xmin, mean, 0.0};

  struct Functor {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    const std::vector<std::pair<double, double>>& p;
    int inputs() const { return 3; }
    int values() const { return static_cast<int>(p.size()); }
    int operator()(const Eigen::VectorXd& a, Eigen::VectorXd& f) const {
      for (std::size_t i = 0; i < p.size(); ++i) f[i] = a[0] * std::exp(-p[i].first / a[1]) + a[2] - p[i].second;
      return 0;
    }
    int df(const Eigen::VectorXd& a, Eigen::MatrixXd& jac) const {
      for (std::size_t i = 0; i < p.size(); ++i) {
        double ex = std::exp(-p[i].first / a[1]);
        jac(i, 0) = ex;
        jac(i, 1) = a[0] * ex * p[i].first / (a[1] * a[1]);
        jac(i, 2) = 1.0;
      }
      return 0;
    }
  };

  Functor fn{pts};
  FitResult best;
  best.residual_norm = std::numeric_limits<double>::infinity();
  double span = std::max(xmax - xmin, 1e-9);
  for (double cscale : {0.1, 0.3, 1.0, 3.0, 10.0}) {
    Eigen::VectorXd a(3);
    a << 0.0, cscale * span, ylast;
    // seed b from the first point
    double x0 = pts[0].first;
    a[0] = (pts[0].second - ylast) / std::max(std::exp(-x0 / a[1]) - std::exp(-xmax / a[1]), 1e-300);
    Eigen::LevenbergMarquardt<Functor> lm(fn);
    lm.parameters.xtol = 1e-15;
    lm.parameters.ftol = 1e-15;
    lm.parameters.maxfev = 20000;
    lm.minimize(a);
    Eigen::VectorXd f(pts.size());
    fn(a, f);
    if (std::isfinite(f.norm()) && f.norm() < best.residual_norm) best = {a[0], a[1], a[2], f.norm()};
  }
  if (!std::isfinite(best.residual_norm)) throw std::runtime_error("fit_extrapolation: fit did not converge");
  return best;
}

}  // namespace icepite::effham
