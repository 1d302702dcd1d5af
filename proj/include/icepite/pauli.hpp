#pragma once

#include "common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>

namespace icepite {

// Pauli string as packed x/z bit masks; qubit j <-> bit j. Y = i X Z per qubit.
struct PauliString {
  std::uint64_t x = 0;
  std::uint64_t z = 0;
  int n = 0;

  PauliString() = default;
  PauliString(std::uint64_t x_, std::uint64_t z_, int n_) : x(x_), z(z_), n(n_) {}

  // text form: leftmost letter = highest qubit, qubit 0 rightmost
  static PauliString parse(const std::string& s) {
    PauliString p;
    p.n = static_cast<int>(s.size());
    if (p.n > 64) throw std::invalid_argument("PauliString: more than 64 qubits");
    for (int k = 0; k < p.n; ++k) {
      int q = p.n - 1 - k;
      switch (s[k]) {
        case 'I': break;
        case 'X': p.x |= 1ull << q; break;
        case 'Y': p.x |= 1ull << q; p.z |= 1ull << q; break;
        case 'Z': p.z |= 1ull << q; break;
        default: throw std::invalid_argument("PauliString: bad letter in '" + s + "'");
      }
    }
    return p;
  }

  static PauliString single(int n, int q, char letter) {
    PauliString p(0, 0, n);
    p.set(q, letter);
    return p;
  }

  char letter(int q) const {
    bool bx = (x >> q) & 1u, bz = (z >> q) & 1u;
    return bx ? (bz ? 'Y' : 'X') : (bz ? 'Z' : 'I');
  }

  void set(int q, char letter) {
    std::uint64_t m = 1ull << q;
    x &= ~m;
    z &= ~m;
    if (letter == 'X' || letter == 'Y') x |= m;
    if (letter == 'Z' || letter == 'Y') z |= m;
    if (letter != 'I' && letter != 'X' && letter != 'Y' && letter != 'Z')
      throw std::invalid_argument("PauliString::set: bad letter");
  }

  std::string str() const {
    std::string s(n, 'I');
    for (int q = 0; q < n; ++q) s[n - 1 - q] = letter(q);
    return s;
  }

  std::uint64_t support() const { return x | z; }
  int weight() const { return popcount(x | z); }
  bool is_identity() const { return (x | z) == 0; }
  bool is_diagonal() const { return x == 0; }

  bool commutes(const PauliString& o) const { return ((popcount(x & o.z) + popcount(z & o.x)) & 1) == 0; }

  friend bool operator==(const PauliString& a, const PauliString& b) { return a.x == b.x && a.z == b.z && a.n == b.n; }
  friend bool operator!=(const PauliString& a, const PauliString& b) { return !(a == b); }
  friend bool operator<(const PauliString& a, const PauliString& b) {
    return std::tie(a.n, a.z, a.x) < std::tie(b.n, b.z, b.x);
  }
};

// i^k factor from multiplying a*b, result string
inline std::pair<int, PauliString> pauli_mul(const PauliString& a, const PauliString& b) {
  if (a.n != b.n) throw std::invalid_argument("pauli_mul: width mismatch");
  PauliString r(a.x ^ b.x, a.z ^ b.z, a.n);
  int e = popcount(a.x & a.z) + popcount(b.x & b.z) + 2 * popcount(a.z & b.x) - popcount(r.x & r.z);
  return {((e % 4) + 4) % 4, r};
}

inline cplx ipow(int k) {
  static const cplx t[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  return t[((k % 4) + 4) % 4];
}

// Pauli with a phase i^k
struct PhasedPauli {
  int k = 0;
  PauliString p;

  double sign() const {
    if (k % 2) throw std::logic_error("PhasedPauli: non-Hermitian phase");
    return k == 0 ? 1.0 : -1.0;
  }
  friend PhasedPauli operator*(const PhasedPauli& a, const PhasedPauli& b) {
    auto [e, r] = pauli_mul(a.p, b.p);
    return {(a.k + b.k + e) % 4, r};
  }
};

// conjugation g R g^dag with g = exp(i*s*pi/4 * A), s = +/-1
inline PhasedPauli conj_clifford(const PhasedPauli& r, const PauliString& a, int s) {
  if (r.p.commutes(a)) return r;
  PhasedPauli ap{s > 0 ? 1 : 3, a};
  return ap * r;
}

// dense matrix of a Pauli string, qubit 0 = least significant index bit
inline CMat pauli_matrix(const PauliString& p) {
  std::size_t dim = std::size_t{1} << p.n;
  CMat m = CMat::Zero(dim, dim);
  int ny = popcount(p.x & p.z);
  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t row = col ^ p.x;
    int neg = popcount(col & p.z) & 1;
    cplx v = ipow(ny) * (neg ? -1.0 : 1.0);
    m(row, col) = v;
  }
  return m;
}

// real-weighted sum of Pauli strings
class PauliSum {
 public:
  PauliSum() = default;
  explicit PauliSum(int n) : n_(n) {}

  int n_qubits() const { return n_; }
  const std::map<PauliString, double>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }

  void add(const PauliString& p, double c) {
    if (p.n != n_) throw std::invalid_argument("PauliSum::add: width mismatch");
    auto& v = terms_[p];
    v += c;
    if (std::abs(v) < merge_tol) terms_.erase(p);
  }
  void add(const std::string& s, double c) { add(PauliString::parse(s), c); }

  double coeff(const PauliString& p) const {
    auto it = terms_.find(p);
    return it == terms_.end() ? 0.0 : it->second;
  }
  double coeff(const std::string& s) const { return coeff(PauliString::parse(s)); }

  CMat matrix() const {
    std::size_t dim = std::size_t{1} << n_;
    CMat m = CMat::Zero(dim, dim);
    for (auto& [p, c] : terms_) {
      int ny = popcount(p.x & p.z);
      for (std::size_t col = 0; col < dim; ++col) {
        int neg = popcount(col & p.z) & 1;
        m(col ^ p.x, col) += c * ipow(ny) * (neg ? -1.0 : 1.0);
      }
    }
    return m;
  }

  PauliSum& operator+=(const PauliSum& o) {
    for (auto& [p, c] : o.terms_) add(p, c);
    return *this;
  }

  static constexpr double merge_tol = 1e-12;

 private:
  int n_ = 0;
  std::map<PauliString, double> terms_;
};

// complex-weighted sum used while building Hermitian operators from ladder products
class ComplexPauliSum {
 public:
  explicit ComplexPauliSum(int n) : n_(n) {}
  int n_qubits() const { return n_; }

  void add(const PauliString& p, cplx c) {
    auto& v = terms_[p];
    v += c;
  }
  const std::map<PauliString, cplx>& terms() const { return terms_; }

  ComplexPauliSum operator*(const ComplexPauliSum& o) const {
    ComplexPauliSum r(n_);
    for (auto& [a, ca] : terms_)
      for (auto& [b, cb] : o.terms_) {
        auto [e, p] = pauli_mul(a, b);
        r.add(p, ca * cb * ipow(e));
      }
    r.prune();
    return r;
  }
  ComplexPauliSum& operator+=(const ComplexPauliSum& o) {
    for (auto& [p, c] : o.terms_) add(p, c);
    return *this;
  }
  ComplexPauliSum scaled(cplx s) const {
    ComplexPauliSum r(n_);
    for (auto& [p, c] : terms_) r.add(p, c * s);
    return r;
  }
  void prune(double tol = 1e-14) {
    for (auto it = terms_.begin(); it != terms_.end();)
      it = std::abs(it->second) < tol ? terms_.erase(it) : std::next(it);
  }

  PauliSum hermitian_part(double imag_tol = 1e-10) const {
    PauliSum r(n_);
    for (auto& [p, c] : terms_) {
      if (std::abs(c.imag()) > imag_tol) throw std::runtime_error("ComplexPauliSum: operator is not Hermitian");
      r.add(p, c.real());
    }
    return r;
  }

 private:
  int n_;
  std::map<PauliString, cplx> terms_;
};

// text lines "+c.cccccccc STRING"
inline std::string format_pauli_sum(const PauliSum& s) {
  std::ostringstream os;
  char buf[64];
  for (auto& [p, c] : s.terms()) {
    std::snprintf(buf, sizeof buf, "%+.8f", c);
    os << buf << ' ' << p.str() << '\n';
  }
  return os.str();
}

inline PauliSum parse_pauli_sum(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  PauliSum out;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double c;
    std::string s;
    if (!(ls >> c >> s)) throw std::runtime_error("parse_pauli_sum: malformed line '" + line + "'");
    if (first) {
      out = PauliSum(static_cast<int>(s.size()));
      first = false;
    }
    out.add(s, c);
  }
  return out;
}

}  // namespace icepite
