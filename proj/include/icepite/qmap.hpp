#pragma once

#include "effham.hpp"
#include "pauli.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace icepite::qmap {

// creation operator of fermionic mode m under the parity encoding on n qubits
inline ComplexPauliSum parity_creation(int n, int m) {
  ComplexPauliSum r(n);
  std::uint64_t above = 0;
  for (int q = m + 1; q < n; ++q) above |= 1ull << q;
  PauliString a(above | (1ull << m), m > 0 ? (1ull << (m - 1)) : 0, n);  // Z_{m-1} X_m X_{>m}
  PauliString b(above | (1ull << m), 1ull << m, n);                       // Y_m X_{>m}
  r.add(a, 0.5);
  r.add(b, cplx(0, -0.5));
  return r;
}

inline ComplexPauliSum parity_annihilation(int n, int m) {
  ComplexPauliSum r(n);
  auto cr = parity_creation(n, m);
  for (auto& [p, c] : cr.terms()) r.add(p, std::conj(c));
  return r;
}

// fermionic Hamiltonian on all 2*n_orb spin-orbitals, parity encoded, no reduction
inline PauliSum parity_encode_full(const effham::SecondQuantizedHamiltonian& h) {
  int n = h.n_orb, nq = 2 * n;
  std::vector<ComplexPauliSum> cr, an;
  for (int m = 0; m < nq; ++m) {
    cr.push_back(parity_creation(nq, m));
    an.push_back(parity_annihilation(nq, m));
  }
  ComplexPauliSum acc(nq);
  for (int s = 0; s < 2; ++s)
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) {
        double v = h.one_body(p, q);
        if (v != 0.0) acc += (cr[effham::mode(n, p, s)] * an[effham::mode(n, q, s)]).scaled(v);
      }
  for (int sa = 0; sa < 2; ++sa)
    for (int sb = 0; sb < 2; ++sb)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
              double v = h.v(i, j, k, l);
              if (v == 0.0) continue;
              int mi = effham::mode(n, i, sa), mj = effham::mode(n, j, sb);
              int mk = effham::mode(n, k, sa), ml = effham::mode(n, l, sb);
              if (mi == mj || mk == ml) continue;
              acc += (cr[mi] * cr[mj] * an[ml] * an[mk]).scaled(0.5 * v);
            }
  acc.prune(PauliSum::merge_tol);
  return acc.hermitian_part();
}

// which qubits survive the two-qubit reduction
struct ParityReduction {
  int n_orb = 0;
  int up_parity = 0;  // N_up mod 2
  int dn_parity = 0;  // N_dn mod 2
  std::vector<int> kept;  // original qubit of each reduced qubit

  int removed_up() const { return n_orb - 1; }
  int removed_total() const { return 2 * n_orb - 1; }
};

inline ParityReduction make_parity_reduction(int n_orb, int n_up, int n_dn) {
  if (n_up < 0 || n_dn < 0 || n_up > n_orb || n_dn > n_orb) throw std::invalid_argument("parity_map: invalid sector specification");
  ParityReduction r{n_orb, n_up & 1, n_dn & 1, {}};
  for (int q = 0; q < 2 * n_orb; ++q)
    if (q != r.removed_up() && q != r.removed_total()) r.kept.push_back(q);
  return r;
}

inline PauliSum reduce_parity_qubits(const PauliSum& full, const ParityReduction& red) {
  int nq = full.n_qubits();
  PauliSum out(nq - 2);
  double zu = red.up_parity ? -1.0 : 1.0;
  double zt = (red.up_parity ^ red.dn_parity) ? -1.0 : 1.0;
  for (auto& [p, c] : full.terms()) {
    double f = c;
    for (auto [q, ev] : {std::pair{red.removed_up(), zu}, std::pair{red.removed_total(), zt}}) {
      char l = p.letter(q);
      if (l == 'X' || l == 'Y') throw std::invalid_argument("parity_map: Hamiltonian does not conserve the requested parities");
      if (l == 'Z') f *= ev;
    }
    PauliString r(0, 0, nq - 2);
    for (std::size_t k = 0; k < red.kept.size(); ++k) r.set(static_cast<int>(k), p.letter(red.kept[k]));
    out.add(r, f);
  }
  return out;
}

inline PauliSum parity_map(const effham::SecondQuantizedHamiltonian& h, int n_up, int n_dn) {
  if (h.basis != effham::Basis::KS) throw std::invalid_argument("parity_map: Hamiltonian must be in the KS basis");
  return reduce_parity_qubits(parity_encode_full(h), make_parity_reduction(h.n_orb, n_up, n_dn));
}

struct TruncationReport {
  PauliSum kept;
  std::size_t removed_terms = 0;
  double removed_weight = 0.0;  // sum |c| over dropped terms
};

inline TruncationReport truncate(const PauliSum& p, double threshold) {
  if (threshold < 0) throw std::invalid_argument("truncate: negative threshold");
  TruncationReport r{PauliSum(p.n_qubits()), 0, 0.0};
  for (auto& [s, c] : p.terms()) {
    if (std::abs(c) < threshold) {
      ++r.removed_terms;
      r.removed_weight += std::abs(c);
    } else {
      r.kept.add(s, c);
    }
  }
  return r;
}

// independent Z-type strings commuting with every term, lowest weight first
inline std::vector<PauliString> find_z2_symmetries(const PauliSum& p) {
  int n = p.n_qubits();
  std::vector<std::uint64_t> cands;
  for (std::uint64_t z = 1; z < (1ull << n); ++z) {
    bool ok = true;
    for (auto& [s, c] : p.terms())
      if (popcount(z & s.x) & 1) {
        ok = false;
        break;
      }
    if (ok) cands.push_back(z);
  }
  std::stable_sort(cands.begin(), cands.end(), [](auto a, auto b) { return popcount(a) < popcount(b); });
  std::vector<std::pair<std::uint64_t, std::uint64_t>> rows;  // (pivot bit, row), insertion order
  std::vector<PauliString> out;
  for (auto z : cands) {
    std::uint64_t r = z;
    for (auto& [piv, row] : rows)
      if (r & piv) r ^= row;
    if (!r) continue;
    rows.emplace_back(r & (~r + 1), r);
    out.emplace_back(0, z, n);
  }
  return out;
}

struct TaperInfo {
  PauliString sym;
  int qubit = -1;  // eliminated qubit (lowest in sym support)
  int sign = 1;
  int n_before = 0;
};

inline TaperInfo make_taper(const PauliString& sym, int sign) {
  if (!sym.is_diagonal() || sym.is_identity()) throw std::invalid_argument("taper: symmetry must be a non-trivial Z-type string");
  if (sign != 1 && sign != -1) throw std::invalid_argument("taper: sector sign must be +1 or -1");
  return {sym, __builtin_ctzll(sym.z), sign, sym.n};
}

inline PauliSum taper(const PauliSum& p, const TaperInfo& t) {
  int n = p.n_qubits();
  PauliString xq = PauliString::single(n, t.qubit, 'X');
  ComplexPauliSum u(n);
  u.add(xq, 1.0 / std::sqrt(2.0));
  u.add(t.sym, 1.0 / std::sqrt(2.0));
  PauliSum out(n - 1);
  for (auto& [s, c] : p.terms()) {
    if (!s.commutes(t.sym)) throw std::invalid_argument("taper: symmetry does not commute with term " + s.str());
    ComplexPauliSum term(n);
    term.add(s, c);
    auto rotated = u * term * u;
    for (auto& [r, rc] : rotated.terms()) {
      if (std::abs(rc) < 1e-14) continue;
      char l = r.letter(t.qubit);
      if (l == 'Z' || l == 'Y') throw std::logic_error("taper: rotated term is not X-diagonal on the tapered qubit");
      if (std::abs(rc.imag()) > 1e-10) throw std::logic_error("taper: complex coefficient after rotation");
      double f = rc.real() * (l == 'X' ? t.sign : 1);
      PauliString red(0, 0, n - 1);
      for (int q = 0, k = 0; q < n; ++q)
        if (q != t.qubit) red.set(k++, r.letter(q));
      out.add(red, f);
    }
  }
  return out;
}

inline PauliSum taper(const PauliSum& p, const PauliString& sym, int sign) { return taper(p, make_taper(sym, sign)); }

// basis bookkeeping between determinants and tapered computational states
struct QubitEncoding {
  ParityReduction red;
  std::optional<TaperInfo> tap;

  int n_qubits() const { return static_cast<int>(red.kept.size()) - (tap ? 1 : 0); }

  // returns (index, amplitude factor) or nullopt outside the sector
  std::optional<std::pair<std::uint64_t, double>> encode(std::uint64_t det) const {
    int nq = 2 * red.n_orb;
    std::uint64_t par = 0;
    int acc = 0;
    for (int m = 0; m < nq; ++m) {
      acc ^= (det >> m) & 1;
      par |= static_cast<std::uint64_t>(acc) << m;
    }
    int up = static_cast<int>((par >> red.removed_up()) & 1), tot = static_cast<int>((par >> red.removed_total()) & 1);
    if (up != red.up_parity || tot != (red.up_parity ^ red.dn_parity)) return std::nullopt;
    std::uint64_t b = 0;
    for (std::size_t k = 0; k < red.kept.size(); ++k) b |= ((par >> red.kept[k]) & 1) << k;
    double f = 1.0;
    if (tap) {
      int ev = (popcount(b & tap->sym.z) & 1) ? -1 : 1;
      if (ev != tap->sign) return std::nullopt;
      int bq = static_cast<int>((b >> tap->qubit) & 1);
      if (tap->sign < 0 && !bq) f = -1.0;
      std::uint64_t lo = b & ((1ull << tap->qubit) - 1), hi = b >> (tap->qubit + 1);
      b = lo | (hi << tap->qubit);
    }
    return std::make_pair(b, f);
  }

  // inverse of encode: determinant bits and amplitude factor
  std::pair<std::uint64_t, double> decode(std::uint64_t idx) const {
    std::uint64_t b = idx;
    double f = 1.0;
    if (tap) {
      std::uint64_t lo = b & ((1ull << tap->qubit) - 1), hi = b >> tap->qubit;
      b = lo | (hi << (tap->qubit + 1));
      // choose the tapered bit so the symmetry eigenvalue matches the sector
      int ev = (popcount(b & tap->sym.z) & 1) ? -1 : 1;
      if (ev != tap->sign) b |= 1ull << tap->qubit;
      if (tap->sign < 0 && !((b >> tap->qubit) & 1)) f = -1.0;
    }
    int nq = 2 * red.n_orb;
    std::uint64_t par = 0;
    for (std::size_t k = 0; k < red.kept.size(); ++k) par |= ((b >> k) & 1) << red.kept[k];
    par |= static_cast<std::uint64_t>(red.up_parity) << red.removed_up();
    par |= static_cast<std::uint64_t>(red.up_parity ^ red.dn_parity) << red.removed_total();
    std::uint64_t det = 0;
    int prev = 0;
    for (int m = 0; m < nq; ++m) {
      int pm = static_cast<int>((par >> m) & 1);
      det |= static_cast<std::uint64_t>(pm ^ prev) << m;
      prev = pm;
    }
    return {det, f};
  }

  int electrons(std::uint64_t idx) const { return popcount(decode(idx).first); }
};

inline Vec encode_determinant_state(const QubitEncoding& enc, const std::map<std::uint64_t, double>& coeffs) {
  Vec psi = Vec::Zero(std::size_t{1} << enc.n_qubits());
  double norm = 0;
  for (auto& [det, c] : coeffs) {
    auto e = enc.encode(det);
    if (!e) throw std::invalid_argument("encode_determinant_state: determinant outside the chosen sector");
    psi[e->first] += c * e->second;
    norm += c * c;
  }
  if (std::abs(norm - 1.0) > 1e-9) throw std::invalid_argument("encode_determinant_state: input not normalized");
  return psi;
}

inline std::map<std::uint64_t, double> decode_state(const QubitEncoding& enc, const Vec& psi) {
  std::map<std::uint64_t, double> out;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    if (psi[i] == 0.0) continue;
    auto [det, f] = enc.decode(i);
    out[det] += psi[i] * f;
  }
  return out;
}

// ---- CRTE generator

struct Term {
  PauliString p;
  double c;
};

struct CrteGenerator {
  std::vector<Term> lambda1, lambda2, v1, v2;
  double identity = 0.0;  // coefficient of I..I Z (ancilla only)
  int ancilla_index = 0;
  int n_qubits = 0;
  std::vector<std::string> warnings;

  std::vector<Term> all() const {
    std::vector<Term> r;
    for (auto* g : {&lambda1, &lambda2, &v1, &v2}) r.insert(r.end(), g->begin(), g->end());
    if (identity != 0.0) {
      PauliString z(0, 1ull << ancilla_index, n_qubits);
      r.push_back({z, identity});
    }
    return r;
  }
  std::vector<Term> lambda() const {
    auto r = lambda1;
    r.insert(r.end(), lambda2.begin(), lambda2.end());
    return r;
  }
  PauliSum as_sum() const {
    PauliSum s(n_qubits);
    for (auto& t : all()) s.add(t.p, t.c);
    return s;
  }
};

inline const std::vector<std::string>& lambda1_template() {
  static const std::vector<std::string> v{"IIZZ", "IZIZ", "ZIZZ"};
  return v;
}
inline const std::vector<std::string>& lambda2_template() {
  static const std::vector<std::string> v{"ZZIZ", "ZIIZ", "IZZZ", "ZZZZ"};
  return v;
}
inline const std::vector<std::string>& v1_template() {
  static const std::vector<std::string> v{"XXXZ", "ZZXZ", "ZXZZ", "XZZZ", "IXXZ", "ZXXZ", "XZXZ", "XIXZ",
                                          "XXZZ", "XXIZ", "IIXZ", "IXIZ", "XIIZ", "IXZZ", "ZXIZ"};
  return v;
}
inline const std::vector<std::string>& v2_template() {
  static const std::vector<std::string> v{"YYXZ", "YXYZ", "XYYZ", "IZXZ", "YZYZ", "YIYZ",
                                          "YYZZ", "YYIZ", "ZIXZ", "XIZZ", "XZIZ"};
  return v;
}

// system sum on q0..q(n-1) -> generator with the PITE ancilla as qubit 0
inline CrteGenerator build_crte_generator(const PauliSum& sys) {
  int n = sys.n_qubits() + 1;
  CrteGenerator g;
  g.n_qubits = n;
  g.ancilla_index = 0;
  std::map<PauliString, double> pending;
  for (auto& [s, c] : sys.terms()) {
    PauliString t(s.x << 1, (s.z << 1) | 1ull, n);
    if (s.is_identity()) g.identity += c;
    else pending[t] += c;
  }
  auto take = [&](const std::vector<std::string>& tmpl, std::vector<Term>& dst) {
    if (n != 4) return;
    for (auto& str : tmpl) {
      auto p = PauliString::parse(str);
      auto it = pending.find(p);
      if (it == pending.end()) continue;
      dst.push_back({p, it->second});
      pending.erase(it);
    }
  };
  take(lambda1_template(), g.lambda1);
  take(lambda2_template(), g.lambda2);
  take(v1_template(), g.v1);
  take(v2_template(), g.v2);
  for (auto& [p, c] : pending) {
    if (p.is_diagonal()) {
      g.lambda2.push_back({p, c});
    } else {
      g.warnings.push_back("term " + p.str() + " not in the grouping template; appended to V2");
      g.v2.push_back({p, c});
    }
  }
  return g;
}

}  // namespace icepite::qmap
