#pragma once

#include "circuit.hpp"
#include "synth.hpp"

#include <optional>
#include <string>
#include <vector>

namespace icepite::iceberg {

// [[k+2, k, 2]]: data wires 0..k-1, then qX, qZ, then two syndrome/flag wires
struct IcebergLayout {
  int k = 4;

  IcebergLayout() = default;
  explicit IcebergLayout(int k_) : k(k_) {
    if (k < 2 || k % 2) throw std::invalid_argument("IcebergLayout: k must be even and >= 2");
  }
  int data(int i) const { return i; }
  int qx() const { return k; }
  int qz() const { return k + 1; }
  int m0() const { return k + 2; }
  int m1() const { return k + 3; }
  int n_code() const { return k + 2; }
  int n_wires() const { return k + 4; }
  std::vector<int> code_wires() const {
    std::vector<int> w(n_code());
    for (int i = 0; i < n_code(); ++i) w[i] = i;
    return w;
  }
  std::uint64_t code_mask() const { return (std::uint64_t{1} << n_code()) - 1; }
  PauliString sx() const { return PauliString(code_mask(), 0, n_wires()); }
  PauliString sz() const { return PauliString(0, code_mask(), n_wires()); }
};

// physical image of a logical Pauli string (width k) via X_i -> X_qX X_i, Z_i -> Z_qZ Z_i, Y_i -> Y_i X_qX Z_qZ
inline PhasedPauli logical_image(const PauliString& lp, const IcebergLayout& L) {
  if (lp.n != L.k) throw std::invalid_argument("logical_image: width != k");
  PhasedPauli r{0, PauliString(0, 0, L.n_wires())};
  for (int i = 0; i < L.k; ++i) {
    char l = lp.letter(i);
    if (l == 'I') continue;
    PhasedPauli f{0, PauliString(0, 0, L.n_wires())};
    if (l == 'X' || l == 'Y') f = f * PhasedPauli{0, PauliString::single(L.n_wires(), L.qx(), 'X')};
    if (l == 'X') f = f * PhasedPauli{0, PauliString::single(L.n_wires(), i, 'X')};
    if (l == 'Z') f = f * PhasedPauli{0, PauliString::single(L.n_wires(), i, 'Z')};
    if (l == 'Y') f = f * PhasedPauli{0, PauliString::single(L.n_wires(), i, 'Y')};
    if (l == 'Z' || l == 'Y') f = f * PhasedPauli{0, PauliString::single(L.n_wires(), L.qz(), 'Z')};
    r = r * f;
  }
  return r;
}

// the four stabilizer-equivalent images, lowest weight first
inline std::vector<PhasedPauli> representatives(const PauliString& lp, const IcebergLayout& L) {
  PhasedPauli b = logical_image(lp, L);
  PhasedPauli sx{0, L.sx()}, sz{0, L.sz()};
  std::vector<PhasedPauli> v{b, b * sx, b * sz, b * sx * sz};
  std::stable_sort(v.begin(), v.end(), [](const PhasedPauli& a, const PhasedPauli& c) { return a.p.weight() < c.p.weight(); });
  return v;
}

inline std::vector<std::string> check_names() { return {"encode_flag", "syndrome_x", "syndrome_z", "reencode_flag", "readout_parity"}; }

// GHZ over the code wires with a flag on Z_qX Z_0
inline Circuit encode_zero_circuit(const IcebergLayout& L) {
  Circuit c(L.n_wires());
  auto w = L.code_wires();
  c.h(w[0]);
  for (std::size_t i = 0; i + 1 < w.size(); ++i) c.cx(w[i], w[i + 1]);
  int f = L.m0();
  c.cx(w[w.size() - 2], f);
  c.cx(w[0], f);
  int b = c.new_bit();
  c.measure(f, b);
  c.reset(f);
  c.checks.push_back({"encode_flag", {b}});
  return c;
}

// S_X on m0, S_Z on m1; interleaving order on wires 0 and k keeps the two checks independent
// and routes hook errors into a nontrivial outcome
inline Circuit syndrome_circuit(const IcebergLayout& L) {
  Circuit c(L.n_wires());
  int ax = L.m0(), az = L.m1();
  c.h(ax, Tag::Syndrome);
  for (int d : L.code_wires()) {
    if (d == 0 || d == L.k) {
      c.cx(ax, d, Tag::Syndrome);
      c.cx(d, az, Tag::Syndrome);
    } else {
      c.cx(d, az, Tag::Syndrome);
      c.cx(ax, d, Tag::Syndrome);
    }
  }
  c.h(ax, Tag::Syndrome);
  int bx = c.new_bit(), bz = c.new_bit();
  c.measure(ax, bx, Tag::Syndrome);
  c.measure(az, bz, Tag::Syndrome);
  c.reset(ax, Tag::Syndrome);
  c.reset(az, Tag::Syndrome);
  c.checks.push_back({"syndrome_x", {bx}});
  c.checks.push_back({"syndrome_z", {bz}});
  return c;
}

// destructive readout of logical wire `anc` and qZ, conditional recovery, and re-encoding
// with `anc` back in logical |0>
inline Circuit measure_and_reencode(const IcebergLayout& L, int anc = 0) {
  Circuit c(L.n_wires());
  int q0 = L.data(anc), qz = L.qz(), qx = L.qx(), f = L.m0();
  int b0 = c.new_bit(), bz = c.new_bit();
  c.measure(q0, b0);
  c.measure(qz, bz);
  c.steps.push_back({{b0, bz}});
  for (int i = 0; i < L.k; ++i)
    if (i != anc) c.cond_x(L.data(i), bz, 0);
  c.cond_x(qx, b0, 0);
  c.reset(q0);
  c.reset(qz);
  c.h(qz);
  std::vector<int> fan{qx};
  for (int i = 0; i < L.k; ++i)
    if (i != anc) fan.push_back(L.data(i));
  fan.push_back(q0);
  for (std::size_t i = 0; i < fan.size(); ++i) {
    c.cx(qz, fan[i]);
    if (i == 1) c.cx(qz, f);
  }
  c.cx(q0, f);
  int bf = c.new_bit();
  c.measure(f, bf);
  c.reset(f);
  c.checks.push_back({"reencode_flag", {bf}});
  c.pauli(qz, 'X');
  c.pauli(q0, 'X');
  return c;
}

// measure every code wire; the last step's success is anc xor qZ
struct Readout {
  std::vector<int> bits;  // per code wire
};

inline Readout append_final_readout(Circuit& c, const IcebergLayout& L, int anc = 0) {
  Readout r;
  for (int w : L.code_wires()) {
    int b = c.new_bit();
    c.measure(w, b);
    r.bits.push_back(b);
  }
  c.checks.push_back({"readout_parity", r.bits});
  c.steps.push_back({{r.bits[L.data(anc)], r.bits[L.qz()]}});
  return r;
}

struct Decoded {
  bool discard = false;
  std::uint64_t logical = 0;
};

// bits: one per code wire, wire order
inline Decoded final_readout_decode(const std::vector<int>& bits, const IcebergLayout& L) {
  if (static_cast<int>(bits.size()) != L.n_code()) throw std::invalid_argument("final_readout_decode: need k+2 bits");
  Decoded d;
  int par = 0;
  for (int b : bits) par ^= b;
  if (par) {
    d.discard = true;
    return d;
  }
  int z = bits[L.qz()];
  for (int i = 0; i < L.k; ++i)
    if (bits[L.data(i)] ^ z) d.logical |= std::uint64_t{1} << i;
  return d;
}

// frame search effort for the encoded off-diagonal blocks
inline constexpr int default_frame_beam = 30;

struct CompileOptions {
  int frame_beam = default_frame_beam;
  std::set<int> frame_blocks;
  std::set<int> syndrome_after;  // append a syndrome check after each run of these block ids
};

inline std::size_t compile_logical(const Circuit& logical, Circuit& out, const IcebergLayout& L,
                                   const CompileOptions& opt = {}) {
  if (logical.n_wires != L.k) throw std::invalid_argument("compile_logical: logical width != k");
  if (out.n_wires != L.n_wires()) throw std::invalid_argument("compile_logical: output width != layout");
  synth::WalkOptions w;
  auto gates = synth::same_letter_gates(L.n_wires(), L.code_wires());
  w.frame.gates = gates;
  w.frame.beam = opt.frame_beam;
  w.plain.gates = gates;
  w.plain.beam = 1;
  w.plain.max_ops = 0;
  w.frame_blocks = opt.frame_blocks;
  if (!opt.syndrome_after.empty())
    w.after_block = [&](Circuit& c, int block) {
      if (opt.syndrome_after.count(block)) c.append(syndrome_circuit(L));
    };
  return synth::compile_rotations(logical, out, [&](const PauliString& p) { return representatives(p, L); }, w);
}

// encode |0..0>_L and compile a logical unitary circuit after it
inline Circuit encode_and_compile(const Circuit& logical, const IcebergLayout& L, const CompileOptions& opt = {}) {
  Circuit c = encode_zero_circuit(L);
  compile_logical(logical, c, L, opt);
  return c;
}

}  // namespace icepite::iceberg
