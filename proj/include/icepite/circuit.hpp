#pragma once

#include "pauli.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

namespace icepite {

enum class OpKind { Rot, H, Pauli, CX, Measure, Reset, CondX };
enum class Tag { Logical, Physical, Syndrome };

// R_P(angle) = exp(-i angle P / 2)
struct Op {
  OpKind kind = OpKind::Rot;
  PauliString string;  // Rot
  double angle = 0.0;  // Rot
  int w0 = -1, w1 = -1;
  char letter = 'X';  // Pauli
  int bit = -1, value = 1;
  Tag tag = Tag::Logical;
  int block = -1;  // synthesis block id for consecutive Rot ops

  bool two_qubit() const {
    return kind == OpKind::CX || (kind == OpKind::Rot && string.weight() == 2);
  }
  std::vector<int> wires() const {
    std::vector<int> w;
    if (kind == OpKind::Rot) {
      for (int q = 0; q < string.n; ++q)
        if ((string.support() >> q) & 1) w.push_back(q);
    } else {
      w.push_back(w0);
      if (kind == OpKind::CX) w.push_back(w1);
    }
    return w;
  }
};

// fires when the XOR of the listed bits is 1
struct Check {
  std::string name;
  std::vector<int> bits;
};

// PITE step succeeds when the XOR of the listed bits is 0
struct StepMark {
  std::vector<int> bits;
};

struct GateCounts {
  std::size_t total = 0;
  std::size_t two_qubit = 0;
  std::size_t two_qubit_equiv = 0;  // multi-wire rotations counted as 2w-3
};

struct Circuit {
  int n_wires = 0;
  int n_bits = 0;
  std::vector<Op> ops;
  std::vector<Check> checks;
  std::vector<StepMark> steps;

  explicit Circuit(int n = 0) : n_wires(n) {}

  int new_bit() { return n_bits++; }

  Circuit& rot(const PauliString& p, double angle, Tag tag = Tag::Logical, int block = -1) {
    if (p.n != n_wires) throw std::invalid_argument("Circuit::rot: string width != n_wires");
    if (!std::isfinite(angle)) throw std::invalid_argument("Circuit::rot: non-finite angle");
    Op o;
    o.kind = OpKind::Rot;
    o.string = p;
    o.angle = angle;
    o.tag = tag;
    o.block = block;
    ops.push_back(o);
    return *this;
  }
  Circuit& rot1(int w, char axis, double angle, Tag tag = Tag::Logical, int block = -1) {
    return rot(PauliString::single(n_wires, check_wire(w), axis), angle, tag, block);
  }
  Circuit& h(int w, Tag tag = Tag::Physical) { return simple(OpKind::H, w, tag); }
  Circuit& pauli(int w, char l, Tag tag = Tag::Physical) {
    simple(OpKind::Pauli, w, tag);
    ops.back().letter = l;
    return *this;
  }
  Circuit& cx(int c, int t, Tag tag = Tag::Physical) {
    if (c == t) throw std::invalid_argument("Circuit::cx: control equals target");
    simple(OpKind::CX, c, tag);
    ops.back().w1 = check_wire(t);
    return *this;
  }
  Circuit& measure(int w, int bit, Tag tag = Tag::Physical) {
    if (bit < 0 || bit >= n_bits) throw std::invalid_argument("Circuit::measure: bit out of range");
    simple(OpKind::Measure, w, tag);
    ops.back().bit = bit;
    return *this;
  }
  Circuit& reset(int w, Tag tag = Tag::Physical) { return simple(OpKind::Reset, w, tag); }
  Circuit& cond_x(int w, int bit, int value, Tag tag = Tag::Physical) {
    if (bit < 0 || bit >= n_bits) throw std::invalid_argument("Circuit::cond_x: bit out of range");
    simple(OpKind::CondX, w, tag);
    ops.back().bit = bit;
    ops.back().value = value;
    return *this;
  }

  // append another circuit on the same wires, remapping its bits after ours
  void append(const Circuit& o) {
    if (o.n_wires != n_wires) throw std::invalid_argument("Circuit::append: wire count mismatch");
    int off = n_bits;
    for (auto op : o.ops) {
      if (op.bit >= 0) op.bit += off;
      ops.push_back(op);
    }
    for (auto c : o.checks) {
      for (auto& b : c.bits) b += off;
      checks.push_back(c);
    }
    for (auto s : o.steps) {
      for (auto& b : s.bits) b += off;
      steps.push_back(s);
    }
    n_bits += o.n_bits;
  }

  GateCounts counts() const {
    GateCounts g;
    for (auto& o : ops) {
      ++g.total;
      if (o.two_qubit()) ++g.two_qubit, ++g.two_qubit_equiv;
      else if (o.kind == OpKind::Rot && o.string.weight() > 2) g.two_qubit_equiv += 2 * o.string.weight() - 3;
    }
    return g;
  }

 private:
  int check_wire(int w) const {
    if (w < 0 || w >= n_wires) throw std::invalid_argument("Circuit: wire out of range");
    return w;
  }
  Circuit& simple(OpKind k, int w, Tag tag) {
    Op o;
    o.kind = k;
    o.w0 = check_wire(w);
    o.tag = tag;
    ops.push_back(o);
    return *this;
  }
};

inline std::size_t count_two_qubit_gates(const Circuit& c) { return c.counts().two_qubit; }

inline const char* tag_name(Tag t) {
  switch (t) {
    case Tag::Logical: return "logical";
    case Tag::Physical: return "physical";
    case Tag::Syndrome: return "syndrome";
  }
  return "?";
}

inline std::string serialize(const Circuit& c) {
  std::ostringstream os;
  char buf[64];
  os << "wires " << c.n_wires << "\nbits " << c.n_bits << '\n';
  for (auto& o : c.ops) {
    switch (o.kind) {
      case OpKind::Rot:
        std::snprintf(buf, sizeof buf, "%.10f", o.angle);
        os << "rot " << o.string.str() << ' ' << buf;
        break;
      case OpKind::H: os << "h " << o.w0; break;
      case OpKind::Pauli: os << static_cast<char>(std::tolower(o.letter)) << ' ' << o.w0; break;
      case OpKind::CX: os << "cx " << o.w0 << ' ' << o.w1; break;
      case OpKind::Measure: os << "measure " << o.w0 << " -> " << o.bit; break;
      case OpKind::Reset: os << "reset " << o.w0; break;
      case OpKind::CondX: os << "x " << o.w0 << " if c" << o.bit << "==" << o.value; break;
    }
    os << " @" << tag_name(o.tag) << '\n';
  }
  for (auto& ch : c.checks) {
    os << "check " << ch.name;
    for (int b : ch.bits) os << ' ' << b;
    os << '\n';
  }
  for (auto& s : c.steps) {
    os << "step";
    for (int b : s.bits) os << ' ' << b;
    os << '\n';
  }
  auto g = c.counts();
  os << "# ops " << g.total << " two_qubit " << g.two_qubit << " two_qubit_equiv " << g.two_qubit_equiv << '\n';
  return os.str();
}

inline Circuit deserialize(const std::string& text) {
  std::istringstream is(text);
  std::string line, kw;
  Circuit c;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ls >> kw;
    Tag tag = Tag::Logical;
    auto at = line.find(" @");
    if (at != std::string::npos) {
      std::string t = line.substr(at + 2);
      tag = t == "physical" ? Tag::Physical : t == "syndrome" ? Tag::Syndrome : Tag::Logical;
    }
    if (kw == "wires") {
      ls >> c.n_wires;
    } else if (kw == "bits") {
      ls >> c.n_bits;
    } else if (kw == "rot") {
      std::string s;
      double a;
      ls >> s >> a;
      c.rot(PauliString::parse(s), a, tag);
    } else if (kw == "h") {
      int w;
      ls >> w;
      c.h(w, tag);
    } else if (kw == "cx") {
      int a, b;
      ls >> a >> b;
      c.cx(a, b, tag);
    } else if (kw == "measure") {
      int w, b;
      std::string arrow;
      ls >> w >> arrow >> b;
      c.measure(w, b, tag);
    } else if (kw == "reset") {
      int w;
      ls >> w;
      c.reset(w, tag);
    } else if (kw == "x" || kw == "y" || kw == "z") {
      int w;
      ls >> w;
      std::string rest;
      ls >> rest;
      if (rest == "if") {
        std::string cond;
        ls >> cond;  // cB==V
        auto eq = cond.find("==");
        c.cond_x(w, std::stoi(cond.substr(1, eq - 1)), std::stoi(cond.substr(eq + 2)), tag);
      } else {
        c.pauli(w, static_cast<char>(std::toupper(kw[0])), tag);
      }
    } else if (kw == "check") {
      Check ch;
      ls >> ch.name;
      int b;
      while (ls >> b) ch.bits.push_back(b);
      c.checks.push_back(ch);
    } else if (kw == "step") {
      StepMark s;
      int b;
      while (ls >> b) s.bits.push_back(b);
      c.steps.push_back(s);
    } else {
      throw std::runtime_error("deserialize: unknown op '" + kw + "'");
    }
  }
  return c;
}

}  // namespace icepite
