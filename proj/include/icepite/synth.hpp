#pragma once

// Pauli-rotation block compiler. A block of rotations exp(-i theta/2 R_t) is emitted
// inside a stack of Clifford frames g = exp(i pi/4 A) (A a two-qubit Pauli from a
// fixed gate set); each rotation costs 2w-3 two-qubit gates at its conjugated weight w.
// A beam search over push/pop sequences picks the frames.

#include "circuit.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <vector>

namespace icepite::synth {

// one rotation exp(-i angle/2 R); reps are interchangeable images of R (e.g. stabilizer multiples)
struct Term {
  std::vector<PhasedPauli> reps;
  double angle = 0.0;
};

struct Options {
  int beam = 1;
  int max_stack = 4;
  int max_ops = 2;  // push/pop actions before each term
  std::vector<PauliString> gates;
};

// XX, YY, ZZ on every wire pair: commute with X...X and Z...Z
inline std::vector<PauliString> same_letter_gates(int n, const std::vector<int>& wires) {
  std::vector<PauliString> g;
  for (std::size_t a = 0; a < wires.size(); ++a)
    for (std::size_t b = a + 1; b < wires.size(); ++b)
      for (char l : {'X', 'Y', 'Z'}) {
        PauliString p(0, 0, n);
        p.set(wires[a], l);
        p.set(wires[b], l);
        g.push_back(p);
      }
  return g;
}

inline std::vector<PauliString> all_pair_gates(int n, const std::vector<int>& wires) {
  std::vector<PauliString> g;
  for (std::size_t a = 0; a < wires.size(); ++a)
    for (std::size_t b = a + 1; b < wires.size(); ++b)
      for (char la : {'X', 'Y', 'Z'})
        for (char lb : {'X', 'Y', 'Z'}) {
          PauliString p(0, 0, n);
          p.set(wires[a], la);
          p.set(wires[b], lb);
          g.push_back(p);
        }
  return g;
}

inline int ladder_cost(int w) { return w <= 1 ? 0 : 2 * w - 3; }

// angle is a multiple of pi: identity or a product of single-qubit Paulis
inline bool is_free_angle(double a) {
  double k = a / pi;
  return std::abs(k - std::round(k)) < 1e-12;
}

namespace detail {

inline PhasedPauli in_frame(PhasedPauli r, const std::vector<int>& stack, const std::vector<PauliString>& gates) {
  for (int g : stack) r = conj_clifford(r, gates[g], +1);
  return r;
}

inline int term_cost(const Term& t, const std::vector<int>& stack, const std::vector<PauliString>& gates,
                     int* best_rep = nullptr) {
  int best = 1 << 30, arg = 0;
  for (std::size_t i = 0; i < t.reps.size(); ++i) {
    int c = ladder_cost(in_frame(t.reps[i], stack, gates).p.weight());
    if (c < best) best = c, arg = static_cast<int>(i);
  }
  if (best_rep) *best_rep = arg;
  return is_free_angle(t.angle) ? 0 : best;
}

struct Action {
  bool push;
  int gate;
};

struct Node {
  std::vector<int> stack;
  int cost = 0;
  int parent = -1;
  std::vector<Action> acts;
};

}  // namespace detail

// emit exp(-i angle/2 r) using a ladder of frame gates from the set
inline void emit_rotation(Circuit& out, const PhasedPauli& r, double angle, const std::vector<PauliString>& gates,
                          Tag tag) {
  const PauliString& p = r.p;
  if (p.is_identity()) return;
  if (is_free_angle(angle)) {
    long k = std::lround(angle / pi);
    if (k % 2 == 0) return;
    for (int q = 0; q < p.n; ++q)
      if (p.letter(q) != 'I') out.pauli(q, p.letter(q), tag);
    return;
  }
  int w = p.weight();
  if (w <= 2) {
    out.rot(p, r.sign() * angle, tag);
    return;
  }
  for (auto& a : gates) {
    if (a.commutes(p)) continue;
    PhasedPauli c = conj_clifford(r, a, +1);
    if (c.p.weight() != w - 1) continue;
    out.rot(a, -pi / 2, tag);
    emit_rotation(out, c, angle, gates, tag);
    out.rot(a, pi / 2, tag);
    return;
  }
  throw std::runtime_error("emit_rotation: no weight-reducing frame gate for " + p.str());
}

struct Plan {
  std::vector<std::vector<detail::Action>> acts;  // before each term
  std::vector<int> reps;
  int cost = 0;
};

inline Plan plan(const std::vector<Term>& terms, const Options& opt) {
  using detail::Action;
  using detail::Node;
  const auto& gates = opt.gates;
  int ng = static_cast<int>(gates.size());
  std::vector<std::vector<Node>> layers(1);
  layers[0].push_back(Node{});
  for (const auto& t : terms) {
    if (t.reps.empty()) throw std::invalid_argument("synth::plan: term without representatives");
    std::map<std::vector<int>, Node> cand;
    const auto& prev = layers.back();
    for (int pi_ = 0; pi_ < static_cast<int>(prev.size()); ++pi_) {
      // depth-first over action sequences of length <= max_ops
      std::vector<Action> seq;
      std::vector<int> stack = prev[pi_].stack;
      auto visit = [&](auto&& self, int depth) -> void {
        int c = prev[pi_].cost + static_cast<int>(seq.size()) + detail::term_cost(t, stack, gates);
        auto it = cand.find(stack);
        if (it == cand.end() || c < it->second.cost) cand[stack] = Node{stack, c, pi_, seq};
        if (depth == opt.max_ops) return;
        if (!stack.empty() && (seq.empty() || seq.back().push == false)) {
          int top = stack.back();
          stack.pop_back();
          seq.push_back({false, top});
          self(self, depth + 1);
          seq.pop_back();
          stack.push_back(top);
        }
        if (static_cast<int>(stack.size()) < opt.max_stack) {
          for (int g = 0; g < ng; ++g) {
            if (!stack.empty() && stack.back() == g) continue;
            if (!seq.empty() && !seq.back().push && seq.back().gate == g) continue;
            stack.push_back(g);
            seq.push_back({true, g});
            self(self, depth + 1);
            seq.pop_back();
            stack.pop_back();
          }
        }
      };
      visit(visit, 0);
    }
    std::vector<Node> next;
    next.reserve(cand.size());
    for (auto& [k, v] : cand) next.push_back(std::move(v));
    std::stable_sort(next.begin(), next.end(), [](const Node& a, const Node& b) {
      return a.cost + a.stack.size() < b.cost + b.stack.size();
    });
    if (static_cast<int>(next.size()) > opt.beam) next.resize(opt.beam);
    layers.push_back(std::move(next));
  }
  const auto& last = layers.back();
  int best = 0;
  for (int i = 1; i < static_cast<int>(last.size()); ++i)
    if (last[i].cost + last[i].stack.size() < last[best].cost + last[best].stack.size()) best = i;
  Plan pl;
  pl.cost = last[best].cost + static_cast<int>(last[best].stack.size());
  pl.acts.resize(terms.size());
  pl.reps.resize(terms.size());
  int idx = best;
  for (int l = static_cast<int>(terms.size()); l >= 1; --l) {
    const Node& nd = layers[l][idx];
    pl.acts[l - 1] = nd.acts;
    detail::term_cost(terms[l - 1], nd.stack, gates, &pl.reps[l - 1]);
    idx = nd.parent;
  }
  return pl;
}

// plans depend only on the strings, free-angle flags and options, not on the angles
inline Plan cached_plan(const std::vector<Term>& terms, const Options& opt) {
  static std::mutex mu;
  static std::map<std::vector<std::uint64_t>, Plan> cache;
  std::vector<std::uint64_t> key{static_cast<std::uint64_t>(opt.beam), static_cast<std::uint64_t>(opt.max_stack),
                                 static_cast<std::uint64_t>(opt.max_ops)};
  for (auto& g : opt.gates) key.insert(key.end(), {g.x, g.z, static_cast<std::uint64_t>(g.n)});
  for (auto& t : terms) {
    key.push_back(is_free_angle(t.angle) ? 1 : 0);
    for (auto& r : t.reps) key.insert(key.end(), {static_cast<std::uint64_t>(r.k), r.p.x, r.p.z, static_cast<std::uint64_t>(r.p.n)});
    key.push_back(~std::uint64_t{0});
  }
  {
    std::lock_guard<std::mutex> lk(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  Plan pl = plan(terms, opt);
  std::lock_guard<std::mutex> lk(mu);
  cache.emplace(std::move(key), pl);
  return pl;
}

// compile a block of rotations into out; returns the number of two-qubit gates emitted
inline std::size_t compile_block(Circuit& out, const std::vector<Term>& terms, const Options& opt,
                                 Tag tag = Tag::Physical) {
  std::size_t before = out.counts().two_qubit;
  Plan pl = cached_plan(terms, opt);
  std::vector<int> stack;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    for (auto& a : pl.acts[i]) {
      if (a.push) {
        out.rot(opt.gates[a.gate], -pi / 2, tag);
        stack.push_back(a.gate);
      } else {
        out.rot(opt.gates[stack.back()], pi / 2, tag);
        stack.pop_back();
      }
    }
    PhasedPauli r = detail::in_frame(terms[i].reps[pl.reps[i]], stack, opt.gates);
    emit_rotation(out, r, terms[i].angle, opt.gates, tag);
  }
  while (!stack.empty()) {
    out.rot(opt.gates[stack.back()], pi / 2, tag);
    stack.pop_back();
  }
  return out.counts().two_qubit - before;
}

}  // namespace icepite::synth

namespace icepite::synth {

using RepFn = std::function<std::vector<PhasedPauli>(const PauliString&)>;

struct WalkOptions {
  Options frame;                // used for blocks listed in frame_blocks
  std::set<int> frame_blocks;
  Options plain;                // everything else (beam 1, no free actions)
  std::function<void(Circuit&, int)> after_block;  // called once a block id run ends
  bool pass_nonunitary = false; // copy measure/reset/condx ops unchanged
};

// compile the Rot/Pauli ops of a logical circuit into out via reps; returns two-qubit gates emitted
inline std::size_t compile_rotations(const Circuit& logical, Circuit& out, const RepFn& reps, const WalkOptions& w) {
  std::size_t before = out.counts().two_qubit;
  int bit_off = out.n_bits;
  out.n_bits += logical.n_bits;
  std::size_t i = 0;
  const auto& ops = logical.ops;
  while (i < ops.size()) {
    const Op& o = ops[i];
    if (o.kind == OpKind::Rot) {
      std::size_t j = i;
      std::vector<Term> terms;
      while (j < ops.size() && ops[j].kind == OpKind::Rot && (j == i || (o.block >= 0 && ops[j].block == o.block))) {
        terms.push_back(Term{reps(ops[j].string), ops[j].angle});
        ++j;
      }
      const Options& opt = o.block >= 0 && w.frame_blocks.count(o.block) ? w.frame : w.plain;
      compile_block(out, terms, opt, Tag::Physical);
      if (w.after_block && o.block >= 0) w.after_block(out, o.block);
      i = j;
      continue;
    }
    if (o.kind == OpKind::Pauli) {
      auto r = reps(PauliString::single(logical.n_wires, o.w0, o.letter));
      for (int q = 0; q < r[0].p.n; ++q)
        if (r[0].p.letter(q) != 'I') out.pauli(q, r[0].p.letter(q), Tag::Physical);
    } else if (w.pass_nonunitary && o.kind != OpKind::H && o.kind != OpKind::CX) {
      Op c = o;
      if (c.bit >= 0) c.bit += bit_off;
      out.ops.push_back(c);
    } else {
      throw std::invalid_argument("compile_rotations: unsupported logical op");
    }
    ++i;
  }
  for (auto s : logical.steps) {
    for (auto& b : s.bits) b += bit_off;
    out.steps.push_back(s);
  }
  for (auto c : logical.checks) {
    for (auto& b : c.bits) b += bit_off;
    out.checks.push_back(c);
  }
  return out.counts().two_qubit - before;
}

}  // namespace icepite::synth
