#pragma once

#include "circuit.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <random>
#include <thread>
#include <vector>

namespace icepite::sim {

// wire 0 = least significant amplitude index
struct State {
  int n = 0;
  CVec amp;

  explicit State(int n_ = 0) : n(n_), amp(CVec::Zero(std::size_t{1} << n_)) { amp(0) = 1.0; }

  double norm() const { return amp.norm(); }

  void apply_pauli(const PauliString& p) {
    cplx ph = ipow(popcount(p.x & p.z));
    std::size_t dim = amp.size();
    if (p.x == 0) {
      for (std::size_t i = 0; i < dim; ++i)
        if (popcount(i & p.z) & 1) amp(i) = -amp(i);
      if (ph != cplx(1.0)) amp *= ph;
      return;
    }
    for (std::size_t i = 0; i < dim; ++i) {
      std::size_t j = i ^ p.x;
      if (j < i) continue;
      // P|i> = ph (-1)^{i.z} |j>
      cplx ai = amp(i), aj = amp(j);
      double si = (popcount(i & p.z) & 1) ? -1.0 : 1.0;
      double sj = (popcount(j & p.z) & 1) ? -1.0 : 1.0;
      amp(j) = ph * si * ai;
      amp(i) = ph * sj * aj;
    }
  }

  // exp(-i theta/2 P)
  void apply_rot(const PauliString& p, double theta) {
    double c = std::cos(theta / 2), s = std::sin(theta / 2);
    cplx ph = ipow(popcount(p.x & p.z));
    std::size_t dim = amp.size();
    const cplx mi(0.0, -1.0);
    if (p.x == 0) {
      cplx e0 = c + mi * s * ph, e1 = c - mi * s * ph;
      for (std::size_t i = 0; i < dim; ++i) amp(i) *= (popcount(i & p.z) & 1) ? e1 : e0;
      return;
    }
    for (std::size_t i = 0; i < dim; ++i) {
      std::size_t j = i ^ p.x;
      if (j < i) continue;
      cplx ai = amp(i), aj = amp(j);
      double si = (popcount(i & p.z) & 1) ? -1.0 : 1.0;
      double sj = (popcount(j & p.z) & 1) ? -1.0 : 1.0;
      amp(i) = c * ai + mi * s * ph * sj * aj;
      amp(j) = c * aj + mi * s * ph * si * ai;
    }
  }

  void apply_h(int w) {
    std::size_t m = std::size_t{1} << w;
    const double r = 1.0 / std::sqrt(2.0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(amp.size()); ++i) {
      if (i & m) continue;
      cplx a = amp(i), b = amp(i | m);
      amp(i) = r * (a + b);
      amp(i | m) = r * (a - b);
    }
  }

  void apply_cx(int c, int t) {
    std::size_t mc = std::size_t{1} << c, mt = std::size_t{1} << t;
    for (std::size_t i = 0; i < static_cast<std::size_t>(amp.size()); ++i)
      if ((i & mc) && !(i & mt)) std::swap(amp(i), amp(i | mt));
  }

  double prob_zero(int w) const {
    std::size_t m = std::size_t{1} << w;
    double p = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(amp.size()); ++i)
      if (!(i & m)) p += std::norm(amp(i));
    return p;
  }

  double prob_one(int w) const {
    std::size_t m = std::size_t{1} << w;
    double p = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(amp.size()); ++i)
      if (i & m) p += std::norm(amp(i));
    return p;
  }

  // project wire onto outcome and renormalize; returns the outcome probability
  double project(int w, int outcome) {
    std::size_t m = std::size_t{1} << w;
    double p = 0.0;
    for (std::size_t i = 0; i < static_cast<std::size_t>(amp.size()); ++i) {
      bool one = (i & m) != 0;
      if (one != (outcome == 1)) amp(i) = 0.0;
      else p += std::norm(amp(i));
    }
    if (p <= 0.0) throw std::runtime_error("State::project: zero-probability outcome");
    amp /= std::sqrt(p);
    return p;
  }

  void flip(int w) { apply_pauli(PauliString::single(n, w, 'X')); }
};

struct NoiseModel {
  double p2 = 0.0;
  double spam = 0.0;

  void validate() const {
    if (!(p2 >= 0.0 && p2 < 1.0)) throw std::invalid_argument("NoiseModel: p2 must lie in [0, 1)");
    if (!(spam >= 0.0 && spam < 1.0)) throw std::invalid_argument("NoiseModel: spam must lie in [0, 1)");
  }
};

inline constexpr double default_p2 = 1.6e-3;
inline constexpr double hardware_spam = 3.0e-3;

struct ShotRecord {
  std::uint64_t shot = 0;
  std::uint64_t seed = 0;
  std::vector<int> bits;
  std::vector<int> step_success;
  bool discarded = false;
  int first_failed_check = -1;
  std::size_t n_faults = 0;
};

// evaluate checks/steps against the classical record
inline void classify(const Circuit& c, ShotRecord& rec) {
  rec.step_success.clear();
  for (auto& s : c.steps) {
    int x = 0;
    for (int b : s.bits) x ^= rec.bits[b];
    rec.step_success.push_back(x == 0);
  }
  rec.discarded = false;
  rec.first_failed_check = -1;
  for (std::size_t i = 0; i < c.checks.size(); ++i) {
    int x = 0;
    for (int b : c.checks[i].bits) x ^= rec.bits[b];
    if (x) {
      rec.discarded = true;
      rec.first_failed_check = static_cast<int>(i);
      break;
    }
  }
}

// all 15 nontrivial two-qubit Paulis
inline PauliString two_qubit_pauli(int n, int a, int b, int k) {
  static const char l[4] = {'I', 'X', 'Y', 'Z'};
  PauliString p(0, 0, n);
  p.set(a, l[(k + 1) % 4]);
  p.set(b, l[(k + 1) / 4]);
  return p;
}

// per-op hook used by fault-injection tests: called after op i is applied
using OpHook = std::function<void(std::size_t, State&)>;

inline void apply_unitary_op(State& st, const Op& o) {
  switch (o.kind) {
    case OpKind::Rot: st.apply_rot(o.string, o.angle); break;
    case OpKind::H: st.apply_h(o.w0); break;
    case OpKind::Pauli: st.apply_pauli(PauliString::single(st.n, o.w0, o.letter)); break;
    case OpKind::CX: st.apply_cx(o.w0, o.w1); break;
    default: throw std::logic_error("apply_unitary_op: non-unitary op");
  }
}

inline ShotRecord run_shot(const Circuit& c, const NoiseModel& noise, std::uint64_t seed, std::uint64_t shot = 0,
                           State* final_state = nullptr, const OpHook& hook = nullptr) {
  noise.validate();
  std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                   static_cast<std::uint32_t>(shot), static_cast<std::uint32_t>(shot >> 32)};
  std::mt19937_64 rng(sq);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  State st(c.n_wires);
  ShotRecord rec;
  rec.seed = seed;
  rec.shot = shot;
  rec.bits.assign(c.n_bits, 0);
  for (std::size_t i = 0; i < c.ops.size(); ++i) {
    const Op& o = c.ops[i];
    switch (o.kind) {
      case OpKind::Measure: {
        int out = u(rng) < st.prob_one(o.w0) ? 1 : 0;
        st.project(o.w0, out);
        if (noise.spam > 0.0 && u(rng) < noise.spam) out ^= 1;
        rec.bits[o.bit] = out;
        break;
      }
      case OpKind::Reset: {
        int out = u(rng) < st.prob_one(o.w0) ? 1 : 0;
        st.project(o.w0, out);
        if (out) st.flip(o.w0);
        break;
      }
      case OpKind::CondX:
        if (rec.bits[o.bit] == o.value) st.flip(o.w0);
        break;
      default:
        apply_unitary_op(st, o);
        if (noise.p2 > 0.0 && o.two_qubit() && u(rng) < noise.p2) {
          auto w = o.wires();
          int k = static_cast<int>(u(rng) * 15.0);
          st.apply_pauli(two_qubit_pauli(st.n, w[0], w[1], std::min(k, 14)));
          ++rec.n_faults;
        }
    }
    if (hook) hook(i, st);
  }
  classify(c, rec);
  if (final_state) *final_state = std::move(st);
  return rec;
}

// independent shots, deterministic regardless of thread count
inline std::vector<ShotRecord> run_shots(const Circuit& c, const NoiseModel& noise, std::uint64_t seed,
                                         std::size_t shots, unsigned threads = 0) {
  std::vector<ShotRecord> out(shots);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(shots, 1)));
  auto work = [&](unsigned tid) {
    for (std::size_t s = tid; s < shots; s += threads) out[s] = run_shot(c, noise, seed, s);
  };
  if (threads <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& t : pool) t.join();
  }
  return out;
}

struct Branch {
  double prob = 1.0;
  std::vector<int> bits;
  State state;
};

struct BranchOptions {
  bool success_only = false;  // prune failed steps and fired checks as soon as their bits are known
  double prune = 1e-15;
  std::size_t max_branches = 1 << 16;
};

// exact enumeration of mid-circuit measurement outcomes
inline std::vector<Branch> run_noiseless_branches(const Circuit& c, const BranchOptions& opt = {}) {
  // bit -> marks completed once that bit is written
  std::vector<int> last_write(c.n_bits, -1);
  for (std::size_t i = 0; i < c.ops.size(); ++i)
    if (c.ops[i].kind == OpKind::Measure) last_write[c.ops[i].bit] = static_cast<int>(i);
  std::vector<std::vector<const std::vector<int>*>> done_at(c.ops.size());
  auto reg = [&](const std::vector<int>& bits) {
    int at = -1;
    for (int b : bits) at = std::max(at, last_write[b]);
    if (at >= 0) done_at[at].push_back(&bits);
  };
  for (auto& s : c.steps) reg(s.bits);
  for (auto& ch : c.checks) reg(ch.bits);

  std::vector<Branch> live;
  live.push_back(Branch{1.0, std::vector<int>(c.n_bits, 0), State(c.n_wires)});
  for (std::size_t i = 0; i < c.ops.size(); ++i) {
    const Op& o = c.ops[i];
    if (o.kind == OpKind::Measure || o.kind == OpKind::Reset) {
      std::vector<Branch> next;
      for (auto& br : live) {
        double p1 = br.state.prob_one(o.w0), p0 = br.state.prob_zero(o.w0);
        for (int out : {0, 1}) {
          double p = out ? p1 : p0;
          if (br.prob * p < opt.prune) continue;
          Branch nb{br.prob * p, br.bits, br.state};
          nb.state.project(o.w0, out);
          if (o.kind == OpKind::Reset) {
            if (out) nb.state.flip(o.w0);
          } else {
            nb.bits[o.bit] = out;
            bool bad = false;
            if (opt.success_only)
              for (auto* bits : done_at[i]) {
                int x = 0;
                for (int b : *bits) x ^= nb.bits[b];
                bad = bad || x;
              }
            if (bad) continue;
          }
          next.push_back(std::move(nb));
        }
      }
      live = std::move(next);
      if (live.size() > opt.max_branches) throw std::runtime_error("run_noiseless_branches: branch explosion");
    } else if (o.kind == OpKind::CondX) {
      for (auto& br : live)
        if (br.bits[o.bit] == o.value) br.state.flip(o.w0);
    } else {
      for (auto& br : live) apply_unitary_op(br.state, o);
    }
  }
  return live;
}

inline double discard_model(std::size_t n2q, double p2) { return 1.0 - std::pow(1.0 - p2, static_cast<double>(n2q)); }

struct MseStats {
  double mean = 0.0, bias = 0.0, var = 0.0, mse = 0.0;
  std::size_t n = 0;
};

inline MseStats mse_stats(const std::vector<double>& samples, double truth) {
  if (samples.empty()) throw std::invalid_argument("mse_stats: no retained shots");
  MseStats m;
  m.n = samples.size();
  double s1 = 0.0, s2 = 0.0, c1 = 0.0, c2 = 0.0;  // compensated sums
  for (double x : samples) {
    double y = x - c1, t = s1 + y;
    c1 = (t - s1) - y;
    s1 = t;
    y = x * x - c2;
    t = s2 + y;
    c2 = (t - s2) - y;
    s2 = t;
  }
  m.mean = s1 / m.n;
  m.bias = m.mean - truth;
  m.var = std::max(0.0, s2 / m.n - m.mean * m.mean) / m.n;
  m.mse = m.bias * m.bias + m.var;
  return m;
}

}  // namespace icepite::sim
