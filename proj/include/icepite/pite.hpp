#pragma once

#include "circuit.hpp"
#include "qmap.hpp"

#include <string>
#include <vector>

namespace icepite::pite {

struct PiteConstants {
  double m0 = 0.8;
  double s1 = 0.0;
  double phi = 0.0;
  double theta0 = 0.0;
  int kappa = 1;
};

inline PiteConstants pite_constants(double m0) {
  if (!(m0 > 0.0 && m0 < 1.0)) throw std::invalid_argument("pite_constants: m0 must lie in (0, 1)");
  if (std::abs(m0 - 1.0 / std::sqrt(2.0)) < 1e-12) throw std::invalid_argument("pite_constants: m0 = 1/sqrt(2) is excluded");
  PiteConstants c;
  c.m0 = m0;
  double q = std::sqrt(1.0 - m0 * m0);
  c.s1 = m0 / q;
  c.phi = std::atan(c.s1);
  c.kappa = m0 > 1.0 / std::sqrt(2.0) ? 1 : -1;
  c.theta0 = c.kappa * std::acos((m0 + q) / std::sqrt(2.0));
  return c;
}

// sin(-(h - shift) dtau s1 + phi); with cosine, phi is replaced by pi/2
inline CMat approx_operator(const CMat& h, double dtau, double m0, double shift = 0.0, bool cosine = false) {
  auto c = pite_constants(m0);
  double ph = cosine ? pi / 2 : c.phi;
  return spectral_apply(h, [&](double e) { return std::sin(-(e - shift) * dtau * c.s1 + ph); });
}

enum class Mode { Ground, Excited };

inline Mode parse_mode(const std::string& s) {
  if (s == "ground") return Mode::Ground;
  if (s == "excited") return Mode::Excited;
  throw std::invalid_argument("unknown mode '" + s + "' (expected ground|excited)");
}
inline std::string mode_name(Mode m) { return m == Mode::Ground ? "ground" : "excited"; }

struct PiteSchedule {
  std::vector<double> dtau;
  std::vector<int> r;
  double energy_shift = 0.0;
  double m0 = 0.8;
  bool cosine = true;  // constant-shift cosine filter
};

inline constexpr double ground_dtau_start = 0.25;
inline constexpr double excited_dtau_start = 0.05;

// cosine-filter endpoint pi / (2 s1 gap)
inline double dtau_max(double gap, double m0) {
  if (gap < 1e-6) throw std::invalid_argument("make_schedule: degenerate target gap");
  return pi / (2.0 * pite_constants(m0).s1 * gap);
}

inline PiteSchedule make_schedule(Mode kind, const std::vector<double>& energies, int n_steps, double m0,
                                  std::vector<int> r = {}) {
  if (energies.size() < 3) throw std::invalid_argument("make_schedule: need at least 3 levels");
  if (n_steps < 1) throw std::invalid_argument("make_schedule: n_steps must be >= 1");
  PiteSchedule s;
  s.m0 = m0;
  double lo, hi;
  if (kind == Mode::Ground) {
    lo = ground_dtau_start;
    hi = dtau_max(energies[1] - energies[0], m0);
    s.energy_shift = energies[0];
    if (r.empty()) r = {1, 2, 3, 4};
  } else {
    lo = excited_dtau_start;
    hi = dtau_max(energies[2] - energies[1], m0);
    s.energy_shift = energies[1];
    if (r.empty()) r = {1, 1, 2, 3};
  }
  for (int k = 0; k < n_steps; ++k) {
    s.dtau.push_back(n_steps == 1 ? hi : lo + (hi - lo) * k / (n_steps - 1));
    s.r.push_back(r[std::min<std::size_t>(k, r.size() - 1)]);
  }
  return s;
}

// synthesis block ids carried on Rot ops
inline constexpr int block_lambda = 1;
inline constexpr int block_v1 = 2;
inline constexpr int block_v2 = 3;
inline constexpr int block_state_prep = 4;

inline void append_terms(Circuit& c, const std::vector<qmap::Term>& terms, double t, int block) {
  for (auto& term : terms) c.rot(term.p, 2.0 * term.c * t, Tag::Logical, block);
}

// second-order Trotter of exp(-i t (Lambda + V)), V = V1 then V2 per slice
inline Circuit crte_circuit(const qmap::CrteGenerator& gen, double t, int r, double shift = 0.0,
                            bool include_identity = true) {
  if (r < 1) throw std::invalid_argument("crte_circuit: r must be >= 1");
  Circuit c(gen.n_qubits);
  double id = gen.identity - shift;
  if (include_identity && id != 0.0) c.rot1(gen.ancilla_index, 'Z', 2.0 * id * t, Tag::Logical, block_lambda);
  auto lam = gen.lambda();
  double h = t / r;
  for (int j = 0; j < r; ++j) {
    if (j == 0) append_terms(c, lam, h / 2, block_lambda);
    append_terms(c, gen.v1, h, block_v1);
    append_terms(c, gen.v2, h, block_v2);
    append_terms(c, lam, j == r - 1 ? h / 2 : h, block_lambda);
  }
  return c;
}

// U1 on the fresh ancilla: R_X(-pi/2)|0> equals R_Z(pi/2) R_Y(pi/2) R_Z(-pi)|0> up to phase
inline void append_u1(Circuit& c, int anc) { c.rot1(anc, 'X', -pi / 2); }

// U2 = R_Z(pi/2) R_Y(pi/2) R_Z(pi - 2 theta0 + extra) written as R_Z(pi) R_X(pi/2) R_Z(pi/2 - 2 theta0 + extra)
inline void append_u2(Circuit& c, int anc, const PiteConstants& k, double extra_z) {
  c.rot1(anc, 'Z', pi / 2 - 2.0 * k.theta0 + extra_z);
  c.rot1(anc, 'X', pi / 2);
  c.rot1(anc, 'Z', pi);
}

// unitary part of one step; ancilla starts in |0>, success = ancilla measured 0
inline Circuit pite_step_circuit(const qmap::CrteGenerator& gen, const PiteConstants& k, double dtau, int r,
                                 double shift = 0.0, bool cosine = false) {
  Circuit c(gen.n_qubits);
  int anc = gen.ancilla_index;
  double t = dtau * k.s1;
  append_u1(c, anc);
  Circuit body = crte_circuit(gen, t, r, shift, false);
  c.ops.insert(c.ops.end(), body.ops.begin(), body.ops.end());
  double extra = 2.0 * (gen.identity - shift) * t;
  if (cosine) extra -= pi - 2.0 * k.phi;
  append_u2(c, anc, k, extra);
  return c;
}

// measure the ancilla into a fresh bit, mark the step, reset the ancilla
inline void append_ancilla_readout(Circuit& c, int anc, bool reset = true) {
  int b = c.new_bit();
  c.measure(anc, b, Tag::Logical);
  c.steps.push_back({{b}});
  if (reset) c.reset(anc, Tag::Logical);
}

}  // namespace icepite::pite
