#pragma once

#include "effham.hpp"
#include "iceberg.hpp"
#include "pite.hpp"
#include "qmap.hpp"
#include "sim.hpp"
#include "synth.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace icepite::harness {

inline constexpr int unencoded_frame_beam = 10;

inline double default_threshold(const std::string& system) {
  static const std::map<std::string, double> t{{"zrv", 0.01}, {"hfv", 0.01}, {"tiv", 0.005}, {"nv", 0.07}};
  auto it = t.find(system);
  if (it == t.end()) throw std::invalid_argument("unknown system '" + system + "' (expected zrv|hfv|tiv|nv)");
  return it->second;
}

struct ExperimentConfig {
  std::string system = "zrv";
  std::string functional = "hse";
  pite::Mode mode = pite::Mode::Ground;
  int n_steps = 4;
  double m0 = 0.8;
  std::size_t shots = 1000;
  double p2 = sim::default_p2;
  double spam = 0.0;
  bool encoded = true;
  std::optional<double> threshold;
  std::uint64_t seed = 20240901;
  std::string output_dir = "icepite_out";
  std::string data_dir;
  int frame_beam = iceberg::default_frame_beam;
  int unencoded_beam = unencoded_frame_beam;
  unsigned threads = 0;

  double effective_threshold(const effham::Calibration& c) const {
    if (threshold) return *threshold;
    if (c.threshold) return *c.threshold;
    return default_threshold(system);
  }
};

inline std::string default_data_dir() {
  if (const char* e = std::getenv("ICEPITE_DATA_DIR")) return e;
#ifdef ICEPITE_DATA_DIR_DEFAULT
  return ICEPITE_DATA_DIR_DEFAULT;
#else
  return "data";
#endif
}

inline bool parse_bool(const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw std::invalid_argument("bad boolean '" + v + "'");
}

// one key=value assignment
inline void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& v) {
  if (key == "system") c.system = v;
  else if (key == "functional") c.functional = v;
  else if (key == "mode") c.mode = pite::parse_mode(v);
  else if (key == "n_steps") c.n_steps = std::stoi(v);
  else if (key == "m0") c.m0 = std::stod(v);
  else if (key == "shots") c.shots = std::stoull(v);
  else if (key == "p2") c.p2 = std::stod(v);
  else if (key == "spam") c.spam = std::stod(v);
  else if (key == "encoded") c.encoded = parse_bool(v);
  else if (key == "threshold") c.threshold = std::stod(v);
  else if (key == "seed") c.seed = std::stoull(v);
  else if (key == "output_dir") c.output_dir = v;
  else if (key == "data_dir") c.data_dir = v;
  else if (key == "frame_beam") c.frame_beam = std::stoi(v);
  else if (key == "unencoded_beam") c.unencoded_beam = std::stoi(v);
  else if (key == "threads") c.threads = static_cast<unsigned>(std::stoul(v));
  else throw std::invalid_argument("unknown config key '" + key + "'");
}

inline void parse_config(ExperimentConfig& c, const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      auto a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    set_config_value(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

inline void validate(const ExperimentConfig& c) {
  default_threshold(c.system);
  if (c.functional != "hse" && c.functional != "pbe") throw std::invalid_argument("functional must be hse|pbe");
  if (c.n_steps < 1) throw std::invalid_argument("n_steps must be >= 1");
  pite::pite_constants(c.m0);
  sim::NoiseModel{c.p2, c.spam}.validate();
  if (c.frame_beam < 1 || c.unencoded_beam < 1) throw std::invalid_argument("beam widths must be >= 1");
}

// ---- problem: Hamiltonian pipeline and sector states

struct Problem {
  std::string system, functional;
  effham::SystemData data;
  effham::SecondQuantizedHamiltonian h_ks;
  effham::FciResult fci_all;  // N = 4, all Sz
  effham::FciResult fci_sz0;
  effham::ExcitationTable table;
  PauliSum mapped;
  qmap::TruncationReport trunc;
  PauliString symmetry;
  qmap::QubitEncoding enc;
  PauliSum tapered;
  qmap::CrteGenerator gen;
  std::vector<double> sector_energies;  // N = 4 eigenstates of the tapered sum
  std::vector<Vec> sector_states;
  double threshold = 0.0;
};

inline std::string data_file(const std::string& dir, const std::string& system, const std::string& functional) {
  return (std::filesystem::path(dir) / (system + "_" + functional + ".dat")).string();
}

// closed-shell determinant filling the lowest orbitals with both spins
inline std::uint64_t closed_shell_det(int n_orb, int n_pairs) {
  std::uint64_t d = 0;
  for (int i = 0; i < n_pairs; ++i) d |= (1ull << effham::mode(n_orb, i, 0)) | (1ull << effham::mode(n_orb, i, 1));
  return d;
}

inline Problem build_problem(const std::string& system, const std::string& functional, const effham::SystemData& data,
                             std::optional<double> threshold = std::nullopt) {
  Problem p;
  p.system = system;
  p.functional = functional;
  p.data = data;
  int n = data.params.n_orb;
  const int n_el = 4;
  if (n != 3) throw std::invalid_argument("build_problem: the PITE pipeline expects 3 orbitals");
  p.threshold = threshold ? *threshold : data.calib.threshold ? *data.calib.threshold : default_threshold(system);
  auto hw = effham::build_wannier_hamiltonian(data.params);
  p.h_ks = effham::to_ks_basis(hw, effham::KsGauge{data.calib.gauge_deg * pi / 180.0});
  p.fci_all = effham::fci_diagonalize(p.h_ks, n_el);
  p.fci_sz0 = effham::fci_diagonalize(p.h_ks, n_el, 0.0);
  p.table = effham::excitation_table(p.fci_all);
  p.mapped = qmap::parity_map(p.h_ks, n_el / 2, n_el / 2);
  p.trunc = qmap::truncate(p.mapped, p.threshold);
  auto syms = qmap::find_z2_symmetries(p.trunc.kept);
  if (syms.empty()) throw std::runtime_error("build_problem: no Z2 symmetry after truncation");
  p.symmetry = syms.front();
  qmap::QubitEncoding pre{qmap::make_parity_reduction(n, n_el / 2, n_el / 2), std::nullopt};
  auto cs = pre.encode(closed_shell_det(n, n_el / 2));
  if (!cs) throw std::logic_error("build_problem: closed-shell determinant outside the parity sector");
  int sign = (popcount(cs->first & p.symmetry.z) & 1) ? -1 : 1;
  p.enc = qmap::QubitEncoding{pre.red, qmap::make_taper(p.symmetry, sign)};
  p.tapered = qmap::taper(p.trunc.kept, *p.enc.tap);
  p.gen = qmap::build_crte_generator(p.tapered);

  Mat h = p.tapered.matrix().real();
  auto [e, v] = eigh(h);
  std::vector<int> cols;
  for (int k = 0; k < e.size(); ++k) {
    double w = 0;
    for (int i = 0; i < v.rows(); ++i)
      if (p.enc.electrons(i) == n_el) w += v(i, k) * v(i, k);
    if (w > 0.5) cols.push_back(k);
  }
  for (std::size_t j = 0; j < cols.size(); ++j) {
    Vec s = v.col(cols[j]);
    for (Eigen::Index i = s.size() - 1; i >= 0; --i)
      if (std::abs(s[i]) > 1e-8) {
        if (s[i] < 0) s = -s;
        break;
      }
    if (j >= 1 && j <= data.calib.init_signs.size()) s *= data.calib.init_signs[j - 1];
    p.sector_energies.push_back(e[cols[j]]);
    p.sector_states.push_back(s);
  }
  if (p.sector_states.size() < 4) throw std::runtime_error("build_problem: fewer than 4 sector states");
  return p;
}

inline Problem load_problem(const ExperimentConfig& c) {
  std::string dir = c.data_dir.empty() ? default_data_dir() : c.data_dir;
  auto data = effham::load_system_data(data_file(dir, c.system, c.functional));
  return build_problem(c.system, c.functional, data, c.threshold);
}

// initial state over sector eigenstates: ground (3,1,1,1)/sqrt(12), excited (0,1,1,1)/sqrt(3)
inline Vec initial_state(const Problem& p, pite::Mode mode) {
  std::vector<double> w = mode == pite::Mode::Ground ? std::vector<double>{3, 1, 1, 1} : std::vector<double>{0, 1, 1, 1};
  Vec psi = Vec::Zero(p.sector_states[0].size());
  for (int k = 0; k < 4; ++k) psi += w[k] * p.sector_states[k];
  return psi / psi.norm();
}

inline int target_index(pite::Mode mode) { return mode == pite::Mode::Ground ? 0 : 1; }

// FCI eigenvector (Sz = 0) with the largest overlap with the target sector state, as a
// probability distribution over the tapered computational basis
inline std::vector<double> reference_distribution(const Problem& p, pite::Mode mode) {
  const Vec& tgt = p.sector_states[target_index(mode)];
  int best = -1;
  double best_ov = -1;
  Vec best_vec;
  for (int k = 0; k < p.fci_sz0.eigenvectors.cols(); ++k) {
    std::map<std::uint64_t, double> coeffs;
    for (std::size_t i = 0; i < p.fci_sz0.dets.size(); ++i) coeffs[p.fci_sz0.dets[i]] = p.fci_sz0.eigenvectors(i, k);
    Vec img = Vec::Zero(tgt.size());
    for (auto& [d, c] : coeffs)
      if (auto e = p.enc.encode(d)) img[e->first] += c * e->second;
    double ov = std::abs(img.dot(tgt));
    if (ov > best_ov) best_ov = ov, best = k, best_vec = img;
  }
  (void)best;
  std::vector<double> q(tgt.size());
  double s = best_vec.squaredNorm();
  for (Eigen::Index i = 0; i < tgt.size(); ++i) q[i] = best_vec[i] * best_vec[i] / s;
  return q;
}

// ---- amplitude encoding: multiplexed R_Y in Walsh form

inline Circuit state_prep_circuit(const Vec& psi, int n_wires, int first_wire) {
  int n = 0;
  while ((Eigen::Index{1} << n) < psi.size()) ++n;
  if ((Eigen::Index{1} << n) != psi.size()) throw std::invalid_argument("state_prep: size is not a power of two");
  if (std::abs(psi.norm() - 1.0) > 1e-9) throw std::invalid_argument("state_prep: state not normalized");
  Circuit c(n_wires);
  for (int q = n - 1; q >= 0; --q) {
    int m = n - 1 - q;  // controls: qubits above q
    std::vector<double> alpha(std::size_t{1} << m);
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      double a0 = 0, a1 = 0;
      for (std::size_t low = 0; low < (std::size_t{1} << q); ++low) {
        std::size_t i0 = (j << (q + 1)) | low, i1 = i0 | (std::size_t{1} << q);
        if (q == 0) a0 = psi[i0], a1 = psi[i1];
        else a0 += psi[i0] * psi[i0], a1 += psi[i1] * psi[i1];
      }
      if (q > 0) a0 = std::sqrt(a0), a1 = std::sqrt(a1);
      alpha[j] = 2.0 * std::atan2(a1, a0);
    }
    for (std::size_t s = 0; s < alpha.size(); ++s) {
      double th = 0;
      for (std::size_t j = 0; j < alpha.size(); ++j) th += ((popcount(j & s) & 1) ? -1.0 : 1.0) * alpha[j];
      th /= static_cast<double>(alpha.size());
      if (std::abs(th) < 1e-12) continue;
      PauliString p(0, 0, n_wires);
      p.set(first_wire + q, 'Y');
      for (int b = 0; b < m; ++b)
        if ((s >> b) & 1) p.set(first_wire + q + 1 + b, 'Z');
      c.rot(p, th, Tag::Logical, pite::block_state_prep);
    }
  }
  return c;
}

// ---- full experiment circuits

struct BuiltCircuit {
  Circuit circ;
  std::vector<std::size_t> step_end_op;    // op index just past each step's measurement
  std::vector<std::size_t> step_two_qubit; // two-qubit gates attributed to each step
  std::size_t prep_two_qubit = 0;          // encoding + state preparation + initial syndrome
  std::vector<int> readout_bits;           // per readout wire
  bool encoded = false;
};

inline std::vector<Circuit> step_circuits(const Problem& p, const pite::PiteSchedule& s) {
  auto k = pite::pite_constants(s.m0);
  std::vector<Circuit> out;
  for (std::size_t i = 0; i < s.dtau.size(); ++i)
    out.push_back(pite::pite_step_circuit(p.gen, k, s.dtau[i], s.r[i], s.energy_shift, s.cosine));
  return out;
}

inline BuiltCircuit build_unencoded(const Problem& p, const pite::PiteSchedule& s, const Vec& psi0, int beam) {
  int nw = p.gen.n_qubits;
  BuiltCircuit b;
  b.circ = Circuit(nw);
  std::vector<int> wires(nw);
  for (int i = 0; i < nw; ++i) wires[i] = i;
  synth::WalkOptions w;
  auto gates = synth::all_pair_gates(nw, wires);
  w.frame = synth::Options{beam, 4, 2, gates};
  w.plain = synth::Options{1, 4, 0, gates};
  w.frame_blocks = {pite::block_v1, pite::block_v2};
  w.pass_nonunitary = true;
  auto ident = [](const PauliString& q) { return std::vector<PhasedPauli>{PhasedPauli{0, q}}; };
  synth::compile_rotations(state_prep_circuit(psi0, nw, 1), b.circ, ident, w);
  b.prep_two_qubit = b.circ.counts().two_qubit;
  auto steps = step_circuits(p, s);
  for (auto& st : steps) {
    std::size_t before = b.circ.counts().two_qubit;
    pite::append_ancilla_readout(st, p.gen.ancilla_index);
    synth::compile_rotations(st, b.circ, ident, w);
    b.step_end_op.push_back(b.circ.ops.size());
    b.step_two_qubit.push_back(b.circ.counts().two_qubit - before);
  }
  for (int q = 1; q < nw; ++q) {
    int bit = b.circ.new_bit();
    b.circ.measure(q, bit);
    b.readout_bits.push_back(bit);
  }
  return b;
}

inline BuiltCircuit build_encoded(const Problem& p, const pite::PiteSchedule& s, const Vec& psi0, int beam) {
  iceberg::IcebergLayout L(p.gen.n_qubits);
  BuiltCircuit b;
  b.encoded = true;
  b.circ = iceberg::encode_zero_circuit(L);
  iceberg::CompileOptions opt;
  opt.frame_beam = beam;
  opt.frame_blocks = {pite::block_v1, pite::block_v2};
  iceberg::compile_logical(state_prep_circuit(psi0, L.k, 1), b.circ, L, opt);
  b.circ.append(iceberg::syndrome_circuit(L));
  b.prep_two_qubit = b.circ.counts().two_qubit;
  opt.syndrome_after = {pite::block_v1, pite::block_v2};
  auto steps = step_circuits(p, s);
  for (std::size_t i = 0; i < steps.size(); ++i) {
    std::size_t before = b.circ.counts().two_qubit;
    if (i > 0) b.circ.append(iceberg::measure_and_reencode(L, p.gen.ancilla_index));
    iceberg::compile_logical(steps[i], b.circ, L, opt);
    if (i + 1 == steps.size()) b.readout_bits = iceberg::append_final_readout(b.circ, L, p.gen.ancilla_index).bits;
    b.step_end_op.push_back(b.circ.ops.size());
    b.step_two_qubit.push_back(b.circ.counts().two_qubit - before);
  }
  return b;
}

// step marks in time order: encoded steps 1..n-1 sit in the next re-encode block, the last in the readout
inline std::uint64_t decode_system_bits(const BuiltCircuit& b, const std::vector<int>& bits, bool* discard) {
  if (b.encoded) {
    std::vector<int> rb;
    for (int x : b.readout_bits) rb.push_back(bits[x]);
    iceberg::IcebergLayout L(static_cast<int>(rb.size()) - 2);
    auto d = iceberg::final_readout_decode(rb, L);
    if (discard) *discard = d.discard;
    return d.logical >> 1;
  }
  if (discard) *discard = false;
  std::uint64_t x = 0;
  for (std::size_t i = 0; i < b.readout_bits.size(); ++i)
    if (bits[b.readout_bits[i]]) x |= std::uint64_t{1} << i;
  return x;
}

// ---- report

struct StepStats {
  double dtau = 0;
  int r = 1;
  double p_noiseless = 0;   // cumulative
  double p_noisy = 0;       // cumulative, retained shots
  double p_noisy_err = 0;
  double discard = 0;       // fraction of shots discarded up to this step
  std::size_t n2q_cumulative = 0;
  std::size_t n2q_step = 0;
};

struct ExperimentReport {
  ExperimentConfig cfg;
  std::string label;
  std::vector<double> sector_energies;
  std::vector<StepStats> steps;
  double p_tot_noiseless = 0;
  double p_tot_noisy = 0;
  double discard_rate = 0;
  std::size_t n_shots = 0, n_retained = 0;
  std::vector<std::string> labels;   // per tapered basis state
  std::vector<double> reference;     // FCI distribution
  std::vector<double> noiseless_hist;
  std::vector<double> noisy_hist;
  double fidelity_noiseless = 0;
  double fidelity_noisy = 0;
  sim::MseStats mse;
  GateCounts gates;
  std::size_t prep_two_qubit = 0;
  std::vector<sim::ShotRecord> shots;
  std::vector<std::uint64_t> shot_bitstrings;
  std::vector<std::string> check_names;
};

inline std::vector<double> normalized(std::vector<double> v) {
  double s = 0;
  for (double x : v) s += x;
  if (s > 0)
    for (double& x : v) x /= s;
  return v;
}

inline std::string basis_label(const Problem& p, std::uint64_t idx) {
  auto names = effham::default_orbital_names(p.data.params.n_orb);
  return effham::det_label(p.enc.decode(idx).first, p.data.params.n_orb, names);
}

struct NoiselessResult {
  std::vector<double> step_mass;
  std::vector<double> hist;  // unnormalized over system basis states
  double p_tot = 0;
};

inline NoiselessResult noiseless(const BuiltCircuit& b, std::size_t dim) {
  sim::BranchOptions bo;
  bo.success_only = true;
  auto branches = sim::run_noiseless_branches(b.circ, bo);
  NoiselessResult r;
  r.hist.assign(dim, 0.0);
  for (auto& br : branches) {
    bool disc = false;
    auto x = decode_system_bits(b, br.bits, &disc);
    if (disc) continue;
    r.hist[x] += br.prob;
    r.p_tot += br.prob;
  }
  // cumulative success per step from the surviving mass after each step's marker
  std::size_t n = b.circ.steps.size();
  std::vector<std::size_t> bit_end(b.circ.n_bits, 0);
  for (std::size_t i = 0; i < b.circ.ops.size(); ++i)
    if (b.circ.ops[i].kind == OpKind::Measure) bit_end[b.circ.ops[i].bit] = i + 1;
  r.step_mass.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t end = 0;
    for (int x : b.circ.steps[k].bits) end = std::max(end, bit_end[x]);
    BuiltCircuit partial = b;
    partial.circ.ops.resize(end);
    partial.circ.steps.resize(k + 1);
    partial.circ.checks.clear();
    double m = 0;
    for (auto& br : sim::run_noiseless_branches(partial.circ, bo)) m += br.prob;
    r.step_mass[k] = m;
  }
  return r;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const Problem& p) {
  validate(cfg);
  ExperimentReport rep;
  rep.cfg = cfg;
  rep.label = p.data.params.label;
  rep.sector_energies = p.sector_energies;
  auto sched = pite::make_schedule(cfg.mode, p.sector_energies, cfg.n_steps, cfg.m0);
  Vec psi0 = initial_state(p, cfg.mode);
  BuiltCircuit b = cfg.encoded ? build_encoded(p, sched, psi0, cfg.frame_beam) : build_unencoded(p, sched, psi0, cfg.unencoded_beam);
  rep.gates = b.circ.counts();
  rep.prep_two_qubit = b.prep_two_qubit;
  std::size_t dim = psi0.size();
  for (std::size_t i = 0; i < dim; ++i) rep.labels.push_back(basis_label(p, i));
  rep.reference = reference_distribution(p, cfg.mode);
  for (auto& c : b.circ.checks) rep.check_names.push_back(c.name);

  auto nl = noiseless(b, dim);
  rep.p_tot_noiseless = nl.p_tot;
  rep.noiseless_hist = normalized(nl.hist);
  rep.fidelity_noiseless = classical_fidelity(rep.noiseless_hist, rep.reference);

  std::size_t cum = b.prep_two_qubit;
  for (std::size_t k = 0; k < sched.dtau.size(); ++k) {
    StepStats s;
    s.dtau = sched.dtau[k];
    s.r = sched.r[k];
    s.p_noiseless = nl.step_mass[k];
    s.n2q_step = b.step_two_qubit[k];
    cum += s.n2q_step;
    s.n2q_cumulative = cum;
    rep.steps.push_back(s);
  }

  rep.n_shots = cfg.shots;
  if (cfg.shots == 0) return rep;
  rep.shots = sim::run_shots(b.circ, sim::NoiseModel{cfg.p2, cfg.spam}, cfg.seed, cfg.shots, cfg.threads);
  // op index at which each check resolves
  std::vector<std::size_t> bit_op(b.circ.n_bits, 0);
  for (std::size_t i = 0; i < b.circ.ops.size(); ++i)
    if (b.circ.ops[i].kind == OpKind::Measure) bit_op[b.circ.ops[i].bit] = i;
  std::vector<std::size_t> check_op;
  for (auto& c : b.circ.checks) {
    std::size_t at = 0;
    for (int x : c.bits) at = std::max(at, bit_op[x]);
    check_op.push_back(at);
  }
  std::vector<double> hist(dim, 0.0), success;
  std::vector<std::size_t> retained_ok(sched.dtau.size(), 0), discarded_by(sched.dtau.size(), 0);
  for (auto& rec : rep.shots) {
    bool disc = false;
    auto x = decode_system_bits(b, rec.bits, &disc);
    rep.shot_bitstrings.push_back(x);
    if (rec.discarded) {
      for (std::size_t k = 0; k < sched.dtau.size(); ++k)
        if (check_op[rec.first_failed_check] < b.step_end_op[k]) ++discarded_by[k];
      continue;
    }
    ++rep.n_retained;
    bool ok = true;
    for (std::size_t k = 0; k < rec.step_success.size(); ++k) {
      ok = ok && rec.step_success[k];
      if (ok) ++retained_ok[k];
    }
    success.push_back(ok ? 1.0 : 0.0);
    if (ok) hist[x] += 1.0;
  }
  rep.discard_rate = static_cast<double>(cfg.shots - rep.n_retained) / cfg.shots;
  for (std::size_t k = 0; k < sched.dtau.size(); ++k) {
    auto& s = rep.steps[k];
    s.discard = static_cast<double>(discarded_by[k]) / cfg.shots;
    if (rep.n_retained) {
      s.p_noisy = static_cast<double>(retained_ok[k]) / rep.n_retained;
      s.p_noisy_err = std::sqrt(s.p_noisy * (1 - s.p_noisy) / rep.n_retained);
    }
  }
  if (rep.n_retained) {
    rep.p_tot_noisy = rep.steps.back().p_noisy;
    rep.noisy_hist = normalized(hist);
    rep.fidelity_noisy = classical_fidelity(rep.noisy_hist, rep.reference);
    rep.mse = sim::mse_stats(success, rep.p_tot_noiseless);
  }
  return rep;
}

inline ExperimentReport run_experiment(const ExperimentConfig& cfg) { return run_experiment(cfg, load_problem(cfg)); }

// ---- outputs

inline nlohmann::json report_json(const ExperimentReport& r) {
  nlohmann::json j;
  j["system"] = r.cfg.system;
  j["functional"] = r.cfg.functional;
  j["label"] = r.label;
  j["mode"] = pite::mode_name(r.cfg.mode);
  j["encoded"] = r.cfg.encoded;
  j["m0"] = r.cfg.m0;
  j["p2"] = r.cfg.p2;
  j["seed"] = r.cfg.seed;
  j["sector_energies"] = r.sector_energies;
  nlohmann::json steps = nlohmann::json::array();
  for (auto& s : r.steps)
    steps.push_back({{"dtau", s.dtau}, {"r", s.r}, {"p_noiseless", s.p_noiseless}, {"p_noisy", s.p_noisy},
                     {"p_noisy_err", s.p_noisy_err}, {"discard", s.discard}, {"n2q_step", s.n2q_step},
                     {"n2q_cumulative", s.n2q_cumulative},
                     {"discard_model", sim::discard_model(s.n2q_cumulative, r.cfg.p2)}});
  j["steps"] = steps;
  j["p_tot_noiseless"] = r.p_tot_noiseless;
  j["p_tot_noisy"] = r.p_tot_noisy;
  j["discard_rate"] = r.discard_rate;
  j["n_shot"] = r.n_shots;
  j["n_cir"] = r.n_retained;
  j["fidelity_noiseless"] = r.fidelity_noiseless;
  j["fidelity_noisy"] = r.fidelity_noisy;
  j["mse"] = {{"bias", r.mse.bias}, {"var", r.mse.var}, {"mse", r.mse.mse}};
  j["gates"] = {{"total", r.gates.total}, {"two_qubit", r.gates.two_qubit}, {"two_qubit_equiv", r.gates.two_qubit_equiv}};
  nlohmann::json h = nlohmann::json::array();
  for (std::size_t i = 0; i < r.labels.size(); ++i)
    h.push_back({{"label", r.labels[i]},
                 {"reference", r.reference[i]},
                 {"noiseless", r.noiseless_hist.empty() ? 0.0 : r.noiseless_hist[i]},
                 {"noisy", r.noisy_hist.empty() ? 0.0 : r.noisy_hist[i]}});
  j["histogram"] = h;
  return j;
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

inline std::vector<std::string> emit_outputs(const ExperimentReport& r, const std::string& dir,
                                             const std::vector<std::string>& formats = {"csv", "json"}) {
  if (r.steps.empty()) throw std::invalid_argument("emit_outputs: empty report");
  std::filesystem::create_directories(dir);
  std::filesystem::path d(dir);
  std::vector<std::string> written;
  auto put = [&](const std::string& name, const std::string& text) {
    write_file(d / name, text);
    written.push_back((d / name).string());
  };
  char buf[256];
  for (auto& fmt : formats) {
    if (fmt == "json") {
      put("report.json", report_json(r).dump(2) + "\n");
    } else if (fmt == "csv") {
      std::ostringstream s;
      s << "step,dtau,r,p_noiseless,p_noisy,p_noisy_err\n";
      for (std::size_t k = 0; k < r.steps.size(); ++k) {
        auto& st = r.steps[k];
        std::snprintf(buf, sizeof buf, "%zu,%.6f,%d,%.6f,%.6f,%.6f\n", k + 1, st.dtau, st.r, st.p_noiseless, st.p_noisy, st.p_noisy_err);
        s << buf;
      }
      put("success.csv", s.str());
      std::ostringstream dcsv;
      dcsv << "step,n2q,discard,model\n";
      for (std::size_t k = 0; k < r.steps.size(); ++k) {
        auto& st = r.steps[k];
        std::snprintf(buf, sizeof buf, "%zu,%zu,%.6f,%.6f\n", k + 1, st.n2q_cumulative, st.discard,
                      sim::discard_model(st.n2q_cumulative, r.cfg.p2));
        dcsv << buf;
      }
      put("discard.csv", dcsv.str());
      std::ostringstream h;
      h << "label,reference,noiseless,noisy\n";
      for (std::size_t i = 0; i < r.labels.size(); ++i) {
        std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f\n", r.reference[i], r.noiseless_hist.empty() ? 0.0 : r.noiseless_hist[i],
                      r.noisy_hist.empty() ? 0.0 : r.noisy_hist[i]);
        h << r.labels[i] << buf;
      }
      put("histogram.csv", h.str());
      std::ostringstream log;
      log << "shot,seed";
      std::size_t ns = r.steps.size();
      for (std::size_t k = 0; k < ns; ++k) log << ",step" << k + 1;
      log << ",discarded,first_failed_check,bitstring\n";
      for (std::size_t i = 0; i < r.shots.size(); ++i) {
        auto& rec = r.shots[i];
        log << rec.shot << ',' << rec.seed;
        for (int s : rec.step_success) log << ',' << s;
        log << ',' << (rec.discarded ? 1 : 0) << ','
            << (rec.first_failed_check >= 0 ? r.check_names[rec.first_failed_check] + "#" + std::to_string(rec.first_failed_check) : "")
            << ',';
        int nb = 0;
        while ((std::size_t{1} << nb) < r.labels.size()) ++nb;
        for (int q = nb - 1; q >= 0; --q) log << ((r.shot_bitstrings[i] >> q) & 1);
        log << '\n';
      }
      put("runlog.csv", log.str());
    } else {
      throw std::invalid_argument("emit_outputs: unsupported format '" + fmt + "'");
    }
  }
  return written;
}

// ---- verification suite

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ReferenceRow {
  std::string system, functional, transition;
  std::vector<double> values;
};

inline std::vector<ReferenceRow> load_reference_tables(const std::string& dir) {
  auto path = std::filesystem::path(dir) / "reference_tables.dat";
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  std::vector<ReferenceRow> rows;
  std::string line;
  while (std::getline(f, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    ReferenceRow r;
    if (!(ls >> r.system >> r.functional >> r.transition)) continue;
    double v;
    while (ls >> v) r.values.push_back(v);
    if (r.values.empty()) throw std::runtime_error("reference_tables: row without values");
    rows.push_back(r);
  }
  return rows;
}

// computed (lo, hi) matches a reference entry "a" or "a (b)" within tol, either order
inline bool matches_reference(const effham::ExcitationRow& row, const std::vector<double>& v, double tol) {
  if (v.size() == 1) return std::abs(row.lo - v[0]) <= tol || std::abs(row.hi - v[0]) <= tol;
  double a = std::min(v[0], v[1]), b = std::max(v[0], v[1]);
  return std::abs(row.lo - a) <= tol && std::abs(row.hi - b) <= tol;
}

inline std::vector<CheckResult> verify_fci_tables(const std::string& dir, double tol = 0.02) {
  std::vector<CheckResult> out;
  std::map<std::string, effham::ExcitationTable> cache;
  for (auto& ref : load_reference_tables(dir)) {
    std::string key = ref.system + "_" + ref.functional;
    if (!cache.count(key)) {
      auto d = effham::load_system_data(data_file(dir, ref.system, ref.functional));
      auto h = effham::to_ks_basis(effham::build_wannier_hamiltonian(d.params), effham::KsGauge{d.calib.gauge_deg * pi / 180.0});
      cache[key] = effham::excitation_table(effham::fci_diagonalize(h, 4));
    }
    const auto& t = cache[key];
    CheckResult c{"fci " + key + " " + ref.transition, false, ""};
    if (!t.diagnostic.empty()) {
      c.detail = t.diagnostic;
    } else {
      const auto& row = t.row(ref.transition);
      c.pass = matches_reference(row, ref.values, tol);
      std::ostringstream os;
      os << "computed " << row.lo << " / " << row.hi;
      c.detail = os.str();
    }
    out.push_back(c);
  }
  return out;
}

inline double max_abs(const CMat& m) { return m.cwiseAbs().maxCoeff(); }

// dense unitary of a Rot/H/Pauli/CX circuit
inline CMat circuit_unitary(const Circuit& c) {
  std::size_t dim = std::size_t{1} << c.n_wires;
  CMat u(dim, dim);
  for (std::size_t col = 0; col < dim; ++col) {
    sim::State st(c.n_wires);
    st.amp.setZero();
    st.amp(col) = 1.0;
    for (auto& o : c.ops) sim::apply_unitary_op(st, o);
    u.col(col) = st.amp;
  }
  return u;
}

// |<0| U2 exp(-i t (G - shift Z_anc)) U1 |0>| on the system register, exact CRTE
inline CMat exact_pite_block(const Problem& p, double dtau, double m0, double shift = 0.0, bool cosine = false) {
  auto k = pite::pite_constants(m0);
  double t = dtau * k.s1;
  int n = p.gen.n_qubits, anc = p.gen.ancilla_index;
  Circuit u1(n), u2(n);
  pite::append_u1(u1, anc);
  pite::append_u2(u2, anc, k, cosine ? -(pi - 2.0 * k.phi) : 0.0);
  PauliSum g = p.gen.as_sum();
  g.add(PauliString(0, 1ull << anc, n), -shift);
  CMat full = circuit_unitary(u2) * expm_hermitian(g.matrix(), cplx(0, -t)) * circuit_unitary(u1);
  std::size_t d = std::size_t{1} << (n - 1);
  auto with_anc0 = [&](std::size_t a) {
    std::size_t lo = a & ((std::size_t{1} << anc) - 1);
    return lo | ((a >> anc) << (anc + 1));
  };
  CMat blk(d, d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) blk(a, b) = full(with_anc0(a), with_anc0(b));
  return blk;
}

// max |a e^{i g} - ref| with g fixed on the largest entry of ref
inline double phase_aligned_diff(const CMat& a, const CMat& ref) {
  Eigen::Index ri, ci;
  ref.cwiseAbs().maxCoeff(&ri, &ci);
  cplx ph = ref(ri, ci) / a(ri, ci);
  ph /= std::abs(ph);
  return max_abs(a * ph - ref);
}

inline CheckResult verify_pite_block(const Problem& p, double m0 = 0.8) {
  CMat hs = p.tapered.matrix();
  double e0 = p.sector_energies[0], worst = 0;
  for (double dtau : {0.05, 0.25, 1.0}) {
    worst = std::max(worst, phase_aligned_diff(exact_pite_block(p, dtau, m0), pite::approx_operator(hs, dtau, m0)));
    worst = std::max(worst, phase_aligned_diff(exact_pite_block(p, dtau, m0, e0, true),
                                               pite::approx_operator(hs, dtau, m0, e0, true)));
  }
  std::ostringstream os;
  os << "max |block - sin(-(H - E) dtau s1 + phi)| = " << worst;
  return {"pite block identity", worst < 1e-10, os.str()};
}

// ||block(dtau) - m0 exp(-(H - E0) dtau)|| over the same at dtau/2
inline double pite_order_ratio(const Problem& p, double dtau, double m0 = 0.8) {
  CMat hs = p.tapered.matrix();
  double e0 = p.sector_energies[0];
  auto err = [&](double dt) {
    CMat ref = m0 * expm_hermitian(hs - e0 * CMat::Identity(hs.rows(), hs.cols()), cplx(-dt, 0));
    return phase_aligned_diff(exact_pite_block(p, dt, m0, e0), ref);
  };
  return err(dtau) / err(dtau / 2);
}

// least-squares slope of log ||Trotter(r) - exp(-i t G)|| against log r
inline double trotter_slope(const Problem& p, double t, const std::vector<int>& rs) {
  CMat exact = expm_hermitian(p.gen.as_sum().matrix(), cplx(0, -t));
  std::vector<double> x, y;
  for (int r : rs) {
    x.push_back(std::log(static_cast<double>(r)));
    y.push_back(std::log(max_abs(circuit_unitary(pite::crte_circuit(p.gen, t, r)) - exact)));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size(), my /= y.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
  return sxy / sxx;
}

// random logical rotations and Paulis on k wires, all in one frame block
inline Circuit random_logical_circuit(int k, int n_ops, std::mt19937_64& rng) {
  Circuit c(k);
  std::uniform_int_distribution<int> letter(0, 3), kind(0, 4);
  std::uniform_real_distribution<double> ang(-pi, pi);
  for (int i = 0; i < n_ops; ++i) {
    if (kind(rng) == 0) {
      c.pauli(std::uniform_int_distribution<int>(0, k - 1)(rng), "XYZ"[letter(rng) % 3], Tag::Logical);
      continue;
    }
    PauliString p(0, 0, k);
    while (p.is_identity())
      for (int q = 0; q < k; ++q) p.set(q, "IXYZ"[letter(rng)]);
    c.rot(p, ang(rng), Tag::Logical, pite::block_v1);
  }
  return c;
}

// total variation between unencoded and encode/compile/decode outcome distributions
inline double encoded_equivalence_tv(const Circuit& logical, int beam) {
  int k = logical.n_wires;
  sim::State st(k);
  for (auto& o : logical.ops) sim::apply_unitary_op(st, o);
  std::vector<double> p(std::size_t{1} << k);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(st.amp(i));

  iceberg::IcebergLayout L(k);
  iceberg::CompileOptions opt;
  opt.frame_beam = beam;
  opt.frame_blocks = {pite::block_v1};
  Circuit c = iceberg::encode_and_compile(logical, L, opt);
  auto rb = iceberg::append_final_readout(c, L).bits;
  std::vector<double> q(p.size(), 0.0);
  for (auto& br : sim::run_noiseless_branches(c)) {
    std::vector<int> bits;
    for (int b : rb) bits.push_back(br.bits[b]);
    auto d = iceberg::final_readout_decode(bits, L);
    if (!d.discard) q[d.logical] += br.prob;
  }
  double tv = 0;
  for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(p[i] - q[i]);
  return tv / 2;
}

// encoding, state preparation and the first PITE step with its syndrome checks; ops from
// `last` on form a terminal syndrome readout
struct SweepCircuit {
  Circuit circ;
  std::size_t last = 0;
};

inline SweepCircuit first_step_sweep_circuit(const Problem& p, const ExperimentConfig& cfg) {
  auto s = pite::make_schedule(cfg.mode, p.sector_energies, cfg.n_steps, cfg.m0);
  s.dtau.resize(1);
  s.r.resize(1);
  iceberg::IcebergLayout L(p.gen.n_qubits);
  SweepCircuit out;
  out.circ = iceberg::encode_zero_circuit(L);
  iceberg::CompileOptions opt;
  opt.frame_beam = cfg.frame_beam;
  opt.frame_blocks = {pite::block_v1, pite::block_v2};
  iceberg::compile_logical(state_prep_circuit(initial_state(p, cfg.mode), L.k, 1), out.circ, L, opt);
  out.circ.append(iceberg::syndrome_circuit(L));
  opt.syndrome_after = {pite::block_v1, pite::block_v2};
  iceberg::compile_logical(step_circuits(p, s)[0], out.circ, L, opt);
  out.last = out.circ.ops.size();
  out.circ.append(iceberg::syndrome_circuit(L));
  return out;
}

inline bool same_state(const sim::State& a, const sim::State& b) { return std::abs(std::abs(a.amp.dot(b.amp)) - 1.0) < 1e-9; }

// every single-qubit Pauli after every op before `last` is caught or acts trivially
struct DetectionSweep {
  std::size_t locations = 0, errors = 0, detected = 0, trivial = 0, missed = 0;
};

inline DetectionSweep sweep_single_errors(const Circuit& c, const std::function<bool(const sim::State&, const sim::State&)>& same_logical,
                                          const std::vector<int>& wires, std::size_t last = SIZE_MAX) {
  DetectionSweep sw;
  sim::BranchOptions bo;
  auto ideal = sim::run_noiseless_branches(c, bo);
  for (std::size_t at = 0; at < std::min(last, c.ops.size()); ++at) {
    const Op& o = c.ops[at];
    if (o.kind == OpKind::Measure || o.kind == OpKind::Reset || o.kind == OpKind::CondX) continue;
    ++sw.locations;
    for (int w : o.wires()) {
      if (std::find(wires.begin(), wires.end(), w) == wires.end()) continue;
      for (char l : {'X', 'Y', 'Z'}) {
        ++sw.errors;
        Circuit e = c;
        Op err;
        err.kind = OpKind::Pauli;
        err.w0 = w;
        err.letter = l;
        err.tag = Tag::Physical;
        e.ops.insert(e.ops.begin() + at + 1, err);
        auto br = sim::run_noiseless_branches(e, bo);
        double p_detect = 0, p_ok = 0;
        for (auto& b : br) {
          sim::ShotRecord rec;
          rec.bits = b.bits;
          sim::classify(e, rec);
          if (rec.discarded) {
            p_detect += b.prob;
            continue;
          }
          // undetected branch must match an ideal branch with the same record
          for (auto& ib : ideal)
            if (ib.bits == b.bits && same_logical(ib.state, b.state)) {
              p_ok += b.prob;
              break;
            }
        }
        if (p_detect + p_ok > 1 - 1e-9) {
          if (p_ok > 1e-9) ++sw.trivial;
          else ++sw.detected;
        } else {
          ++sw.missed;
        }
      }
    }
  }
  return sw;
}

inline std::vector<CheckResult> verify_suite(const ExperimentConfig& cfg, bool include_noisy = true) {
  std::vector<CheckResult> out;
  std::string dir = cfg.data_dir.empty() ? default_data_dir() : cfg.data_dir;
  for (auto& c : verify_fci_tables(dir)) out.push_back(c);
  Problem p = load_problem(cfg);
  out.push_back(verify_pite_block(p, cfg.m0));
  {
    auto sc = first_step_sweep_circuit(p, cfg);
    std::vector<int> all(sc.circ.n_wires);
    for (int w = 0; w < sc.circ.n_wires; ++w) all[w] = w;
    auto sw = sweep_single_errors(sc.circ, same_state, all, sc.last);
    std::ostringstream os;
    os << sw.errors << " errors: " << sw.detected << " detected, " << sw.trivial << " trivial, " << sw.missed << " missed";
    out.push_back({"single-fault detection, first step", sw.missed == 0, os.str()});
  }
  {
    std::mt19937_64 rng(cfg.seed);
    double worst = 0;
    for (int i = 0; i < 20; ++i) worst = std::max(worst, encoded_equivalence_tv(random_logical_circuit(4, 8, rng), 4));
    std::ostringstream os;
    os << "max total variation " << worst << " over 20 circuits";
    out.push_back({"encode/compile/decode equivalence", worst < 1e-9, os.str()});
  }
  if (include_noisy && cfg.shots > 0) {
    ExperimentConfig c = cfg;
    c.encoded = true;
    auto rep = run_experiment(c, p);
    std::ostringstream os;
    os << "discard " << rep.discard_rate << " (target 0.71 +/- 0.05)";
    bool expect = c.system == "zrv" && c.functional == "hse" && c.mode == pite::Mode::Ground;
    out.push_back({"encoded discard rate", !expect || std::abs(rep.discard_rate - 0.71) <= 0.05, os.str()});
  }
  return out;
}

}  // namespace icepite::harness
