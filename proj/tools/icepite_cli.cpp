#include <icepite/harness.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace icepite;
using harness::ExperimentConfig;

namespace {

// string-valued flags, applied after the config file so they win
struct Overrides {
  std::map<std::string, std::string> values;
  std::string config_file;
};

const std::vector<std::pair<std::string, std::string>> config_keys = {
    {"system", "zrv | hfv | tiv | nv"},
    {"functional", "hse | pbe"},
    {"mode", "ground | excited"},
    {"n_steps", "PITE steps"},
    {"m0", "PITE scale parameter"},
    {"shots", "noisy shots (0 = noiseless only)"},
    {"p2", "two-qubit depolarizing probability"},
    {"spam", "readout flip probability"},
    {"encoded", "iceberg encoding on/off"},
    {"threshold", "Pauli truncation threshold (eV)"},
    {"seed", "RNG seed"},
    {"output_dir", "output directory"},
    {"data_dir", "parameter data directory"},
    {"frame_beam", "frame search width, encoded circuits"},
    {"unencoded_beam", "frame search width, unencoded circuits"},
    {"threads", "worker threads (0 = hardware)"},
};

void add_config_flags(CLI::App* app, Overrides& ov) {
  app->add_option("-c,--config", ov.config_file, "key=value config file")->check(CLI::ExistingFile);
  for (auto& [key, help] : config_keys) {
    std::string flag = "--" + key;
    for (auto& ch : flag)
      if (ch == '_') ch = '-';
    app->add_option_function<std::string>(flag, [&ov, k = key](const std::string& v) { ov.values[k] = v; }, help);
  }
}

ExperimentConfig resolve(const Overrides& ov) {
  ExperimentConfig c;
  if (!ov.config_file.empty()) {
    std::ifstream f(ov.config_file);
    if (!f) throw std::invalid_argument("cannot read config " + ov.config_file);
    std::stringstream ss;
    ss << f.rdbuf();
    harness::parse_config(c, ss.str());
  }
  for (auto& [k, v] : ov.values) {
    try {
      harness::set_config_value(c, k, v);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("bad value for --" + k + ": '" + v + "'");
    }
  }
  if (c.data_dir.empty()) c.data_dir = harness::default_data_dir();
  harness::validate(c);
  return c;
}

int cmd_run(const ExperimentConfig& cfg, const std::vector<std::string>& formats) {
  auto p = harness::load_problem(cfg);
  auto r = harness::run_experiment(cfg, p);
  std::printf("%s  mode=%s  %s  p2=%g  shots=%zu\n", r.label.c_str(), pite::mode_name(cfg.mode).c_str(),
              cfg.encoded ? "encoded" : "unencoded", cfg.p2, cfg.shots);
  std::printf("step  dtau      r   P_noiseless  P_noisy         discard  n2q\n");
  for (std::size_t k = 0; k < r.steps.size(); ++k) {
    auto& s = r.steps[k];
    std::printf("%-4zu  %-8.4f  %-2d  %-11.4f  %.4f+-%.4f  %-7.4f  %zu\n", k + 1, s.dtau, s.r, s.p_noiseless, s.p_noisy,
                s.p_noisy_err, s.discard, s.n2q_cumulative);
  }
  std::printf("P_tot noiseless %.4f  noisy %.4f  discard %.4f  retained %zu/%zu\n", r.p_tot_noiseless, r.p_tot_noisy,
              r.discard_rate, r.n_retained, r.n_shots);
  std::printf("fidelity noiseless %.4f  noisy %.4f  mse %.5f (bias %.5f var %.5f)\n", r.fidelity_noiseless, r.fidelity_noisy,
              r.mse.mse, r.mse.bias, r.mse.var);
  std::printf("gates total %zu  two-qubit %zu  (prep %zu)\n", r.gates.total, r.gates.two_qubit, r.prep_two_qubit);
  for (auto& f : harness::emit_outputs(r, cfg.output_dir, formats)) std::printf("wrote %s\n", f.c_str());
  return 0;
}

int cmd_fci(const ExperimentConfig& cfg, const std::string& out) {
  auto d = effham::load_system_data(harness::data_file(cfg.data_dir, cfg.system, cfg.functional));
  auto h = effham::to_ks_basis(effham::build_wannier_hamiltonian(d.params), effham::KsGauge{d.calib.gauge_deg * pi / 180.0});
  auto res = effham::fci_diagonalize(h, 4);
  auto table = effham::excitation_table(res);
  std::printf("%s (%s)\n", d.params.label.c_str(), cfg.functional.c_str());
  if (!table.diagnostic.empty()) std::printf("warning: %s\n", table.diagnostic.c_str());
  for (auto& row : table.rows) {
    if (std::abs(row.hi - row.lo) < 5e-4) std::printf("  %-10s %.3f\n", row.name.c_str(), row.lo);
    else std::printf("  %-10s %.3f (%.3f)\n", row.name.c_str(), row.lo, row.hi);
  }
  std::string text = effham::fci_to_json(res, d.params.n_orb, &table).dump(2) + "\n";
  if (out == "-") {
    std::cout << text;
  } else {
    auto path = out.empty() ? std::filesystem::path(cfg.output_dir) / ("fci_" + cfg.system + "_" + cfg.functional + ".json")
                            : std::filesystem::path(out);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    harness::write_file(path, text);
    std::printf("wrote %s\n", path.string().c_str());
  }
  return 0;
}

int cmd_verify(const ExperimentConfig& cfg, bool noisy) {
  int fails = 0;
  for (auto& c : harness::verify_suite(cfg, noisy)) {
    std::printf("[%s] %s: %s\n", c.pass ? "ok" : "FAIL", c.name.c_str(), c.detail.c_str());
    if (!c.pass) ++fails;
  }
  std::printf("%d check(s) failed\n", fails);
  return fails ? 1 : 0;
}

int cmd_emit(const ExperimentConfig& cfg) {
  auto p = harness::load_problem(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  std::filesystem::path d(cfg.output_dir);
  auto put = [&](const std::string& name, const std::string& text) {
    harness::write_file(d / name, text);
    std::printf("wrote %s\n", (d / name).string().c_str());
  };
  put("hamiltonian_parity.txt", format_pauli_sum(p.mapped));
  put("hamiltonian_truncated.txt", format_pauli_sum(p.trunc.kept));
  put("hamiltonian_tapered.txt", format_pauli_sum(p.tapered));

  auto sched = pite::make_schedule(cfg.mode, p.sector_energies, cfg.n_steps, cfg.m0);
  Vec psi0 = harness::initial_state(p, cfg.mode);
  std::ostringstream summary;
  summary << "circuit,total,two_qubit,two_qubit_equiv,prep_two_qubit";
  for (int k = 0; k < cfg.n_steps; ++k) summary << ",step" << k + 1;
  summary << '\n';
  for (bool enc : {true, false}) {
    auto b = enc ? harness::build_encoded(p, sched, psi0, cfg.frame_beam) : harness::build_unencoded(p, sched, psi0, cfg.unencoded_beam);
    std::string name = enc ? "encoded" : "unencoded";
    put("circuit_" + name + ".txt", serialize(b.circ));
    auto g = b.circ.counts();
    summary << name << ',' << g.total << ',' << g.two_qubit << ',' << g.two_qubit_equiv << ',' << b.prep_two_qubit;
    for (auto n : b.step_two_qubit) summary << ',' << n;
    summary << '\n';
  }
  put("gate_counts.csv", summary.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"iceberg-protected PITE on defect-center effective Hamiltonians"};
  app.require_subcommand(1);
  Overrides ov;
  std::vector<std::string> formats{"csv", "json"};
  std::string fci_out;
  bool no_noisy = false;

  auto* run = app.add_subcommand("run", "run a PITE experiment and write report files");
  add_config_flags(run, ov);
  run->add_option("--formats", formats, "output formats (csv, json)")->delimiter(',');
  auto* fci = app.add_subcommand("fci", "full CI for one system; excitation table and JSON export");
  add_config_flags(fci, ov);
  fci->add_option("-o,--out", fci_out, "JSON path, '-' for stdout");
  auto* verify = app.add_subcommand("verify", "run the self-check suite");
  add_config_flags(verify, ov);
  verify->add_flag("--no-noisy", no_noisy, "skip the sampled discard check");
  auto* emit = app.add_subcommand("emit", "write Pauli sums, circuits and gate counts");
  add_config_flags(emit, ov);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ExperimentConfig cfg;
  try {
    cfg = resolve(ov);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(cfg, formats);
    if (fci->parsed()) return cmd_fci(cfg, fci_out);
    if (verify->parsed()) return cmd_verify(cfg, !no_noisy);
    if (emit->parsed()) return cmd_emit(cfg);
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
