// excitation energies (eV) for every shipped system
#include <icepite/harness.hpp>

#include <cstdio>

using namespace icepite;

int main() {
  std::string dir = harness::default_data_dir();
  for (std::string sys : {"nv", "tiv", "zrv", "hfv"})
    for (std::string fn : {"pbe", "hse"}) {
      auto d = effham::load_system_data(harness::data_file(dir, sys, fn));
      auto h = effham::to_ks_basis(effham::build_wannier_hamiltonian(d.params), effham::KsGauge{d.calib.gauge_deg * pi / 180.0});
      auto t = effham::excitation_table(effham::fci_diagonalize(h, 4));
      std::printf("%-10s", d.params.label.c_str());
      for (auto& r : t.rows) std::printf("  %s %.3f/%.3f", r.name.c_str(), r.lo, r.hi);
      std::printf("\n");
    }
}
