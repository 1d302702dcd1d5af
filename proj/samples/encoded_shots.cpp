// a short noisy ground-state run, encoded and unencoded side by side
#include <icepite/harness.hpp>

#include <cstdio>

using namespace icepite;

int main(int argc, char** argv) {
  harness::ExperimentConfig c;
  c.shots = argc > 1 ? std::stoull(argv[1]) : 300;
  auto p = harness::load_problem(c);
  for (bool enc : {true, false}) {
    c.encoded = enc;
    auto r = harness::run_experiment(c, p);
    std::printf("%-9s n2q %4zu  discard %.3f  P_tot %.3f  F %.3f  MSE %.4f\n", enc ? "encoded" : "unencoded",
                r.gates.two_qubit, r.discard_rate, r.p_tot_noisy, r.fidelity_noisy, r.mse.mse);
  }
}
