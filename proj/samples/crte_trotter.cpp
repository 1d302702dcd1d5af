// Trotter error of the controlled real-time evolution against the dense exponential
#include <icepite/harness.hpp>

#include <cstdio>

using namespace icepite;

int main(int argc, char** argv) {
  double t = argc > 1 ? std::atof(argv[1]) : 1.0;
  auto p = harness::load_problem(harness::ExperimentConfig{});
  CMat exact = expm_hermitian(p.gen.as_sum().matrix(), cplx(0, -t));
  std::printf("t = %g\n   r   max|U_r - U|\n", t);
  for (int r : {1, 2, 4, 8, 16, 32, 64}) {
    CMat u = harness::circuit_unitary(pite::crte_circuit(p.gen, t, r));
    std::printf("%4d   %.3e\n", r, harness::max_abs(u - exact));
  }
  std::printf("slope over r = 1..8: %.3f\n", harness::trotter_slope(p, t, {1, 2, 4, 8}));
}
