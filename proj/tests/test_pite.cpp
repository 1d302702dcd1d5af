#include "dense.hpp"

#include <icepite/harness.hpp>
#include <icepite/pite.hpp>

#include <gtest/gtest.h>

using namespace icepite;
using namespace icepite::pite;

namespace {

const harness::Problem& zrv() {
  static const harness::Problem p = [] {
    harness::ExperimentConfig c;
    return harness::load_problem(c);
  }();
  return p;
}

}  // namespace

TEST(Pite, ConstantsForDefaultScale) {
  auto k = pite_constants(0.8);
  EXPECT_NEAR(k.s1, 4.0 / 3.0, 1e-12);
  EXPECT_NEAR(k.phi, std::atan2(4.0, 3.0), 1e-12);
  EXPECT_NEAR(k.theta0, std::acos(1.4 / std::sqrt(2.0)), 1e-12);
  EXPECT_EQ(k.kappa, 1);
  // m0 = sin(phi)
  EXPECT_NEAR(std::sin(k.phi), 0.8, 1e-12);
  EXPECT_EQ(pite_constants(0.5).kappa, -1);
  EXPECT_THROW(pite_constants(1.0), std::invalid_argument);
  EXPECT_THROW(pite_constants(0.0), std::invalid_argument);
  EXPECT_THROW(pite_constants(1.0 / std::sqrt(2.0)), std::invalid_argument);
}

TEST(Pite, ApproxOperatorLimits) {
  CMat h = dense::pauli("ZX") + 0.3 * dense::pauli("IZ");
  // at dtau = 0 the operator is m0 times identity
  EXPECT_LT((approx_operator(h, 0.0, 0.8) - 0.8 * CMat::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
  // small dtau: m0 (1 - dtau H) to first order
  double d = 1e-4;
  CMat lin = 0.8 * (CMat::Identity(4, 4) - d * h);
  EXPECT_LT((approx_operator(h, d, 0.8) - lin).cwiseAbs().maxCoeff(), 1e-7);
  // cosine form is even in (H - shift)
  CMat c1 = approx_operator(h, 0.3, 0.8, 0.0, true), c2 = approx_operator(-h, 0.3, 0.8, 0.0, true);
  EXPECT_LT((c1 - c2).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pite, TrotterConvergesToExactEvolution) {
  const auto& g = zrv().gen;
  double t = 0.7;
  CMat gen = g.as_sum().matrix();
  CMat exact = dense::expmi(gen, t);
  double prev = 1e9;
  for (int r : {1, 2, 4, 8, 16}) {
    CMat u = dense::rot_circuit_unitary(crte_circuit(g, t, r));
    double err = (u - exact).cwiseAbs().maxCoeff();
    EXPECT_LT(err, prev) << "r=" << r;
    prev = err;
  }
  EXPECT_LT(prev, 0.02);
  // dropping the identity part only changes the ancilla phase
  CMat no_id = dense::rot_circuit_unitary(crte_circuit(g, t, 4, 0.0, false));
  CMat with_id = dense::rot_circuit_unitary(crte_circuit(g, t, 4));
  CMat zphase = dense::expmi(g.identity * dense::on(g.n_qubits, g.ancilla_index, dense::single('Z')), t);
  EXPECT_LT((zphase * no_id - with_id).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Pite, StepBlockMatchesApproxOperator) {
  const auto& p = zrv();
  auto k = pite_constants(0.8);
  CMat hs = p.tapered.matrix();
  for (bool cosine : {false, true}) {
    double shift = cosine ? p.sector_energies[0] : 0.0;
    double dtau = 0.4;
    CMat blk = dense::low_qubit_zero_block(dense::rot_circuit_unitary(pite_step_circuit(p.gen, k, dtau, 60, shift, cosine)));
    CMat ref = approx_operator(hs, dtau, 0.8, shift, cosine);
    EXPECT_LT(dense::phase_diff(blk, ref), 2e-3) << "cosine=" << cosine;
  }
}

TEST(Pite, StepBlockOfExactEvolution) {
  // with an exact controlled evolution the block equals the operator to machine precision
  const auto& p = zrv();
  auto k = pite_constants(0.8);
  CMat hs = p.tapered.matrix();
  double dtau = 0.3, t = dtau * k.s1, shift = p.sector_energies[0];
  int n = p.gen.n_qubits;
  Circuit u1(n), u2(n);
  append_u1(u1, 0);
  append_u2(u2, 0, k, -2.0 * shift * t - (pi - 2.0 * k.phi));
  CMat ev = dense::expmi(dense::kron(hs, dense::single('Z')), t);
  CMat u = dense::rot_circuit_unitary(u2) * ev * dense::rot_circuit_unitary(u1);
  EXPECT_LT(dense::phase_diff(dense::low_qubit_zero_block(u), approx_operator(hs, dtau, 0.8, shift, true)), 1e-10);
}

TEST(Pite, ScheduleEndpoints) {
  std::vector<double> e{-1.0, -0.5, 0.2, 0.9};
  auto g = make_schedule(Mode::Ground, e, 4, 0.8);
  ASSERT_EQ(g.dtau.size(), 4u);
  EXPECT_DOUBLE_EQ(g.dtau.front(), 0.25);
  EXPECT_NEAR(g.dtau.back(), pi / (2 * (4.0 / 3.0) * 0.5), 1e-12);
  EXPECT_NEAR(g.dtau[2] - g.dtau[1], g.dtau[1] - g.dtau[0], 1e-12);
  EXPECT_EQ(g.r, (std::vector<int>{1, 2, 3, 4}));
  EXPECT_DOUBLE_EQ(g.energy_shift, -1.0);
  auto x = make_schedule(Mode::Excited, e, 4, 0.8);
  EXPECT_DOUBLE_EQ(x.dtau.front(), 0.05);
  EXPECT_NEAR(x.dtau.back(), pi / (2 * (4.0 / 3.0) * 0.7), 1e-12);
  EXPECT_EQ(x.r, (std::vector<int>{1, 1, 2, 3}));
  EXPECT_DOUBLE_EQ(x.energy_shift, -0.5);
  EXPECT_THROW(make_schedule(Mode::Ground, {0.0, 0.0, 1.0}, 4, 0.8), std::invalid_argument);
  EXPECT_THROW(make_schedule(Mode::Ground, e, 0, 0.8), std::invalid_argument);
  EXPECT_THROW(parse_mode("sideways"), std::invalid_argument);
}

TEST(Pite, ZrvScheduleMatchesPublishedEndpoints) {
  auto g = make_schedule(Mode::Ground, zrv().sector_energies, 4, 0.8);
  auto x = make_schedule(Mode::Excited, zrv().sector_energies, 4, 0.8);
  EXPECT_NEAR(g.dtau.back(), 2.41, 0.01);
  EXPECT_NEAR(x.dtau.back(), 0.57, 0.01);
}

TEST(Pite, CosineFilterSuccessProbability) {
  // the filter is diagonal in the sector eigenbasis: P = sum_j w_j prod_k cos^2((E_j - E_0) dtau_k s1)
  const auto& p = zrv();
  CMat hs = p.tapered.matrix();
  auto s = make_schedule(Mode::Ground, p.sector_energies, 4, 0.8);
  CVec psi = harness::initial_state(p, Mode::Ground).cast<cplx>();
  double p_tot = 1.0;
  for (double d : s.dtau) {
    CVec next = approx_operator(hs, d, 0.8, s.energy_shift, true) * psi;
    p_tot *= next.squaredNorm();
    psi = next / next.norm();
  }
  double s1 = pite_constants(0.8).s1;
  std::vector<double> w{9.0 / 12, 1.0 / 12, 1.0 / 12, 1.0 / 12};
  double want = 0, ground = 0;
  for (int j = 0; j < 4; ++j) {
    double f = w[j];
    for (double d : s.dtau) f *= std::pow(std::cos((p.sector_energies[j] - s.energy_shift) * d * s1), 2);
    want += f;
    if (j == 0) ground = f;
  }
  EXPECT_NEAR(p_tot, want, 1e-10);
  EXPECT_NEAR(std::norm(psi.dot(p.sector_states[0].cast<cplx>())), ground / want, 1e-10);
  EXPECT_GT(ground / want, 0.97);
}
