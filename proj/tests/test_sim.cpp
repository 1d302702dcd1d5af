#include "dense.hpp"

#include <icepite/sim.hpp>

#include <gtest/gtest.h>

using namespace icepite;
using namespace icepite::sim;

TEST(Sim, GatesMatchDenseMatrices) {
  std::mt19937_64 rng(1);
  int n = 4;
  for (int trial = 0; trial < 50; ++trial) {
    CVec v = dense::random_state(n, rng);
    State s(n);
    s.amp = v;
    auto str = dense::random_pauli(n, rng);
    double th = 0.37 * (trial + 1);
    s.apply_rot(PauliString::parse(str), th);
    CVec ref = dense::expmi(dense::pauli(str), th / 2) * v;
    ASSERT_LT((s.amp - ref).cwiseAbs().maxCoeff(), 1e-12) << str;
    s.apply_pauli(PauliString::parse(str));
    ref = dense::pauli(str) * ref;
    ASSERT_LT((s.amp - ref).cwiseAbs().maxCoeff(), 1e-12) << str;
    int a = trial % n, b = (trial + 1 + trial / n) % n;
    if (a == b) b = (a + 1) % n;
    s.apply_cx(a, b);
    ref = dense::cx(n, a, b) * ref;
    ASSERT_LT((s.amp - ref).cwiseAbs().maxCoeff(), 1e-12);
    s.apply_h(b);
    ref = dense::on(n, b, dense::single('H')) * ref;
    ASSERT_LT((s.amp - ref).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Sim, MeasurementProbabilities) {
  std::mt19937_64 rng(2);
  State s(3);
  s.amp = dense::random_state(3, rng);
  CVec v = s.amp;
  for (int w = 0; w < 3; ++w) {
    CMat p1 = dense::on(3, w, dense::single('1'));
    EXPECT_NEAR(s.prob_one(w), v.dot(p1 * v).real(), 1e-12);
    EXPECT_NEAR(s.prob_zero(w) + s.prob_one(w), 1.0, 1e-12);
  }
  State t = s;
  double p = t.project(1, 1);
  EXPECT_NEAR(p, s.prob_one(1), 1e-12);
  EXPECT_NEAR(t.norm(), 1.0, 1e-12);
  State z(2);
  EXPECT_THROW(z.project(0, 1), std::runtime_error);
}

TEST(Sim, BranchesReproduceBornRule) {
  Circuit c(3);
  c.rot(PauliString::parse("IXY"), 0.9);
  c.rot(PauliString::parse("ZXI"), 1.7);
  c.cx(0, 2);
  int b0 = c.new_bit(), b1 = c.new_bit(), b2 = c.new_bit();
  c.measure(0, b0);
  c.measure(1, b1);
  c.measure(2, b2);
  CMat u = dense::cx(3, 0, 2) * dense::expmi(dense::pauli("ZXI"), 0.85) * dense::expmi(dense::pauli("IXY"), 0.45);
  auto br = run_noiseless_branches(c);
  double total = 0;
  for (auto& b : br) {
    int idx = b.bits[b0] | b.bits[b1] << 1 | b.bits[b2] << 2;
    EXPECT_NEAR(b.prob, std::norm(u(idx, 0)), 1e-12);
    total += b.prob;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Sim, DepolarizingChannelMatchesDensityMatrix) {
  // |+0> -> CX -> Bell; measure both; noisy outcome statistics vs the averaged channel
  double p2 = 0.3;
  Circuit c(2);
  c.h(0);
  c.cx(0, 1);
  int b0 = c.new_bit(), b1 = c.new_bit();
  c.measure(0, b0);
  c.measure(1, b1);

  CVec psi = dense::cx(2, 0, 1) * dense::on(2, 0, dense::single('H')).col(0);
  CMat rho = psi * psi.adjoint();
  CMat out = (1 - p2) * rho;
  const std::string l = "IXYZ";
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b) {
      if (a == 0 && b == 0) continue;
      CMat p = dense::pauli(std::string{l[b], l[a]});
      out += p2 / 15.0 * p * rho * p.adjoint();
    }
  std::size_t shots = 40000;
  auto recs = run_shots(c, NoiseModel{p2, 0.0}, 77, shots, 1);
  std::vector<double> freq(4, 0.0);
  for (auto& r : recs) freq[r.bits[b0] | r.bits[b1] << 1] += 1.0 / shots;
  for (int i = 0; i < 4; ++i) {
    double want = out(i, i).real();
    double sigma = std::sqrt(want * (1 - want) / shots);
    EXPECT_NEAR(freq[i], want, 5 * sigma + 1e-9) << i;
  }
}

TEST(Sim, SpamFlipsReadout) {
  Circuit c(1);
  int b = c.new_bit();
  c.measure(0, b);
  std::size_t shots = 20000;
  auto recs = run_shots(c, NoiseModel{0.0, 0.1}, 5, shots, 1);
  double f = 0;
  for (auto& r : recs) f += r.bits[b];
  f /= shots;
  EXPECT_NEAR(f, 0.1, 5 * std::sqrt(0.09 / shots));
  EXPECT_THROW((NoiseModel{1.5, 0}).validate(), std::invalid_argument);
  EXPECT_THROW((NoiseModel{0, -0.1}).validate(), std::invalid_argument);
}

TEST(Sim, ShotsDeterministicAcrossThreadCounts) {
  Circuit c(3);
  for (int i = 0; i < 10; ++i) c.cx(i % 3, (i + 1) % 3).rot(PauliString::parse("XYZ"), 0.2 * i);
  int b = c.new_bit();
  c.measure(2, b);
  auto a = run_shots(c, NoiseModel{0.05, 0.01}, 123, 300, 1);
  auto d = run_shots(c, NoiseModel{0.05, 0.01}, 123, 300, 4);
  ASSERT_EQ(a.size(), d.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].bits, d[i].bits);
    EXPECT_EQ(a[i].n_faults, d[i].n_faults);
  }
}

TEST(Sim, ClassifyChecksAndSteps) {
  Circuit c(2);
  int a = c.new_bit(), b = c.new_bit();
  c.pauli(1, 'X');
  c.measure(0, a);
  c.measure(1, b);
  c.checks.push_back({"first", {a}});
  c.checks.push_back({"second", {b}});
  c.steps.push_back({{a, b}});
  auto r = run_shot(c, NoiseModel{}, 1);
  EXPECT_TRUE(r.discarded);
  EXPECT_EQ(r.first_failed_check, 1);
  EXPECT_EQ(r.step_success, (std::vector<int>{0}));
}

TEST(Sim, ConditionalXAndReset) {
  Circuit c(2);
  int a = c.new_bit(), b = c.new_bit();
  c.pauli(0, 'X');
  c.measure(0, a);
  c.cond_x(1, a, 1);
  c.reset(0);
  c.measure(1, b);
  auto br = run_noiseless_branches(c);
  ASSERT_EQ(br.size(), 1u);
  EXPECT_EQ(br[0].bits[b], 1);
  EXPECT_NEAR(br[0].state.prob_one(0), 0.0, 1e-12);
}

TEST(Sim, DiscardModelAndMse) {
  EXPECT_NEAR(discard_model(0, 0.01), 0.0, 1e-15);
  EXPECT_NEAR(discard_model(100, 0.01), 1 - std::pow(0.99, 100), 1e-12);
  std::vector<double> x{0.1, 0.4, 0.35, 0.2};
  auto m = mse_stats(x, 0.3);
  double mean = 0.2625, var = 0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= x.size() * x.size();
  EXPECT_NEAR(m.mean, mean, 1e-12);
  EXPECT_NEAR(m.bias, mean - 0.3, 1e-12);
  EXPECT_NEAR(m.var, var, 1e-12);
  EXPECT_NEAR(m.mse, m.bias * m.bias + var, 1e-12);
  EXPECT_THROW(mse_stats({}, 0.0), std::invalid_argument);
}
