#include "dense.hpp"

#include <icepite/iceberg.hpp>
#include <icepite/sim.hpp>

#include <gtest/gtest.h>

using namespace icepite;
using namespace icepite::iceberg;

namespace {

double expect(const sim::State& s, const PauliString& p) {
  CVec v = dense::pauli(p.str()) * s.amp;
  return s.amp.dot(v).real();
}

PauliString logical(int k, int q, char l) { return PauliString::single(k, q, l); }

// encoded |0000> with all ancilla bits zero
sim::State encoded_zero(const IcebergLayout& L) {
  auto br = sim::run_noiseless_branches(encode_zero_circuit(L));
  EXPECT_EQ(br.size(), 1u);
  EXPECT_EQ(br[0].bits[0], 0);
  return br[0].state;
}

}  // namespace

TEST(Iceberg, LayoutValidation) {
  EXPECT_THROW(IcebergLayout(3), std::invalid_argument);
  EXPECT_THROW(IcebergLayout(0), std::invalid_argument);
  IcebergLayout L(4);
  EXPECT_EQ(L.n_wires(), 8);
  EXPECT_EQ(L.sx().str(), "IIXXXXXX");
  EXPECT_EQ(L.sz().str(), "IIZZZZZZ");
}

TEST(Iceberg, LogicalImagesFormPauliAlgebra) {
  IcebergLayout L(4);
  std::vector<std::pair<std::string, CMat>> imgs;
  for (int q = 0; q < 4; ++q)
    for (char l : {'X', 'Y', 'Z'}) {
      auto im = logical_image(logical(4, q, l), L);
      // commutes with both stabilizers
      EXPECT_TRUE(im.p.commutes(L.sx()));
      EXPECT_TRUE(im.p.commutes(L.sz()));
      imgs.push_back({std::string(1, l) + std::to_string(q), ipow(im.k) * dense::pauli(im.p.str())});
    }
  // same commutation table as the bare logical Paulis
  for (std::size_t a = 0; a < imgs.size(); ++a)
    for (std::size_t b = 0; b < imgs.size(); ++b) {
      int qa = imgs[a].first[1] - '0', qb = imgs[b].first[1] - '0';
      bool want = qa != qb || imgs[a].first[0] == imgs[b].first[0];
      bool got = (imgs[a].second * imgs[b].second - imgs[b].second * imgs[a].second).cwiseAbs().maxCoeff() < 1e-12;
      EXPECT_EQ(got, want) << imgs[a].first << " " << imgs[b].first;
    }
  // Y = i X Z holds for images too
  for (int q = 0; q < 4; ++q) {
    CMat x = imgs[3 * q].second, y = imgs[3 * q + 1].second, z = imgs[3 * q + 2].second;
    EXPECT_LT((y - cplx(0, 1) * x * z).cwiseAbs().maxCoeff(), 1e-12);
  }
  // stabilizer multiples are equivalent representatives
  auto reps = representatives(PauliString::parse("XZIY"), L);
  ASSERT_EQ(reps.size(), 4u);
  for (std::size_t i = 1; i < reps.size(); ++i) EXPECT_LE(reps[i - 1].p.weight(), reps[i].p.weight());
}

TEST(Iceberg, EncodedZeroIsStabilizedCodeState) {
  IcebergLayout L(4);
  auto s = encoded_zero(L);
  EXPECT_NEAR(expect(s, L.sx()), 1.0, 1e-12);
  EXPECT_NEAR(expect(s, L.sz()), 1.0, 1e-12);
  for (int q = 0; q < 4; ++q) {
    auto z = logical_image(logical(4, q, 'Z'), L);
    EXPECT_NEAR(expect(s, z.p) * (z.k == 0 ? 1 : -1), 1.0, 1e-12) << q;
  }
  EXPECT_NEAR(s.prob_one(L.m0()), 0.0, 1e-12);
  EXPECT_NEAR(s.prob_one(L.m1()), 0.0, 1e-12);
  EXPECT_LE(encode_zero_circuit(L).counts().two_qubit, 8u);
}

TEST(Iceberg, SyndromeCircuitDetectsEverySingleQubitError) {
  IcebergLayout L(4);
  auto syn = syndrome_circuit(L);
  EXPECT_EQ(syn.counts().two_qubit, 12u);
  auto base = encoded_zero(L);
  for (int w : L.code_wires())
    for (char l : {'I', 'X', 'Y', 'Z'}) {
      Circuit c = encode_zero_circuit(L);
      if (l != 'I') c.pauli(w, l);
      c.append(syn);
      auto br = sim::run_noiseless_branches(c);
      ASSERT_EQ(br.size(), 1u);
      int bx = c.checks[1].bits[0], bz = c.checks[2].bits[0];
      // X error anticommutes with S_Z, Z error with S_X
      EXPECT_EQ(br[0].bits[bz], (l == 'X' || l == 'Y') ? 1 : 0) << w << l;
      EXPECT_EQ(br[0].bits[bx], (l == 'Z' || l == 'Y') ? 1 : 0) << w << l;
    }
}

TEST(Iceberg, FinalReadoutDecode) {
  IcebergLayout L(4);
  auto d = final_readout_decode({1, 0, 0, 0, 0, 1}, L);  // data 0 and qZ set
  EXPECT_FALSE(d.discard);
  EXPECT_EQ(d.logical, 0b1110u);
  EXPECT_TRUE(final_readout_decode({1, 0, 0, 0, 0, 0}, L).discard);
  EXPECT_EQ(final_readout_decode({1, 1, 0, 0, 0, 0}, L).logical, 0b0011u);
  EXPECT_THROW(final_readout_decode({0, 0}, L), std::invalid_argument);
}

TEST(Iceberg, CompiledRotationsMatchLogicalUnitary) {
  IcebergLayout L(4);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ang(-pi, pi);
  for (int trial = 0; trial < 6; ++trial) {
    Circuit lc(4);
    CMat u = CMat::Identity(16, 16);
    for (int i = 0; i < 6; ++i) {
      std::string s;
      do s = dense::random_pauli(4, rng);
      while (s == "IIII");
      double a = ang(rng);
      lc.rot(PauliString::parse(s), a, Tag::Logical, 2);
      u = dense::expmi(dense::pauli(s), a / 2) * u;
    }
    CompileOptions opt;
    opt.frame_beam = 3;
    opt.frame_blocks = {2};
    Circuit c = encode_and_compile(lc, L, opt);
    auto br = sim::run_noiseless_branches(c);
    ASSERT_EQ(br.size(), 1u);
    const auto& amp = br[0].state.amp;
    // decode the full physical distribution over code wires
    std::vector<double> got(16, 0.0);
    double discarded = 0;
    for (Eigen::Index i = 0; i < amp.size(); ++i) {
      double pr = std::norm(amp[i]);
      if (pr < 1e-15) continue;
      std::vector<int> bits;
      for (int w = 0; w < L.n_code(); ++w) bits.push_back((i >> w) & 1);
      auto d = final_readout_decode(bits, L);
      if (d.discard) discarded += pr;
      else got[d.logical] += pr;
    }
    EXPECT_LT(discarded, 1e-12);
    for (int j = 0; j < 16; ++j) EXPECT_NEAR(got[j], std::norm(u(j, 0)), 1e-10) << trial << " " << j;
  }
}

TEST(Iceberg, FrameSearchDoesNotIncreaseCost) {
  IcebergLayout L(4);
  std::mt19937_64 rng(9);
  Circuit lc(4);
  for (int i = 0; i < 10; ++i) lc.rot(PauliString::parse(dense::random_pauli(4, rng)) , 0.3 + i, Tag::Logical, 2);
  auto count = [&](int beam, std::set<int> blocks) {
    Circuit out(L.n_wires());
    CompileOptions o;
    o.frame_beam = beam;
    o.frame_blocks = blocks;
    return compile_logical(lc, out, L, o);
  };
  EXPECT_LE(count(8, {2}), count(1, {}));
}

TEST(Iceberg, MeasureAndReencodeRestoresCodeSpace) {
  IcebergLayout L(4);
  double theta = 1.1;
  Circuit lc(4);
  lc.rot(PauliString::parse("IIIX"), theta, Tag::Logical);
  lc.rot(PauliString::parse("IXII"), 0.4, Tag::Logical);
  Circuit c = encode_and_compile(lc, L);
  c.append(measure_and_reencode(L, 0));
  auto br = sim::run_noiseless_branches(c);
  double p_success = 0;
  for (auto& b : br) {
    int x = 0;
    for (int bit : c.steps.back().bits) x ^= b.bits[bit];
    if (x == 0) p_success += b.prob;
    EXPECT_EQ(b.bits[c.checks.back().bits[0]], 0);
    EXPECT_NEAR(expect(b.state, L.sx()), 1.0, 1e-10);
    EXPECT_NEAR(expect(b.state, L.sz()), 1.0, 1e-10);
    auto z0 = logical_image(logical(4, 0, 'Z'), L);
    EXPECT_NEAR(expect(b.state, z0.p) * (z0.k == 0 ? 1 : -1), 1.0, 1e-10);
    // the untouched logical qubit keeps <Z> = cos(0.4)
    auto z2 = logical_image(logical(4, 2, 'Z'), L);
    EXPECT_NEAR(expect(b.state, z2.p) * (z2.k == 0 ? 1 : -1), std::cos(0.4), 1e-10);
  }
  EXPECT_NEAR(p_success, std::pow(std::cos(theta / 2), 2), 1e-10);
}
