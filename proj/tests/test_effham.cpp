#include "dense.hpp"

#include <icepite/effham.hpp>
#include <icepite/harness.hpp>

#include <gtest/gtest.h>

#include <algorithm>

using namespace icepite;
using namespace icepite::effham;

namespace {

OrbitalModelParams zrv_like() {
  OrbitalModelParams p;
  p.n_orb = 3;
  p.label = "test";
  p.t.resize(3, 3);
  p.U.resize(3, 3);
  p.J.resize(3, 3);
  p.t << 11.049, -0.9938, 1.0312, -0.9938, 11.1031, 0.994, 1.0312, 0.994, 11.0487;
  p.U << 2.6258, 1.8957, 1.9006, 1.8957, 2.5854, 1.8957, 1.9006, 1.8957, 2.6258;
  p.J << 0, 0.2009, 0.1945, 0.2009, 0, 0.2009, 0.1945, 0.2009, 0;
  return p;
}

// second-quantized H assembled from dense Jordan-Wigner ladder matrices
CMat jw_hamiltonian(const SecondQuantizedHamiltonian& h) {
  int n = h.n_orb, nm = 2 * n;
  std::vector<CMat> a;
  for (int m = 0; m < nm; ++m) a.push_back(dense::annihilator(nm, m));
  CMat r = CMat::Zero(1 << nm, 1 << nm);
  for (int s = 0; s < 2; ++s)
    for (int p = 0; p < n; ++p)
      for (int q = 0; q < n; ++q) r += h.one_body(p, q) * a[p + n * s].adjoint() * a[q + n * s];
  for (int s = 0; s < 2; ++s)
    for (int t = 0; t < 2; ++t)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
              double v = h.v(i, j, k, l);
              if (v != 0.0) r += 0.5 * v * a[i + n * s].adjoint() * a[j + n * t].adjoint() * a[l + n * t] * a[k + n * s];
            }
  return r;
}

std::vector<double> sector_spectrum(const Mat& fock, int n_modes, int n_el) {
  std::vector<int> idx;
  for (int s = 0; s < (1 << n_modes); ++s)
    if (popcount(s) == n_el) idx.push_back(s);
  Mat sub(idx.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i)
    for (std::size_t j = 0; j < idx.size(); ++j) sub(i, j) = fock(idx[i], idx[j]);
  Eigen::SelfAdjointEigenSolver<Mat> es(sub);
  return {es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size()};
}

}  // namespace

TEST(Effham, FockMatrixMatchesJordanWignerProducts) {
  auto h = build_wannier_hamiltonian(zrv_like());
  CMat ref = jw_hamiltonian(h);
  Mat f = fock_matrix(h);
  EXPECT_LT((ref - f.cast<cplx>()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Effham, KsRotationPreservesSpectrum) {
  auto hw = build_wannier_hamiltonian(zrv_like());
  auto hk = to_ks_basis(hw, KsGauge{0.3});
  auto a = sector_spectrum(fock_matrix(hw), 6, 4);
  auto b = sector_spectrum(fock_matrix(hk), 6, 4);
  ASSERT_EQ(a.size(), 15u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
  // one-body part is diagonal after the rotation
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) EXPECT_NEAR(hk.one_body(i, j), 0.0, 1e-12);
  // rotated integrals match a direct contraction
  const Mat& c = hk.rotation;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double direct = 0;
      for (int p = 0; p < 3; ++p)
        for (int q = 0; q < 3; ++q)
          for (int r = 0; r < 3; ++r)
            for (int s = 0; s < 3; ++s) direct += c(p, i) * c(q, j) * c(r, j) * c(s, i) * hw.v(p, q, r, s);
      EXPECT_NEAR(hk.v(i, j, j, i), direct, 1e-10);
    }
}

TEST(Effham, HubbardDimerGroundState) {
  OrbitalModelParams p;
  p.n_orb = 2;
  p.t = Mat::Zero(2, 2);
  p.U = Mat::Zero(2, 2);
  p.J = Mat::Zero(2, 2);
  double tau = 0.7, u = 3.1;
  p.t(0, 1) = p.t(1, 0) = -tau;
  p.U(0, 0) = p.U(1, 1) = u;
  auto r = fci_diagonalize(build_wannier_hamiltonian(p), 2);
  EXPECT_NEAR(r.energies[0], 0.5 * (u - std::sqrt(u * u + 16 * tau * tau)), 1e-12);
  EXPECT_NEAR(r.s2_values[0], 0.0, 1e-12);
  // the triplet sits at zero energy
  int trip = 0;
  for (int k = 0; k < r.energies.size(); ++k)
    if (std::abs(r.s2_values[k] - 2.0) < 1e-9) {
      EXPECT_NEAR(r.energies[k], 0.0, 1e-12);
      ++trip;
    }
  EXPECT_EQ(trip, 3);
}

TEST(Effham, SectorSizesAndSpin) {
  auto h = to_ks_basis(build_wannier_hamiltonian(zrv_like()));
  auto all = fci_diagonalize(h, 4);
  auto sz0 = fci_diagonalize(h, 4, 0.0);
  EXPECT_EQ(all.dets.size(), 15u);
  EXPECT_EQ(sz0.dets.size(), 9u);
  for (double s2 : all.s2_values) {
    double s = 0.5 * (-1 + std::sqrt(1 + 4 * s2));
    EXPECT_NEAR(s, std::round(s), 1e-8);
  }
  // Sz = 0 spectrum is a subset of the full one
  for (int k = 0; k < sz0.energies.size(); ++k) {
    double best = 1e9;
    for (int j = 0; j < all.energies.size(); ++j) best = std::min(best, std::abs(all.energies[j] - sz0.energies[k]));
    EXPECT_LT(best, 1e-10);
  }
}

TEST(Effham, ExcitationTableStructure) {
  auto h = to_ks_basis(build_wannier_hamiltonian(zrv_like()));
  auto t = excitation_table(fci_diagonalize(h, 4));
  ASSERT_TRUE(t.diagnostic.empty()) << t.diagnostic;
  ASSERT_EQ(t.rows.size(), 5u);
  EXPECT_EQ(t.rows[0].name, "3A2->3E");
  auto& gs = t.multiplets.front();
  EXPECT_NEAR(gs.s2, 2.0, 1e-6);
  EXPECT_EQ(gs.degeneracy, 3);
  for (auto& r : t.rows) EXPECT_LE(r.lo, r.hi);
  // 3A2->1A1 = 3A2->1E + 1E->1A1
  EXPECT_NEAR(t.row("3A2->1A1").lo, t.row("3A2->1E").hi + t.row("1E->1A1").lo, 1e-9);
}

TEST(Effham, ParseSystemData) {
  auto d = parse_system_data("# c\nlabel X\n2\n1 1 1.0 2.0 0\n2 2 1.5 2.5 0\n1 2 -0.3 1.0 0.2\ngauge_deg 30\ninit_signs 1 -1 1\n");
  EXPECT_EQ(d.params.label, "X");
  EXPECT_EQ(d.params.n_orb, 2);
  EXPECT_DOUBLE_EQ(d.params.t(1, 0), -0.3);
  EXPECT_DOUBLE_EQ(d.params.J(0, 1), 0.2);
  EXPECT_DOUBLE_EQ(d.calib.gauge_deg, 30);
  EXPECT_EQ(d.calib.init_signs, (std::vector<int>{1, -1, 1}));
  EXPECT_THROW(parse_system_data("1 1 1 1 0\n"), std::runtime_error);
  EXPECT_THROW(parse_system_data("# empty\n"), std::runtime_error);
  EXPECT_THROW(parse_system_data("2\n1 3 0 1 0\n"), std::runtime_error);
  EXPECT_THROW(parse_system_data("2\nbogus 1\n"), std::runtime_error);
  EXPECT_THROW(parse_system_data("2\n1 1 0 -1 0\n2 2 0 1 0\n"), std::invalid_argument);
  EXPECT_THROW(load_system_data("/nonexistent/file.dat"), std::runtime_error);
}

TEST(Effham, ShippedDataFilesLoad) {
  for (std::string s : {"zrv", "hfv", "tiv", "nv"})
    for (std::string f : {"hse", "pbe"}) {
      auto d = load_system_data(harness::data_file(harness::default_data_dir(), s, f));
      EXPECT_EQ(d.params.n_orb, 3) << s << f;
    }
}

TEST(Effham, FciJsonExport) {
  auto h = to_ks_basis(build_wannier_hamiltonian(zrv_like()));
  auto r = fci_diagonalize(h, 4);
  auto t = excitation_table(r);
  auto j = fci_to_json(r, 3, &t);
  EXPECT_EQ(j["n_electrons"], 4);
  EXPECT_EQ(j["sz"], "all");
  EXPECT_EQ(j["states"].size(), 15u);
  EXPECT_EQ(j["excitations"].size(), 5u);
  double norm = 0;
  for (double c : j["states"][0]["coefficients"]) norm += c * c;
  EXPECT_NEAR(norm, 1.0, 1e-12);
  EXPECT_EQ(j["states"][0]["spin"], "triplet");
}

TEST(Effham, ExtrapolationFitRecoversParameters) {
  std::vector<std::pair<double, double>> pts;
  for (double x : {5.0, 8.0, 12.0, 16.0, 20.0, 30.0}) pts.push_back({x, 0.4 * std::exp(-x / 7.0) + 1.9});
  auto f = fit_extrapolation(pts);
  EXPECT_NEAR(f.b, 0.4, 1e-6);
  EXPECT_NEAR(f.c, 7.0, 1e-5);
  EXPECT_NEAR(f.e_inf, 1.9, 1e-7);
  EXPECT_THROW(fit_extrapolation({{1, 1}, {2, 2}}), std::invalid_argument);
}
