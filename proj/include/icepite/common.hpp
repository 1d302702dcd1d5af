#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace icepite {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

inline constexpr double pi = 3.14159265358979323846;

inline int popcount(std::uint64_t v) { return __builtin_popcountll(v); }

// symmetric eigensolver, ascending eigenvalues
struct Eigh {
  Vec values;
  Mat vectors;
};

inline Eigh eigh(const Mat& m) {
  Eigen::SelfAdjointEigenSolver<Mat> es(m);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigh: diagonalization failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

struct CEigh {
  Vec values;
  CMat vectors;
};

inline CEigh eigh(const CMat& m) {
  Eigen::SelfAdjointEigenSolver<CMat> es(m);
  if (es.info() != Eigen::Success) throw std::runtime_error("eigh: diagonalization failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

// f(H) for Hermitian H via spectral calculus
template <class F>
CMat spectral_apply(const CMat& h, F f) {
  auto [w, v] = eigh(h);
  CVec d(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) d[i] = f(w[i]);
  return v * d.asDiagonal() * v.adjoint();
}

inline CMat expm_hermitian(const CMat& h, cplx scale) {
  return spectral_apply(h, [&](double x) { return std::exp(scale * x); });
}

inline double classical_fidelity(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("classical_fidelity: support size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw std::invalid_argument("classical_fidelity: negative probability");
    s += std::sqrt(p[i] * q[i]);
  }
  return s * s;
}

}  // namespace icepite
