#pragma once

// dense reference implementations for the tests, built from Kronecker products of 2x2 matrices

#include <icepite/circuit.hpp>

#include <Eigen/Eigenvalues>

#include <random>
#include <string>
#include <unsupported/Eigen/MatrixFunctions>

namespace dense {

using icepite::CMat;
using icepite::CVec;
using icepite::cplx;

inline CMat single(char l) {
  CMat m(2, 2);
  switch (l) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    case 'H': m << 1, 1, 1, -1; m /= std::sqrt(2.0); break;
    case '+': m << 0, 0, 1, 0; break;  // |1><0|
    case '-': m << 0, 1, 0, 0; break;  // |0><1|
    case '0': m << 1, 0, 0, 0; break;
    case '1': m << 0, 0, 0, 1; break;
    default: throw std::invalid_argument("dense::single");
  }
  return m;
}

inline CMat kron(const CMat& a, const CMat& b) {
  CMat r(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) r.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return r;
}

// text is big-endian: s[0] acts on the highest qubit
inline CMat pauli(const std::string& s) {
  CMat m = CMat::Identity(1, 1);
  for (char c : s) m = kron(m, single(c));
  return m;
}

// one-qubit operator on qubit q of n
inline CMat on(int n, int q, const CMat& g) {
  CMat m = CMat::Identity(1, 1);
  for (int k = n - 1; k >= 0; --k) m = kron(m, k == q ? g : single('I'));
  return m;
}

inline CMat cx(int n, int c, int t) {
  return on(n, c, single('0')) + on(n, c, single('1')) * on(n, t, single('X'));
}

inline CMat expmi(const CMat& h, double t) { return (cplx(0, -t) * h).exp(); }

// Jordan-Wigner annihilator of mode m, occupation of mode m = bit m
inline CMat annihilator(int n_modes, int m) {
  CMat r = CMat::Identity(1, 1);
  for (int k = n_modes - 1; k >= 0; --k) r = kron(r, k == m ? single('-') : k < m ? single('Z') : single('I'));
  return r;
}

inline CVec random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CVec v(std::size_t{1} << n);
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = cplx(g(rng), g(rng));
  return v / v.norm();
}

inline std::string random_pauli(int n, std::mt19937_64& rng) {
  static const char l[4] = {'I', 'X', 'Y', 'Z'};
  std::string s(n, 'I');
  for (auto& c : s) c = l[rng() % 4];
  return s;
}

// min over global phases of max |a - e^{i t} b|
inline double phase_diff(const CMat& a, const CMat& b) {
  cplx ov = (b.adjoint() * a).trace();
  cplx ph = std::abs(ov) > 1e-300 ? ov / std::abs(ov) : cplx(1.0);
  return (a - ph * b).cwiseAbs().maxCoeff();
}

// unitary of a Rot-only circuit from dense exponentials
inline CMat rot_circuit_unitary(const icepite::Circuit& c) {
  CMat u = CMat::Identity(1 << c.n_wires, 1 << c.n_wires);
  for (auto& o : c.ops) {
    if (o.kind != icepite::OpKind::Rot) throw std::logic_error("rot_circuit_unitary: Rot ops only");
    u = expmi(pauli(o.string.str()), o.angle / 2) * u;
  }
  return u;
}

// <0| U |0> on the remaining register, qubit 0 traced against |0>
inline CMat low_qubit_zero_block(const CMat& u) {
  Eigen::Index dim = u.rows() / 2;
  CMat b(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    for (Eigen::Index j = 0; j < dim; ++j) b(i, j) = u(2 * i, 2 * j);
  return b;
}

}  // namespace dense
