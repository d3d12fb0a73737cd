#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dsyk/params.hpp"

namespace dsyk {

// coeff * X^xmask Z^zmask, X applied after Z. Bit i of a mask = qubit i.
// Products: (X^a Z^b)(X^c Z^d) = (-1)^{popcount(b & c)} X^{a^c} Z^{b^d}.
// Action on a computational basis ket: X^x Z^z |b> = (-1)^{popcount(z & b)} |b ^ x>.
struct PauliString {
  std::uint64_t xmask = 0;
  std::uint64_t zmask = 0;
  std::complex<double> coeff{1.0, 0.0};
};

PauliString pauli_mul(const PauliString& a, const PauliString& b);

// Jordan-Wigner Majorana with {chi_m, chi_n} = delta_mn (so chi^2 = 1/2):
//   chi_{2j}   = 2^{-1/2} Z_0 .. Z_{j-1} X_j
//   chi_{2j+1} = 2^{-1/2} Z_0 .. Z_{j-1} Y_j
// site must satisfy 0 <= site < 2*nq for an nq-qubit register.
PauliString majorana_site(int site);

// All q-element subsets of {0..N-1} in lexicographic order.
std::vector<std::vector<int>> q_subsets(int N, int q);

// Gaussian couplings J_A, one per lexicographic subset, with
// Var J_A = (q-1)! J^2 / N^{q-1}. Deterministic in (seed, subset rank).
std::vector<double> syk_couplings(const ModelParams& p, std::uint64_t seed);

// Interaction terms i^{q/2} J_A chi_{a1}...chi_{aq}, each folded into a single
// Pauli string. site_offset shifts every Majorana index (used to lay two
// copies on one register); nq_total is the full register width.
std::vector<PauliString> syk_terms(const ModelParams& p, std::uint64_t seed,
                                   int site_offset, int nq_total);

struct SykHamiltonian {
  ModelParams params;
  std::uint64_t seed = 0;
  std::vector<PauliString> terms;
  int nq() const { return params.N / 2; }
  Eigen::Index dim() const { return Eigen::Index{1} << nq(); }
};

SykHamiltonian build_syk(const ModelParams& p, std::uint64_t seed);

Eigen::MatrixXcd dense_pauli(const PauliString& P, int nq);
Eigen::MatrixXcd dense_matrix(const std::vector<PauliString>& terms, int nq);
Eigen::MatrixXcd dense_matrix(const SykHamiltonian& H);

struct Spectrum {
  Eigen::VectorXd evals;
  Eigen::MatrixXcd evecs;  // columns
};
Spectrum diagonalize(const SykHamiltonian& H);

// y += P x and y = sum_terms T x, matrix-free.
void accumulate_pauli(const PauliString& P, const Eigen::VectorXcd& x,
                      Eigen::VectorXcd& y);
void apply_terms(const std::vector<PauliString>& terms, const Eigen::VectorXcd& x,
                 Eigen::VectorXcd& y);

// y = exp(c H) x for Hermitian H given by its term list, Lanczos with full
// reorthogonalization and adaptive substepping.
Eigen::VectorXcd expmv_hermitian(const std::vector<PauliString>& terms,
                                 std::complex<double> c, const Eigen::VectorXcd& x,
                                 int krylov_dim = 40, double tol = 1e-12);

// Lowest eigenvalue and an orthonormal basis of its near-degenerate block,
// matrix-free Lanczos with deflation. degeneracy_tol is absolute.
struct GroundBlock {
  double e0 = 0.0;
  Eigen::MatrixXcd vectors;  // columns; count = detected degeneracy
};
GroundBlock ground_block(const std::vector<PauliString>& terms, int nq,
                         std::uint64_t seed, double degeneracy_tol = 1e-8,
                         int max_vecs = 8);

}  // namespace dsyk
