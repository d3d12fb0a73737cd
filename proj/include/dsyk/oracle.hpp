#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "dsyk/majorana.hpp"
#include "dsyk/params.hpp"

namespace dsyk {

// Two identical SYK copies on one 2N-site Jordan-Wigner register: left
// Majoranas on sites 0..N-1, right on N..2N-1, so the two sides anticommute.
// Both sides carry the same couplings; H = H_left + H_right on 2^N states.
struct DoubledSyk {
  ModelParams params;
  std::uint64_t seed = 0;
  std::vector<PauliString> left, right;  // interaction terms per side
  std::vector<PauliString> jumps;        // all 2N Majoranas, left block first
  Eigen::MatrixXcd H;                    // dense H_left + H_right
  int nq() const { return params.N; }
  Eigen::Index dim() const { return Eigen::Index{1} << nq(); }
};

DoubledSyk build_doubled(const ModelParams& p, std::uint64_t seed);

// Maximally entangled pair state: the unique joint null vector of the N
// stacked constraints (chi_left,i + i chi_right,i), found by SVD. Throws if
// the null space is not one-dimensional (a Majorana-convention bug).
Eigen::VectorXcd identity_state(const DoubledSyk& d);

// Normalized e^{-beta(H_left+H_right)/4} |I>; beta = inf projects |I> onto
// the ground space of H instead.
Eigen::VectorXcd build_tfd(const DoubledSyk& d, double beta);

// d rho / dt = -i[H, rho] + mu sum_k (chi_k rho chi_k - rho/2), 2N jumps
Eigen::MatrixXcd lindblad_rhs(const DoubledSyk& d, const Eigen::MatrixXcd& rho);

enum class OracleMethod { krylov, rk4, expm };

struct OracleOptions {
  OracleMethod method = OracleMethod::krylov;
  double dt = 0.05;     // outer step; krylov substeps adaptively inside it
  int krylov_dim = 30;
  double tol = 1e-12;   // krylov per-step error target
  bool check = true;    // hermiticity/trace/positivity guards at outputs
};

// propagate rho forward by t; trace and hermiticity are restored to machine
// precision after every step and checked when OracleOptions::check is set
Eigen::MatrixXcd lindblad_evolve(const DoubledSyk& d, Eigen::MatrixXcd rho, double t,
                                 const OracleOptions& o = {});

struct PurityPoint {
  double t = 0.0;
  double gamma = 1.0;  // Tr rho^2 of the normalized state
  double S = 0.0;      // -ln gamma
};

// gamma(t) = Tr rho^2 along the Lindblad evolution of the TFD initial state,
// one disorder realization. N <= 8 only (dim 256 doubled); larger N must use
// the trajectory sampler.
std::vector<PurityPoint> exact_purity_curve(const ModelParams& p, std::uint64_t seed,
                                            const std::vector<double>& t_list,
                                            const OracleOptions& o = {});

// annealed disorder average: S(t) = -ln mean_seeds gamma(t)
struct OracleCurve {
  std::vector<double> t, gamma_mean, S;
  int n_seeds = 0;
};
OracleCurve oracle_entropy(const ModelParams& p, const std::vector<std::uint64_t>& seeds,
                           const std::vector<double>& t_list,
                           const OracleOptions& o = {});

}  // namespace dsyk
