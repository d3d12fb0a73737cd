#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "dsyk/contour.hpp"
#include "dsyk/params.hpp"

namespace dsyk {

struct SaddleOptions {
  int nsteps = 200;            // real bins per loop round trip
  int nimag = 8;               // thermal bins per half-arc (beta > 0 only)
  double tol = 1e-8;           // max-entry fixed-point residual
  int max_iter = 5000;
  double mix = 0.5;            // damping, adapted downward on oscillation
  double cross_threshold = 0.1;  // |G| between loops that counts as paired
  bool verbose = false;
};

// Replica gluing of the two-loop contour. `diagonal` traces the two loops
// separately (unpaired branch, entropy grows ~ 2 mu N t). `wormhole` is the
// swap-twisted single trace over all four branches; it carries one factor 1/2
// per fermion pair, i.e. +ln2 per fermion in the action, and caps the entropy
// near N ln 2. TrP^2 is the sector sum, so S(t) = min over the two branches.
enum class SaddleSeed { diagonal, wormhole };

struct SaddleSolution {
  int m = 1;
  double t = 0.0;
  bool converged = false;
  int iterations = 0;
  double residual = 0.0;
  double max_cross = 0.0;  // largest |G| between the two loops (m = 2)
  bool paired = false;
  std::complex<double> action{0.0, 0.0};  // on-shell value per fermion
  Eigen::MatrixXcd G;
  std::vector<double> residual_tail;  // fixed-point residuals, newest last
};

// Exact lattice propagator of the bare contour theory. Diagonal gluing:
// (1/2) sgn_c within each loop, zero across loops. Wormhole gluing: one global
// staircase over the twisted cycle loop0-fwd, loop1-bwd, loop1-fwd, loop0-bwd.
// Both are grid exact: at J = 0 the diagonal sector gives S = 2 mu N t and the
// twisted sector gives S = N ln 2 at every step size.
Eigen::MatrixXd free_propagator(const Contour& c,
                                SaddleSeed glue = SaddleSeed::diagonal);

// One-body pairing kernel from the jump channels. Couples each real point to
// its opposite-direction partner with entry +-lambda, lambda = 2 tanh(mu ds/2),
// which makes a J = 0 time bin exact at any step size.
Eigen::MatrixXd dissipative_kernel(const Contour& c, double mu);

// branch factor entering the disorder-averaged interaction
std::complex<double> branch_phase(Branch b);

// Sigma(p,r) = J^2 sigma_p sigma_r G(p,r)^{q-1}
Eigen::MatrixXcd self_energy(const Contour& c, const ModelParams& p,
                             const Eigen::MatrixXcd& G);

// On-shell action per fermion,
//   -(1/2) log det(1 - G0 X) + (J^2/2)(1 - 1/q) sum w w sigma sigma' G^q
//   + m [mu t - nsteps log cosh(mu ds / 2)]  (+ ln 2 on the wormhole gluing),
// with X = W Sigma W + K. Real part is branch-unambiguous; the imaginary part
// is reported modulo 2*pi as a diagnostic.
std::complex<double> contour_action(const ModelParams& p, const Contour& c,
                                    const Eigen::MatrixXcd& G,
                                    SaddleSeed glue = SaddleSeed::diagonal);

// Damped fixed-point iteration of G = (1 - G0 X)^-1 G0 with antisymmetrization
// each step, on the requested gluing. The cold wormhole start is that sector's
// exact J = 0 solution. `init` overrides the seed construction (warm starts).
SaddleSolution solve_saddle(const ModelParams& p, const Contour& c, SaddleSeed seed,
                            const SaddleOptions& o,
                            const Eigen::MatrixXcd* init = nullptr);

// Transfer a bilocal field between grids by per-class bilinear interpolation
// in the branch coordinates (nearest in arc angle).
Eigen::MatrixXcd resample_bilocal(const Contour& from, const Eigen::MatrixXcd& G,
                                  const Contour& to);

struct PageCurve {
  std::vector<double> times;
  std::vector<double> S_diag, S_worm, S_min;  // include the factor N
  std::vector<int> dominant;                  // 0 unpaired, 1 paired branch
  std::vector<double> residual_diag, residual_worm;
  std::vector<char> worm_paired;  // classification of the paired-seed solution
  double page_time = -1.0;        // entropy crossing; < 0 when none found
  double slope_gap = 0.0;         // [dS/dt drop across the crossing] / (mu N)
};

PageCurve page_curve(const ModelParams& p, const std::vector<double>& t_list,
                     const SaddleOptions& o);

struct GapPoint {
  double mu = 0.0;
  double slope_gap = 0.0;
  double page_time = -1.0;
};

// Slope-gap scan over mu. When t_list is empty each mu gets a window around
// its estimated crossing time ln2 / (2 mu).
std::vector<GapPoint> critical_mu_scan(ModelParams p, const std::vector<double>& mu_list,
                                       const SaddleOptions& o,
                                       const std::vector<double>& t_list = {});

// Interpolated mu at which the slope gap falls through eps_gap.
double critical_mu_estimate(const std::vector<GapPoint>& scan, double eps_gap = 0.2);

}  // namespace dsyk
