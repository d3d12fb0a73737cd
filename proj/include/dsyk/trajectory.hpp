#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dsyk/majorana.hpp"
#include "dsyk/params.hpp"
#include "dsyk/rng.hpp"

namespace dsyk {

// The replica purity tr P^2 of two jump-coupled copies reduces to a product of
// four independent single-copy trajectory segments: the two bra and two ket
// evolutions of the doubled state. Forward segments carry exp(-iHt), backward
// segments its adjoint; each segment draws its own jump record.
enum class Segment : int { Lp = 0, Rp = 1, Rm = 2, Lm = 3 };

// One jump record: in each time bin of width dt a jump fires with probability
// 1-exp(-mu N dt/2) (the no-jump evolution is unitary because the jump
// operators sum to a multiple of the identity), replacing the bin's unitary by
// sqrt(2) chi_site between the bin's two half-steps.
struct Trajectory {
  Segment segment = Segment::Lp;
  int n_bins = 0;
  double dt = 0.0;
  std::vector<std::pair<int, int>> jumps;  // (bin, site), bins strictly ascending
};

// Draws a record for one segment. Throws if dt does not tile t or if
// mu N dt/2 exceeds 0.05 (bins must be rare-jump).
Trajectory sample_trajectory(const ModelParams& p, double t, double dt,
                             Segment seg, rng::Stream& rng);

// Precomputed single-copy machinery. Dense path (dim <= 1024): full spectrum,
// segments act on kets stored in the energy eigenbasis, kbeta is the diagonal
// of exp(-beta(H-E0)/2) there. Vector path: matrix-free Lanczos steps on
// computational-basis kets; restricted to beta = 0 or beta = infinity (the
// partition function has no cheap matrix-free form in between).
struct Propagators {
  ModelParams params;
  double beta = 0.0;
  bool dense = true;

  Spectrum spec;          // dense path
  Eigen::VectorXd kbeta;  // dense path: thermal half-weights, shifted by E0

  std::vector<PauliString> terms;  // vector path: Hamiltonian terms
  Eigen::MatrixXcd ground;         // vector path, beta = inf: ground columns

  double e0 = 0.0;
  int ground_deg = 1;
  double zbeta = 0.0;  // tr exp(-beta(H-E0)), the squared TFD normalization

  Eigen::Index dim() const { return Eigen::Index{1} << (params.N / 2); }
};

Propagators build_propagators(const SykHamiltonian& H, double beta,
                              bool force_vector = false);

// Applies one segment to a ket (eigenbasis for the dense path, computational
// basis for the vector path). Forward segments (Lp, Rp) run bins ascending
// with exp(-iE dt) phases; backward segments descend with conjugate phases.
void apply_segment(const Propagators& P, const Trajectory& traj,
                   Eigen::VectorXcd& psi);

// The single-copy trace A = tr[U+(Lp) K U+(Rp) U-(Rm) K U-(Lm)] with
// K = exp(-beta(H-E0)/2). E|A|^2 / zbeta^2 is an unbiased purity estimator.
// Exact basis sum; cost dim * (segment cost).
std::complex<double> amplitude(const Propagators& P,
                               const std::array<Trajectory, 4>& trajs);

// One purity sample |A|^2 / zbeta^2. Uses the exact trace when the ket
// dimension (ground block at beta = inf, else full) is <= exact_dim;
// otherwise two independent Rademacher probes z, z' give the unbiased
// Re[(z^dag M z) conj(z'^dag M z')] estimate of |tr M|^2.
double purity_sample(const Propagators& P, const std::array<Trajectory, 4>& trajs,
                     rng::Stream& probe_rng, int exact_dim = 64);

struct TrajOptions {
  double dt_max = 0.05;     // bin width cap; also capped by 0.1/(mu N)
  int n_traj = 1000;        // per disorder realization (rounded up to batches)
  int n_disorder = 1;       // annealed average over coupling draws
  int batch = 100;          // batch-mean size for error bars
  int exact_dim = 64;       // exact trace below this dimension, probes above
  int threads = 1;
  std::uint64_t master_seed = 1;
};

struct PurityEstimate {
  double t = 0.0;
  double gamma_mean = 0.0;
  double gamma_stderr = 0.0;
  double entropy = 0.0;
  double entropy_err = 0.0;
  int n_traj = 0;
  int n_disorder = 0;
  std::uint64_t master_seed = 0;
};

// Monte Carlo purity curve. Deterministic in (options, t_list): couplings for
// realization r use seed mix(master_seed, 0xD150000 + r); trajectory i at time
// index k draws streams Stream(master_seed, r, (k<<32)|i, segment) and probes
// with segment id 4. Thread count never changes the result.
std::vector<PurityEstimate> estimate_purity(const ModelParams& p,
                                            const std::vector<double>& t_list,
                                            const TrajOptions& o);

}  // namespace dsyk
