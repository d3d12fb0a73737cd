#include "dsyk/trajectory.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace dsyk {

namespace {

using cplx = std::complex<double>;

bool forward_segment(Segment s) {
  return s == Segment::Lp || s == Segment::Rp;
}

// psi *= exp(-i dir E T) elementwise (dense path, eigenbasis kets)
void advance_dense(const Eigen::VectorXd& evals, double dir, double T,
                   Eigen::VectorXcd& psi) {
  if (T <= 0.0) return;
  psi.array() *= (cplx(0.0, -dir * T) * evals.array().cast<cplx>()).exp();
}

void jump_dense(const Propagators& P, int site, Eigen::VectorXcd& psi) {
  Eigen::VectorXcd comp = P.spec.evecs * psi;
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(comp.size());
  accumulate_pauli(majorana_site(site), comp, y);
  psi.noalias() = P.spec.evecs.adjoint() * (std::numbers::sqrt2 * y).eval();
}

void jump_vector(int site, Eigen::VectorXcd& psi) {
  Eigen::VectorXcd y = Eigen::VectorXcd::Zero(psi.size());
  accumulate_pauli(majorana_site(site), psi, y);
  psi = std::numbers::sqrt2 * y;
}

// K psi: thermal half-weights (dense) or ground projector / identity (vector)
void apply_kbeta(const Propagators& P, Eigen::VectorXcd& psi) {
  if (P.dense) {
    psi.array() *= P.kbeta.array();
  } else if (std::isinf(P.beta)) {
    psi = P.ground * (P.ground.adjoint() * psi).eval();
  }  // beta = 0: identity
}

// psi <- [K U+(Rp) U-(Rm) K U-(Lm) U+(Lp)] psi, the cyclic rotation of the
// amplitude operator that puts a thermal factor leftmost.
void apply_chain(const Propagators& P, const std::array<Trajectory, 4>& trajs,
                 Eigen::VectorXcd& psi) {
  apply_segment(P, trajs[static_cast<int>(Segment::Lp)], psi);
  apply_segment(P, trajs[static_cast<int>(Segment::Lm)], psi);
  apply_kbeta(P, psi);
  apply_segment(P, trajs[static_cast<int>(Segment::Rm)], psi);
  apply_segment(P, trajs[static_cast<int>(Segment::Rp)], psi);
}

}  // namespace

Trajectory sample_trajectory(const ModelParams& p, double t, double dt,
                             Segment seg, rng::Stream& rng) {
  if (t < 0.0) throw std::invalid_argument("trajectory time must be nonnegative");
  Trajectory tr;
  tr.segment = seg;
  tr.dt = dt;
  if (t == 0.0) return tr;
  if (dt <= 0.0) throw std::invalid_argument("bin width must be positive");
  const long nb = std::lround(t / dt);
  if (nb < 1 || std::abs(static_cast<double>(nb) * dt - t) > 1e-9 * std::max(1.0, t))
    throw std::invalid_argument("bin width must tile the evolution time");
  if (p.mu * p.N * dt / 2.0 > 0.05 + 1e-12)
    throw std::invalid_argument(
        "bin width too coarse for the jump rate: need mu N dt / 2 <= 0.05");
  tr.n_bins = static_cast<int>(nb);
  const double dp = -std::expm1(-p.mu * p.N * dt / 2.0);
  for (int b = 0; b < tr.n_bins; ++b) {
    if (rng.uniform() < dp) {
      int site = static_cast<int>(rng.uniform() * p.N);
      site = std::min(site, p.N - 1);
      tr.jumps.emplace_back(b, site);
    }
  }
  return tr;
}

Propagators build_propagators(const SykHamiltonian& H, double beta,
                              bool force_vector) {
  if (beta < 0.0) throw std::invalid_argument("beta must be nonnegative");
  Propagators P;
  P.params = H.params;
  P.beta = beta;
  const Eigen::Index D = H.dim();
  P.dense = !force_vector && D <= 1024;
  if (P.dense) {
    P.spec = diagonalize(H);
    P.e0 = P.spec.evals[0];
    const double tol = 1e-8 * std::max(1.0, std::abs(P.e0));
    P.ground_deg = static_cast<int>(
        (P.spec.evals.array() <= P.e0 + tol).count());
    if (beta == 0.0) {
      P.kbeta = Eigen::VectorXd::Ones(D);
      P.zbeta = static_cast<double>(D);
    } else if (std::isinf(beta)) {
      P.kbeta = (P.spec.evals.array() <= P.e0 + tol).cast<double>();
      P.zbeta = static_cast<double>(P.ground_deg);
    } else {
      P.kbeta = (-0.5 * beta * (P.spec.evals.array() - P.e0)).exp();
      P.zbeta = P.kbeta.squaredNorm();
    }
    return P;
  }
  if (H.params.N > 30)
    throw std::invalid_argument("matrix-free trajectory path capped at N = 30");
  if (beta != 0.0 && !std::isinf(beta))
    throw std::invalid_argument(
        "matrix-free path supports beta = 0 or beta = infinity only");
  P.terms = H.terms;
  if (std::isinf(beta)) {
    GroundBlock gb = ground_block(H.terms, H.nq(), rng::mix(H.seed, 0x6B1ull));
    P.ground = gb.vectors;
    P.e0 = gb.e0;
    P.ground_deg = static_cast<int>(gb.vectors.cols());
    P.zbeta = static_cast<double>(P.ground_deg);
  } else {
    P.zbeta = static_cast<double>(D);
  }
  return P;
}

void apply_segment(const Propagators& P, const Trajectory& traj,
                   Eigen::VectorXcd& psi) {
  const bool fwd = forward_segment(traj.segment);
  const double dir = fwd ? 1.0 : -1.0;
  const double dt = traj.dt;
  auto advance = [&](double T) {
    if (T <= 0.0) return;
    if (P.dense)
      advance_dense(P.spec.evals, dir, T, psi);
    else
      // bins are short (|H| dt << 1), so a small Krylov block converges and
      // the stored basis stays ~20 * 16 * 2^N bytes; the subdivision
      // fallback inside expmv guards accuracy
      psi = expmv_hermitian(P.terms, cplx(0.0, -dir * T), psi, 20);
  };
  auto jump = [&](int site) {
    if (P.dense)
      jump_dense(P, site, psi);
    else
      jump_vector(site, psi);
  };
  if (traj.n_bins == 0) return;
  const auto& J = traj.jumps;
  if (J.empty()) {
    advance(traj.n_bins * dt);
    return;
  }
  // jump bins split as half-step, Majorana, half-step (midpoint placement);
  // backward segments are the exact adjoint, so they replay jumps in reverse
  const std::size_t m = J.size();
  if (fwd) {
    advance(J[0].first * dt + 0.5 * dt);
    jump(J[0].second);
    for (std::size_t j = 1; j < m; ++j) {
      advance((J[j].first - J[j - 1].first) * dt);
      jump(J[j].second);
    }
    advance((traj.n_bins - 1 - J[m - 1].first) * dt + 0.5 * dt);
  } else {
    advance((traj.n_bins - 1 - J[m - 1].first) * dt + 0.5 * dt);
    jump(J[m - 1].second);
    for (std::size_t j = m - 1; j-- > 0;) {
      advance((J[j + 1].first - J[j].first) * dt);
      jump(J[j].second);
    }
    advance(J[0].first * dt + 0.5 * dt);
  }
}

std::complex<double> amplitude(const Propagators& P,
                               const std::array<Trajectory, 4>& trajs) {
  const Eigen::Index D = P.dim();
  if (!P.dense && std::isinf(P.beta)) {
    // tr[G Gd A G Gd B] = tr[(Gd A G)(Gd B G)] over the ground block
    const int g = P.ground_deg;
    Eigen::MatrixXcd A(g, g), B(g, g);
    for (int j = 0; j < g; ++j) {
      Eigen::VectorXcd v = P.ground.col(j);
      apply_segment(P, trajs[static_cast<int>(Segment::Lp)], v);
      apply_segment(P, trajs[static_cast<int>(Segment::Lm)], v);
      B.col(j) = P.ground.adjoint() * v;
      Eigen::VectorXcd w = P.ground.col(j);
      apply_segment(P, trajs[static_cast<int>(Segment::Rm)], w);
      apply_segment(P, trajs[static_cast<int>(Segment::Rp)], w);
      A.col(j) = P.ground.adjoint() * w;
    }
    return (A * B).trace();
  }
  cplx acc = 0.0;
  for (Eigen::Index b = 0; b < D; ++b) {
    const double wb = P.dense ? P.kbeta[b] : 1.0;
    if (wb == 0.0) continue;
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(D);
    v[b] = 1.0;
    apply_chain(P, trajs, v);
    acc += wb * v[b];
  }
  return acc;
}

double purity_sample(const Propagators& P, const std::array<Trajectory, 4>& trajs,
                     rng::Stream& probe_rng, int exact_dim) {
  const Eigen::Index D = P.dim();
  const Eigen::Index eff = std::isinf(P.beta) ? P.ground_deg : D;
  if (eff <= exact_dim) {
    const cplx A = amplitude(P, trajs);
    return std::norm(A) / (P.zbeta * P.zbeta);
  }
  // two independent Rademacher probes supported where K acts
  auto probe_value = [&]() -> cplx {
    Eigen::VectorXcd z(D);
    if (P.dense) {
      for (Eigen::Index b = 0; b < D; ++b)
        z[b] = P.kbeta[b] > 0.0 ? ((probe_rng.bits() & 1u) ? 1.0 : -1.0) : 0.0;
    } else if (std::isinf(P.beta)) {
      Eigen::VectorXcd r(P.ground_deg);
      for (int j = 0; j < P.ground_deg; ++j)
        r[j] = (probe_rng.bits() & 1u) ? 1.0 : -1.0;
      z = P.ground * r;
    } else {
      for (Eigen::Index b = 0; b < D; ++b)
        z[b] = (probe_rng.bits() & 1u) ? 1.0 : -1.0;
    }
    Eigen::VectorXcd v = z;
    apply_chain(P, trajs, v);
    apply_kbeta(P, v);
    return z.dot(v);  // z^dag [K A K B] z
  };
  const cplx s1 = probe_value();
  const cplx s2 = probe_value();
  return (s1 * std::conj(s2)).real() / (P.zbeta * P.zbeta);
}

std::vector<PurityEstimate> estimate_purity(const ModelParams& p,
                                            const std::vector<double>& t_list,
                                            const TrajOptions& o) {
  p.validate();
  if (o.n_traj < 1 || o.n_disorder < 1 || o.batch < 1 || o.threads < 1)
    throw std::invalid_argument("sampler options must be positive");
  if (o.dt_max <= 0.0) throw std::invalid_argument("dt_max must be positive");
  for (double t : t_list)
    if (t < 0.0) throw std::invalid_argument("times must be nonnegative");

  const int batch = std::min(o.batch, std::max(1, o.n_traj / 2));
  const int n_batches = (o.n_traj + batch - 1) / batch;
  const int n_eff = n_batches * batch;
  const int R = o.n_disorder;
  const int K = static_cast<int>(t_list.size());

  struct Grid {
    int nb = 0;
    double dt = 0.0;
  };
  std::vector<Grid> grid(K);
  double cap = o.dt_max;
  if (p.mu > 0.0) cap = std::min(cap, 0.1 / (p.mu * p.N));
  for (int k = 0; k < K; ++k) {
    if (t_list[k] == 0.0) continue;
    const int nb = std::max(1, static_cast<int>(std::ceil(t_list[k] / cap - 1e-12)));
    grid[k] = {nb, t_list[k] / nb};
  }

  std::vector<Propagators> prop;
  prop.reserve(R);
  for (int r = 0; r < R; ++r) {
    const std::uint64_t seed = rng::mix(o.master_seed, 0xD150000ull + r);
    prop.push_back(build_propagators(build_syk(p, seed), p.beta));
  }

  // slot-per-batch layout keeps the reduction independent of scheduling
  std::vector<double> slot(static_cast<std::size_t>(R) * K * n_batches, 0.0);
  std::atomic<int> next{0};
  const int n_tasks = R * K * n_batches;
  auto worker = [&]() {
    for (;;) {
      const int task = next.fetch_add(1);
      if (task >= n_tasks) return;
      const int r = task / (K * n_batches);
      const int k = (task / n_batches) % K;
      const int j = task % n_batches;
      const Grid& g = grid[k];
      double sum = 0.0;
      for (int i = j * batch; i < (j + 1) * batch; ++i) {
        const std::uint64_t b =
            (static_cast<std::uint64_t>(k) << 32) | static_cast<std::uint64_t>(i);
        std::array<Trajectory, 4> tr;
        for (int s = 0; s < 4; ++s) {
          rng::Stream st(o.master_seed, r, b, static_cast<std::uint64_t>(s));
          tr[s] = sample_trajectory(p, t_list[k], g.nb ? g.dt : 0.0,
                                    static_cast<Segment>(s), st);
        }
        rng::Stream probe(o.master_seed, r, b, 4);
        sum += purity_sample(prop[r], tr, probe, o.exact_dim);
      }
      slot[static_cast<std::size_t>(task)] = sum / batch;
    }
  };
  if (o.threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(o.threads);
    for (int w = 0; w < o.threads; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::vector<PurityEstimate> out(K);
  for (int k = 0; k < K; ++k) {
    double mean = 0.0, var = 0.0;
    for (int r = 0; r < R; ++r) {
      const double* s = slot.data() +
                        (static_cast<std::size_t>(r) * K + k) * n_batches;
      double m = 0.0;
      for (int j = 0; j < n_batches; ++j) m += s[j];
      m /= n_batches;
      double v = 0.0;
      for (int j = 0; j < n_batches; ++j) v += (s[j] - m) * (s[j] - m);
      if (n_batches > 1) v /= static_cast<double>(n_batches - 1) * n_batches;
      mean += m;
      var += v;
    }
    mean /= R;
    var /= static_cast<double>(R) * R;
    PurityEstimate e;
    e.t = t_list[k];
    e.gamma_mean = mean;
    e.gamma_stderr = std::sqrt(var);
    e.entropy = -std::log(mean);  // NaN when noise drives the mean negative
    e.entropy_err = e.gamma_stderr / mean;
    e.n_traj = n_eff;
    e.n_disorder = R;
    e.master_seed = o.master_seed;
    out[k] = e;
  }
  return out;
}

}  // namespace dsyk
