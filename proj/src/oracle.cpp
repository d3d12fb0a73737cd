#include "dsyk/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace dsyk {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

int parity(std::uint64_t v) { return std::popcount(v) & 1; }

// P rho P^dag for a single Pauli string: an index-remapped, sign-flipped copy
void accumulate_conjugation(const PauliString& P, const Eigen::MatrixXcd& rho,
                            double scale, Eigen::MatrixXcd& out) {
  const Eigen::Index D = rho.rows();
  const double w = scale * std::norm(P.coeff);
  for (Eigen::Index b = 0; b < D; ++b) {
    const double sb = parity(P.zmask & static_cast<std::uint64_t>(b)) ? -1.0 : 1.0;
    const auto bx = static_cast<Eigen::Index>(static_cast<std::uint64_t>(b) ^ P.xmask);
    for (Eigen::Index a = 0; a < D; ++a) {
      const double sa = parity(P.zmask & static_cast<std::uint64_t>(a)) ? -1.0 : 1.0;
      out(static_cast<Eigen::Index>(static_cast<std::uint64_t>(a) ^ P.xmask), bx) +=
          w * sa * sb * rho(a, b);
    }
  }
}

void hermitize(Eigen::MatrixXcd& rho) { rho = (0.5 * (rho + rho.adjoint())).eval(); }

double frob_dot_real(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
  return (A.conjugate().cwiseProduct(B)).sum().real();
}

std::complex<double> frob_dot(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
  return (A.conjugate().cwiseProduct(B)).sum();
}

// e^{tau L} rho by Arnoldi in the Frobenius inner product, adaptive substeps
Eigen::MatrixXcd arnoldi_expv(const DoubledSyk& d, const Eigen::MatrixXcd& rho,
                              double tau, int m_max, double tol) {
  const double nrm0 = std::sqrt(frob_dot_real(rho, rho));
  if (nrm0 == 0.0 || tau == 0.0) return rho;
  for (int nsub = 1; nsub <= (1 << 12); nsub *= 2) {
    const double ts = tau / nsub;
    Eigen::MatrixXcd v = rho;
    bool ok = true;
    for (int step = 0; step < nsub && ok; ++step) {
      const double beta0 = std::sqrt(frob_dot_real(v, v));
      if (beta0 == 0.0) return v;
      std::vector<Eigen::MatrixXcd> V;
      V.push_back(v / beta0);
      Eigen::MatrixXcd Hm = Eigen::MatrixXcd::Zero(m_max + 1, m_max);
      int m = 0;
      bool happy = false;
      while (m < m_max) {
        Eigen::MatrixXcd w = lindblad_rhs(d, V[m]);
        for (int pass = 0; pass < 2; ++pass)
          for (int i = 0; i <= m; ++i) {
            const std::complex<double> h = frob_dot(V[i], w);
            Hm(i, m) += h;
            w -= h * V[i];
          }
        const double hn = std::sqrt(frob_dot_real(w, w));
        Hm(m + 1, m) = hn;
        ++m;
        if (hn < 1e-14) {
          happy = true;
          break;
        }
        if (m < m_max) V.push_back(w / hn);
      }
      Eigen::MatrixXcd E = (ts * Hm.topLeftCorner(m, m)).exp();
      if (!happy) {
        const double err = beta0 * std::abs(Hm(m, m - 1)) * std::abs(E(m - 1, 0));
        if (err > tol * std::max(1.0, beta0)) {
          ok = false;
          break;
        }
      }
      Eigen::MatrixXcd next = Eigen::MatrixXcd::Zero(v.rows(), v.cols());
      for (int i = 0; i < m; ++i) next += (beta0 * E(i, 0)) * V[i];
      v = std::move(next);
    }
    if (ok) return v;
  }
  throw std::runtime_error("Lindblad Krylov propagator failed to converge");
}

Eigen::MatrixXcd superoperator(const DoubledSyk& d) {
  const Eigen::Index D = d.dim();
  Eigen::MatrixXcd S(D * D, D * D);
  Eigen::MatrixXcd unit = Eigen::MatrixXcd::Zero(D, D);
  for (Eigen::Index c = 0; c < D * D; ++c) {
    unit(c % D, c / D) = 1.0;
    Eigen::MatrixXcd col = lindblad_rhs(d, unit);
    S.col(c) = Eigen::Map<Eigen::VectorXcd>(col.data(), D * D);
    unit(c % D, c / D) = 0.0;
  }
  return S;
}

void check_state(const Eigen::MatrixXcd& rho, const char* where) {
  const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  const double tr = std::abs(rho.trace() - 1.0);
  if (herm > 1e-10 || tr > 1e-8) {
    std::ostringstream msg;
    msg << "state invariant violated (" << where << "): |rho - rho^dag| = " << herm
        << ", |tr - 1| = " << tr;
    throw std::runtime_error(msg.str());
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) {
    std::ostringstream msg;
    msg << "positivity violated (" << where
        << "): min eigenvalue = " << es.eigenvalues().minCoeff();
    throw std::runtime_error(msg.str());
  }
}

}  // namespace

DoubledSyk build_doubled(const ModelParams& p, std::uint64_t seed) {
  p.validate();
  if (p.N > 16) throw std::invalid_argument("doubled register exceeds 16 qubits");
  DoubledSyk d;
  d.params = p;
  d.seed = seed;
  d.left = syk_terms(p, seed, 0, p.N);
  d.right = syk_terms(p, seed, p.N, p.N);
  for (int s = 0; s < 2 * p.N; ++s) d.jumps.push_back(majorana_site(s));
  std::vector<PauliString> all = d.left;
  all.insert(all.end(), d.right.begin(), d.right.end());
  d.H = dense_matrix(all, p.N);
  return d;
}

Eigen::VectorXcd identity_state(const DoubledSyk& d) {
  const Eigen::Index D = d.dim();
  const int N = d.params.N;
  Eigen::MatrixXcd A(Eigen::Index{N} * D, D);
  for (int i = 0; i < N; ++i)
    A.middleRows(Eigen::Index{i} * D, D) =
        dense_pauli(d.jumps[i], d.nq()) + kI * dense_pauli(d.jumps[N + i], d.nq());
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv[D - 1] > 1e-10 || (D > 1 && sv[D - 2] < 0.1))
    throw std::runtime_error("pair-constraint null space is not one-dimensional");
  Eigen::VectorXcd v = svd.matrixV().col(D - 1);
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  v *= std::abs(v[imax]) / v[imax];  // deterministic phase
  return v / v.norm();
}

Eigen::VectorXcd build_tfd(const DoubledSyk& d, double beta) {
  Eigen::VectorXcd I0 = identity_state(d);
  if (beta == 0.0) return I0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(d.H);
  const Eigen::VectorXd& E = es.eigenvalues();
  Eigen::VectorXcd y = es.eigenvectors().adjoint() * I0;
  if (std::isinf(beta)) {
    const double cut = E[0] + 1e-8 * std::max(1.0, std::abs(E[0]));
    for (Eigen::Index k = 0; k < y.size(); ++k)
      if (E[k] > cut) y[k] = 0.0;
  } else {
    y.array() *= (-(beta / 4.0) * (E.array() - E[0])).exp();
  }
  const double n = y.norm();
  if (n < 1e-12) throw std::runtime_error("TFD projection vanished");
  return es.eigenvectors() * (y / n);
}

Eigen::MatrixXcd lindblad_rhs(const DoubledSyk& d, const Eigen::MatrixXcd& rho) {
  const double mu = d.params.mu;
  Eigen::MatrixXcd out = -kI * (d.H * rho - rho * d.H);
  if (mu > 0.0) {
    out -= (mu * d.params.N) * rho;
    for (const auto& chi : d.jumps) accumulate_conjugation(chi, rho, mu, out);
  }
  return out;
}

Eigen::MatrixXcd lindblad_evolve(const DoubledSyk& d, Eigen::MatrixXcd rho, double t,
                                 const OracleOptions& o) {
  if (t < 0) throw std::invalid_argument("negative evolution time");
  if (o.dt <= 0) throw std::invalid_argument("step must be positive");
  if (o.method == OracleMethod::expm) {
    if (d.params.N > 4)
      throw std::invalid_argument(
          "dense superoperator exponential is limited to N <= 4");
    const Eigen::Index D = d.dim();
    const Eigen::MatrixXcd S = superoperator(d);
    const int nfull = static_cast<int>(t / o.dt);
    const double rem = t - nfull * o.dt;
    Eigen::Map<Eigen::VectorXcd> v(rho.data(), D * D);
    if (nfull > 0) {
      const Eigen::MatrixXcd E = (o.dt * S).exp();
      for (int k = 0; k < nfull; ++k) v = (E * v).eval();
    }
    if (rem > 1e-14) v = ((rem * S).exp() * v).eval();
    hermitize(rho);
  } else if (o.method == OracleMethod::rk4) {
    const int nstep = std::max(1, static_cast<int>(std::ceil(t / o.dt)));
    const double h = t / nstep;
    for (int k = 0; k < nstep; ++k) {
      Eigen::MatrixXcd k1 = lindblad_rhs(d, rho);
      Eigen::MatrixXcd k2 = lindblad_rhs(d, rho + 0.5 * h * k1);
      Eigen::MatrixXcd k3 = lindblad_rhs(d, rho + 0.5 * h * k2);
      Eigen::MatrixXcd k4 = lindblad_rhs(d, rho + h * k3);
      rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      const double tr = rho.trace().real();
      if (std::abs(tr - 1.0) > 1e-8 * std::max(1.0, h))
        throw std::runtime_error("rk4 trace drift beyond guard");
      rho /= tr;
      hermitize(rho);
    }
  } else {
    double done = 0.0;
    while (done < t - 1e-14) {
      const double step = std::min(o.dt, t - done);
      rho = arnoldi_expv(d, rho, step, o.krylov_dim, o.tol);
      hermitize(rho);
      rho /= rho.trace().real();
      done += step;
    }
  }
  if (o.check) check_state(rho, "lindblad_evolve");
  return rho;
}

std::vector<PurityPoint> exact_purity_curve(const ModelParams& p, std::uint64_t seed,
                                            const std::vector<double>& t_list,
                                            const OracleOptions& o) {
  p.validate();
  if (p.N > 8)
    throw std::invalid_argument(
        "exact evolution capped at N = 8; use the trajectory sampler beyond that");
  if (!std::is_sorted(t_list.begin(), t_list.end()))
    throw std::invalid_argument("t_list must ascend");
  DoubledSyk d = build_doubled(p, seed);
  Eigen::VectorXcd tfd = build_tfd(d, p.beta);
  Eigen::MatrixXcd rho = tfd * tfd.adjoint();
  std::vector<PurityPoint> out;
  double now = 0.0;
  for (double t : t_list) {
    if (t < 0) throw std::invalid_argument("negative time");
    rho = lindblad_evolve(d, rho, t - now, o);
    now = t;
    PurityPoint pt;
    pt.t = t;
    pt.gamma = rho.squaredNorm();  // tr rho^2 for hermitian rho
    pt.S = -std::log(pt.gamma);
    out.push_back(pt);
  }
  return out;
}

OracleCurve oracle_entropy(const ModelParams& p, const std::vector<std::uint64_t>& seeds,
                           const std::vector<double>& t_list,
                           const OracleOptions& o) {
  if (seeds.empty()) throw std::invalid_argument("need at least one seed");
  OracleCurve c;
  c.t = t_list;
  c.n_seeds = static_cast<int>(seeds.size());
  c.gamma_mean.assign(t_list.size(), 0.0);
  for (std::uint64_t s : seeds) {
    auto pts = exact_purity_curve(p, s, t_list, o);
    for (std::size_t k = 0; k < pts.size(); ++k) c.gamma_mean[k] += pts[k].gamma;
  }
  for (double& g : c.gamma_mean) g /= c.n_seeds;
  for (double g : c.gamma_mean) c.S.push_back(-std::log(g));
  return c;
}

}  // namespace dsyk
