#include "dsyk/majorana.hpp"

#include <bit>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "dsyk/rng.hpp"

namespace dsyk {

namespace {
constexpr std::complex<double> kI{0.0, 1.0};
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

int parity(std::uint64_t v) { return std::popcount(v) & 1; }
}  // namespace

PauliString pauli_mul(const PauliString& a, const PauliString& b) {
  PauliString r;
  r.xmask = a.xmask ^ b.xmask;
  r.zmask = a.zmask ^ b.zmask;
  r.coeff = a.coeff * b.coeff * (parity(a.zmask & b.xmask) ? -1.0 : 1.0);
  return r;
}

PauliString majorana_site(int site) {
  if (site < 0) throw std::invalid_argument("negative Majorana site");
  const int j = site / 2;
  PauliString p;
  p.xmask = std::uint64_t{1} << j;
  p.zmask = (std::uint64_t{1} << j) - 1;  // Z string on qubits < j
  p.coeff = kInvSqrt2;
  if (site % 2 == 1) {  // Y_j = i X_j Z_j
    p.zmask |= std::uint64_t{1} << j;
    p.coeff *= kI;
  }
  return p;
}

std::vector<std::vector<int>> q_subsets(int N, int q) {
  if (q < 1 || q > N) throw std::invalid_argument("need 1 <= q <= N");
  std::vector<std::vector<int>> out;
  std::vector<int> c(q);
  for (int i = 0; i < q; ++i) c[i] = i;
  while (true) {
    out.push_back(c);
    int i = q - 1;
    while (i >= 0 && c[i] == N - q + i) --i;
    if (i < 0) break;
    ++c[i];
    for (int j = i + 1; j < q; ++j) c[j] = c[j - 1] + 1;
    if (out.size() > 5'000'000) throw std::runtime_error("subset count too large");
  }
  return out;
}

std::vector<double> syk_couplings(const ModelParams& p, std::uint64_t seed) {
  p.validate();
  double fac = 1.0;
  for (int k = 2; k < p.q; ++k) fac *= k;  // (q-1)!
  const double sigma = p.J * std::sqrt(fac / std::pow(double(p.N), p.q - 1));
  const auto n = q_subsets(p.N, p.q).size();
  std::vector<double> J(n);
  for (std::size_t r = 0; r < n; ++r)
    J[r] = sigma * rng::gaussian(seed, static_cast<std::uint64_t>(r));
  return J;
}

std::vector<PauliString> syk_terms(const ModelParams& p, std::uint64_t seed,
                                   int site_offset, int nq_total) {
  const auto subsets = q_subsets(p.N, p.q);
  const auto J = syk_couplings(p, seed);
  if (site_offset + p.N > 2 * nq_total)
    throw std::invalid_argument("register too small for offset Majoranas");
  // i^{q/2}, makes each interaction term Hermitian for even q
  static const std::complex<double> quarter[4] = {1.0, kI, -1.0, -kI};
  const std::complex<double> herm_phase = quarter[(p.q / 2) % 4];
  std::vector<PauliString> terms;
  terms.reserve(subsets.size());
  for (std::size_t r = 0; r < subsets.size(); ++r) {
    PauliString t;  // identity
    for (int a : subsets[r]) t = pauli_mul(t, majorana_site(site_offset + a));
    t.coeff *= herm_phase * J[r];
    terms.push_back(t);
  }
  return terms;
}

SykHamiltonian build_syk(const ModelParams& p, std::uint64_t seed) {
  p.validate();
  SykHamiltonian H;
  H.params = p;
  H.seed = seed;
  H.terms = syk_terms(p, seed, 0, p.N / 2);
  return H;
}

Eigen::MatrixXcd dense_pauli(const PauliString& P, int nq) {
  const Eigen::Index D = Eigen::Index{1} << nq;
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(D, D);
  for (Eigen::Index b = 0; b < D; ++b) {
    const double sgn = parity(P.zmask & static_cast<std::uint64_t>(b)) ? -1.0 : 1.0;
    M(static_cast<Eigen::Index>(static_cast<std::uint64_t>(b) ^ P.xmask), b) =
        sgn * P.coeff;
  }
  return M;
}

Eigen::MatrixXcd dense_matrix(const std::vector<PauliString>& terms, int nq) {
  const Eigen::Index D = Eigen::Index{1} << nq;
  Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(D, D);
  for (const auto& t : terms) {
    for (Eigen::Index b = 0; b < D; ++b) {
      const double sgn = parity(t.zmask & static_cast<std::uint64_t>(b)) ? -1.0 : 1.0;
      M(static_cast<Eigen::Index>(static_cast<std::uint64_t>(b) ^ t.xmask), b) +=
          sgn * t.coeff;
    }
  }
  return M;
}

Eigen::MatrixXcd dense_matrix(const SykHamiltonian& H) {
  return dense_matrix(H.terms, H.nq());
}

Spectrum diagonalize(const SykHamiltonian& H) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(dense_matrix(H));
  if (es.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
  return Spectrum{es.eigenvalues(), es.eigenvectors()};
}

void accumulate_pauli(const PauliString& P, const Eigen::VectorXcd& x,
                      Eigen::VectorXcd& y) {
  const Eigen::Index D = x.size();
  for (Eigen::Index b = 0; b < D; ++b) {
    const double sgn = parity(P.zmask & static_cast<std::uint64_t>(b)) ? -1.0 : 1.0;
    y[static_cast<Eigen::Index>(static_cast<std::uint64_t>(b) ^ P.xmask)] +=
        sgn * P.coeff * x[b];
  }
}

void apply_terms(const std::vector<PauliString>& terms, const Eigen::VectorXcd& x,
                 Eigen::VectorXcd& y) {
  y.setZero(x.size());
  for (const auto& t : terms) accumulate_pauli(t, x, y);
}

namespace {

struct LanczosResult {
  std::vector<Eigen::VectorXcd> V;
  Eigen::MatrixXd T;       // m x m symmetric tridiagonal
  double beta_next = 0.0;  // off-diagonal that would extend T
};

// Krylov factorization of the term-list operator starting from v0 (normalized),
// kept orthogonal to `frozen` (explicit deflation) with full reorthogonalization.
LanczosResult lanczos(const std::vector<PauliString>& terms, const Eigen::VectorXcd& v0,
                      int m_max, const std::vector<Eigen::VectorXcd>* frozen = nullptr) {
  LanczosResult L;
  L.V.push_back(v0);
  std::vector<double> alpha, beta;
  Eigen::VectorXcd w;
  int m = 0;
  while (m < m_max) {
    apply_terms(terms, L.V[m], w);
    const double a = L.V[m].dot(w).real();
    alpha.push_back(a);
    w -= a * L.V[m];
    if (m > 0) w -= beta[m - 1] * L.V[m - 1];
    for (int pass = 0; pass < 2; ++pass) {
      if (frozen)
        for (const auto& u : *frozen) w -= u.dot(w) * u;
      for (const auto& u : L.V) w -= u.dot(w) * u;
    }
    L.beta_next = w.norm();
    ++m;
    if (L.beta_next < 1e-13 || m == m_max) break;
    beta.push_back(L.beta_next);
    L.V.push_back(w / L.beta_next);
  }
  L.T = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    L.T(i, i) = alpha[i];
    if (i + 1 < m) L.T(i, i + 1) = L.T(i + 1, i) = beta[i];
  }
  return L;
}

}  // namespace

Eigen::VectorXcd expmv_hermitian(const std::vector<PauliString>& terms,
                                 std::complex<double> c, const Eigen::VectorXcd& x,
                                 int krylov_dim, double tol) {
  if (x.norm() == 0.0) return x;
  for (int nsub = 1; nsub <= (1 << 12); nsub *= 2) {
    const std::complex<double> cs = c / static_cast<double>(nsub);
    Eigen::VectorXcd v = x;
    bool ok = true;
    for (int step = 0; step < nsub; ++step) {
      const double bnorm = v.norm();
      if (bnorm == 0.0) return v;
      auto L = lanczos(terms, v / bnorm, krylov_dim);
      const int m = static_cast<int>(L.T.rows());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L.T);
      const Eigen::VectorXcd ph =
          (cs * es.eigenvalues().array().cast<std::complex<double>>()).exp();
      const Eigen::VectorXcd u =
          es.eigenvectors().cast<std::complex<double>>() *
          ph.cwiseProduct(es.eigenvectors().row(0).transpose().cast<std::complex<double>>());
      const double err = L.beta_next * std::abs(u[m - 1]);
      if (err > tol * std::max(1.0, u.norm())) {
        ok = false;
        break;
      }
      Eigen::VectorXcd next = Eigen::VectorXcd::Zero(v.size());
      for (int i = 0; i < m; ++i) next += u[i] * L.V[i];
      v = bnorm * next;
    }
    if (ok) return v;
  }
  throw std::runtime_error("Krylov propagator failed to reach tolerance");
}

GroundBlock ground_block(const std::vector<PauliString>& terms, int nq,
                         std::uint64_t seed, double degeneracy_tol, int max_vecs) {
  const Eigen::Index D = Eigen::Index{1} << nq;
  GroundBlock g;
  std::vector<Eigen::VectorXcd> found;
  for (int k = 0; k < max_vecs; ++k) {
    if (static_cast<Eigen::Index>(found.size()) >= D) break;
    rng::Stream st(seed, 0x6D0Bu, static_cast<std::uint64_t>(k), 0);
    Eigen::VectorXcd v(D);
    for (Eigen::Index i = 0; i < D; ++i)
      v[i] = std::complex<double>(2 * st.uniform() - 1, 2 * st.uniform() - 1);
    for (const auto& u : found) v -= u.dot(v) * u;
    if (v.norm() < 1e-12) continue;
    v.normalize();

    double lam = 0.0;
    const int m_max = static_cast<int>(std::min<Eigen::Index>(D - found.size(), 200));
    for (int restart = 0; restart < 12; ++restart) {
      auto L = lanczos(terms, v, m_max, &found);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L.T);
      const Eigen::VectorXd y = es.eigenvectors().col(0);  // bottom Ritz pair
      lam = es.eigenvalues()[0];
      Eigen::VectorXcd next = Eigen::VectorXcd::Zero(D);
      for (int i = 0; i < static_cast<int>(L.V.size()); ++i) next += y[i] * L.V[i];
      for (const auto& u : found) next -= u.dot(next) * u;
      next.normalize();
      v = next;
      const double resid = L.beta_next * std::abs(y[y.size() - 1]);
      if (resid < 1e-10 * std::max(1.0, std::abs(lam))) break;
    }
    if (!found.empty() && lam > g.e0 + degeneracy_tol) break;
    if (found.empty()) g.e0 = lam;
    found.push_back(v);
  }
  g.vectors.resize(D, static_cast<Eigen::Index>(found.size()));
  for (std::size_t i = 0; i < found.size(); ++i)
    g.vectors.col(static_cast<Eigen::Index>(i)) = found[i];
  return g;
}

}  // namespace dsyk
