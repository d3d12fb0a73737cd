#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

#include "dsyk/contour.hpp"
#include "dsyk/params.hpp"
#include "dsyk/saddle.hpp"

using namespace dsyk;

namespace {

ModelParams mp(double mu, double J = 1.0, int q = 4, double beta = 0.0) {
  ModelParams p;
  p.N = 20;
  p.q = q;
  p.J = J;
  p.mu = mu;
  p.beta = beta;
  return p;
}

constexpr double kFreeJ = 1e-8;  // effectively free coupling (J > 0 required)

SaddleOptions opts(int nsteps, double tol = 1e-10) {
  SaddleOptions o;
  o.nsteps = nsteps;
  o.tol = tol;
  o.max_iter = 3000;
  return o;
}

double entropy(const ModelParams& p, const SaddleSolution& s2,
               const SaddleSolution& s1) {
  return p.N * (s2.action.real() - 2.0 * s1.action.real());
}

// Independent minimal two-branch real-time solver at beta = 0, written against
// the same trapezoid-free staircase discretization but sharing no code.
Eigen::MatrixXd keldysh_reference(double J, int q, double T, int n, double tol) {
  const int M = 2 * n;
  const double ds = T / n;
  Eigen::MatrixXd G0(M, M), eta(M, 1);
  std::vector<double> s(M);
  std::vector<int> dir(M);
  for (int k = 0; k < n; ++k) {
    s[k] = (k + 0.5) * ds;
    dir[k] = +1;
  }
  for (int k = 0; k < n; ++k) {
    s[n + k] = (n - k - 0.5) * ds;
    dir[n + k] = -1;
  }
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) G0(i, j) = i == j ? 0.0 : (i > j ? 0.5 : -0.5);
  Eigen::MatrixXd G = G0;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(M, M);
  for (int it = 0; it < 4000; ++it) {
    Eigen::MatrixXd X(M, M);
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j) {
        double gq = 1.0;
        for (int e = 0; e < q - 1; ++e) gq *= G(i, j);
        X(i, j) = -double(dir[i] * dir[j]) * ds * ds * J * J * gq;
      }
    Eigen::MatrixXd Gn = (I - G0 * X).partialPivLu().solve(G0);
    Gn = (0.5 * (Gn - Gn.transpose())).eval();
    const double res = (Gn - G).cwiseAbs().maxCoeff();
    G += 0.5 * (Gn - G);
    if (res < tol) break;
  }
  return G;
}

}  // namespace

TEST_CASE("free propagator staircases for both gluings") {
  Contour c = build_contour(2, 1.0, 0.0, 8, 0);
  Eigen::MatrixXd G0 = free_propagator(c);
  CHECK((G0 + G0.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < c.size(); ++i)
    for (int j = 0; j < c.size(); ++j) {
      if (c.pts[i].loop != c.pts[j].loop)
        CHECK(G0(i, j) == 0.0);
      else if (i != j)
        CHECK(std::abs(G0(i, j)) == 0.5);
    }
  Eigen::MatrixXd Gw = free_propagator(c, SaddleSeed::wormhole);
  CHECK((Gw + Gw.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (int i = 0; i < c.size(); ++i)
    for (int j = 0; j < c.size(); ++j)
      if (i != j) CHECK(std::abs(Gw(i, j)) == 0.5);
  // twisted cycle order: loop0 fwd, loop1 bwd, loop1 fwd, loop0 bwd
  const int L = c.size() / 2, h = L / 2;
  CHECK(Gw(L + h, 0) == 0.5);       // loop1 bwd after loop0 fwd
  CHECK(Gw(L, L + h) == 0.5);       // loop1 fwd after loop1 bwd
  CHECK(Gw(h, L) == 0.5);           // loop0 bwd after loop1 fwd
  CHECK(Gw(h, 0) == 0.5);           // within loop0: fwd precedes bwd
  // both gluings agree inside loop0, loop1's internal order is reversed
  CHECK(Gw(h, 0) == G0(h, 0));
  CHECK(Gw(L + h, L) == -G0(L + h, L));
}

TEST_CASE("dissipative kernel: pairing structure and bin-exact amplitude") {
  const double mu = 0.3, t = 2.0;
  Contour c = build_contour(1, t, 0.0, 10, 0);
  Eigen::MatrixXd K = dissipative_kernel(c, mu);
  CHECK((K + K.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const double lam = 2.0 * std::tanh(0.5 * mu * (2.0 * t / 10));
  int nonzero = 0;
  for (int i = 0; i < c.size(); ++i)
    for (int j = 0; j < c.size(); ++j)
      if (K(i, j) != 0.0) {
        ++nonzero;
        CHECK(j == c.pts[i].partner);
        CHECK(std::abs(K(i, j)) == doctest::Approx(lam).epsilon(1e-14));
      }
  CHECK(nonzero == 2 * 10);
  CHECK(dissipative_kernel(c, 0.0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("self energy: zero map and antisymmetry") {
  Contour c = build_contour(2, 0.7, 0.0, 6, 0);
  ModelParams p = mp(0.1);
  Eigen::MatrixXcd Z = Eigen::MatrixXcd::Zero(c.size(), c.size());
  CHECK(self_energy(c, p, Z).cwiseAbs().maxCoeff() == 0.0);
  Eigen::MatrixXcd G = free_propagator(c).cast<std::complex<double>>();
  Eigen::MatrixXcd S = self_energy(c, p, G);
  CHECK((S + S.transpose()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("free limit: single-loop action vanishes identically (trace preserved)") {
  // bin-exact jump kernel: holds at machine precision on arbitrarily coarse grids
  ModelParams p = mp(0.25, kFreeJ);
  for (int nsteps : {4, 16, 64}) {
    for (double t : {0.5, 3.0, 10.0}) {
      Contour c = build_contour(1, t, 0.0, nsteps, 0);
      SaddleSolution s = solve_saddle(p, c, SaddleSeed::diagonal, opts(nsteps));
      CHECK(s.converged);
      CHECK(std::abs(s.action) < 1e-10);
    }
  }
}

TEST_CASE("free limit: both gluings hit their closed forms on any grid") {
  // With the interaction off the bin kernel is exact, so the two replica
  // gluings give 2 mu N t and N ln 2 at machine precision on every grid.
  ModelParams p = mp(0.15, kFreeJ);
  for (double t : {0.7, 2.0, 6.0}) {
    for (int nsteps : {8, 64}) {
      Contour c1 = build_contour(1, t, 0.0, nsteps, 0);
      Contour c2 = build_contour(2, t, 0.0, nsteps, 0);
      SaddleSolution s1 = solve_saddle(p, c1, SaddleSeed::diagonal, opts(nsteps));
      SaddleSolution sd = solve_saddle(p, c2, SaddleSeed::diagonal, opts(nsteps));
      SaddleSolution sw = solve_saddle(p, c2, SaddleSeed::wormhole, opts(nsteps));
      REQUIRE(s1.converged);
      REQUIRE(sd.converged);
      REQUIRE(sw.converged);
      CHECK(entropy(p, sd, s1) ==
            doctest::Approx(2.0 * p.mu * p.N * t).epsilon(1e-9));
      CHECK(entropy(p, sw, s1) ==
            doctest::Approx(p.N * std::numbers::ln2).epsilon(1e-9));
    }
  }
}

TEST_CASE("unitary limit: entropy vanishes for mu = 0") {
  // both loops of the diagonal gluing carry the same discretization error,
  // so it cancels from the entropy exactly
  ModelParams p = mp(0.0);
  for (double t : {1.0, 4.0}) {
    Contour c1 = build_contour(1, t, 0.0, 48, 0);
    Contour c2 = build_contour(2, t, 0.0, 48, 0);
    SaddleSolution s1 = solve_saddle(p, c1, SaddleSeed::diagonal, opts(48));
    SaddleSolution s2 = solve_saddle(p, c2, SaddleSeed::diagonal, opts(48));
    REQUIRE(s1.converged);
    REQUIRE(s2.converged);
    CHECK(std::abs(entropy(p, s2, s1)) < 1e-6);
    CHECK(s2.max_cross < 1e-8);
  }
}

TEST_CASE("interacting single loop preserves the trace in the continuum limit") {
  // with J on, the staircase breaks trace preservation only at O(ds): the
  // action halves under grid doubling and extrapolates to zero
  for (double mu : {0.0, 0.1}) {
    ModelParams p = mp(mu);
    double a128 = 0.0, a256 = 0.0;
    for (int n : {128, 256}) {
      Contour c = build_contour(1, 2.0, 0.0, n, 0);
      SaddleSolution s = solve_saddle(p, c, SaddleSeed::diagonal, opts(n));
      REQUIRE(s.converged);
      (n == 128 ? a128 : a256) = s.action.real();
      CHECK(std::abs(s.action.imag()) < 1e-12);
    }
    CHECK(a128 / a256 == doctest::Approx(2.0).epsilon(0.05));
    CHECK(std::abs(2.0 * a256 - a128) < 3e-5);
  }
}

TEST_CASE("entropy at t = 0 vanishes, with and without thermal arcs") {
  {
    ModelParams p = mp(0.2);
    Contour c1 = build_contour(1, 0.0, 0.0, 8, 0);
    Contour c2 = build_contour(2, 0.0, 0.0, 8, 0);
    SaddleSolution s1 = solve_saddle(p, c1, SaddleSeed::diagonal, opts(8));
    SaddleSolution s2 = solve_saddle(p, c2, SaddleSeed::diagonal, opts(8));
    CHECK(std::abs(entropy(p, s2, s1)) < 1e-9);
  }
  {
    ModelParams p = mp(0.2, 1.0, 4, 2.0);
    SaddleOptions o = opts(4);
    o.nimag = 10;
    Contour c1 = build_contour(1, 0.0, p.beta, 4, 10);
    Contour c2 = build_contour(2, 0.0, p.beta, 4, 10);
    SaddleSolution s1 = solve_saddle(p, c1, SaddleSeed::diagonal, o);
    SaddleSolution s2 = solve_saddle(p, c2, SaddleSeed::diagonal, o);
    REQUIRE(s1.converged);
    REQUIRE(s2.converged);
    CHECK(std::abs(entropy(p, s2, s1)) < 1e-6);
    CHECK(std::abs(s2.action.imag() - 2 * s1.action.imag()) < 1e-8);
  }
}

TEST_CASE("equilibrium loop matches an independently coded two-branch solver") {
  ModelParams p = mp(0.0);
  const double t = 1.5;
  const int nsteps = 60;
  Contour c = build_contour(1, t, 0.0, nsteps, 0);
  SaddleSolution s = solve_saddle(p, c, SaddleSeed::diagonal, opts(nsteps));
  REQUIRE(s.converged);
  Eigen::MatrixXd ref = keldysh_reference(p.J, p.q, 2.0 * t, nsteps, 1e-10);
  CHECK((s.G.real() - ref).cwiseAbs().maxCoeff() < 1e-7);
  CHECK(s.G.imag().cwiseAbs().maxCoeff() < 1e-12);
  // equal-time limit on one branch: |G| ~ 1/2 up to O(J ds)
  CHECK(std::abs(s.G(1, 0).real() - 0.5) < 0.1);
}

TEST_CASE("early-time growth of the unpaired branch is 2 mu N t") {
  ModelParams p = mp(0.01);
  const double t = 2.0;
  Contour c1 = build_contour(1, t, 0.0, 64, 0);
  Contour c2 = build_contour(2, t, 0.0, 64, 0);
  SaddleSolution s1 = solve_saddle(p, c1, SaddleSeed::diagonal, opts(64));
  SaddleSolution s2 = solve_saddle(p, c2, SaddleSeed::diagonal, opts(64));
  REQUIRE(s1.converged);
  REQUIRE(s2.converged);
  const double S = entropy(p, s2, s1);
  CHECK(S == doctest::Approx(2 * p.mu * p.N * t).epsilon(0.05));
  // cross-replica components stay perturbative, O(mu t)
  CHECK(s2.max_cross < 5 * p.mu * t);
  CHECK(s2.max_cross > 0.0);
}

TEST_CASE("paired solution exists at late times and caps the entropy near N ln 2") {
  ModelParams p = mp(0.1);
  const double t = 20.0;  // mu t = 2, past the crossing
  const int nsteps = 100;
  Contour c1 = build_contour(1, t, 0.0, nsteps, 0);
  Contour c2 = build_contour(2, t, 0.0, nsteps, 0);
  SaddleOptions o = opts(nsteps, 1e-9);
  SaddleSolution s1 = solve_saddle(p, c1, SaddleSeed::diagonal, o);
  SaddleSolution sd = solve_saddle(p, c2, SaddleSeed::diagonal, o);
  SaddleSolution sw = solve_saddle(p, c2, SaddleSeed::wormhole, o);
  REQUIRE(s1.converged);
  REQUIRE(sd.converged);
  REQUIRE(sw.converged);
  CHECK(sw.paired);
  CHECK(sw.max_cross > 0.2);
  const double S_w = entropy(p, sw, s1);
  const double S_d = entropy(p, sd, s1);
  CHECK(S_w < S_d);  // paired branch dominates past the crossing
  CHECK(S_w / (p.N * std::numbers::ln2) == doctest::Approx(1.0).epsilon(0.12));
  // antisymmetry preserved through the iteration
  CHECK((sw.G + sw.G.transpose()).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("converged runs end with a decaying fixed-point residual") {
  ModelParams p = mp(0.05);
  Contour c = build_contour(1, 3.0, 0.0, 48, 0);
  SaddleSolution s = solve_saddle(p, c, SaddleSeed::diagonal, opts(48));
  REQUIRE(s.converged);
  REQUIRE(s.residual_tail.size() >= 5);
  for (std::size_t i = s.residual_tail.size() - 5; i + 1 < s.residual_tail.size(); ++i)
    CHECK(s.residual_tail[i + 1] < 1.2 * s.residual_tail[i]);
  CHECK(s.residual_tail.back() < 1e-10);
}

TEST_CASE("grid refinement leaves the entropy nearly unchanged") {
  ModelParams p = mp(0.1);
  const double t = 3.0;
  double S[2];
  int k = 0;
  for (int nsteps : {64, 128}) {
    Contour c1 = build_contour(1, t, 0.0, nsteps, 0);
    Contour c2 = build_contour(2, t, 0.0, nsteps, 0);
    SaddleSolution s1 = solve_saddle(p, c1, SaddleSeed::diagonal, opts(nsteps));
    SaddleSolution s2 = solve_saddle(p, c2, SaddleSeed::diagonal, opts(nsteps));
    REQUIRE(s2.converged);
    S[k++] = entropy(p, s2, s1);
  }
  CHECK(std::abs(S[1] - S[0]) < 5e-3 * p.N);
}

TEST_CASE("bilocal resampling: exact on an identical grid, antisymmetric always") {
  Contour a = build_contour(2, 1.0, 0.0, 24, 0);
  Eigen::MatrixXcd G = free_propagator(a).cast<std::complex<double>>();
  Eigen::MatrixXcd same = resample_bilocal(a, G, a);
  CHECK((same - G).cwiseAbs().maxCoeff() < 1e-15);
  Contour b = build_contour(2, 1.25, 0.0, 24, 0);
  Eigen::MatrixXcd moved = resample_bilocal(a, G, b);
  CHECK((moved + moved.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(moved.cwiseAbs().maxCoeff() <= 0.5 + 1e-12);
}

TEST_CASE("page curve: rise, saturation, crossing, and positive slope gap") {
  ModelParams p = mp(0.1);
  SaddleOptions o = opts(96, 1e-9);
  std::vector<double> ts;
  for (double t : {1.0, 2.0, 3.0, 4.0, 5.0, 6.5, 8.0}) ts.push_back(t);
  PageCurve pc = page_curve(p, ts, o);
  REQUIRE(pc.times.size() == ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    CHECK(!std::isnan(pc.S_min[i]));
    CHECK(pc.S_min[i] >= -1e-6 * p.N);
    CHECK(pc.S_min[i] <= p.N * std::numbers::ln2 + 1e-2 * p.N);
    CHECK(pc.S_min[i] ==
          doctest::Approx(std::min(pc.S_diag[i], pc.S_worm[i])).epsilon(1e-12));
  }
  // early point grows linearly, late points saturate
  CHECK(pc.S_diag[0] == doctest::Approx(2 * p.mu * p.N * ts[0]).epsilon(0.1));
  CHECK(pc.S_min.back() ==
        doctest::Approx(p.N * std::numbers::ln2).epsilon(0.1));
  CHECK(pc.page_time > ts.front());
  CHECK(pc.page_time < ts.back());
  CHECK(pc.slope_gap > 0.0);
  // dominance switches exactly once along the sweep
  CHECK(pc.dominant.front() == 0);
  CHECK(pc.dominant.back() == 1);
}

TEST_CASE("critical coupling interpolation") {
  std::vector<GapPoint> scan{{0.10, 1.5, 3.0}, {0.14, 0.5, 2.2}, {0.16, 0.1, 1.9},
                             {0.20, 0.0, -1.0}};
  const double mu_c = critical_mu_estimate(scan, 0.2);
  CHECK(mu_c == doctest::Approx(0.155).epsilon(1e-12));
  CHECK(critical_mu_estimate({{0.1, 0.05, 1.0}}, 0.2) == doctest::Approx(0.1));
}

TEST_CASE("thermal contour solve stays finite and nearly real in entropy") {
  ModelParams p = mp(0.1, 1.0, 4, 1.0);
  SaddleOptions o = opts(32, 1e-9);
  o.nimag = 6;
  Contour c1 = build_contour(1, 1.0, p.beta, 32, 6);
  Contour c2 = build_contour(2, 1.0, p.beta, 32, 6);
  SaddleSolution s1 = solve_saddle(p, c1, SaddleSeed::diagonal, o);
  SaddleSolution s2 = solve_saddle(p, c2, SaddleSeed::diagonal, o);
  REQUIRE(s1.converged);
  REQUIRE(s2.converged);
  const double S = entropy(p, s2, s1);
  CHECK(std::isfinite(S));
  CHECK(S > 0.0);
  CHECK(std::abs(s2.action.imag() - 2 * s1.action.imag()) < 1e-4);
  CHECK((s2.G + s2.G.transpose()).cwiseAbs().maxCoeff() < 1e-9);
}
