#include "dsyk/saddle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace dsyk {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

double bin_lambda(const Contour& c, double mu) {
  if (c.nsteps == 0 || c.t == 0.0) return 0.0;
  const double ds = 2.0 * c.t / c.nsteps;
  return 2.0 * std::tanh(0.5 * mu * ds);
}

template <class Scalar>
Scalar ipow(Scalar x, int n) {
  Scalar r = Scalar(1);
  while (n > 0) {
    if (n & 1) r *= x;
    x *= x;
    n >>= 1;
  }
  return r;
}

template <class Scalar>
Scalar narrow(const std::complex<double>& z);
template <>
double narrow<double>(const std::complex<double>& z) { return z.real(); }
template <>
std::complex<double> narrow<std::complex<double>>(const std::complex<double>& z) {
  return z;
}

// log det via LU; real part is exact, imaginary part modulo 2 pi
template <class Scalar>
std::complex<double> log_det(const Mat<Scalar>& A) {
  Eigen::PartialPivLU<Mat<Scalar>> lu(A);
  std::complex<double> acc =
      lu.permutationP().determinant() < 0 ? std::complex<double>(0, std::numbers::pi)
                                          : std::complex<double>(0, 0);
  const auto& U = lu.matrixLU();
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    acc += std::log(std::complex<double>(U(i, i)));
  return acc;
}

// Position of every point along the swap-twisted trace cycle:
// loop0 forward side, loop1 backward side, loop1 forward side, loop0 backward
// side, each side in its stored (path) order.
std::vector<int> twisted_positions(const Contour& c) {
  const int M = c.size();
  const int per_loop = M / c.m;
  const int half = per_loop / 2;
  auto block_rank = [&](int loop, int side) {
    if (loop == 0) return side == 0 ? 0 : 3;
    return side == 0 ? 2 : 1;
  };
  std::vector<int> pos(M);
  for (int i = 0; i < M; ++i) {
    const int ord = i % per_loop;
    const int side = ord < half ? 0 : 1;
    pos[i] = block_rank(c.pts[i].loop, side) * half + (ord - side * half);
  }
  return pos;
}

Eigen::MatrixXd staircase(const Contour& c, bool twisted) {
  const int M = c.size();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(M, M);
  if (twisted && c.m == 2) {
    const std::vector<int> pos = twisted_positions(c);
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j)
        if (pos[i] != pos[j]) G(i, j) = pos[i] > pos[j] ? 0.5 : -0.5;
    return G;
  }
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j)
      if (c.pts[i].loop == c.pts[j].loop) G(i, j) = 0.5 * c.sign(i, j);
  return G;
}

template <class Scalar>
struct Core {
  const Contour& c;
  ModelParams p;
  int M;
  bool twisted;              // swap-twisted gluing (wormhole branch, m = 2)
  Mat<Scalar> G0, K, wsigJ;  // wsigJ(p,r) = w_p w_r J^2 sigma_p sigma_r

  Core(const Contour& cc, const ModelParams& pp, bool tw)
      : c(cc), p(pp), M(cc.size()), twisted(tw && cc.m == 2) {
    G0 = staircase(c, twisted).template cast<Scalar>();
    K.setZero(M, M);
    wsigJ.resize(M, M);
    const double lam = bin_lambda(c, p.mu);
    for (int i = 0; i < M; ++i) {
      const auto& pi = c.pts[i];
      if (pi.partner >= 0)
        K(i, pi.partner) = Scalar(pi.branch == Branch::forward ? -lam : lam);
      for (int j = 0; j < M; ++j) {
        const auto& pj = c.pts[j];
        wsigJ(i, j) = narrow<Scalar>(pi.w * pj.w * p.J * p.J *
                                     branch_phase(pi.branch) * branch_phase(pj.branch));
      }
    }
  }

  Mat<Scalar> kernel(const Mat<Scalar>& G) const {
    Mat<Scalar> X = K;
    const int e = p.q - 1;
    for (int j = 0; j < M; ++j)
      for (int i = 0; i < M; ++i) X(i, j) += wsigJ(i, j) * ipow(G(i, j), e);
    return X;
  }

  Mat<Scalar> dyson(const Mat<Scalar>& G) const {
    Mat<Scalar> A = Mat<Scalar>::Identity(M, M);
    A.noalias() -= G0 * kernel(G);
    return A.partialPivLu().solve(G0);
  }

  std::complex<double> action(const Mat<Scalar>& G) const {
    Mat<Scalar> A = Mat<Scalar>::Identity(M, M);
    A.noalias() -= G0 * kernel(G);
    std::complex<double> ld = log_det(A);
    std::complex<double> pot = 0.0;
    for (int j = 0; j < M; ++j)
      for (int i = 0; i < M; ++i)
        pot += std::complex<double>(wsigJ(i, j) * ipow(G(i, j), p.q));
    pot *= 0.5 * (1.0 - 1.0 / p.q);
    const double ds = c.nsteps > 0 && c.t > 0 ? 2.0 * c.t / c.nsteps : 0.0;
    const double cmu =
        c.m * (p.mu * c.t - c.nsteps * std::log(std::cosh(0.5 * p.mu * ds)));
    // one factor 1/2 per fermion pair from the swapped trace sector
    const double sector = twisted ? std::numbers::ln2 : 0.0;
    return -0.5 * ld + pot + cmu + sector;
  }
};

double cross_loop_max(const Contour& c, const Eigen::MatrixXcd& G) {
  if (c.m < 2) return 0.0;
  double mx = 0.0;
  for (int i = 0; i < c.size(); ++i)
    for (int j = 0; j < c.size(); ++j)
      if (c.pts[i].loop != c.pts[j].loop) mx = std::max(mx, std::abs(G(i, j)));
  return mx;
}

template <class Scalar>
SaddleSolution run_iteration(const Core<Scalar>& core, Mat<Scalar> G,
                             const SaddleOptions& o) {
  SaddleSolution sol;
  sol.m = core.c.m;
  sol.t = core.c.t;
  double alpha = o.mix;
  Mat<Scalar> dG_prev;
  for (int it = 1; it <= o.max_iter; ++it) {
    Mat<Scalar> Gn = core.dyson(G);
    Gn = (0.5 * (Gn - Gn.transpose())).eval();
    Mat<Scalar> dG = Gn - G;
    const double res = dG.cwiseAbs().maxCoeff();
    sol.residual = res;
    sol.iterations = it;
    sol.residual_tail.push_back(res);
    if (sol.residual_tail.size() > 16)
      sol.residual_tail.erase(sol.residual_tail.begin());
    if (dG_prev.size() > 0) {
      const double corr =
          std::real((dG.array().conjugate() * dG_prev.array()).sum());
      alpha = corr < 0 ? std::max(0.05, 0.7 * alpha) : std::min(o.mix, 1.05 * alpha);
    }
    G += alpha * dG;
    dG_prev = std::move(dG);
    if (res < o.tol) {
      sol.converged = true;
      break;
    }
  }
  sol.action = core.action(G);
  if constexpr (std::is_same_v<Scalar, double>)
    sol.G = G.template cast<std::complex<double>>();
  else
    sol.G = G;
  sol.max_cross = cross_loop_max(core.c, sol.G);
  sol.paired = core.twisted && sol.max_cross >= o.cross_threshold;
  return sol;
}

template <class Scalar>
Mat<Scalar> to_scalar(const Eigen::MatrixXcd& G);
template <>
Eigen::MatrixXd to_scalar<double>(const Eigen::MatrixXcd& G) { return G.real(); }
template <>
Eigen::MatrixXcd to_scalar<std::complex<double>>(const Eigen::MatrixXcd& G) {
  return G;
}

template <class Scalar>
SaddleSolution solve_dispatch(const ModelParams& p, const Contour& c, SaddleSeed seed,
                              const SaddleOptions& o, const Eigen::MatrixXcd* init) {
  Core<Scalar> core(c, p, seed == SaddleSeed::wormhole);
  if (init != nullptr) return run_iteration(core, to_scalar<Scalar>(*init), o);
  if (seed == SaddleSeed::diagonal || c.m == 1) {
    Mat<Scalar> G = core.G0;
    if (c.m == 2) {
      // decoupled pair of converged single-loop solutions
      Contour c1 = build_contour(1, c.t, c.beta, c.nsteps, c.nimag);
      SaddleSolution s1 = solve_saddle(p, c1, SaddleSeed::diagonal, o);
      const int L = c1.size();
      Mat<Scalar> g1 = to_scalar<Scalar>(s1.G);
      G.setZero(2 * L, 2 * L);
      G.topLeftCorner(L, L) = g1;
      G.bottomRightCorner(L, L) = g1;
    }
    return run_iteration(core, std::move(G), o);
  }
  // cold paired start: the twisted sector solved at J = 0 (exact there)
  Mat<Scalar> A = Mat<Scalar>::Identity(core.M, core.M);
  A.noalias() -= core.G0 * core.K;
  Mat<Scalar> G = A.partialPivLu().solve(core.G0);
  G = (0.5 * (G - G.transpose())).eval();
  return run_iteration(core, std::move(G), o);
}

}  // namespace

std::complex<double> branch_phase(Branch b) {
  switch (b) {
    case Branch::forward: return kI;
    case Branch::backward: return -kI;
    default: return 1.0;
  }
}

Eigen::MatrixXd free_propagator(const Contour& c, SaddleSeed glue) {
  return staircase(c, glue == SaddleSeed::wormhole);
}

Eigen::MatrixXd dissipative_kernel(const Contour& c, double mu) {
  const int M = c.size();
  const double lam = bin_lambda(c, mu);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(M, M);
  for (int i = 0; i < M; ++i) {
    const auto& pi = c.pts[i];
    if (pi.partner >= 0)
      K(i, pi.partner) = pi.branch == Branch::forward ? -lam : lam;
  }
  return K;
}

Eigen::MatrixXcd self_energy(const Contour& c, const ModelParams& p,
                             const Eigen::MatrixXcd& G) {
  const int M = c.size();
  Eigen::MatrixXcd S(M, M);
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j)
      S(i, j) = p.J * p.J * branch_phase(c.pts[i].branch) *
                branch_phase(c.pts[j].branch) * ipow(G(i, j), p.q - 1);
  return S;
}

std::complex<double> contour_action(const ModelParams& p, const Contour& c,
                                    const Eigen::MatrixXcd& G, SaddleSeed glue) {
  const bool tw = glue == SaddleSeed::wormhole;
  if (c.beta == 0.0) {
    Core<double> core(c, p, tw);
    return core.action(G.real());
  }
  Core<std::complex<double>> core(c, p, tw);
  return core.action(G);
}

SaddleSolution solve_saddle(const ModelParams& p, const Contour& c, SaddleSeed seed,
                            const SaddleOptions& o, const Eigen::MatrixXcd* init) {
  p.validate();
  if (c.beta == 0.0) return solve_dispatch<double>(p, c, seed, o, init);
  return solve_dispatch<std::complex<double>>(p, c, seed, o, init);
}

Eigen::MatrixXcd resample_bilocal(const Contour& from, const Eigen::MatrixXcd& G,
                                  const Contour& to) {
  struct Axis {
    std::vector<double> x;
    std::vector<int> idx;
  };
  auto key = [](const ContourPoint& pt) {
    return pt.loop * 3 + static_cast<int>(pt.branch);
  };
  auto coord = [](const ContourPoint& pt) {
    return pt.branch == Branch::arc ? pt.theta : pt.s;
  };
  std::vector<Axis> axes(3 * from.m);
  for (int i = 0; i < from.size(); ++i) {
    Axis& a = axes[key(from.pts[i])];
    a.x.push_back(coord(from.pts[i]));
    a.idx.push_back(i);
  }
  for (auto& a : axes) {
    std::vector<int> order(a.x.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
    std::sort(order.begin(), order.end(),
              [&](int u, int v) { return a.x[u] < a.x[v]; });
    Axis s;
    for (int k : order) {
      s.x.push_back(a.x[k]);
      s.idx.push_back(a.idx[k]);
    }
    a = std::move(s);
  }
  struct Stencil {
    int i0, i1;
    double w1;
  };
  std::vector<Stencil> st(to.size());
  for (int i = 0; i < to.size(); ++i) {
    const int k = key(to.pts[i]);
    if (k >= static_cast<int>(axes.size()) || axes[k].x.empty())
      throw std::invalid_argument("incompatible grids for resampling");
    const Axis& a = axes[k];
    const double x = coord(to.pts[i]);
    auto it = std::lower_bound(a.x.begin(), a.x.end(), x);
    int j1 = static_cast<int>(it - a.x.begin());
    int j0 = j1 - 1;
    if (j1 >= static_cast<int>(a.x.size())) j1 = static_cast<int>(a.x.size()) - 1;
    if (j0 < 0) j0 = 0;
    double w1 = 0.0;
    if (j1 != j0) w1 = (x - a.x[j0]) / (a.x[j1] - a.x[j0]);
    w1 = std::clamp(w1, 0.0, 1.0);
    st[i] = {a.idx[j0], a.idx[j1], w1};
  }
  Eigen::MatrixXcd out(to.size(), to.size());
  for (int i = 0; i < to.size(); ++i)
    for (int j = 0; j < to.size(); ++j) {
      const auto& a = st[i];
      const auto& b = st[j];
      out(i, j) = (1 - a.w1) * (1 - b.w1) * G(a.i0, b.i0) +
                  (1 - a.w1) * b.w1 * G(a.i0, b.i1) +
                  a.w1 * (1 - b.w1) * G(a.i1, b.i0) + a.w1 * b.w1 * G(a.i1, b.i1);
    }
  return 0.5 * (out - out.transpose()).eval();
}

PageCurve page_curve(const ModelParams& p, const std::vector<double>& t_list,
                     const SaddleOptions& o) {
  p.validate();
  if (!std::is_sorted(t_list.begin(), t_list.end()))
    throw std::invalid_argument("t_list must ascend");
  PageCurve pc;
  Eigen::MatrixXcd prev_m1, prev_diag, prev_worm;
  Contour cp1, cp2;
  bool have_prev = false;
  for (double t : t_list) {
    Contour c1 = build_contour(1, t, p.beta, o.nsteps, p.beta > 0 ? o.nimag : 0);
    Contour c2 = build_contour(2, t, p.beta, o.nsteps, p.beta > 0 ? o.nimag : 0);
    SaddleSolution s1, sd, sw;
    if (have_prev) {
      Eigen::MatrixXcd w1 = resample_bilocal(cp1, prev_m1, c1);
      Eigen::MatrixXcd wd = resample_bilocal(cp2, prev_diag, c2);
      Eigen::MatrixXcd ww = resample_bilocal(cp2, prev_worm, c2);
      s1 = solve_saddle(p, c1, SaddleSeed::diagonal, o, &w1);
      sd = solve_saddle(p, c2, SaddleSeed::diagonal, o, &wd);
      sw = solve_saddle(p, c2, SaddleSeed::wormhole, o, &ww);
    } else {
      s1 = solve_saddle(p, c1, SaddleSeed::diagonal, o);
      Eigen::MatrixXcd seed_d = Eigen::MatrixXcd::Zero(c2.size(), c2.size());
      seed_d.topLeftCorner(c1.size(), c1.size()) = s1.G;
      seed_d.bottomRightCorner(c1.size(), c1.size()) = s1.G;
      sd = solve_saddle(p, c2, SaddleSeed::diagonal, o, &seed_d);
      sw = solve_saddle(p, c2, SaddleSeed::wormhole, o);
    }
    const double f1 = s1.action.real();
    const double Sd =
        s1.converged && sd.converged ? p.N * (sd.action.real() - 2 * f1) : kNaN;
    const double Sw =
        s1.converged && sw.converged ? p.N * (sw.action.real() - 2 * f1) : kNaN;
    pc.times.push_back(t);
    pc.S_diag.push_back(Sd);
    pc.S_worm.push_back(Sw);
    double smin = kNaN;
    int dom = 0;
    if (!std::isnan(Sd) && !std::isnan(Sw)) {
      smin = std::min(Sd, Sw);
      dom = Sw < Sd ? 1 : 0;
    } else if (!std::isnan(Sd)) {
      smin = Sd;
    } else if (!std::isnan(Sw)) {
      smin = Sw;
      dom = 1;
    }
    pc.S_min.push_back(smin);
    pc.dominant.push_back(dom);
    pc.residual_diag.push_back(sd.residual);
    pc.residual_worm.push_back(sw.residual);
    pc.worm_paired.push_back(sw.paired ? 1 : 0);
    prev_m1 = s1.G;
    prev_diag = sd.G;
    prev_worm = sw.G;
    cp1 = std::move(c1);
    cp2 = std::move(c2);
    have_prev = true;
  }
  // crossing of the two entropy branches: unpaired dominates early, paired late
  const int n = static_cast<int>(pc.times.size());
  int ic = -1;
  for (int i = 0; i + 1 < n; ++i) {
    const double d0 = pc.S_diag[i] - pc.S_worm[i];
    const double d1 = pc.S_diag[i + 1] - pc.S_worm[i + 1];
    if (std::isnan(d0) || std::isnan(d1)) continue;
    if (!pc.worm_paired[i] || !pc.worm_paired[i + 1]) continue;
    if (d0 < 0 && d1 >= 0) {
      ic = i;
      const double f = d0 / (d0 - d1);
      pc.page_time = pc.times[i] + f * (pc.times[i + 1] - pc.times[i]);
      break;
    }
  }
  if (ic >= 0 && p.mu > 0) {
    auto slope = [&](const std::vector<double>& S, int a, int b) {
      return (S[b] - S[a]) / (pc.times[b] - pc.times[a]);
    };
    const double before = ic >= 1 ? slope(pc.S_diag, ic - 1, ic)
                                  : slope(pc.S_diag, ic, ic + 1);
    const double after = ic + 2 < n && !std::isnan(pc.S_worm[ic + 2])
                             ? slope(pc.S_worm, ic + 1, ic + 2)
                             : slope(pc.S_worm, ic, ic + 1);
    pc.slope_gap = std::max(0.0, (before - after) / (p.mu * p.N));
  }
  return pc;
}

std::vector<GapPoint> critical_mu_scan(ModelParams p, const std::vector<double>& mu_list,
                                       const SaddleOptions& o,
                                       const std::vector<double>& t_list) {
  std::vector<GapPoint> out;
  for (double mu : mu_list) {
    p.mu = mu;
    std::vector<double> ts = t_list;
    if (ts.empty()) {
      const double tstar = std::numbers::ln2 / (2.0 * mu);
      const int npts = 8;
      for (int i = 0; i < npts; ++i)
        ts.push_back(tstar * (0.5 + (1.6 - 0.5) * i / (npts - 1)));
    }
    PageCurve pc = page_curve(p, ts, o);
    out.push_back({mu, pc.slope_gap, pc.page_time});
  }
  return out;
}

double critical_mu_estimate(const std::vector<GapPoint>& scan, double eps_gap) {
  if (scan.empty()) return kNaN;
  if (scan.front().slope_gap < eps_gap) return scan.front().mu;
  for (std::size_t i = 0; i + 1 < scan.size(); ++i) {
    const double g0 = scan[i].slope_gap, g1 = scan[i + 1].slope_gap;
    if (g0 >= eps_gap && g1 < eps_gap) {
      const double f = (g0 - eps_gap) / (g0 - g1);
      return scan[i].mu + f * (scan[i + 1].mu - scan[i].mu);
    }
  }
  return scan.back().mu;
}

}  // namespace dsyk
