#include "dsyk/largeq.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dsyk::largeq {

namespace {
// twist formula is singular at u = 0; clamp just above it
double floor_u(double u, const Params& lp) {
  const double umin = 1e-6 / (lp.A() * lp.Jcal);
  return std::max(u, umin);
}
}  // namespace

double early_cross(double u, double up, double t, int eta, int etap, double muhat,
                   int q) {
  if (std::abs(eta) != 1 || std::abs(etap) != 1)
    throw std::invalid_argument("directions must be +-1");
  const double pre = muhat / (2.0 * q);
  return pre * (eta == etap ? (u + up - 2.0 * t) : (2.0 * t - std::abs(u - up)));
}

double pair_component(double du, const Params& lp, int q) {
  const double B = lp.B(), A = lp.A();
  return 0.5 * std::pow(A / std::cosh(B + A * lp.Jcal * std::abs(du)), 2.0 / q);
}

double twist_component(double u, double up, const Params& lp, int q) {
  return 0.5 * std::exp(twist_logdev(u, up, lp) / q);
}

double pair_logdev(double du, const Params& lp) {
  const double B = lp.B(), A = lp.A();
  return 2.0 * std::log(A / std::cosh(B + A * lp.Jcal * std::abs(du)));
}

double twist_logdev(double u, double up, const Params& lp) {
  const double B = lp.B(), A = lp.A(), AJ = lp.A() * lp.Jcal;
  const double x = AJ * floor_u(u, lp);
  const double y = AJ * floor_u(up, lp) + B;
  const double num = A / (std::sinh(x) * std::sinh(y));
  const double den = (1.0 / std::tanh(y)) * (1.0 / std::tanh(x) + 2.0 * std::tanh(B)) - 1.0;
  return 2.0 * std::log(num / den);
}

double pair_residual(double du, const Params& lp, double h) {
  // g depends on u - u' only, so the mixed stencil collapses to -g''
  const double mixed = (2.0 * pair_logdev(du, lp) - pair_logdev(du + 2 * h, lp) -
                        pair_logdev(du - 2 * h, lp)) /
                       (4.0 * h * h);
  return mixed - 2.0 * lp.Jcal * lp.Jcal * std::exp(pair_logdev(du, lp));
}

double twist_residual(double u, double up, const Params& lp, double h) {
  const double mixed =
      (twist_logdev(u + h, up + h, lp) - twist_logdev(u + h, up - h, lp) -
       twist_logdev(u - h, up + h, lp) + twist_logdev(u - h, up - h, lp)) /
      (4.0 * h * h);
  return mixed - 2.0 * lp.Jcal * lp.Jcal * std::exp(twist_logdev(u, up, lp));
}

double entropy_density(double t, double muhat, int q) {
  return std::min(2.0 * muhat * t / q, std::numbers::ln2);
}

}  // namespace dsyk::largeq
