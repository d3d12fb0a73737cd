#pragma once

#include <cmath>

namespace dsyk::largeq {

// Scaled couplings for the weak-coupling limit of many-body interactions:
// Jcal^2 = q J^2 / 2^{q-1} and muhat = q mu stay finite as q grows.
// The steady pairing is controlled by B with muhat = 2 Jcal sinh B, A = cosh B.
struct Params {
  double Jcal = 1.0;
  double muhat = 0.0;
  double B() const { return std::asinh(muhat / (2.0 * Jcal)); }
  double A() const { return std::cosh(B()); }
};

// Early-time cross-replica correlator, linear response in the jump rate.
// u, u' run over one round trip [0, 2t]; eta, etap = +1 forward, -1 backward.
// Equal-direction components grow like u + u' - 2t, opposite-direction ones
// like 2t - |u - u'|.
double early_cross(double u, double up, double t, int eta, int etap, double muhat,
                   int q);

// Late-time pairing component across replicas at separation du; exactly 1/2 at
// coincidence and decaying over the scale 1/(A Jcal). Same-branch components
// follow by antisymmetry: G(u, u') = sgn(u - u') * pair_component(|u - u'|).
double pair_component(double du, const Params& lp, int q);

// Correlator across the boundary twist; u and u' are measured from the twist
// insertion. Decays away from the twist and reduces to the equilibrium form
// when the jump rate vanishes.
double twist_component(double u, double up, const Params& lp, int q);

// Log-deviation fields g with G = (1/2) e^{g/q}; both satisfy the exponential
// growth equation d^2 g / du du' = 2 Jcal^2 e^g.
double pair_logdev(double du, const Params& lp);
double twist_logdev(double u, double up, const Params& lp);

// Finite-difference residual of that equation (mixed 4-point stencil, step h).
double pair_residual(double du, const Params& lp, double h = 1e-4);
double twist_residual(double u, double up, const Params& lp, double h = 1e-4);

// Per-fermion entropy: linear growth 2 muhat t / q capped at ln 2.
double entropy_density(double t, double muhat, int q);

}  // namespace dsyk::largeq
