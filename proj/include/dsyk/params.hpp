#pragma once
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dsyk {

// Physical parameter tuple. Units: J sets the energy scale, times in 1/J.
// N Majoranas per side; the doubled system used by the oracle has 2N.
struct ModelParams {
  int N = 12;
  int q = 4;
  double J = 1.0;
  double mu = 0.0;
  double beta = 0.0;  // std::numeric_limits<double>::infinity() = ground state

  void validate() const {
    if (N < 2 || N % 2 != 0) throw std::invalid_argument("N must be even, >= 2");
    if (q < 4 || q % 2 != 0) throw std::invalid_argument("q must be even, >= 4");
    if (q > N) throw std::invalid_argument("q must not exceed N");
    if (!(J > 0)) throw std::invalid_argument("J must be positive");
    if (!(mu >= 0)) throw std::invalid_argument("mu must be nonnegative");
    if (!(beta >= 0)) throw std::invalid_argument("beta must be nonnegative");
  }

  bool beta_infinite() const { return std::isinf(beta); }

  // large-q scalings, fixed as q -> infinity
  double Jcal() const { return std::sqrt(double(q) / std::pow(2.0, q - 1)) * J; }
  double muhat() const { return q * mu; }
};

}  // namespace dsyk
