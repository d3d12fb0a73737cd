#pragma once
#include <complex>
#include <string>
#include <vector>

namespace dsyk {

// One closed loop of the replica trace: forward branch (2t of real time,
// split by a beta/2 arc at branch time s = t), then backward branch (same
// shape, traversed with s descending). Tr P^m needs m such loops; the
// dissipative coupling pairs equal-s points on opposite directions, within
// the loop for m = 1 and across the two loops for m = 2.
enum class Branch : int { forward = 0, backward = 1, arc = 2 };

struct ContourPoint {
  int loop;      // 0 = a, 1 = b
  Branch branch;
  double s;      // branch time in [0, 2t]; arc points carry s = t
  double theta;  // position along the beta/2 arc, 0 for real points
  double w;      // quadrature weight (midpoint rule)
  std::complex<double> f;  // +i forward, -i backward, +1 arc
  int partner;   // equal-s dissipative partner index, -1 on arcs
};

struct Contour {
  int m = 2;
  double t = 0.0, beta = 0.0;
  int nsteps = 0;  // real midpoints per branch
  int nimag = 0;   // points per arc (two arcs per loop when beta > 0)
  std::vector<ContourPoint> pts;  // contour order, loop 0 first
  int loop_size = 0;

  int size() const { return static_cast<int>(pts.size()); }
  // strict total order along the compactified contour variable
  int sign(int p, int r) const {
    if (p == r) return 0;
    return p > r ? 1 : -1;
  }
  std::string to_json() const;
};

// nsteps must be even when beta > 0 so the arc can sit at s = t.
Contour build_contour(int m, double t, double beta, int nsteps, int nimag);

}  // namespace dsyk
