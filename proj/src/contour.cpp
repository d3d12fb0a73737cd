#include "dsyk/contour.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include "json.hpp"

namespace dsyk {

namespace {
constexpr std::complex<double> kI{0.0, 1.0};
}

Contour build_contour(int m, double t, double beta, int nsteps, int nimag) {
  if (m != 1 && m != 2) throw std::invalid_argument("replica count must be 1 or 2");
  if (t < 0) throw std::invalid_argument("negative evolution time");
  if (nsteps < 2) throw std::invalid_argument("nsteps must be >= 2");
  if (std::isinf(beta)) throw std::invalid_argument("beta = inf unsupported on the grid");
  if (beta < 0) throw std::invalid_argument("negative beta");
  if (beta > 0 && nsteps % 2 != 0)
    throw std::invalid_argument("nsteps must be even when beta > 0");
  if (beta > 0 && nimag < 1)
    throw std::invalid_argument("nimag must be >= 1 when beta > 0");
  if (beta == 0) nimag = 0;

  Contour c;
  c.m = m;
  c.t = t;
  c.beta = beta;
  c.nsteps = nsteps;
  c.nimag = nimag;

  const double ds = 2.0 * t / nsteps;        // branch covers both side streams
  const double dth = beta > 0 ? (beta / 2.0) / nimag : 0.0;

  // (loop, branch, bin) -> flat index, for partner wiring
  std::map<std::tuple<int, int, int>, int> real_idx;

  for (int loop = 0; loop < m; ++loop) {
    auto push_real = [&](Branch b, int k) {
      ContourPoint p;
      p.loop = loop;
      p.branch = b;
      p.s = (k + 0.5) * ds;
      p.theta = 0.0;
      p.w = ds;
      p.f = (b == Branch::forward) ? kI : -kI;
      p.partner = -1;
      real_idx[{loop, static_cast<int>(b), k}] = static_cast<int>(c.pts.size());
      c.pts.push_back(p);
    };
    auto push_arc = [&]() {
      for (int j = 0; j < nimag; ++j) {
        ContourPoint p;
        p.loop = loop;
        p.branch = Branch::arc;
        p.s = t;
        p.theta = (j + 0.5) * dth;
        p.w = dth;
        p.f = 1.0;
        p.partner = -1;
        c.pts.push_back(p);
      }
    };

    // forward: s ascending, beta/2 insertion between the two side streams
    for (int k = 0; k < nsteps / 2; ++k) push_real(Branch::forward, k);
    push_arc();
    for (int k = nsteps / 2; k < nsteps; ++k) push_real(Branch::forward, k);
    // backward: s descending, mirror layout
    for (int k = nsteps - 1; k >= nsteps / 2; --k) push_real(Branch::backward, k);
    push_arc();
    for (int k = nsteps / 2 - 1; k >= 0; --k) push_real(Branch::backward, k);
  }
  c.loop_size = c.size() / m;

  // equal-s pairing: opposite directions, across loops for m = 2
  const int other = (m == 2) ? 1 : 0;
  for (int k = 0; k < nsteps; ++k) {
    int af = real_idx[{0, 0, k}], ab = real_idx[{0, 1, k}];
    int bf = real_idx[{other, 0, k}], bb = real_idx[{other, 1, k}];
    c.pts[af].partner = bb;
    c.pts[bb].partner = af;
    if (m == 2) {
      c.pts[ab].partner = bf;
      c.pts[bf].partner = ab;
    }
  }
  return c;
}

std::string Contour::to_json() const {
  nlohmann::json j;
  j["m"] = m;
  j["t"] = t;
  j["beta"] = beta;
  j["nsteps"] = nsteps;
  j["nimag"] = nimag;
  j["M"] = size();
  auto pts_j = nlohmann::json::array();
  for (int i = 0; i < size(); ++i) {
    const auto& p = pts[i];
    const char* br = p.branch == Branch::forward    ? "+"
                     : p.branch == Branch::backward ? "-"
                                                    : "arc";
    const char* fs = p.branch == Branch::forward    ? "+i"
                     : p.branch == Branch::backward ? "-i"
                                                    : "1";
    pts_j.push_back({{"i", i},
                     {"loop", p.loop},
                     {"branch", br},
                     {"s", p.s},
                     {"theta", p.theta},
                     {"w", p.w},
                     {"f", fs},
                     {"partner", p.partner}});
  }
  j["points"] = std::move(pts_j);
  return j.dump(2);
}

}  // namespace dsyk
