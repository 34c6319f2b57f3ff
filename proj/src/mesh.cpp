#include "mch/mesh.hpp"

namespace mch::q1 {

namespace {

Tables make_tables() {
  Tables t;
  const double g = 0.5 / std::sqrt(3.0);
  const std::array<double, 2> gp{0.5 - g, 0.5 + g};
  for (int qj = 0; qj < 2; ++qj) {
    for (int qi = 0; qi < 2; ++qi) {
      const int q = 2 * qj + qi;
      const double x = gp[qi];
      const double y = gp[qj];
      t.xi[q] = x;
      t.eta[q] = y;
      t.weight[q] = 0.25;
      t.value[q] = {(1 - x) * (1 - y), x * (1 - y), x * y, (1 - x) * y};
      t.dxi[q] = {-(1 - y), (1 - y), y, -y};
      t.deta[q] = {-(1 - x), -x, x, (1 - x)};
    }
  }
  return t;
}

}  // namespace

const Tables& tables() {
  static const Tables t = make_tables();
  return t;
}

Point quad_point(const RectMesh& mesh, int c, int q) {
  const auto& t = tables();
  const int i = c % mesh.nx;
  const int j = c / mesh.nx;
  return {mesh.x0 + (i + t.xi[q]) * mesh.hx, mesh.y0 + (j + t.eta[q]) * mesh.hy};
}

}  // namespace mch::q1
