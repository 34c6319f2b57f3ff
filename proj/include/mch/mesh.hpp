#pragma once

#include <array>
#include <cmath>

namespace mch {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

using Vec2 = std::array<double, 2>;

/// Uniform rectangular mesh of nx × ny quadrilateral cells whose lower-left
/// corner sits at (x0, y0). Nodes and cells are numbered row-major with x
/// running fastest; the four nodes of a cell are listed counterclockwise
/// starting at its lower-left corner.
struct RectMesh {
  int nx = 0;
  int ny = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double hx = 0.0;
  double hy = 0.0;

  [[nodiscard]] int node_count() const { return (nx + 1) * (ny + 1); }
  [[nodiscard]] int cell_count() const { return nx * ny; }
  [[nodiscard]] int node(int i, int j) const { return j * (nx + 1) + i; }
  [[nodiscard]] int cell(int i, int j) const { return j * nx + i; }
  [[nodiscard]] double cell_area() const { return hx * hy; }
  [[nodiscard]] double width() const { return nx * hx; }
  [[nodiscard]] double height() const { return ny * hy; }

  [[nodiscard]] std::array<int, 4> cell_nodes(int c) const {
    const int i = c % nx;
    const int j = c / nx;
    const int n0 = node(i, j);
    return {n0, n0 + 1, n0 + nx + 2, n0 + nx + 1};
  }

  [[nodiscard]] Point node_point(int n) const {
    const int i = n % (nx + 1);
    const int j = n / (nx + 1);
    return {x0 + i * hx, y0 + j * hy};
  }

  [[nodiscard]] Point cell_center(int c) const {
    const int i = c % nx;
    const int j = c / nx;
    return {x0 + (i + 0.5) * hx, y0 + (j + 0.5) * hy};
  }

  [[nodiscard]] bool is_boundary_node(int n) const {
    const int i = n % (nx + 1);
    const int j = n / (nx + 1);
    return i == 0 || j == 0 || i == nx || j == ny;
  }
};

namespace q1 {

inline constexpr int kQuadPoints = 4;

/// Shape functions and reference derivatives of the bilinear element on the
/// unit square, tabulated at the 2×2 Gauss points (ordered q = 2·qj + qi).
struct Tables {
  std::array<double, 4> xi{};
  std::array<double, 4> eta{};
  std::array<double, 4> weight{};
  std::array<std::array<double, 4>, 4> value{};   // [q][a]
  std::array<std::array<double, 4>, 4> dxi{};     // [q][a]
  std::array<std::array<double, 4>, 4> deta{};    // [q][a]
};

const Tables& tables();

/// Physical quadrature point q of cell c.
Point quad_point(const RectMesh& mesh, int c, int q);

/// Gradient of shape function a at quadrature point q for a cell of size hx × hy.
inline Vec2 shape_gradient(const RectMesh& mesh, int q, int a) {
  const auto& t = tables();
  return {t.dxi[q][a] / mesh.hx, t.deta[q][a] / mesh.hy};
}

}  // namespace q1

}  // namespace mch
