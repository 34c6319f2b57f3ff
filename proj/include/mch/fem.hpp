#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mch/fields.hpp"
#include "mch/grid.hpp"
#include "mch/linalg.hpp"

namespace mch {

enum class OperatorKind { Stiffness, Mass, Convection };

struct AssembledOperator {
  SparseMatrix matrix;
  OperatorKind kind = OperatorKind::Stiffness;
  std::string coefficient;  // name of the cell field it was built from
};

/// ∫ c ∇N_b · ∇N_a, 2×2 Gauss, c constant per cell.
AssembledOperator assemble_stiffness(const RectMesh& mesh, std::span<const double> coeff,
                                     std::string name = "kappa");
/// ∫ c N_b N_a.
AssembledOperator assemble_mass(const RectMesh& mesh, std::span<const double> coeff, std::string name = "phi");

/// Velocity −κ∇p_h at every quadrature point, indexed [cell * 4 + q].
std::vector<Vec2> darcy_velocity(const RectMesh& mesh, std::span<const double> kappa,
                                 std::span<const double> pressure);

/// ∫ (u · ∇N_b) N_a for a velocity tabulated at quadrature points. Row a is
/// the test function, column b the trial function.
AssembledOperator assemble_convection(const RectMesh& mesh, std::span<const Vec2> velocity);
AssembledOperator assemble_convection(const RectMesh& mesh, std::span<const double> kappa,
                                      std::span<const double> pressure);

/// ∫ f N_a for f constant per cell.
std::vector<double> assemble_load(const RectMesh& mesh, std::span<const double> cell_values);

/// Mask of the nodes on the outer boundary of the mesh.
std::vector<char> boundary_mask(const RectMesh& mesh);

/// Symmetric elimination: rows and columns of fixed nodes are replaced by
/// the identity. The lifting of nonzero boundary data is done by lift_rhs.
SparseMatrix eliminate_dirichlet(const SparseMatrix& a, std::span<const char> fixed);

/// b_free − A·g on free nodes and g on fixed nodes, with A the matrix before elimination.
std::vector<double> lift_rhs(const SparseMatrix& a, std::span<const char> fixed, std::span<const double> values,
                             std::span<const double> b);

struct FineSolution {
  std::vector<double> nodal;         // last state
  std::vector<double> times;         // sampled output times
  std::vector<std::vector<double>> snapshots;
  double residual_norm = 0.0;
};

/// −∇·(κ∇p) = g with the pressure Dirichlet data of `bc`.
FineSolution solve_flow_fine(const FineGrid& grid, const CellField& kappa, std::span<const double> g,
                             PressureBc bc);

/// Implicit Euler for φ ∂c/∂t + u·∇c − ∇·(D∇c) = h. The system matrix
/// M/τ + C + A_D is factorized once at construction.
class FineTransport {
 public:
  FineTransport(const FineGrid& grid, const CellField& kappa, const CellField& diffusion, const CellField& porosity,
                std::span<const double> pressure, std::span<const double> h, ConcentrationBc bc, double tau);

  /// c^{n+1} from c^n.
  [[nodiscard]] std::vector<double> step(std::span<const double> c) const;
  [[nodiscard]] double tau() const { return tau_; }
  [[nodiscard]] const SparseMatrix& mass() const { return mass_; }
  [[nodiscard]] const SparseMatrix& convection() const { return convection_; }
  [[nodiscard]] const SparseMatrix& diffusion() const { return diffusion_; }

 private:
  double tau_;
  ConcentrationBc bc_;
  SparseMatrix mass_;
  SparseMatrix convection_;
  SparseMatrix diffusion_;
  std::vector<double> load_;
  std::vector<char> fixed_;
  LuFactorization lu_;
};

/// One step of `op`; the free-function form of FineTransport::step.
std::vector<double> step_transport_fine(const FineTransport& op, std::span<const double> c);

/// Number of steps of size tau needed to reach t; throws if t is not a multiple of tau.
int steps_to(double t, double tau);

/// Runs from c0 to the last output time, storing a snapshot at each output time.
FineSolution run_transport_fine(const FineTransport& op, std::vector<double> c0, std::span<const double> output_times);

/// Per block, the integral of the Q1 interpolant over the cells labeled `continuum`
/// divided by their area.
std::vector<double> block_average(std::span<const double> nodal, const CoarseGrid& coarse,
                                  const ContinuumMap& continua, int continuum);

/// Q1 interpolant and its gradient at a point inside the mesh.
double interpolate(const RectMesh& mesh, std::span<const double> nodal, Point x);
Vec2 interpolate_gradient(const RectMesh& mesh, std::span<const double> nodal, Point x);

/// ‖u_h − f‖_{L²} with f evaluated at 3×3 Gauss points per cell.
double l2_error(const RectMesh& mesh, std::span<const double> nodal, const std::function<double(Point)>& exact);

}  // namespace mch
