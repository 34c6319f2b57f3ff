#pragma once

#include <span>
#include <vector>

#include "mch/cells.hpp"
#include "mch/effective.hpp"
#include "mch/fields.hpp"
#include "mch/grid.hpp"
#include "mch/linalg.hpp"

namespace mch {

/// Coarse unknowns are ordered continuum-major: index i·(coarse nodes) + node.
struct MacroState {
  int continua = 1;
  int nodes = 0;
  std::vector<double> P;
  std::vector<double> C;
  double t = 0.0;
  std::vector<double> frozen_p;     // P_s(x_ω) at [block·N + s]
  std::vector<Vec2> frozen_grad_p;  // ∇P_s(x_ω) at [block·N + s]

  [[nodiscard]] std::span<const double> p(int i) const { return {P.data() + static_cast<std::size_t>(i) * nodes, static_cast<std::size_t>(nodes)}; }
  [[nodiscard]] std::span<const double> c(int i) const { return {C.data() + static_cast<std::size_t>(i) * nodes, static_cast<std::size_t>(nodes)}; }
};

enum class TensorRoute { Hatted, Raw };

struct MacroFlowSystem {
  SparseMatrix matrix;  // after Dirichlet elimination
  SparseMatrix full;    // before elimination
  std::vector<double> rhs;
  std::vector<char> fixed;
};

/// Nodal load Σ_blocks g_s(block) ∫ Q_s for per-block values at [block·N + s].
std::vector<double> block_constant_load(const CoarseGrid& coarse, std::span<const double> per_block, int continua);

/// Nodal load from per-block corner integrals at [(block·N + s)·4 + a].
std::vector<double> corner_load(const CoarseGrid& coarse, std::span<const double> per_corner, int continua);

/// Σ_blocks ∫ α̂^{km}_{is} ∂_m P_i ∂_k Q_s + ε⁻² β̂_{is} P_i Q_s against the nodal load `load`.
/// The Raw route uses α/|R| and β^*/|R| directly; both routes give the same system.
MacroFlowSystem assemble_macro_flow(const CoarseGrid& coarse, std::span<const FlowEffective> eff,
                                    std::span<const double> load, PressureBc bc,
                                    TensorRoute route = TensorRoute::Hatted);

/// Solves the flow system and records the block-center value and gradient of every P_s.
MacroState solve_macro_flow(const CoarseGrid& coarse, const MacroFlowSystem& sys, int continua);

/// P_s and ∇P_s of the coarse Q1 interpolant at every block center.
void freeze_pressure(const CoarseGrid& coarse, MacroState& state);

/// ξ̂ and Θ̂ per block from the hatted tensors and the frozen pressure.
std::vector<CombinedTransport> combine_all(const MacroState& state, std::span<const TransportEffective> hatted,
                                           const ScalingContext& ctx);

/// γ̂M/τ + K(η̂) + ε⁻¹C(ξ̂) + ε⁻²R(Θ̂), factorized once.
class MacroTransport {
 public:
  MacroTransport(const CoarseGrid& coarse, std::span<const TransportEffective> hatted,
                 std::span<const CombinedTransport> combined, std::span<const double> load, ConcentrationBc bc,
                 double tau);

  /// One implicit Euler step; t advances by τ.
  void step(MacroState& state) const;
  [[nodiscard]] const SparseMatrix& mass() const { return mass_; }
  [[nodiscard]] const SparseMatrix& system() const { return system_; }
  [[nodiscard]] const std::vector<double>& load() const { return load_; }
  [[nodiscard]] double tau() const { return tau_; }

 private:
  double tau_;
  ConcentrationBc bc_;
  SparseMatrix mass_;    // γ̂-weighted
  SparseMatrix system_;  // before elimination
  std::vector<double> load_;
  std::vector<char> fixed_;
  LuFactorization lu_;
};

void step_macro_transport(MacroState& state, const MacroTransport& op);

/// Parts of the transport operator, exposed for inspection and tests.
struct MacroTransportParts {
  SparseMatrix mass;       // γ̂
  SparseMatrix stiffness;  // η̂
  SparseMatrix convection; // ε⁻¹ ξ̂
  SparseMatrix reaction;   // ε⁻² Θ̂
};
/// Σ_blocks γ̂_{ij} ∫ N_b N_a.
SparseMatrix assemble_macro_transport_mass(const CoarseGrid& coarse, std::span<const TransportEffective> hatted);
MacroTransportParts assemble_macro_transport(const CoarseGrid& coarse, std::span<const TransportEffective> hatted,
                                             std::span<const CombinedTransport> combined);

/// Initial coarse C_i: per-block continuum averages of the fine nodal field,
/// averaged over the blocks adjacent to each coarse node.
std::vector<double> initial_macro_concentration(const CoarseGrid& coarse, const ContinuumMap& continua,
                                                std::span<const double> fine_nodal);

/// C solving Σ_blocks γ̂_{ij} ∫ C_j V_i = moments, with Dirichlet nodes held at zero
/// when `bc` is Dirichlet; `moments` is a nodal vector as built by corner_load.
std::vector<double> project_macro_concentration(const CoarseGrid& coarse, std::span<const TransportEffective> hatted,
                                                std::span<const double> moments, ConcentrationBc bc);

/// Mean of the four corner values of continuum i over every block.
std::vector<double> macro_block_average(const CoarseGrid& coarse, std::span<const double> nodal);

/// Block-center value and gradient of a coarse Q1 field.
double block_center_value(const CoarseGrid& coarse, std::span<const double> nodal, BlockId b);
Vec2 block_center_gradient(const CoarseGrid& coarse, std::span<const double> nodal, BlockId b);

/// Σ_i φ_i U_i(x_ω) + Σ_{i,m} φ_i^m ∇_m U_i(x_ω) on the central nodes of each block.
std::vector<std::vector<double>> downscale(const CoarseGrid& coarse, std::span<const CellBasisSet> sets,
                                           std::span<const double> U, int continua, bool transport);

/// Fine cell field from per-block nodal patches: mean of each cell's corners.
std::vector<double> patches_to_cells(const CoarseGrid& coarse, const std::vector<std::vector<double>>& patches);

/// x-coordinate of ∫ γ̂_{jj} C_j x / ∫ γ̂_{jj} C_j over Ω.
double center_of_mass_x(const CoarseGrid& coarse, std::span<const TransportEffective> hatted,
                        std::span<const double> C, int continuum);

}  // namespace mch
