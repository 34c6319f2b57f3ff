#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "mch/cells.hpp"
#include "mch/fields.hpp"
#include "mch/grid.hpp"

namespace mch {

struct ScalingContext {
  double eps = 0.0;   // RVE size, equal to H
  double area = 0.0;  // |R_ω| = H²

  static ScalingContext for_block_size(double H);
};

/// Flow tensors of one block. α is stored as a 2N × 2N matrix over the
/// pairs (i, m) × (s, k), so α_{is}^{km} = alpha[(i·2+m)·2N + s·2+k].
struct FlowEffective {
  int continua = 1;
  std::vector<double> alpha;   // ∫κ∇φ_i^{m,p}·∇φ_s^{k,p}
  std::vector<double> beta_m;  // β_{ik}^{m*} at [(i·N+k)·2+m], ∫κ∇φ_i^p·∇φ_k^{m,p}
  std::vector<double> beta;    // β_{ik}^* at [i·N+k], ∫κ∇φ_i^p·∇φ_k^p

  [[nodiscard]] double a(int i, int s, int k, int m) const {
    return alpha[(i * 2 + m) * 2 * continua + s * 2 + k];
  }
};

/// Transport tensors of one block. η follows the α layout; the convection
/// tensors carry the pressure index s first:
///   ζ_{sij} at [(s·N+i)·N+j], χ_{sij}^m and Υ_{sij}^l at [((s·N+i)·N+j)·2+m|l],
///   ι_{sij}^{lm} at [(((s·N+i)·N+j)·2+l)·2+m].
struct TransportEffective {
  int continua = 1;
  std::vector<double> eta;
  std::vector<double> theta_m;
  std::vector<double> theta;
  std::vector<double> gamma;  // [i·N+j], ∫φ φ_i^c φ_j^c
  std::vector<double> zeta;
  std::vector<double> chi;
  std::vector<double> upsilon;
  std::vector<double> iota;
};

/// ξ̂_{ij}^m at [(i·N+j)·2+m] and Θ̂_{ij} at [i·N+j]; i is the trial continuum.
struct CombinedTransport {
  int continua = 1;
  std::vector<double> xi;
  std::vector<double> big_theta;
};

/// Integrals over the central RVE of `set` with the same 2×2 Gauss rule as assembly.
/// Coefficients are given on the cells of that block, in its row-major order.
FlowEffective flow_effective(const CellBasisSet& set, std::span<const double> kappa_block);
TransportEffective transport_effective(const CellBasisSet& set, std::span<const double> diffusion_block,
                                       std::span<const double> kappa_block, std::span<const double> porosity_block);

FlowEffective hat(const FlowEffective& raw, const ScalingContext& ctx);
FlowEffective unhat(const FlowEffective& hatted, const ScalingContext& ctx);
TransportEffective hat(const TransportEffective& raw, const ScalingContext& ctx);
TransportEffective unhat(const TransportEffective& hatted, const ScalingContext& ctx);

/// ξ̂ = Σ_s P_s χ̂_s + ε Σ_{s,l} ∇_l P_s ι̂_s^l,  Θ̂ = θ̂ + Σ_s P_s ζ̂_s + ε Σ_{s,l} ∇_l P_s Υ̂_s^l.
CombinedTransport combine_transport(const TransportEffective& hatted, std::span<const double> p_vals,
                                    std::span<const Vec2> grad_p_vals, const ScalingContext& ctx);

/// (1/|R|)∫_R f φ_i for f constant per cell of the block and basis family `basis`.
std::vector<double> block_source(const CellBasisSet& set, const std::vector<std::vector<double>>& basis,
                                 std::span<const double> f_block, const ScalingContext& ctx);

/// ∫_R c·w·φ_i·N_a for every basis i and coarse corner a (counterclockwise from
/// the lower-left), indexed [i·4 + a]. `cell_coef` is constant per cell; the
/// nodal field `w` lives on the central mesh and may be empty (w ≡ 1).
std::vector<double> block_corner_moments(const CellBasisSet& set, const std::vector<std::vector<double>>& basis,
                                         std::span<const double> cell_coef, std::span<const double> w = {});

/// Values of a global cell field on the cells of one block, row-major.
std::vector<double> block_cells(const CoarseGrid& coarse, BlockId block, std::span<const double> global);

/// Values of a global fine nodal field on the nodes of one block, row-major.
std::vector<double> block_nodes(const CoarseGrid& coarse, BlockId block, std::span<const double> global);

struct ScalingSample {
  double H = 0.0;
  FlowEffective raw;
};

struct ScalingEntry {
  std::string tensor;
  double expected = 0.0;  // exponent of H
  double fitted = 0.0;
  bool degenerate = false;
  bool ok = false;
};

/// Least-squares exponent of ‖tensor‖_F against H for β^*, β^{m*} and α.
/// Expected: β^* ~ |R|/ε² (0), β^{m*} ~ |R|/ε (1), α ~ |R| (2); ok within ±0.5.
std::vector<ScalingEntry> scaling_report(std::span<const ScalingSample> samples);

void write_tensor_csv_header(std::ostream& os);
void write_tensor_csv(std::ostream& os, BlockId block, const FlowEffective& f, const TransportEffective* t,
                      const std::string& suffix);

}  // namespace mch
