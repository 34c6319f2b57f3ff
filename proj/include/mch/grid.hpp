#pragma once

#include <utility>
#include <vector>

#include "mch/mesh.hpp"

namespace mch {

using BlockId = int;

/// Fine grid of n_f × n_f square cells covering the unit square.
struct FineGrid {
  int cells_per_side = 0;
  double h = 0.0;
  RectMesh mesh;

  [[nodiscard]] int node_count() const { return mesh.node_count(); }
  [[nodiscard]] int cell_count() const { return mesh.cell_count(); }
};

/// Coarse grid of M × M blocks; every block holds (n_f / M)² fine cells.
struct CoarseGrid {
  int blocks_per_side = 0;
  double H = 0.0;
  int cells_per_block = 0;  // fine cells along one block side
  int fine_cells_per_side = 0;
  RectMesh mesh;

  [[nodiscard]] int block_count() const { return blocks_per_side * blocks_per_side; }
  [[nodiscard]] int node_count() const { return mesh.node_count(); }
  [[nodiscard]] BlockId block(int bi, int bj) const { return bj * blocks_per_side + bi; }
  [[nodiscard]] int block_i(BlockId b) const { return b % blocks_per_side; }
  [[nodiscard]] int block_j(BlockId b) const { return b / blocks_per_side; }
  [[nodiscard]] BlockId block_of_cell(int fine_cell) const;
  [[nodiscard]] std::vector<int> cells_in_block(BlockId b) const;
  [[nodiscard]] Point block_center(BlockId b) const;
  [[nodiscard]] bool valid_block(BlockId b) const { return b >= 0 && b < block_count(); }
};

/// How an oversampled region treats the part that would leave the unit square.
/// Clipped drops it. Mirrored keeps the full (2l+1)² window and fills the
/// outside cells with the mirror images of cells inside across ∂Ω.
enum class RegionBoundary { Clipped, Mirrored };

/// Oversampled region: the blocks within Chebyshev distance `layers` of the
/// center block. Being a rectangle of blocks, it carries its own fine
/// sub-mesh with local row-major numbering; local coordinates may extend past
/// [0, 1] in mirrored mode.
struct OversampleRegion {
  BlockId center_block = 0;
  int layers = 0;
  RegionBoundary boundary = RegionBoundary::Clipped;
  std::vector<BlockId> member_blocks;  // mirrored windows list the source block of each image
  int central_index = 0;

  int block_i_lo = 0;
  int block_i_hi = 0;  // inclusive
  int block_j_lo = 0;
  int block_j_hi = 0;  // inclusive

  RectMesh mesh;           // local fine mesh of the region
  int cell_i0 = 0;         // fine-cell offset of the region in the global grid
  int cell_j0 = 0;
  int fine_cells_per_side = 0;
  int cells_per_block = 0;

  /// Global node or cell that a local one stands for (its mirror source outside Ω).
  [[nodiscard]] int global_node(int local) const;
  [[nodiscard]] int global_cell(int local) const;
  /// Local index of a global fine node at its own position, or -1 outside the region.
  [[nodiscard]] int local_node(int global) const;
  /// Index into member_blocks of the block holding local cell c.
  [[nodiscard]] int member_of_cell(int local_cell) const;
  /// Local cells of the central block, in its own row-major order.
  [[nodiscard]] std::vector<int> central_cells() const;
  /// Local nodes of the central block, in its own row-major order.
  [[nodiscard]] std::vector<int> central_nodes() const;
  [[nodiscard]] RectMesh central_mesh() const;
};

std::pair<CoarseGrid, FineGrid> build_grids(int blocks_per_side, int fine_cells_per_side);

OversampleRegion oversample_region(const CoarseGrid& coarse, BlockId block, int layers,
                                   RegionBoundary boundary = RegionBoundary::Clipped);

/// Number of oversampling layers ⌈−2 ln H⌉.
int layers_for(double H);

}  // namespace mch
