#include "mch/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mch {

BlockId CoarseGrid::block_of_cell(int fine_cell) const {
  const int i = fine_cell % fine_cells_per_side;
  const int j = fine_cell / fine_cells_per_side;
  return block(i / cells_per_block, j / cells_per_block);
}

std::vector<int> CoarseGrid::cells_in_block(BlockId b) const {
  std::vector<int> cells;
  cells.reserve(static_cast<std::size_t>(cells_per_block) * cells_per_block);
  const int i0 = block_i(b) * cells_per_block;
  const int j0 = block_j(b) * cells_per_block;
  for (int j = j0; j < j0 + cells_per_block; ++j) {
    for (int i = i0; i < i0 + cells_per_block; ++i) {
      cells.push_back(j * fine_cells_per_side + i);
    }
  }
  return cells;
}

Point CoarseGrid::block_center(BlockId b) const {
  return {(block_i(b) + 0.5) * H, (block_j(b) + 0.5) * H};
}

namespace {

/// Folds an index of the infinite mirrored line back into [0, n].
int fold_node(int g, int n) {
  g = ((g % (2 * n)) + 2 * n) % (2 * n);
  return g <= n ? g : 2 * n - g;
}

/// Folds a cell index into [0, n): cell -1 mirrors cell 0.
int fold_cell(int g, int n) {
  g = ((g % (2 * n)) + 2 * n) % (2 * n);
  return g < n ? g : 2 * n - 1 - g;
}

}  // namespace

int OversampleRegion::global_node(int local) const {
  const int n = fine_cells_per_side;
  const int i = fold_node(local % (mesh.nx + 1) + cell_i0, n);
  const int j = fold_node(local / (mesh.nx + 1) + cell_j0, n);
  return j * (n + 1) + i;
}

int OversampleRegion::global_cell(int local) const {
  const int n = fine_cells_per_side;
  const int i = fold_cell(local % mesh.nx + cell_i0, n);
  const int j = fold_cell(local / mesh.nx + cell_j0, n);
  return j * n + i;
}

int OversampleRegion::local_node(int global) const {
  const int gi = global % (fine_cells_per_side + 1) - cell_i0;
  const int gj = global / (fine_cells_per_side + 1) - cell_j0;
  if (gi < 0 || gj < 0 || gi > mesh.nx || gj > mesh.ny) {
    return -1;
  }
  return mesh.node(gi, gj);
}

int OversampleRegion::member_of_cell(int local_cell) const {
  const int bi = (local_cell % mesh.nx) / cells_per_block;
  const int bj = (local_cell / mesh.nx) / cells_per_block;
  return bj * (block_i_hi - block_i_lo + 1) + bi;
}

std::vector<int> OversampleRegion::central_cells() const {
  const int c = cells_per_block;
  const int bi = central_index % (block_i_hi - block_i_lo + 1);
  const int bj = central_index / (block_i_hi - block_i_lo + 1);
  std::vector<int> cells;
  cells.reserve(static_cast<std::size_t>(c) * c);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < c; ++i) {
      cells.push_back(mesh.cell(bi * c + i, bj * c + j));
    }
  }
  return cells;
}

std::vector<int> OversampleRegion::central_nodes() const {
  const int c = cells_per_block;
  const int bi = central_index % (block_i_hi - block_i_lo + 1);
  const int bj = central_index / (block_i_hi - block_i_lo + 1);
  std::vector<int> nodes;
  nodes.reserve(static_cast<std::size_t>(c + 1) * (c + 1));
  for (int j = 0; j <= c; ++j) {
    for (int i = 0; i <= c; ++i) {
      nodes.push_back(mesh.node(bi * c + i, bj * c + j));
    }
  }
  return nodes;
}

RectMesh OversampleRegion::central_mesh() const {
  const int c = cells_per_block;
  const int bi = central_index % (block_i_hi - block_i_lo + 1);
  const int bj = central_index / (block_i_hi - block_i_lo + 1);
  return {c, c, mesh.x0 + bi * c * mesh.hx, mesh.y0 + bj * c * mesh.hy, mesh.hx, mesh.hy};
}

std::pair<CoarseGrid, FineGrid> build_grids(int blocks_per_side, int fine_cells_per_side) {
  if (blocks_per_side < 2) {
    throw std::invalid_argument("build_grids: need at least 2 coarse blocks per side, got " +
                                std::to_string(blocks_per_side));
  }
  if (fine_cells_per_side < 2 * blocks_per_side) {
    throw std::invalid_argument("build_grids: n_f = " + std::to_string(fine_cells_per_side) +
                                " must be at least 2M = " + std::to_string(2 * blocks_per_side));
  }
  if (fine_cells_per_side % blocks_per_side != 0) {
    throw std::invalid_argument("build_grids: n_f = " + std::to_string(fine_cells_per_side) +
                                " is not divisible by M = " + std::to_string(blocks_per_side));
  }

  FineGrid fine;
  fine.cells_per_side = fine_cells_per_side;
  fine.h = 1.0 / fine_cells_per_side;
  fine.mesh = {fine_cells_per_side, fine_cells_per_side, 0.0, 0.0, fine.h, fine.h};

  CoarseGrid coarse;
  coarse.blocks_per_side = blocks_per_side;
  coarse.H = 1.0 / blocks_per_side;
  coarse.cells_per_block = fine_cells_per_side / blocks_per_side;
  coarse.fine_cells_per_side = fine_cells_per_side;
  coarse.mesh = {blocks_per_side, blocks_per_side, 0.0, 0.0, coarse.H, coarse.H};

  return {coarse, fine};
}

OversampleRegion oversample_region(const CoarseGrid& coarse, BlockId block, int layers, RegionBoundary boundary) {
  if (!coarse.valid_block(block)) {
    throw std::out_of_range("oversample_region: invalid block id " + std::to_string(block));
  }
  if (layers < 0) {
    throw std::invalid_argument("oversample_region: negative layer count");
  }
  const int M = coarse.blocks_per_side;
  const int bi = coarse.block_i(block);
  const int bj = coarse.block_j(block);

  OversampleRegion r;
  r.center_block = block;
  r.layers = layers;
  r.boundary = boundary;
  const bool clip = boundary == RegionBoundary::Clipped;
  r.block_i_lo = clip ? std::max(0, bi - layers) : bi - layers;
  r.block_i_hi = clip ? std::min(M - 1, bi + layers) : bi + layers;
  r.block_j_lo = clip ? std::max(0, bj - layers) : bj - layers;
  r.block_j_hi = clip ? std::min(M - 1, bj + layers) : bj + layers;

  for (int j = r.block_j_lo; j <= r.block_j_hi; ++j) {
    for (int i = r.block_i_lo; i <= r.block_i_hi; ++i) {
      if (i == bi && j == bj) {
        r.central_index = static_cast<int>(r.member_blocks.size());
      }
      r.member_blocks.push_back(coarse.block(fold_cell(i, M), fold_cell(j, M)));
    }
  }

  const int c = coarse.cells_per_block;
  const double h = 1.0 / coarse.fine_cells_per_side;
  r.cells_per_block = c;
  r.fine_cells_per_side = coarse.fine_cells_per_side;
  r.cell_i0 = r.block_i_lo * c;
  r.cell_j0 = r.block_j_lo * c;
  r.mesh = {(r.block_i_hi - r.block_i_lo + 1) * c,
            (r.block_j_hi - r.block_j_lo + 1) * c,
            r.cell_i0 * h,
            r.cell_j0 * h,
            h,
            h};
  return r;
}

int layers_for(double H) {
  if (!(H > 0.0 && H < 1.0)) {
    throw std::invalid_argument("layers_for: H must lie in (0, 1)");
  }
  return static_cast<int>(std::ceil(-2.0 * std::log(H)));
}

}  // namespace mch
