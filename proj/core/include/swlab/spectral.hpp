#pragma once

// Spectral analysis of the unperturbed Hamiltonian and the block structures
// that define what "block diagonal" means for the Schrieffer-Wolff transform:
// explicit index lists, spectral-gap clustering, exact degeneracy, or grouping
// by the energy of a chosen subsystem.

#include <vector>

#include "swlab/operator_core.hpp"

namespace swlab::spectral {

// Eigendecomposition of a Hermitian H0. Energies are ascending; `basis`
// columns are the eigenvectors expressed in the original product basis.
// When H0 is already numerically diagonal (max off-diagonal entry below
// 1e-14 * max|H0|) the eigensolver is skipped and `basis` is an exact
// permutation matrix, so transforms to and from the eigenbasis are exact.
struct Spectrum {
  Eigen::VectorXd energies;
  DenseMat basis;
  bool diagonal_input = false;

  int dim() const { return static_cast<int>(energies.size()); }
  double spread() const {
    return dim() > 0 ? energies(dim() - 1) - energies(0) : 0.0;
  }
  // eigen index -> original basis index of the corresponding diagonal entry;
  // only meaningful when diagonal_input is true.
  std::vector<int> permutation;

  DenseMat to_eigenbasis(const OperatorMatrix& m) const;
  OperatorMatrix from_eigenbasis(const ProductSpace& space, const DenseMat& m) const;
};

Spectrum diagonalize(const OperatorMatrix& h0);

enum class BlockStrategy { Explicit, GapThreshold, Degeneracy, Subsystem };

struct BlockOptions {
  BlockStrategy strategy = BlockStrategy::Degeneracy;
  // GapThreshold: start a new block when the ascending-energy gap is >= delta.
  double delta = 0.0;
  // Degeneracy: GapThreshold with delta = tol * max(1, spectral spread).
  double tol = 1e-12;
  // Explicit: index lists in the original basis (requires diagonal H0).
  std::vector<std::vector<int>> explicit_blocks;
  // Subsystem: factor indices of the A side (requires diagonal, additive H0);
  // states are grouped by their A-factor energy within 1e-9.
  std::vector<int> subsystem_factors;

  static BlockOptions gap_threshold(double delta);
  static BlockOptions degeneracy(double tol = 1e-12);
  static BlockOptions explicit_lists(std::vector<std::vector<int>> blocks);
  static BlockOptions subsystem(std::vector<int> factors);
};

// Partition of the eigenbasis indices 0..dim-1 into blocks. Block ids are
// ordered by the lowest energy they contain (explicit blocks keep their
// given order).
struct BlockStructure {
  std::vector<std::vector<int>> blocks;  // eigen indices, each list ascending
  std::vector<int> block_of;             // eigen index -> block id

  int block_count() const { return static_cast<int>(blocks.size()); }
};

BlockStructure make_blocks(const OperatorMatrix& h0, const Spectrum& spectrum,
                           const BlockOptions& options);

struct SplitV {
  OperatorMatrix v_d;  // sum over blocks of P_mu V P_mu
  OperatorMatrix v_o;  // complement, V - v_d
};

// Splits a perturbation into block-diagonal and block-off-diagonal parts.
// For diagonal H0 the split is an exact partition of the stored entries
// (v_d + v_o == V bitwise); otherwise it is exact in the eigenbasis and
// accurate to machine rounding in the original basis.
SplitV split_v(const OperatorMatrix& v, const Spectrum& spectrum,
               const BlockStructure& blocks);

// Keeps the within-block entries of M (in the H0 eigenbasis) and drops the
// rest. Idempotent and Hermiticity preserving.
OperatorMatrix project_block_diagonal(const OperatorMatrix& m,
                                      const Spectrum& spectrum,
                                      const BlockStructure& blocks);

}  // namespace swlab::spectral
