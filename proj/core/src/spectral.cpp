#include "swlab/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace swlab::spectral {

namespace {

double max_offdiagonal(const SparseMat& m) {
  double out = 0.0;
  for (int k = 0; k < m.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(m, k); it; ++it) {
      if (it.row() != it.col()) out = std::max(out, std::abs(it.value()));
    }
  }
  return out;
}

// Single-linkage clustering of sorted values: cut wherever the gap between
// consecutive values reaches `delta`.
std::vector<int> cluster_sorted(const std::vector<double>& sorted, double delta) {
  std::vector<int> cluster(sorted.size(), 0);
  int current = 0;
  for (size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i] - sorted[i - 1] >= delta) ++current;
    cluster[i] = current;
  }
  return cluster;
}

}  // namespace

DenseMat Spectrum::to_eigenbasis(const OperatorMatrix& m) const {
  if (m.dim() != dim()) {
    throw SpecError("to_eigenbasis: operator dimension does not match spectrum");
  }
  return basis.adjoint() * m.dense() * basis;
}

OperatorMatrix Spectrum::from_eigenbasis(const ProductSpace& space,
                                         const DenseMat& m) const {
  if (m.rows() != dim() || m.cols() != dim()) {
    throw SpecError("from_eigenbasis: matrix dimension does not match spectrum");
  }
  return OperatorMatrix::from_dense(space, basis * m * basis.adjoint());
}

Spectrum diagonalize(const OperatorMatrix& h0) {
  ops::require_hermitian(h0, "H0");
  const int d = h0.dim();
  Spectrum out;

  const double offmax = max_offdiagonal(h0.entries());
  if (offmax <= 1e-14 * std::max(1.0, ops::max_abs(h0))) {
    // Identity fast path: H0 is already diagonal, so the eigenbasis is the
    // product basis up to an exact sorting permutation.
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(d);
    for (int k = 0; k < h0.entries().outerSize(); ++k) {
      for (SparseMat::InnerIterator it(h0.entries(), k); it; ++it) {
        if (it.row() == it.col()) diag(it.row()) = it.value().real();
      }
    }
    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return diag(a) < diag(b); });
    out.energies.resize(d);
    out.basis = DenseMat::Zero(d, d);
    out.permutation = order;
    for (int j = 0; j < d; ++j) {
      out.energies(j) = diag(order[j]);
      out.basis(order[j], j) = cplx(1.0, 0.0);
    }
    out.diagonal_input = true;
    return out;
  }

  Eigen::SelfAdjointEigenSolver<DenseMat> solver(h0.dense());
  if (solver.info() != Eigen::Success) {
    throw GuardError("diagonalize: eigensolver failed on H0");
  }
  out.energies = solver.eigenvalues();
  out.basis = solver.eigenvectors();
  out.diagonal_input = false;
  return out;
}

BlockOptions BlockOptions::gap_threshold(double delta) {
  BlockOptions o;
  o.strategy = BlockStrategy::GapThreshold;
  o.delta = delta;
  return o;
}

BlockOptions BlockOptions::degeneracy(double tol) {
  BlockOptions o;
  o.strategy = BlockStrategy::Degeneracy;
  o.tol = tol;
  return o;
}

BlockOptions BlockOptions::explicit_lists(std::vector<std::vector<int>> blocks) {
  BlockOptions o;
  o.strategy = BlockStrategy::Explicit;
  o.explicit_blocks = std::move(blocks);
  return o;
}

BlockOptions BlockOptions::subsystem(std::vector<int> factors) {
  BlockOptions o;
  o.strategy = BlockStrategy::Subsystem;
  o.subsystem_factors = std::move(factors);
  return o;
}

namespace {

BlockStructure finalize(std::vector<std::vector<int>> blocks, int dim) {
  BlockStructure out;
  out.blocks = std::move(blocks);
  out.block_of.assign(dim, -1);
  for (size_t b = 0; b < out.blocks.size(); ++b) {
    std::sort(out.blocks[b].begin(), out.blocks[b].end());
    for (int idx : out.blocks[b]) {
      if (idx < 0 || idx >= dim) {
        throw SpecError("block structure: index " + std::to_string(idx) +
                        " out of range");
      }
      if (out.block_of[idx] != -1) {
        throw SpecError("block structure: index " + std::to_string(idx) +
                        " appears in more than one block");
      }
      out.block_of[idx] = static_cast<int>(b);
    }
  }
  for (int i = 0; i < dim; ++i) {
    if (out.block_of[i] == -1) {
      throw SpecError("block structure: index " + std::to_string(i) +
                      " is not covered by any block");
    }
  }
  return out;
}

BlockStructure blocks_by_gap(const Spectrum& spectrum, double delta) {
  if (delta < 0.0) throw SpecError("gap_threshold: delta must be >= 0");
  std::vector<std::vector<int>> blocks;
  blocks.emplace_back();
  blocks.back().push_back(0);
  for (int i = 1; i < spectrum.dim(); ++i) {
    // A gap of exactly delta splits.
    if (spectrum.energies(i) - spectrum.energies(i - 1) >= delta) {
      blocks.emplace_back();
    }
    blocks.back().push_back(i);
  }
  return finalize(std::move(blocks), spectrum.dim());
}

BlockStructure blocks_explicit(const Spectrum& spectrum,
                               const std::vector<std::vector<int>>& lists) {
  if (!spectrum.diagonal_input) {
    throw SpecError("explicit blocks index the original basis and therefore "
                    "require a diagonal H0");
  }
  if (lists.empty()) throw SpecError("explicit blocks: no blocks given");
  // Translate original-basis indices into eigenbasis (sorted) indices.
  std::vector<int> eigen_of(spectrum.dim(), -1);
  for (int j = 0; j < spectrum.dim(); ++j) eigen_of[spectrum.permutation[j]] = j;
  std::vector<std::vector<int>> blocks;
  blocks.reserve(lists.size());
  for (const auto& list : lists) {
    if (list.empty()) throw SpecError("explicit blocks: empty block");
    std::vector<int> mapped;
    mapped.reserve(list.size());
    for (int idx : list) {
      if (idx < 0 || idx >= spectrum.dim()) {
        throw SpecError("explicit blocks: index " + std::to_string(idx) +
                        " out of range");
      }
      mapped.push_back(eigen_of[idx]);
    }
    blocks.push_back(std::move(mapped));
  }
  return finalize(std::move(blocks), spectrum.dim());
}

BlockStructure blocks_by_subsystem(const OperatorMatrix& h0,
                                   const Spectrum& spectrum,
                                   const std::vector<int>& factors) {
  if (!spectrum.diagonal_input) {
    throw SpecError("subsystem blocks require a diagonal H0");
  }
  if (factors.empty()) throw SpecError("subsystem blocks: empty factor list");
  const ProductSpace& space = h0.space();
  std::vector<bool> is_a(space.factor_count(), false);
  for (int f : factors) {
    space.factor(f);  // range check
    is_a[f] = true;
  }

  // Diagonal of H0 in the original basis.
  const int d = space.dim();
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(d);
  for (int k = 0; k < h0.entries().outerSize(); ++k) {
    for (SparseMat::InnerIterator it(h0.entries(), k); it; ++it) {
      if (it.row() == it.col()) diag(it.row()) = it.value().real();
    }
  }

  // Indices with the B side (resp. A side) reset to occupation zero.
  auto masked_index = [&](int s, bool keep_a) {
    std::vector<int> occ(space.factor_count(), 0);
    for (int f = 0; f < space.factor_count(); ++f) {
      if (is_a[f] == keep_a) occ[f] = space.occupation(s, f);
    }
    return space.index_of(occ);
  };

  const double e00 = diag(0);
  const double scale = std::max(1.0, diag.cwiseAbs().maxCoeff());
  std::vector<double> ea(d);
  for (int s = 0; s < d; ++s) {
    const double fa = diag(masked_index(s, true)) - e00;
    const double fb = diag(masked_index(s, false)) - e00;
    if (std::abs(diag(s) - e00 - fa - fb) > 1e-9 * scale) {
      throw SpecError("subsystem blocks: H0 is not additive across the chosen "
                      "factor cut (state " + std::to_string(s) + " deviates by " +
                      std::to_string(std::abs(diag(s) - e00 - fa - fb)) + ")");
    }
    ea[s] = fa;
  }

  // Cluster states by A-side energy.
  std::vector<double> values(ea.begin(), ea.end());
  std::sort(values.begin(), values.end());
  double ea_spread = values.back() - values.front();
  const double tol = 1e-9 * std::max(1.0, ea_spread);
  std::vector<int> cluster_of_sorted = cluster_sorted(values, tol);
  // Representative boundaries: map each state's value to its cluster.
  auto cluster_of_value = [&](double v) {
    const auto it = std::lower_bound(values.begin(), values.end(), v);
    const size_t pos = static_cast<size_t>(it - values.begin());
    return cluster_of_sorted[pos];
  };

  const int nclusters = cluster_of_sorted.empty() ? 0 : cluster_of_sorted.back() + 1;
  std::vector<std::vector<int>> blocks(nclusters);
  for (int j = 0; j < spectrum.dim(); ++j) {
    const int original = spectrum.permutation[j];
    blocks[cluster_of_value(ea[original])].push_back(j);
  }
  // Drop empty clusters defensively (cannot happen, every value is a state's).
  std::vector<std::vector<int>> nonempty;
  for (auto& b : blocks) {
    if (!b.empty()) nonempty.push_back(std::move(b));
  }
  return finalize(std::move(nonempty), spectrum.dim());
}

}  // namespace

BlockStructure make_blocks(const OperatorMatrix& h0, const Spectrum& spectrum,
                           const BlockOptions& options) {
  if (h0.dim() != spectrum.dim()) {
    throw SpecError("make_blocks: H0 and spectrum dimensions differ");
  }
  switch (options.strategy) {
    case BlockStrategy::GapThreshold:
      return blocks_by_gap(spectrum, options.delta);
    case BlockStrategy::Degeneracy: {
      if (options.tol < 0.0) throw SpecError("degeneracy: tol must be >= 0");
      const double delta = options.tol * std::max(1.0, spectrum.spread());
      return blocks_by_gap(spectrum, delta);
    }
    case BlockStrategy::Explicit:
      return blocks_explicit(spectrum, options.explicit_blocks);
    case BlockStrategy::Subsystem:
      return blocks_by_subsystem(h0, spectrum, options.subsystem_factors);
  }
  throw SpecError("make_blocks: unknown strategy");
}

namespace {

// Entry mask applied in the original basis; valid only for diagonal H0 where
// eigenstates are product states. Keeps the split bitwise exact.
SplitV split_diagonal_path(const OperatorMatrix& v, const Spectrum& spectrum,
                           const BlockStructure& blocks) {
  const int d = v.dim();
  std::vector<int> block_of_original(d);
  for (int j = 0; j < d; ++j) {
    block_of_original[spectrum.permutation[j]] = blocks.block_of[j];
  }
  std::vector<Eigen::Triplet<cplx>> trips_d, trips_o;
  const SparseMat& e = v.entries();
  for (int k = 0; k < e.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(e, k); it; ++it) {
      if (block_of_original[it.row()] == block_of_original[it.col()]) {
        trips_d.emplace_back(it.row(), it.col(), it.value());
      } else {
        trips_o.emplace_back(it.row(), it.col(), it.value());
      }
    }
  }
  SparseMat md(d, d), mo(d, d);
  md.setFromTriplets(trips_d.begin(), trips_d.end());
  mo.setFromTriplets(trips_o.begin(), trips_o.end());
  return SplitV{OperatorMatrix(v.space(), std::move(md), v.hermitian_hint()),
                OperatorMatrix(v.space(), std::move(mo), v.hermitian_hint())};
}

}  // namespace

SplitV split_v(const OperatorMatrix& v, const Spectrum& spectrum,
               const BlockStructure& blocks) {
  if (v.dim() != spectrum.dim()) {
    throw SpecError("split_v: operator dimension does not match spectrum");
  }
  if (spectrum.diagonal_input) return split_diagonal_path(v, spectrum, blocks);

  DenseMat tilde = spectrum.to_eigenbasis(v);
  DenseMat tilde_d = DenseMat::Zero(v.dim(), v.dim());
  for (int c = 0; c < v.dim(); ++c) {
    for (int r = 0; r < v.dim(); ++r) {
      if (blocks.block_of[r] == blocks.block_of[c]) tilde_d(r, c) = tilde(r, c);
    }
  }
  OperatorMatrix v_d = spectrum.from_eigenbasis(v.space(), tilde_d);
  v_d.set_hermitian_hint(v.hermitian_hint());
  OperatorMatrix v_o = ops::sub(v, v_d);
  return SplitV{std::move(v_d), std::move(v_o)};
}

OperatorMatrix project_block_diagonal(const OperatorMatrix& m,
                                      const Spectrum& spectrum,
                                      const BlockStructure& blocks) {
  return split_v(m, spectrum, blocks).v_d;
}

}  // namespace swlab::spectral
