#include <algorithm>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "swlab/spectral.hpp"

using namespace swlab;
using spectral::BlockOptions;
using spectral::BlockStructure;
using spectral::Spectrum;
using testsup::make_rng;

namespace {

ProductSpace qudit(int dim) { return ProductSpace({{FactorKind::Qudit, dim, "q"}}); }

OperatorMatrix diag_op(const ProductSpace& space, const std::vector<double>& d) {
  DenseMat m = DenseMat::Zero(space.dim(), space.dim());
  for (int i = 0; i < space.dim(); ++i) m(i, i) = d[i];
  return OperatorMatrix::from_dense(space, m, true);
}

}  // namespace

TEST_CASE("diagonal H0 takes the exact permutation path") {
  ProductSpace space = qudit(4);
  OperatorMatrix h0 = diag_op(space, {2.0, -1.0, 5.0, 2.0});
  Spectrum sp = spectral::diagonalize(h0);

  CHECK(sp.diagonal_input);
  CHECK(sp.energies(0) == -1.0);
  CHECK(sp.energies(3) == 5.0);
  CHECK(sp.spread() == 6.0);
  CHECK(sp.permutation[0] == 1);  // lowest energy sits at original index 1

  // round trip through the eigenbasis is exact for the permutation path
  auto rng = make_rng(5);
  OperatorMatrix v = OperatorMatrix::from_dense(
      space, testsup::random_hermitian(rng, 4, 1.0));
  DenseMat ve = sp.to_eigenbasis(v);
  OperatorMatrix back = sp.from_eigenbasis(space, ve);
  CHECK(ops::max_abs_diff(v, back) == 0.0);
}

TEST_CASE("dense Hermitian H0 reproduces itself from its spectrum") {
  auto rng = make_rng(9);
  ProductSpace space = qudit(7);
  DenseMat hm = testsup::random_hermitian(rng, 7, 2.0);
  OperatorMatrix h0 = OperatorMatrix::from_dense(space, hm);
  Spectrum sp = spectral::diagonalize(h0);
  CHECK_FALSE(sp.diagonal_input);

  DenseMat rebuilt = sp.basis * sp.energies.asDiagonal() * sp.basis.adjoint();
  CHECK((rebuilt - hm).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(std::is_sorted(sp.energies.data(), sp.energies.data() + sp.dim()));

  CHECK_THROWS_AS(
      spectral::diagonalize(OperatorMatrix::from_dense(
          space, DenseMat::Random(7, 7).cast<cplx>())),
      SpecError);
}

TEST_CASE("gap threshold clustering splits at large gaps only") {
  ProductSpace space = qudit(6);
  OperatorMatrix h0 = diag_op(space, {0.0, 0.1, 0.2, 5.0, 5.1, 11.0});
  Spectrum sp = spectral::diagonalize(h0);
  BlockStructure blocks =
      spectral::make_blocks(h0, sp, BlockOptions::gap_threshold(1.0));
  REQUIRE(blocks.block_count() == 3);
  CHECK(blocks.blocks[0] == std::vector<int>{0, 1, 2});
  CHECK(blocks.blocks[1] == std::vector<int>{3, 4});
  CHECK(blocks.blocks[2] == std::vector<int>{5});
  CHECK(blocks.block_of[4] == 1);
}

TEST_CASE("degeneracy strategy groups exact repeats into one block") {
  ProductSpace space = qudit(5);
  OperatorMatrix h0 = diag_op(space, {1.0, 1.0, 2.0, 3.0, 3.0});
  Spectrum sp = spectral::diagonalize(h0);
  BlockStructure blocks =
      spectral::make_blocks(h0, sp, BlockOptions::degeneracy());
  REQUIRE(blocks.block_count() == 3);
  CHECK(blocks.blocks[0].size() == 2);
  CHECK(blocks.blocks[1].size() == 1);
  CHECK(blocks.blocks[2].size() == 2);
}

TEST_CASE("explicit blocks must cover every index exactly once") {
  ProductSpace space = qudit(3);
  OperatorMatrix h0 = diag_op(space, {0.0, 1.0, 4.0});
  Spectrum sp = spectral::diagonalize(h0);

  BlockStructure blocks = spectral::make_blocks(
      h0, sp, BlockOptions::explicit_lists({{0, 1}, {2}}));
  CHECK(blocks.block_count() == 2);
  CHECK(blocks.block_of[1] == 0);

  CHECK_THROWS_AS(spectral::make_blocks(
                      h0, sp, BlockOptions::explicit_lists({{0, 0}, {2}})),
                  SpecError);
  CHECK_THROWS_AS(
      spectral::make_blocks(h0, sp, BlockOptions::explicit_lists({{0, 1}})),
      SpecError);
  CHECK_THROWS_AS(spectral::make_blocks(
                      h0, sp, BlockOptions::explicit_lists({{0, 1}, {5}})),
                  SpecError);
}

TEST_CASE("subsystem strategy groups states by the A-side energy") {
  // two factors: mode (dim 3, energy 2n) and bath (dim 2, energy 0 / 0.3)
  ProductSpace space({{FactorKind::Boson, 3, "a"}, {FactorKind::Qudit, 2, "b"}});
  OperatorMatrix n = ops::build_number(space, 0);
  OperatorMatrix nb = ops::build_number(space, 1);
  OperatorMatrix h0 = 2.0 * n + 0.3 * nb;
  h0.set_hermitian_hint(true);
  Spectrum sp = spectral::diagonalize(h0);
  BlockStructure blocks =
      spectral::make_blocks(h0, sp, BlockOptions::subsystem({0}));

  REQUIRE(blocks.block_count() == 3);  // mode occupations 0, 1, 2
  for (int b = 0; b < 3; ++b) {
    REQUIRE(blocks.blocks[b].size() == 2);
    for (int eidx : blocks.blocks[b]) {
      int orig = sp.permutation[eidx];
      CHECK(space.occupation(orig, 0) == b);
    }
  }

  // non-additive H0 (cross coupling between the factors) is refused
  OperatorMatrix cross = h0 + 0.5 * (n * nb);
  cross.set_hermitian_hint(true);
  Spectrum sp2 = spectral::diagonalize(cross);
  CHECK_THROWS_AS(spectral::make_blocks(cross, sp2, BlockOptions::subsystem({0})),
                  SpecError);
}

TEST_CASE("split_v partitions V and project_block_diagonal is idempotent") {
  auto rng = make_rng(17);
  ProductSpace space = qudit(6);
  OperatorMatrix h0 = diag_op(space, {0.0, 0.0, 1.0, 1.0, 3.0, 7.0});
  Spectrum sp = spectral::diagonalize(h0);
  BlockStructure blocks =
      spectral::make_blocks(h0, sp, BlockOptions::degeneracy());

  OperatorMatrix v = OperatorMatrix::from_dense(
      space, testsup::random_hermitian(rng, 6, 1.0));
  auto [v_d, v_o] = spectral::split_v(v, sp, blocks);

  CHECK(ops::max_abs_diff(v_d + v_o, v) == 0.0);  // exact partition, diagonal H0

  // v_d lives within blocks, v_o strictly across them
  DenseMat de = sp.to_eigenbasis(v_d);
  DenseMat oe = sp.to_eigenbasis(v_o);
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) {
      if (blocks.block_of[r] == blocks.block_of[c]) {
        CHECK(std::abs(oe(r, c)) < 1e-14);
      } else {
        CHECK(std::abs(de(r, c)) < 1e-14);
      }
    }
  }

  OperatorMatrix p1 = spectral::project_block_diagonal(v, sp, blocks);
  OperatorMatrix p2 = spectral::project_block_diagonal(p1, sp, blocks);
  CHECK(ops::max_abs_diff(p1, v_d) < 1e-14);
  CHECK(ops::max_abs_diff(p1, p2) < 1e-14);
  CHECK(ops::hermiticity_defect(p1) < 1e-14);
}
