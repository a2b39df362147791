#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "swlab/dispersive.hpp"
#include "swlab/models.hpp"
#include "swlab/sw.hpp"

using namespace swlab;
using spectral::BlockOptions;
using testsup::make_rng;

namespace {

// relative max-norm distance on the trusted interior of the composite space
double interior_gap(const dispersive::EffectiveModel& model,
                    const OperatorMatrix& engine_hprime, int margin) {
  std::vector<bool> mask = ops::interior_mask(model.space, margin);
  double scale = std::max(1.0, ops::max_abs(engine_hprime));
  return ops::max_abs_diff_masked(model.h_prime, engine_hprime, mask) / scale;
}

OperatorMatrix engine_hprime(const dispersive::EffectiveModel& model,
                             const BlockOptions& blocks) {
  return sw::transform(model.h0, model.v, blocks).h_prime;
}

}  // namespace

TEST_CASE("renormalize_coupling weights each transition by its detuning") {
  // three-level bath, B = |0><1| + |1><2|: frequencies 0.3 and 0.5
  ProductSpace bath({{FactorKind::Qudit, 3, "b"}});
  DenseMat hm = DenseMat::Zero(3, 3);
  hm(1, 1) = 0.3;
  hm(2, 2) = 0.8;
  OperatorMatrix h_b = OperatorMatrix::from_dense(bath, hm, true);
  OperatorMatrix b =
      ops::build_transition(bath, 0, 0, 1) + ops::build_transition(bath, 0, 1, 2);

  double omega_r = 2.0;
  OperatorMatrix br = dispersive::renormalize_coupling(h_b, b, omega_r);
  DenseMat expected = DenseMat::Zero(3, 3);
  expected(0, 1) = 1.0 / (omega_r - 0.3);
  expected(1, 2) = 1.0 / (omega_r - 0.5);
  CHECK((br.dense() - expected).cwiseAbs().maxCoeff() < 1e-14);

  // a bath transition resonant with omega_r is refused
  CHECK_THROWS_AS(dispersive::renormalize_coupling(h_b, b, 0.5), GuardError);
  // unless the caller lowers the floor explicitly
  CHECK_NOTHROW(dispersive::renormalize_coupling(h_b, b, 0.5 + 1e-4, 1e-6));
}

TEST_CASE("single-mode closed form matches the generic engine") {
  models::PresetModel m = models::build_preset("dispersive_boson_generic", {});
  sw::SWResult res = sw::transform(m.h0, m.v, m.blocks);
  REQUIRE(m.oracle.has_value());
  std::vector<bool> mask = ops::interior_mask(m.h0.space(), m.interior_margin);
  double scale = std::max(1.0, ops::max_abs(res.h_prime));
  CHECK(ops::max_abs_diff_masked(*m.oracle, res.h_prime, mask) / scale < 1e-10);
}

TEST_CASE("single-mode generator matches the engine generator") {
  models::PresetModel m = models::build_preset("jaynes_cummings", {});
  sw::SWResult res = sw::transform(m.h0, m.v, m.blocks);
  dispersive::SingleMode in;
  in.mode_dim = m.h0.space().factor(0).dim;
  in.omega_r = 10.0;
  // rebuild the bath data the preset uses: a two-level system at omega_q,
  // split symmetrically around zero
  ProductSpace bath({{FactorKind::Qudit, 2, "q"}});
  DenseMat hq = DenseMat::Zero(2, 2);
  hq(0, 0) = -0.5;
  hq(1, 1) = 0.5;
  in.h_b = OperatorMatrix::from_dense(bath, hq, true);
  DenseMat bm = DenseMat::Zero(2, 2);
  bm(0, 1) = 0.02;
  in.b = OperatorMatrix::from_dense(bath, bm);
  dispersive::EffectiveModel model = dispersive::single_mode(in);

  std::vector<bool> mask = ops::interior_mask(model.space, 1);
  CHECK(ops::max_abs_diff_masked(model.s, res.s, mask) < 1e-12);
  CHECK(ops::max_abs_diff_masked(model.h_prime, res.h_prime, mask) < 1e-12);
}

TEST_CASE("multi-mode cross terms follow the mode detunings") {
  auto rng = make_rng(61);
  ProductSpace bath({{FactorKind::Qudit, 3, "b"}});
  DenseMat hm = DenseMat::Zero(3, 3);
  hm(1, 1) = 0.9;
  hm(2, 2) = 2.1;
  OperatorMatrix h_b = OperatorMatrix::from_dense(bath, hm, true);
  OperatorMatrix b0 = cplx(0.012, 0.003) * ops::build_transition(bath, 0, 0, 1) +
                      cplx(0.02, 0.0) * ops::build_transition(bath, 0, 1, 2);
  OperatorMatrix b1 = cplx(0.015, 0.0) * ops::build_transition(bath, 0, 0, 1) +
                      cplx(0.0, 0.011) * ops::build_transition(bath, 0, 1, 2);

  dispersive::MultiMode in;
  in.mode_dims = {4, 4};
  in.h_b = h_b;
  in.b = {b0, b1};

  SUBCASE("distinct frequencies: cross terms are dropped to match the engine") {
    in.omega_r = {8.0, 11.5};
    in.keep_cross = {{true, false}, {false, true}};
    dispersive::EffectiveModel model = dispersive::multi_mode(in);
    OperatorMatrix hp = engine_hprime(model, BlockOptions::subsystem({0, 1}));
    CHECK(interior_gap(model, hp, 1) < 1e-10);
  }

  SUBCASE("equal frequencies: cross terms stay and still match the engine") {
    in.omega_r = {8.0, 8.0};
    in.keep_cross.clear();  // keep everything
    dispersive::EffectiveModel model = dispersive::multi_mode(in);
    OperatorMatrix hp = engine_hprime(model, BlockOptions::subsystem({0, 1}));
    CHECK(interior_gap(model, hp, 1) < 1e-10);

    // the cross coupling is real: dropping it breaks the match
    in.keep_cross = {{true, false}, {false, true}};
    dispersive::EffectiveModel dropped = dispersive::multi_mode(in);
    CHECK(interior_gap(dropped, hp, 1) > 1e-9);
  }
}

TEST_CASE("qubit closed form equals the engine everywhere (no truncation)") {
  models::PresetModel m = models::build_preset("dispersive_qubit_generic", {});
  sw::SWResult res = sw::transform(m.h0, m.v, m.blocks);
  REQUIRE(m.oracle.has_value());
  double scale = std::max(1.0, ops::max_abs(res.h_prime));
  CHECK(ops::max_abs_diff(*m.oracle, res.h_prime) / scale < 1e-12);
}

TEST_CASE("giant-atom chains: fermionic and bosonic statistics differ") {
  models::ParamMap fermi_params = {{"bosonic", 0.0}};
  models::PresetModel fermi = models::build_preset("giant_atom_chain", fermi_params);
  sw::SWResult fres = sw::transform(fermi.h0, fermi.v, fermi.blocks);
  REQUIRE(fermi.oracle.has_value());
  double fscale = std::max(1.0, ops::max_abs(fres.h_prime));
  CHECK(ops::max_abs_diff(*fermi.oracle, fres.h_prime) / fscale < 1e-12);

  models::ParamMap bose_params = {{"bosonic", 1.0}, {"local_dim", 4.0}};
  models::PresetModel bose = models::build_preset("giant_atom_chain", bose_params);
  sw::SWResult bres = sw::transform(bose.h0, bose.v, bose.blocks);
  REQUIRE(bose.oracle.has_value());
  std::vector<bool> mask = ops::interior_mask(bose.h0.space(), bose.interior_margin);
  double bscale = std::max(1.0, ops::max_abs(bres.h_prime));
  CHECK(ops::max_abs_diff_masked(*bose.oracle, bres.h_prime, mask) / bscale < 1e-10);
}

TEST_CASE("two chains decouple after the transform; resonant shifts are +-v^2/D") {
  // one level per chain with a diagonal coupling: textbook repulsion
  dispersive::TwoChains in;
  in.e_a = {1.0};
  in.e_b = {0.2};
  in.v = DenseMat::Zero(1, 1);
  in.v(0, 0) = 0.05;
  dispersive::EffectiveModel model = dispersive::two_chains(in);

  // H' is quadratic and diagonal here; read the single-particle shifts
  ProductSpace space = model.space;
  int a_state = space.index_of({1, 0});
  int b_state = space.index_of({0, 1});
  DenseMat hp = model.h_prime.dense();
  double shift = 0.05 * 0.05 / (1.0 - 0.2);
  CHECK(hp(a_state, a_state).real() == doctest::Approx(1.0 + shift));
  CHECK(hp(b_state, b_state).real() == doctest::Approx(0.2 - shift));

  // and the full preset matches the engine
  models::PresetModel m = models::build_preset("two_chains", {});
  sw::SWResult res = sw::transform(m.h0, m.v, m.blocks);
  REQUIRE(m.oracle.has_value());
  std::vector<bool> mask = ops::interior_mask(m.h0.space(), m.interior_margin);
  double scale = std::max(1.0, ops::max_abs(res.h_prime));
  CHECK(ops::max_abs_diff_masked(*m.oracle, res.h_prime, mask) / scale < 1e-10);
}

TEST_CASE("mixed-statistics two-chain cross term flips sign with the A species") {
  dispersive::TwoChains in;
  in.kind_a = FactorKind::Fermion;
  in.kind_b = FactorKind::Boson;
  in.local_dim_b = 3;
  in.e_a = {3.0, 3.4};
  in.e_b = {0.5, 0.9};
  in.v = DenseMat::Zero(2, 2);
  in.v << 0.02, 0.013, 0.007, 0.025;
  dispersive::EffectiveModel mixed = dispersive::two_chains(in);

  // the closed form keeps everything that conserves the particle number of
  // each chain (including transfers within a chain), so block by the total
  // a-chain occupation
  std::vector<std::vector<int>> sectors(3);
  for (int idx = 0; idx < mixed.space.dim(); ++idx) {
    int n_a = mixed.space.occupation(idx, 0) + mixed.space.occupation(idx, 1);
    sectors[n_a].push_back(idx);
  }
  OperatorMatrix hp =
      engine_hprime(mixed, BlockOptions::explicit_lists(sectors));
  CHECK(interior_gap(mixed, hp, 1) < 1e-10);
}

TEST_CASE("cubic bath forms are consistent rearrangements") {
  dispersive::CubicModel in;
  in.omega_r = {20.0};
  in.h = DenseMat::Zero(3, 3);
  in.h << 0.0, 0.4, 0.0, 0.4, 0.9, 0.25, 0.0, 0.25, 1.6;
  DenseMat m0 = DenseMat::Zero(3, 3);
  m0 << 0.0, 0.6, 0.0, 0.6, 0.0, 0.6, 0.0, 0.6, 0.0;
  in.m = {m0};

  dispersive::CubicForms forms = dispersive::cubic_bath_forms(in);

  // unordered and normal-ordered arrangements are the same operator
  CHECK(ops::max_abs_diff(forms.exact, forms.normal_ordered) < 1e-12);
  // M is Hermitian, so the single-fraction form exists and agrees
  REQUIRE(forms.hermitian.has_value());
  CHECK(ops::max_abs_diff(*forms.hermitian, forms.exact) < 1e-12);

  // the 1/w + 1/w^2 expansion approaches the exact form quadratically in the
  // bath bandwidth: shrinking h by 2 shrinks the defect by about 4
  double d1 = ops::max_abs(forms.exact - forms.expanded);
  dispersive::CubicModel half = in;
  half.h *= 0.5;
  dispersive::CubicForms forms2 = dispersive::cubic_bath_forms(half);
  double d2 = ops::max_abs(forms2.exact - forms2.expanded);
  double ratio = d1 / d2;
  CHECK(ratio > 3.3);
  CHECK(ratio < 4.7);

  // the 1/w term alone is cruder: defect shrinks only about 2x
  double l1 = ops::max_abs(forms.exact - forms.leading);
  double l2 = ops::max_abs(forms2.exact - forms2.leading);
  CHECK(l1 / l2 > 1.6);
  CHECK(l1 / l2 < 2.4);
}

TEST_CASE("cubic composite closed form matches the engine") {
  models::PresetModel m = models::build_preset("cubic_fb", {});
  sw::SWResult res = sw::transform(m.h0, m.v, m.blocks);
  REQUIRE(m.oracle.has_value());
  std::vector<bool> mask = ops::interior_mask(m.h0.space(), m.interior_margin);
  double scale = std::max(1.0, ops::max_abs(res.h_prime));
  CHECK(ops::max_abs_diff_masked(*m.oracle, res.h_prime, mask) / scale < 1e-9);
}
