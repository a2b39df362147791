#pragma once

#include <vector>

#include "swlab/eigenop.hpp"
#include "swlab/operator_core.hpp"
#include "swlab/spectral.hpp"

namespace swlab::sw {

// Variants of the transformation:
//  - BlockDiagonal: generator chosen order by order so H' is block diagonal
//    at the requested order (supported orders 2 and 3).
//  - SingleGenerator: the first-order generator only, with the series
//    e^{S1} H e^{-S1} truncated at the requested order (supported 2 to 6).
//    H' then retains off-block terms of one order higher.
enum class Variant { BlockDiagonal, SingleGenerator };

const char* to_string(Variant v);

struct EngineOptions {
  int order = 2;
  Variant variant = Variant::BlockDiagonal;
  // Frequency binning for the eigenoperator decomposition; negative selects
  // the decomposition default.
  double bin_tol = -1.0;
  // Denominators 1/omega with |omega| below the floor abort with GuardError
  // instead of producing an uncontrolled generator. Negative selects
  // 1e-8 * max(1, spectral spread).
  double denominator_floor = -1.0;
};

// Second-order energy-denominator weight: f(w, w') = (1/w + 1/w') / 2.
double f_coeff(double omega, double omega_prime);

// Everything derived from (H0, V, block choice) that the engines share.
struct Workspace {
  spectral::Spectrum spectrum;
  spectral::BlockStructure blocks;
  OperatorMatrix v_d;  // block-diagonal part of V
  OperatorMatrix v_o;  // block-off-diagonal part of V
  eigenop::BohrDecomposition vo_components;
};

Workspace prepare(const OperatorMatrix& h0, const OperatorMatrix& v,
                  const spectral::BlockOptions& block_options,
                  const EngineOptions& options = {});

// S = -sum_{omega != 0} (1/omega) V_omega over the given components, which
// must come from a block-off-diagonal operator. Throws GuardError when a
// component sits at omega == 0 (coupling between degenerate states in
// different blocks, for which no generator exists) or below the floor.
OperatorMatrix build_generator(const ProductSpace& space,
                               const eigenop::BohrDecomposition& vo_components,
                               double denominator_floor);

struct Diagnostics {
  double offdiag_residual = 0.0;     // max |off-block part of H'|
  double s_antihermiticity = 0.0;    // max |S + S^dag|
  double s_block_norm = 0.0;         // max |block-diagonal part of S|
  double recomposition_error = 0.0;  // decomposition partition defect
};

struct SWResult {
  OperatorMatrix s;        // generator actually used (S1, or S1 + S2 at order 3)
  OperatorMatrix h_prime;  // transformed Hamiltonian, original basis
  int order = 2;
  Variant variant = Variant::BlockDiagonal;
  Diagnostics diagnostics;
};

// One-shot driver: prepare + run_prepared.
SWResult transform(const OperatorMatrix& h0, const OperatorMatrix& v,
                   const spectral::BlockOptions& block_options,
                   const EngineOptions& options = {});

SWResult run_prepared(const OperatorMatrix& h0, const Workspace& ws,
                      const EngineOptions& options = {});

// Individual engines (order/variant taken from `options` must match).
SWResult second_order(const OperatorMatrix& h0, const Workspace& ws,
                      const EngineOptions& options = {});
SWResult third_order_block(const OperatorMatrix& h0, const Workspace& ws,
                           const EngineOptions& options = {});
SWResult single_generator_series(const OperatorMatrix& h0, const Workspace& ws,
                                 const EngineOptions& options = {});

// Second order rebuilt element by element in the H0 eigenbasis:
//   S_rc  = V_rc / (E_r - E_c)                                cross-block
//   H'_rc = E_r d_rc + V_rc
//           + 1/2 sum_j V_rj V_jc (1/(E_r - E_j) + 1/(E_c - E_j))
// with j running over all states outside the block of r and c. Kept fully
// independent of the eigenoperator route so the two can cross-check.
SWResult second_order_matrix_form(const OperatorMatrix& h0,
                                  const OperatorMatrix& v,
                                  const spectral::BlockOptions& block_options,
                                  const EngineOptions& options = {});

struct CompareResult {
  double max_delta = 0.0;          // worst eigenvalue deviation, sorted order
  std::vector<double> per_block;   // worst deviation per block
  std::vector<std::vector<double>> block_eigenvalues;  // H' spectrum per block
  std::vector<double> exact_eigenvalues;               // eig(H0 + V), ascending
};

// Eigenvalues of H' within each block against exact diagonalization of
// H0 + V. Both spectra are sorted ascending and compared index by index.
CompareResult compare_spectra(const OperatorMatrix& h0, const OperatorMatrix& v,
                              const OperatorMatrix& h_prime,
                              const spectral::Spectrum& spectrum,
                              const spectral::BlockStructure& blocks);

}  // namespace swlab::sw
