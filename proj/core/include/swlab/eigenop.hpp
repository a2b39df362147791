#pragma once

#include <optional>
#include <vector>

#include "swlab/operator_core.hpp"
#include "swlab/spectral.hpp"

namespace swlab::eigenop {

// One Bohr-frequency component V_omega of a perturbation V. Satisfies
// [H0, V_omega] = -omega V_omega: the element at (r, c) in the eigenbasis
// oscillates at omega = E_c - E_r under conjugation by exp(i H0 t).
struct BohrComponent {
  double omega = 0.0;
  OperatorMatrix op;
  double weight = 0.0;  // sum of |element|^2 over the component
};

struct BohrDecomposition {
  std::vector<BohrComponent> components;  // sorted by omega, ascending
  double bin_tol = 0.0;                   // tolerance actually used
  double spread = 0.0;                    // spectral spread of H0

  // Largest element of V - sum_omega V_omega; exactly zero on the
  // diagonal-H0 path where the split is a partition of matrix entries.
  double recomposition_error = 0.0;

  const BohrComponent* find(double omega, double tol) const;
  const BohrComponent* zero_component() const;  // component at omega == 0
};

struct DecomposeOptions {
  // Frequencies closer than bin_tol are merged into one component. A value
  // below zero selects the default 1e-9 * max(1, spectral spread).
  double bin_tol = -1.0;
  // Eigenbasis elements at or below drop_tol * max element are treated as
  // rotation noise. Negative selects the default 4e-15.
  double drop_tol = -1.0;
};

// Decompose V into eigenoperators of [H0, .]. Throws GuardError when a
// frequency cluster extends beyond +-bin_tol on both sides of zero, since
// that merges a transition with its own adjoint.
BohrDecomposition eigen_decompose(const OperatorMatrix& v,
                                  const spectral::Spectrum& spectrum,
                                  const DecomposeOptions& options = {});

// Max-norm deviation of sum_omega exp(-i omega t) V_omega from the exact
// Heisenberg conjugation exp(i H0 t) V exp(-i H0 t), maximised over `times`.
double verify_time_evolution(const OperatorMatrix& v,
                             const spectral::Spectrum& spectrum,
                             const BohrDecomposition& decomposition,
                             const std::vector<double>& times);

// A single component split against a block structure. With blocks coarser
// than exact degeneracy a component generally lands partly inside and partly
// outside the blocks; both pieces are returned.
struct ComponentBlockSplit {
  OperatorMatrix within;
  OperatorMatrix across;
};

ComponentBlockSplit split_component_by_blocks(
    const BohrComponent& component, const spectral::Spectrum& spectrum,
    const spectral::BlockStructure& blocks);

}  // namespace swlab::eigenop
