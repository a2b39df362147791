#pragma once
// Preset model zoo. Each preset bundles a product space, an unperturbed
// Hamiltonian, a perturbation, a recommended block choice, and (where a
// closed form exists) a reference effective Hamiltonian to test against.
//
// Presets are pure functions of their parameters: building the same preset
// twice yields bit-identical matrices.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swlab/eigenop.hpp"
#include "swlab/operator_core.hpp"
#include "swlab/spectral.hpp"

namespace swlab::models {

using ParamMap = std::map<std::string, double>;

struct ParamInfo {
  std::string name;
  double value = 0.0;  // default
  std::string doc;
};

struct PresetInfo {
  std::string name;
  std::string summary;
  std::vector<ParamInfo> params;
};

struct PresetModel {
  ProductSpace space;
  OperatorMatrix h0;
  OperatorMatrix v;
  spectral::BlockOptions blocks;  // recommended block choice for the engine

  // Closed-form effective Hamiltonian on the same space. Valid on states
  // where every boson factor is at least `interior_margin` levels below its
  // truncation (closed forms use untruncated commutators).
  std::optional<OperatorMatrix> oracle;

  // Closed-form eigenoperator decomposition of V (three_boson only).
  std::optional<eigenop::BohrDecomposition> components_oracle;

  int interior_margin = 0;

  // Non-fatal notes about parameter regimes where the perturbative result
  // degrades (couplings too close to a resonance, weakly separated levels).
  std::vector<std::string> warnings;
};

const std::vector<PresetInfo>& preset_catalog();
bool is_preset(const std::string& name);

// Builds a preset, starting from catalog defaults and overlaying `params`.
// Throws SpecError for unknown preset names, unknown or non-finite
// parameters, and truncations smaller than the operator reach.
PresetModel build_preset(const std::string& name, const ParamMap& params = {});

// The sixteen |i><j| operators of a two-mode interacting fermion system,
// i,j in {empty, 1, 2, doubly occupied}, realized as Jordan-Wigner strings.
// level[i] is the H0 eigenvalue of basis state i for
// H0 = eps1 n1 + eps2 n2 + u n1 n2.
struct HubbardOperators {
  ProductSpace space;  // two fermion factors
  std::array<std::array<OperatorMatrix, 4>, 4> x;
  std::array<double, 4> level;
  OperatorMatrix h0;
};

HubbardOperators hubbard_operators(double eps1, double eps2, double u);

}  // namespace swlab::models
