#pragma once

#include <optional>
#include <vector>

#include "swlab/operator_core.hpp"

namespace swlab::dispersive {

// Closed-form effective Hamiltonians for far-off-resonant couplings,
// assembled directly from the model data rather than through the generic
// engine. Full-space composites place the A-side factors (modes or qubit)
// before the B-side factors.

// B_r = sum_w B_w / (omega_r - w), where B = sum_w B_w decomposes against
// H_B. Throws GuardError when some |omega_r - w| falls below the floor
// (negative floor selects 1e-8 * max(1, |omega_r|, spread of H_B)).
OperatorMatrix renormalize_coupling(const OperatorMatrix& h_b,
                                    const OperatorMatrix& b, double omega_r,
                                    double resonance_floor = -1.0);

struct EffectiveModel {
  ProductSpace space;      // composite space, A factors first
  OperatorMatrix h0;       // H_A + H_B
  OperatorMatrix v;        // coupling
  OperatorMatrix s;        // first-order generator
  OperatorMatrix h_prime;  // closed-form effective Hamiltonian
};

// Single mode a at omega_r coupled through V = a^dag B + B^dag a:
//   H' = (omega_r - [B^dag,Br]/2 - [Br^dag,B]/2) a^dag a
//        + H_B - (B^dag Br + Br^dag B)/2,   S = a^dag Br - Br^dag a.
// The closed form uses the untruncated mode algebra, so against a truncated
// engine run it is only valid away from the Fock cutoff.
struct SingleMode {
  int mode_dim = 0;  // Fock truncation (n_max + 1)
  double omega_r = 0.0;
  OperatorMatrix h_b;
  OperatorMatrix b;
};

EffectiveModel single_mode(const SingleMode& in, double resonance_floor = -1.0);

// Several modes, V = sum_i (a_i^dag B_i + B_i^dag a_i):
//   H' = sum_i omega_ri a_i^dag a_i
//        - 1/2 sum_ij (a_i^dag a_j [B_j^dag,B_ri] + a_j^dag a_i [B_ri^dag,B_j])
//        + H_B - 1/2 sum_i (B_i^dag B_ri + B_ri^dag B_i).
// Cross terms (i != j) connect modes split by omega_ri - omega_rj and only
// belong in H' when those splittings are small; keep_cross selects them per
// pair (empty = keep all).
struct MultiMode {
  std::vector<int> mode_dims;
  std::vector<double> omega_r;
  OperatorMatrix h_b;
  std::vector<OperatorMatrix> b;
  std::vector<std::vector<bool>> keep_cross;
};

EffectiveModel multi_mode(const MultiMode& in, double resonance_floor = -1.0);

// A-side qubit at splitting omega_r, V = sigma_+ B + B^dag sigma_-:
//   H' = H_B + (omega_r + Br B^dag + B Br^dag)/2 |e><e|
//            - (omega_r + B^dag Br + Br^dag B)/2 |g><g|,
//   S  = sigma_+ Br - Br^dag sigma_-.
struct QubitSystem {
  double omega_r = 0.0;
  OperatorMatrix h_b;
  OperatorMatrix b;
};

EffectiveModel qubit(const QubitSystem& in, double resonance_floor = -1.0);

// Qubit coupled to several sites of a uniform chain, B = sum_k g_k b_k with
// H_B = sum_k eps_k n_k. With D = sum_k |g_k|^2/(omega_r - eps_k) and
// T = 1/2 sum_kq g_k^* g_q (1/(omega_r-eps_k) + 1/(omega_r-eps_q)) b_k^dag b_q:
//   fermions: H' = omega_r/2 sigma_z + D |e><e| + H_B - T
//   bosons:   H' = omega_r/2 sigma_z + D |e><e| + H_B + sigma_z T
struct GiantAtom {
  double omega_r = 0.0;
  FactorKind chain_kind = FactorKind::Fermion;
  int chain_local_dim = 2;  // per-site dimension for bosonic chains
  std::vector<double> eps;
  std::vector<cplx> g;
};

EffectiveModel giant_atom(const GiantAtom& in, double resonance_floor = -1.0);

// Two quadratic chains, H_A = sum E_i a_i^dag a_i, H_B = sum eps_k b_k^dag b_k,
// V = sum_ik (v_ik b_k^dag a_i + v_ik^* a_i^dag b_k). With
//   f_ij^kq = v_ik v_jq^* / 2 (1/(E_i - eps_k) + 1/(E_j - eps_q))
// the same-species result decouples the chains,
//   H' = sum_ij (E_i d_ij + sum_k f_ij^kk) a_j^dag a_i
//      + sum_kq (eps_k d_kq - sum_i f_ii^kq) b_k^dag b_q,
// while mixed species add (a fermionic: +, a bosonic: -)
//   +- 2 sum_ijkq f_ij^kq a_j^dag a_i b_k^dag b_q.
struct TwoChains {
  FactorKind kind_a = FactorKind::Fermion;
  FactorKind kind_b = FactorKind::Fermion;
  std::vector<double> e_a;
  std::vector<double> e_b;
  DenseMat v;  // v(i, k)
  int local_dim_a = 2;
  int local_dim_b = 2;
};

EffectiveModel two_chains(const TwoChains& in, double resonance_floor = -1.0);

// Number-conserving fermion-boson coupling: modes a_i at omega_ri, fermions
// with single-particle matrix h, V = sum_i (a_i^dag B_i + B_i^dag a_i) with
// B_i = b^dag M_i b. With h = R eps R^dag and script-M_i = R^dag M_i R the
// boson-vacuum bath Hamiltonian has several equivalent arrangements, all
// returned on the bare fermionic Fock space for cross-checking.
struct CubicModel {
  std::vector<double> omega_r;
  std::vector<DenseMat> m;  // M_i, one per mode
  DenseMat h;
  int mode_dim = 3;  // boson truncation for the composite model
  // Mode-mode cross terms to keep in the composite closed form; empty keeps
  // all of them. Forwarded to multi_mode, same shape rules.
  std::vector<std::vector<bool>> keep_cross;
};

struct CubicForms {
  ProductSpace bath;
  OperatorMatrix h_b;             // b^dag h b
  OperatorMatrix exact;           // quartic coefficient tensor, unordered form
  OperatorMatrix normal_ordered;  // quadratic shift + normal-ordered quartic
  OperatorMatrix expanded;        // 1/w and 1/w^2 dispersive expansion
  OperatorMatrix leading;         // 1/w term only
  // Single-fraction quartic form, defined when every M_i is Hermitian.
  std::optional<OperatorMatrix> hermitian;
};

CubicForms cubic_bath_forms(const CubicModel& in, double resonance_floor = -1.0);

// The same model as a full composite (modes first) for engine runs; the
// closed form is the multi-mode formula with B_i = b^dag M_i b.
EffectiveModel cubic_composite(const CubicModel& in, double resonance_floor = -1.0);

}  // namespace swlab::dispersive
