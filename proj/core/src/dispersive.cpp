#include "swlab/dispersive.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

#include "swlab/eigenop.hpp"
#include "swlab/spectral.hpp"

namespace swlab::dispersive {

namespace {

ProductSpace concat(const ProductSpace& a, const ProductSpace& b) {
  std::vector<FactorSpec> factors = a.factors();
  for (const FactorSpec& f : b.factors()) factors.push_back(f);
  return ProductSpace(std::move(factors));
}

OperatorMatrix lift_bath(const ProductSpace& a_side, const OperatorMatrix& bath_op) {
  return ops::tensor_product(OperatorMatrix::identity(a_side), bath_op);
}

double default_floor(double omega_r, double spread) {
  return 1e-8 * std::max({1.0, std::abs(omega_r), spread});
}

void check_resonance(double denom, double floor, double omega_r, double omega_b) {
  if (std::abs(denom) < floor) {
    throw GuardError("dispersive: |omega_r - omega| = " + std::to_string(std::abs(denom)) +
                     " below floor " + std::to_string(floor) + " (omega_r = " +
                     std::to_string(omega_r) + ", omega = " + std::to_string(omega_b) +
                     "); the coupling is resonant, not dispersive");
  }
}

// sum_{nm} mat(n, m) b_n^dag b_m for ladder operators of `space`.
OperatorMatrix quadratic_form(const ProductSpace& space, const DenseMat& mat,
                              const std::vector<OperatorMatrix>& lowering) {
  OperatorMatrix out(space);
  const int n = static_cast<int>(lowering.size());
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (mat(a, b) == cplx(0.0, 0.0)) continue;
      out = out + mat(a, b) * (ops::adjoint(lowering[a]) * lowering[b]);
    }
  }
  return out;
}

}  // namespace

OperatorMatrix renormalize_coupling(const OperatorMatrix& h_b,
                                    const OperatorMatrix& b, double omega_r,
                                    double resonance_floor) {
  if (!h_b.space().compatible_with(b.space())) {
    throw SpecError("renormalize_coupling: H_B and B act on different spaces");
  }
  spectral::Spectrum spectrum = spectral::diagonalize(h_b);
  eigenop::BohrDecomposition decomp = eigenop::eigen_decompose(b, spectrum);
  const double floor = resonance_floor >= 0.0
                           ? resonance_floor
                           : default_floor(omega_r, spectrum.spread());
  OperatorMatrix br(b.space());
  for (const auto& comp : decomp.components) {
    const double denom = omega_r - comp.omega;
    check_resonance(denom, floor, omega_r, comp.omega);
    br = br + ops::scale(cplx(1.0 / denom, 0.0), comp.op);
  }
  return br;
}

EffectiveModel single_mode(const SingleMode& in, double resonance_floor) {
  MultiMode mm;
  mm.mode_dims = {in.mode_dim};
  mm.omega_r = {in.omega_r};
  mm.h_b = in.h_b;
  mm.b = {in.b};
  return multi_mode(mm, resonance_floor);
}

EffectiveModel multi_mode(const MultiMode& in, double resonance_floor) {
  const int nm = static_cast<int>(in.mode_dims.size());
  if (nm < 1) throw SpecError("multi_mode: needs at least one mode");
  if (in.omega_r.size() != static_cast<size_t>(nm) ||
      in.b.size() != static_cast<size_t>(nm)) {
    throw SpecError("multi_mode: mode_dims, omega_r and b must have equal length");
  }
  if (!in.keep_cross.empty()) {
    if (in.keep_cross.size() != static_cast<size_t>(nm)) {
      throw SpecError("multi_mode: keep_cross must be empty or n_modes x n_modes");
    }
    for (int i = 0; i < nm; ++i) {
      if (in.keep_cross[i].size() != static_cast<size_t>(nm)) {
        throw SpecError("multi_mode: keep_cross must be empty or n_modes x n_modes");
      }
      for (int j = 0; j < nm; ++j) {
        if (in.keep_cross[i][j] != in.keep_cross[j][i]) {
          throw SpecError("multi_mode: keep_cross must be symmetric");
        }
      }
    }
  }
  for (int i = 0; i < nm; ++i) {
    if (in.mode_dims[i] < 2) throw SpecError("multi_mode: mode dimension must be >= 2");
    if (!in.h_b.space().compatible_with(in.b[i].space())) {
      throw SpecError("multi_mode: H_B and B_" + std::to_string(i) +
                      " act on different spaces");
    }
  }
  auto keep = [&](int i, int j) {
    return i == j || in.keep_cross.empty() || in.keep_cross[i][j];
  };

  std::vector<FactorSpec> mode_factors;
  for (int i = 0; i < nm; ++i) {
    mode_factors.push_back(
        FactorSpec{FactorKind::Boson, in.mode_dims[i], "mode" + std::to_string(i)});
  }
  ProductSpace modes(mode_factors);
  ProductSpace space = concat(modes, in.h_b.space());

  std::vector<OperatorMatrix> a(nm), ad(nm);
  for (int i = 0; i < nm; ++i) {
    a[i] = ops::build_ladder(space, i);
    ad[i] = ops::adjoint(a[i]);
  }

  std::vector<OperatorMatrix> br(nm), b_adj(nm), br_adj(nm);
  for (int i = 0; i < nm; ++i) {
    br[i] = renormalize_coupling(in.h_b, in.b[i], in.omega_r[i], resonance_floor);
    b_adj[i] = ops::adjoint(in.b[i]);
    br_adj[i] = ops::adjoint(br[i]);
  }

  EffectiveModel out;
  out.space = space;
  out.h0 = lift_bath(modes, in.h_b);
  out.v = OperatorMatrix(space);
  out.s = OperatorMatrix(space);
  for (int i = 0; i < nm; ++i) {
    OperatorMatrix n_i = ops::build_number(space, i);
    out.h0 = out.h0 + in.omega_r[i] * n_i;
    out.v = out.v + ad[i] * lift_bath(modes, in.b[i]) + a[i] * lift_bath(modes, b_adj[i]);
    out.s = out.s + ad[i] * lift_bath(modes, br[i]) - a[i] * lift_bath(modes, br_adj[i]);
  }

  OperatorMatrix bath_term = in.h_b;
  for (int i = 0; i < nm; ++i) {
    bath_term = bath_term - 0.5 * (b_adj[i] * br[i] + br_adj[i] * in.b[i]);
  }
  OperatorMatrix h_prime = lift_bath(modes, bath_term);
  for (int i = 0; i < nm; ++i) {
    OperatorMatrix n_i = ops::build_number(space, i);
    h_prime = h_prime + in.omega_r[i] * n_i;
  }
  for (int i = 0; i < nm; ++i) {
    for (int j = 0; j < nm; ++j) {
      if (!keep(i, j)) continue;
      OperatorMatrix shift = ops::commutator(b_adj[j], br[i]);
      OperatorMatrix shift_adj = ops::commutator(br_adj[i], in.b[j]);
      h_prime = h_prime - 0.5 * ((ad[i] * a[j]) * lift_bath(modes, shift)) -
                0.5 * ((ad[j] * a[i]) * lift_bath(modes, shift_adj));
    }
  }
  out.h_prime = h_prime;
  return out;
}

EffectiveModel qubit(const QubitSystem& in, double resonance_floor) {
  if (!in.h_b.space().compatible_with(in.b.space())) {
    throw SpecError("qubit: H_B and B act on different spaces");
  }
  ProductSpace qspace(
      std::vector<FactorSpec>{FactorSpec{FactorKind::Qudit, 2, "qubit"}});
  ProductSpace space = concat(qspace, in.h_b.space());

  OperatorMatrix proj_e = ops::build_transition(qspace, 0, 1, 1);
  OperatorMatrix proj_g = ops::build_transition(qspace, 0, 0, 0);
  OperatorMatrix sp = ops::build_transition(qspace, 0, 1, 0);
  OperatorMatrix sm = ops::build_transition(qspace, 0, 0, 1);
  OperatorMatrix sz = proj_e - proj_g;

  OperatorMatrix br = renormalize_coupling(in.h_b, in.b, in.omega_r, resonance_floor);
  OperatorMatrix bd = ops::adjoint(in.b);
  OperatorMatrix brd = ops::adjoint(br);
  OperatorMatrix ib = OperatorMatrix::identity(in.h_b.space());

  OperatorMatrix up = 0.5 * (in.omega_r * ib + br * bd + in.b * brd);
  OperatorMatrix down = 0.5 * (in.omega_r * ib + bd * br + brd * in.b);

  EffectiveModel out;
  out.space = space;
  out.h0 = ops::tensor_product(0.5 * in.omega_r * sz, ib) + lift_bath(qspace, in.h_b);
  out.v = ops::tensor_product(sp, in.b) + ops::tensor_product(sm, bd);
  out.s = ops::tensor_product(sp, br) - ops::tensor_product(sm, brd);
  out.h_prime = lift_bath(qspace, in.h_b) + ops::tensor_product(proj_e, up) -
                ops::tensor_product(proj_g, down);
  return out;
}

EffectiveModel giant_atom(const GiantAtom& in, double resonance_floor) {
  const int nk = static_cast<int>(in.eps.size());
  if (nk < 1) throw SpecError("giant_atom: empty chain");
  if (in.g.size() != static_cast<size_t>(nk)) {
    throw SpecError("giant_atom: eps and g must have equal length");
  }
  if (in.chain_kind == FactorKind::Qudit) {
    throw SpecError("giant_atom: chain must be fermionic or bosonic");
  }
  const int site_dim = in.chain_kind == FactorKind::Fermion ? 2 : in.chain_local_dim;

  std::vector<FactorSpec> site_factors;
  for (int k = 0; k < nk; ++k) {
    site_factors.push_back(
        FactorSpec{in.chain_kind, site_dim, "site" + std::to_string(k)});
  }
  ProductSpace chain(site_factors);

  std::vector<OperatorMatrix> b(nk), bd(nk);
  OperatorMatrix h_b(chain);
  for (int k = 0; k < nk; ++k) {
    b[k] = ops::build_ladder(chain, k);
    bd[k] = ops::adjoint(b[k]);
    h_b = h_b + in.eps[k] * ops::build_number(chain, k);
  }

  double eps_lo = *std::min_element(in.eps.begin(), in.eps.end());
  double eps_hi = *std::max_element(in.eps.begin(), in.eps.end());
  const double floor = resonance_floor >= 0.0
                           ? resonance_floor
                           : default_floor(in.omega_r, eps_hi - eps_lo);

  OperatorMatrix b_total(chain), br(chain), t(chain);
  double d_shift = 0.0;
  for (int k = 0; k < nk; ++k) {
    const double denom_k = in.omega_r - in.eps[k];
    check_resonance(denom_k, floor, in.omega_r, in.eps[k]);
    b_total = b_total + ops::scale(in.g[k], b[k]);
    br = br + ops::scale(in.g[k] / denom_k, b[k]);
    d_shift += std::norm(in.g[k]) / denom_k;
    for (int q = 0; q < nk; ++q) {
      const double denom_q = in.omega_r - in.eps[q];
      const cplx coeff =
          0.5 * std::conj(in.g[k]) * in.g[q] * (1.0 / denom_k + 1.0 / denom_q);
      t = t + ops::scale(coeff, bd[k] * b[q]);
    }
  }

  ProductSpace qspace(
      std::vector<FactorSpec>{FactorSpec{FactorKind::Qudit, 2, "qubit"}});
  OperatorMatrix proj_e = ops::build_transition(qspace, 0, 1, 1);
  OperatorMatrix proj_g = ops::build_transition(qspace, 0, 0, 0);
  OperatorMatrix sp = ops::build_transition(qspace, 0, 1, 0);
  OperatorMatrix sm = ops::build_transition(qspace, 0, 0, 1);
  OperatorMatrix sz = proj_e - proj_g;
  OperatorMatrix ib = OperatorMatrix::identity(chain);

  EffectiveModel out;
  out.space = concat(qspace, chain);
  out.h0 = ops::tensor_product(0.5 * in.omega_r * sz, ib) + lift_bath(qspace, h_b);
  out.v = ops::tensor_product(sp, b_total) + ops::tensor_product(sm, ops::adjoint(b_total));
  out.s = ops::tensor_product(sp, br) - ops::tensor_product(sm, ops::adjoint(br));

  OperatorMatrix atom_part =
      ops::tensor_product(0.5 * in.omega_r * sz + d_shift * proj_e, ib);
  if (in.chain_kind == FactorKind::Fermion) {
    // The chain renormalization is the same whatever the atom state.
    out.h_prime = atom_part + lift_bath(qspace, h_b - t);
  } else {
    // For bosons the chain shift flips sign with the atom state.
    out.h_prime = atom_part + lift_bath(qspace, h_b) + ops::tensor_product(sz, t);
  }
  return out;
}

EffectiveModel two_chains(const TwoChains& in, double resonance_floor) {
  const int na = static_cast<int>(in.e_a.size());
  const int nb = static_cast<int>(in.e_b.size());
  if (na < 1 || nb < 1) throw SpecError("two_chains: both chains need sites");
  if (in.v.rows() != na || in.v.cols() != nb) {
    throw SpecError("two_chains: coupling matrix must be (sites_a x sites_b)");
  }
  if (in.kind_a == FactorKind::Qudit || in.kind_b == FactorKind::Qudit) {
    throw SpecError("two_chains: chains must be fermionic or bosonic");
  }

  std::vector<FactorSpec> factors;
  const int dim_a = in.kind_a == FactorKind::Fermion ? 2 : in.local_dim_a;
  const int dim_b = in.kind_b == FactorKind::Fermion ? 2 : in.local_dim_b;
  for (int i = 0; i < na; ++i) {
    factors.push_back(FactorSpec{in.kind_a, dim_a, "a" + std::to_string(i)});
  }
  for (int k = 0; k < nb; ++k) {
    factors.push_back(FactorSpec{in.kind_b, dim_b, "b" + std::to_string(k)});
  }
  ProductSpace space(factors);

  std::vector<OperatorMatrix> a(na), ad(na), b(nb), bd(nb);
  for (int i = 0; i < na; ++i) {
    a[i] = ops::build_ladder(space, i);
    ad[i] = ops::adjoint(a[i]);
  }
  for (int k = 0; k < nb; ++k) {
    b[k] = ops::build_ladder(space, na + k);
    bd[k] = ops::adjoint(b[k]);
  }

  double lo = in.e_a[0], hi = in.e_a[0];
  for (double e : in.e_a) lo = std::min(lo, e), hi = std::max(hi, e);
  for (double e : in.e_b) lo = std::min(lo, e), hi = std::max(hi, e);
  const double floor =
      resonance_floor >= 0.0 ? resonance_floor : 1e-8 * std::max(1.0, hi - lo);

  EffectiveModel out;
  out.space = space;
  out.h0 = OperatorMatrix(space);
  for (int i = 0; i < na; ++i) out.h0 = out.h0 + in.e_a[i] * ops::build_number(space, i);
  for (int k = 0; k < nb; ++k) {
    out.h0 = out.h0 + in.e_b[k] * ops::build_number(space, na + k);
  }

  out.v = OperatorMatrix(space);
  out.s = OperatorMatrix(space);
  for (int i = 0; i < na; ++i) {
    for (int k = 0; k < nb; ++k) {
      const cplx vik = in.v(i, k);
      if (vik == cplx(0.0, 0.0)) continue;
      const double denom = in.e_a[i] - in.e_b[k];
      if (std::abs(denom) < floor) {
        throw GuardError("two_chains: |E_" + std::to_string(i) + " - eps_" +
                         std::to_string(k) + "| = " + std::to_string(std::abs(denom)) +
                         " below floor " + std::to_string(floor));
      }
      out.v = out.v + ops::scale(vik, bd[k] * a[i]) +
              ops::scale(std::conj(vik), ad[i] * b[k]);
      out.s = out.s - ops::scale(vik / denom, bd[k] * a[i] - ad[i] * b[k]);
    }
  }

  auto f = [&](int i, int j, int k, int q) -> cplx {
    const cplx vik = in.v(i, k);
    const cplx vjq = in.v(j, q);
    if (vik == cplx(0.0, 0.0) || vjq == cplx(0.0, 0.0)) return 0.0;
    return 0.5 * vik * std::conj(vjq) *
           (1.0 / (in.e_a[i] - in.e_b[k]) + 1.0 / (in.e_a[j] - in.e_b[q]));
  };

  OperatorMatrix h_prime(space);
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < na; ++j) {
      cplx coeff = i == j ? cplx(in.e_a[i], 0.0) : cplx(0.0, 0.0);
      for (int k = 0; k < nb; ++k) coeff += f(i, j, k, k);
      if (coeff != cplx(0.0, 0.0)) h_prime = h_prime + ops::scale(coeff, ad[j] * a[i]);
    }
  }
  for (int k = 0; k < nb; ++k) {
    for (int q = 0; q < nb; ++q) {
      cplx coeff = k == q ? cplx(in.e_b[k], 0.0) : cplx(0.0, 0.0);
      for (int i = 0; i < na; ++i) coeff -= f(i, i, k, q);
      if (coeff != cplx(0.0, 0.0)) h_prime = h_prime + ops::scale(coeff, bd[k] * b[q]);
    }
  }
  double quartic_sign = 0.0;
  if (in.kind_a == FactorKind::Fermion && in.kind_b == FactorKind::Boson) {
    quartic_sign = 2.0;
  } else if (in.kind_a == FactorKind::Boson && in.kind_b == FactorKind::Fermion) {
    quartic_sign = -2.0;
  }
  if (quartic_sign != 0.0) {
    for (int i = 0; i < na; ++i) {
      for (int j = 0; j < na; ++j) {
        for (int k = 0; k < nb; ++k) {
          for (int q = 0; q < nb; ++q) {
            const cplx coeff = quartic_sign * f(i, j, k, q);
            if (coeff == cplx(0.0, 0.0)) continue;
            h_prime = h_prime + ops::scale(coeff, (ad[j] * a[i]) * (bd[k] * b[q]));
          }
        }
      }
    }
  }
  out.h_prime = h_prime;
  return out;
}

namespace {

struct CubicContext {
  ProductSpace bath;
  std::vector<OperatorMatrix> b, bd;  // bare fermion ladder operators
  OperatorMatrix h_b;
  Eigen::VectorXd eps;
  DenseMat r;                          // h = R eps R^dag
  std::vector<DenseMat> m_script;      // R^dag M_i R
  std::vector<OperatorMatrix> c, cd;   // rotated fermion operators
  double floor = 0.0;
};

CubicContext make_cubic_context(const CubicModel& in, double resonance_floor) {
  const int nf = static_cast<int>(in.h.rows());
  if (nf < 1 || in.h.cols() != nf) throw SpecError("cubic: h must be square");
  if (in.omega_r.empty() || in.m.size() != in.omega_r.size()) {
    throw SpecError("cubic: omega_r and M lists must have equal nonzero length");
  }
  const double h_scale = std::max(1.0, in.h.cwiseAbs().maxCoeff());
  if ((in.h - in.h.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * h_scale) {
    throw SpecError("cubic: h must be Hermitian");
  }
  for (const DenseMat& mi : in.m) {
    if (mi.rows() != nf || mi.cols() != nf) {
      throw SpecError("cubic: every M_i must match the dimension of h");
    }
  }

  CubicContext ctx;
  std::vector<FactorSpec> factors;
  for (int k = 0; k < nf; ++k) {
    factors.push_back(FactorSpec{FactorKind::Fermion, 2, "f" + std::to_string(k)});
  }
  ctx.bath = ProductSpace(factors);
  ctx.b.resize(nf);
  ctx.bd.resize(nf);
  for (int k = 0; k < nf; ++k) {
    ctx.b[k] = ops::build_ladder(ctx.bath, k);
    ctx.bd[k] = ops::adjoint(ctx.b[k]);
  }
  ctx.h_b = quadratic_form(ctx.bath, in.h, ctx.b);

  Eigen::SelfAdjointEigenSolver<DenseMat> solver(in.h);
  if (solver.info() != Eigen::Success) {
    throw GuardError("cubic: eigensolver failed on h");
  }
  ctx.eps = solver.eigenvalues();
  ctx.r = solver.eigenvectors();
  for (const DenseMat& mi : in.m) {
    ctx.m_script.push_back(ctx.r.adjoint() * mi * ctx.r);
  }

  ctx.c.resize(nf);
  ctx.cd.resize(nf);
  for (int k = 0; k < nf; ++k) {
    OperatorMatrix ck(ctx.bath);
    for (int p = 0; p < nf; ++p) {
      const cplx w = std::conj(ctx.r(p, k));
      if (w != cplx(0.0, 0.0)) ck = ck + ops::scale(w, ctx.b[p]);
    }
    ctx.c[k] = ck;
    ctx.cd[k] = ops::adjoint(ck);
  }

  double omega_max = 0.0;
  for (double w : in.omega_r) omega_max = std::max(omega_max, std::abs(w));
  const double spread = ctx.eps.maxCoeff() - ctx.eps.minCoeff();
  ctx.floor = resonance_floor >= 0.0 ? resonance_floor
                                     : 1e-8 * std::max({1.0, omega_max, spread});
  return ctx;
}

double guarded_denom(double value, double floor, const char* what) {
  if (std::abs(value) < floor) {
    throw GuardError(std::string("cubic: ") + what + " denominator " +
                     std::to_string(value) + " below floor " + std::to_string(floor));
  }
  return value;
}

}  // namespace

CubicForms cubic_bath_forms(const CubicModel& in, double resonance_floor) {
  CubicContext ctx = make_cubic_context(in, resonance_floor);
  const int nf = static_cast<int>(in.h.rows());
  const int nmodes = static_cast<int>(in.omega_r.size());

  // Quadratic building blocks c_k^dag c_q.
  std::vector<std::vector<OperatorMatrix>> pair(nf, std::vector<OperatorMatrix>(nf));
  for (int k = 0; k < nf; ++k) {
    for (int q = 0; q < nf; ++q) pair[k][q] = ctx.cd[k] * ctx.c[q];
  }
  OperatorMatrix diag_part(ctx.bath);
  for (int k = 0; k < nf; ++k) diag_part = diag_part + ctx.eps(k) * pair[k][k];

  // Exact quartic tensor: -1/2 sum_i Ms*_{ikk'} Ms_{ipp'}
  //   (1/(w_i + e_k - e_k') + 1/(w_i + e_p - e_p'))  on c_k'^dag c_k c_p^dag c_p'.
  OperatorMatrix exact = diag_part;
  for (int k = 0; k < nf; ++k) {
    for (int kp = 0; kp < nf; ++kp) {
      for (int p = 0; p < nf; ++p) {
        for (int pp = 0; pp < nf; ++pp) {
          cplx coeff = 0.0;
          for (int i = 0; i < nmodes; ++i) {
            const cplx mkk = ctx.m_script[i](k, kp);
            const cplx mpp = ctx.m_script[i](p, pp);
            if (mkk == cplx(0.0, 0.0) || mpp == cplx(0.0, 0.0)) continue;
            const double d1 = guarded_denom(
                in.omega_r[i] + ctx.eps(k) - ctx.eps(kp), ctx.floor, "w + e_k - e_k'");
            const double d2 = guarded_denom(
                in.omega_r[i] + ctx.eps(p) - ctx.eps(pp), ctx.floor, "w + e_p - e_p'");
            coeff += -0.5 * std::conj(mkk) * mpp * (1.0 / d1 + 1.0 / d2);
          }
          if (coeff == cplx(0.0, 0.0)) continue;
          exact = exact + ops::scale(coeff, pair[kp][k] * pair[p][pp]);
        }
      }
    }
  }

  // Normal-ordered arrangement: quadratic shift G plus c_k'^dag c_p^dag c_k c_p'.
  DenseMat g = DenseMat::Zero(nf, nf);
  for (int k = 0; k < nf; ++k) {
    for (int p = 0; p < nf; ++p) {
      for (int i = 0; i < nmodes; ++i) {
        for (int q = 0; q < nf; ++q) {
          const cplx mqk = ctx.m_script[i](q, k);
          const cplx mqp = ctx.m_script[i](q, p);
          if (mqk == cplx(0.0, 0.0) || mqp == cplx(0.0, 0.0)) continue;
          const double d1 = guarded_denom(in.omega_r[i] + ctx.eps(q) - ctx.eps(k),
                                          ctx.floor, "w + e_q - e_k");
          const double d2 = guarded_denom(in.omega_r[i] + ctx.eps(q) - ctx.eps(p),
                                          ctx.floor, "w + e_q - e_p");
          g(k, p) += -0.5 * std::conj(mqk) * mqp * (1.0 / d1 + 1.0 / d2);
        }
      }
    }
  }
  OperatorMatrix normal_ordered = diag_part;
  for (int k = 0; k < nf; ++k) {
    for (int p = 0; p < nf; ++p) {
      if (g(k, p) != cplx(0.0, 0.0)) {
        normal_ordered = normal_ordered + ops::scale(g(k, p), pair[k][p]);
      }
    }
  }
  bool all_m_hermitian = true;
  for (const DenseMat& mi : in.m) {
    const double scale = std::max(1.0, mi.cwiseAbs().maxCoeff());
    if ((mi - mi.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
      all_m_hermitian = false;
    }
  }
  OperatorMatrix hermitian_quartic(ctx.bath);
  for (int k = 0; k < nf; ++k) {
    for (int kp = 0; kp < nf; ++kp) {
      for (int p = 0; p < nf; ++p) {
        for (int pp = 0; pp < nf; ++pp) {
          cplx coeff = 0.0;
          cplx coeff_h = 0.0;
          for (int i = 0; i < nmodes; ++i) {
            const cplx mkk = ctx.m_script[i](k, kp);
            const cplx mpp = ctx.m_script[i](p, pp);
            const cplx mkk_t = ctx.m_script[i](kp, k);
            const cplx mpp_t = ctx.m_script[i](pp, p);
            const double delta = ctx.eps(k) - ctx.eps(kp);
            if (mkk != cplx(0.0, 0.0) && mpp != cplx(0.0, 0.0)) {
              const double d1 =
                  guarded_denom(in.omega_r[i] + delta, ctx.floor, "w + e_k - e_k'");
              coeff += 0.5 * std::conj(mkk) * mpp / d1;
              coeff_h += std::conj(mkk) * mpp * in.omega_r[i] /
                         (guarded_denom(in.omega_r[i] + delta, ctx.floor, "w + d") *
                          guarded_denom(in.omega_r[i] - delta, ctx.floor, "w - d"));
            }
            if (mkk_t != cplx(0.0, 0.0) && mpp_t != cplx(0.0, 0.0)) {
              const double d2 =
                  guarded_denom(in.omega_r[i] - delta, ctx.floor, "w - (e_k - e_k')");
              coeff += 0.5 * mkk_t * std::conj(mpp_t) / d2;
            }
          }
          if (coeff == cplx(0.0, 0.0) && coeff_h == cplx(0.0, 0.0)) continue;
          OperatorMatrix mono = (ctx.cd[kp] * ctx.cd[p]) * (ctx.c[k] * ctx.c[pp]);
          if (coeff != cplx(0.0, 0.0)) {
            normal_ordered = normal_ordered + ops::scale(coeff, mono);
          }
          if (all_m_hermitian && coeff_h != cplx(0.0, 0.0)) {
            hermitian_quartic = hermitian_quartic + ops::scale(coeff_h, mono);
          }
        }
      }
    }
  }

  // Dispersive expansion in the bare basis: the 1/w^2 correction pairs each
  // quadratic with the commutator [h, M_i].
  OperatorMatrix expanded = ctx.h_b;
  OperatorMatrix leading = ctx.h_b;
  for (int i = 0; i < nmodes; ++i) {
    const double w = guarded_denom(in.omega_r[i], ctx.floor, "w");
    OperatorMatrix q_i = quadratic_form(ctx.bath, in.m[i], ctx.b);
    OperatorMatrix q_i_adj = ops::adjoint(q_i);
    OperatorMatrix c_i =
        quadratic_form(ctx.bath, DenseMat(in.h * in.m[i] - in.m[i] * in.h), ctx.b);
    OperatorMatrix c_i_adj = ops::adjoint(c_i);
    leading = leading - (1.0 / w) * (q_i_adj * q_i);
    expanded = expanded - (1.0 / w) * (q_i_adj * q_i) +
               (0.5 / (w * w)) * (c_i_adj * q_i + q_i_adj * c_i);
  }

  CubicForms out;
  out.bath = ctx.bath;
  out.h_b = ctx.h_b;
  out.exact = std::move(exact);
  out.normal_ordered = std::move(normal_ordered);
  out.expanded = std::move(expanded);
  out.leading = std::move(leading);
  if (all_m_hermitian) {
    OperatorMatrix herm = diag_part;
    for (int k = 0; k < nf; ++k) {
      for (int p = 0; p < nf; ++p) {
        if (g(k, p) != cplx(0.0, 0.0)) herm = herm + ops::scale(g(k, p), pair[k][p]);
      }
    }
    out.hermitian = herm + hermitian_quartic;
  }
  return out;
}

EffectiveModel cubic_composite(const CubicModel& in, double resonance_floor) {
  CubicContext ctx = make_cubic_context(in, resonance_floor);
  MultiMode mm;
  mm.mode_dims.assign(in.omega_r.size(), in.mode_dim);
  mm.omega_r = in.omega_r;
  mm.h_b = ctx.h_b;
  mm.keep_cross = in.keep_cross;
  for (const DenseMat& mi : in.m) {
    mm.b.push_back(quadratic_form(ctx.bath, mi, ctx.b));
  }
  return multi_mode(mm, resonance_floor);
}

}  // namespace swlab::dispersive
