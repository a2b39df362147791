#include "swlab/sw.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace swlab::sw {

const char* to_string(Variant v) {
  switch (v) {
    case Variant::BlockDiagonal:
      return "block_diagonal";
    case Variant::SingleGenerator:
      return "single_generator";
  }
  return "unknown";
}

double f_coeff(double omega, double omega_prime) {
  return 0.5 * (1.0 / omega + 1.0 / omega_prime);
}

namespace {

void validate_options(const EngineOptions& options) {
  if (options.variant == Variant::BlockDiagonal) {
    if (options.order < 2 || options.order > 3) {
      throw SpecError("block_diagonal supports order 2 or 3, got order " +
                      std::to_string(options.order));
    }
  } else {
    if (options.order < 2 || options.order > 6) {
      throw SpecError("single_generator supports orders 2 through 6, got order " +
                      std::to_string(options.order));
    }
  }
}

double floor_value(const EngineOptions& options, double spread) {
  return options.denominator_floor >= 0.0 ? options.denominator_floor
                                          : 1e-8 * std::max(1.0, spread);
}

void tag_if_hermitian(OperatorMatrix& m) {
  if (ops::hermiticity_defect(m) <= 1e-12 * std::max(1.0, ops::max_abs(m))) {
    m.set_hermitian_hint(true);
  }
}

Diagnostics make_diagnostics(const OperatorMatrix& s, const OperatorMatrix& h_prime,
                             const Workspace& ws) {
  Diagnostics d;
  d.offdiag_residual =
      ops::max_abs(spectral::split_v(h_prime, ws.spectrum, ws.blocks).v_o);
  d.s_antihermiticity = ops::max_abs(ops::add(s, ops::adjoint(s)));
  d.s_block_norm = ops::max_abs(
      spectral::project_block_diagonal(s, ws.spectrum, ws.blocks));
  d.recomposition_error = ws.vo_components.recomposition_error;
  return d;
}

}  // namespace

Workspace prepare(const OperatorMatrix& h0, const OperatorMatrix& v,
                  const spectral::BlockOptions& block_options,
                  const EngineOptions& options) {
  ops::require_hermitian(v, "V");
  spectral::Spectrum spectrum = spectral::diagonalize(h0);
  spectral::BlockStructure blocks = spectral::make_blocks(h0, spectrum, block_options);
  spectral::SplitV split = spectral::split_v(v, spectrum, blocks);
  eigenop::DecomposeOptions dopt;
  dopt.bin_tol = options.bin_tol;
  eigenop::BohrDecomposition comps = eigenop::eigen_decompose(split.v_o, spectrum, dopt);
  return Workspace{std::move(spectrum), std::move(blocks), std::move(split.v_d),
                   std::move(split.v_o), std::move(comps)};
}

OperatorMatrix build_generator(const ProductSpace& space,
                               const eigenop::BohrDecomposition& vo_components,
                               double denominator_floor) {
  OperatorMatrix s(space);
  for (const auto& comp : vo_components.components) {
    if (comp.op.nonzeros() == 0 || comp.weight == 0.0) continue;
    if (comp.omega == 0.0 || std::abs(comp.omega) < denominator_floor) {
      // Name one offending matrix element to make the failure actionable.
      int row = 0, col = 0;
      const SparseMat& e = comp.op.entries();
      for (int k = 0; k < e.outerSize() && row == 0 && col == 0; ++k) {
        SparseMat::InnerIterator it(e, k);
        if (it) {
          row = it.row();
          col = it.col();
        }
      }
      if (comp.omega == 0.0) {
        throw GuardError(
            "build_generator: V couples degenerate states in different blocks "
            "(e.g. matrix element " + std::to_string(row) + " <- " +
            std::to_string(col) + "); no generator exists for this block choice");
      }
      throw GuardError(
          "build_generator: denominator |omega| = " + std::to_string(std::abs(comp.omega)) +
          " below floor " + std::to_string(denominator_floor) +
          " (e.g. matrix element " + std::to_string(row) + " <- " +
          std::to_string(col) + "); widen the blocks or lower the floor");
    }
    s = ops::add(s, ops::scale(cplx(-1.0 / comp.omega, 0.0), comp.op));
  }
  return s;
}

SWResult second_order(const OperatorMatrix& h0, const Workspace& ws,
                      const EngineOptions& options) {
  const double floor = floor_value(options, ws.vo_components.spread);
  OperatorMatrix s1 = build_generator(h0.space(), ws.vo_components, floor);
  OperatorMatrix half_comm = 0.5 * ops::commutator(s1, ws.v_o);
  OperatorMatrix correction =
      spectral::project_block_diagonal(half_comm, ws.spectrum, ws.blocks);
  OperatorMatrix h_prime = h0 + ws.v_d + correction;
  tag_if_hermitian(h_prime);
  Diagnostics diag = make_diagnostics(s1, h_prime, ws);
  return SWResult{std::move(s1), std::move(h_prime), 2, Variant::BlockDiagonal, diag};
}

SWResult third_order_block(const OperatorMatrix& h0, const Workspace& ws,
                           const EngineOptions& options) {
  const double floor = floor_value(options, ws.vo_components.spread);
  OperatorMatrix s1 = build_generator(h0.space(), ws.vo_components, floor);

  OperatorMatrix c_d = ops::commutator(s1, ws.v_d);  // strictly off-block
  OperatorMatrix c_o = ops::commutator(s1, ws.v_o);
  spectral::SplitV c_o_split = spectral::split_v(c_o, ws.spectrum, ws.blocks);
  OperatorMatrix second = 0.5 * c_o_split.v_d;

  // S2 solves [H0, S2] = [S1, Vd] + (1/2) offblock([S1, Vo]); the right-hand
  // side is Hermitian and strictly off-block, so the same frequency solve as
  // for S1 applies. Project away the numerical in-block residue of the
  // commutators so no spurious zero-frequency component reaches the solve.
  OperatorMatrix rhs2 =
      spectral::split_v(c_d + 0.5 * c_o_split.v_o, ws.spectrum, ws.blocks).v_o;
  eigenop::DecomposeOptions dopt;
  dopt.bin_tol = options.bin_tol;
  eigenop::BohrDecomposition rhs2_components =
      eigenop::eigen_decompose(rhs2, ws.spectrum, dopt);
  OperatorMatrix s2 = build_generator(h0.space(), rhs2_components, floor);

  // Third-order block-diagonal correction; [S2, H0] = -rhs2 by construction.
  OperatorMatrix third_terms = ops::commutator(s2, ws.v_d) +
                               0.5 * ops::commutator(s2, ws.v_o) -
                               0.5 * ops::commutator(s1, rhs2) +
                               0.5 * ops::commutator(s1, c_d) +
                               (1.0 / 3.0) * ops::commutator(s1, c_o);
  OperatorMatrix third =
      spectral::project_block_diagonal(third_terms, ws.spectrum, ws.blocks);

  OperatorMatrix h_prime = h0 + ws.v_d + second + third;
  tag_if_hermitian(h_prime);
  OperatorMatrix s_total = s1 + s2;
  Diagnostics diag = make_diagnostics(s_total, h_prime, ws);
  return SWResult{std::move(s_total), std::move(h_prime), 3, Variant::BlockDiagonal,
                  diag};
}

SWResult single_generator_series(const OperatorMatrix& h0, const Workspace& ws,
                                 const EngineOptions& options) {
  const double floor = floor_value(options, ws.vo_components.spread);
  OperatorMatrix s1 = build_generator(h0.space(), ws.vo_components, floor);

  OperatorMatrix h_prime = h0;
  OperatorMatrix nested_d = ws.v_d;  // ad_{S1}^{k-1}(Vd)
  OperatorMatrix nested_o = ws.v_o;  // ad_{S1}^{k-1}(Vo)
  double fact = 1.0;                 // (k-1)!
  for (int k = 1; k <= options.order; ++k) {
    if (k > 1) {
      nested_d = ops::commutator(s1, nested_d);
      nested_o = ops::commutator(s1, nested_o);
      fact *= static_cast<double>(k - 1);
    }
    h_prime = h_prime + (1.0 / fact) * nested_d;
    if (k > 1) {
      h_prime = h_prime +
                (static_cast<double>(k - 1) / (fact * static_cast<double>(k))) * nested_o;
    }
  }
  tag_if_hermitian(h_prime);
  Diagnostics diag = make_diagnostics(s1, h_prime, ws);
  return SWResult{std::move(s1), std::move(h_prime), options.order,
                  Variant::SingleGenerator, diag};
}

SWResult run_prepared(const OperatorMatrix& h0, const Workspace& ws,
                      const EngineOptions& options) {
  validate_options(options);
  if (options.variant == Variant::SingleGenerator) {
    return single_generator_series(h0, ws, options);
  }
  return options.order == 2 ? second_order(h0, ws, options)
                            : third_order_block(h0, ws, options);
}

SWResult transform(const OperatorMatrix& h0, const OperatorMatrix& v,
                   const spectral::BlockOptions& block_options,
                   const EngineOptions& options) {
  validate_options(options);
  Workspace ws = prepare(h0, v, block_options, options);
  return run_prepared(h0, ws, options);
}

SWResult second_order_matrix_form(const OperatorMatrix& h0, const OperatorMatrix& v,
                                  const spectral::BlockOptions& block_options,
                                  const EngineOptions& options) {
  ops::require_hermitian(v, "V");
  spectral::Spectrum spectrum = spectral::diagonalize(h0);
  spectral::BlockStructure blocks =
      spectral::make_blocks(h0, spectrum, block_options);

  const int d = h0.dim();
  const DenseMat vt = spectrum.to_eigenbasis(v);
  const Eigen::VectorXd& en = spectrum.energies;
  const double floor = floor_value(options, spectrum.spread());
  const double drop = 4e-15 * std::max(vt.cwiseAbs().maxCoeff(), 0.0);

  DenseMat st = DenseMat::Zero(d, d);
  DenseMat ht = DenseMat::Zero(d, d);
  for (int c = 0; c < d; ++c) {
    for (int r = 0; r < d; ++r) {
      if (blocks.block_of[r] != blocks.block_of[c]) {
        if (std::abs(vt(r, c)) <= drop) continue;
        const double denom = en(r) - en(c);
        if (std::abs(denom) < floor) {
          throw GuardError("second_order_matrix_form: denominator |E_" +
                           std::to_string(r) + " - E_" + std::to_string(c) +
                           "| = " + std::to_string(std::abs(denom)) +
                           " below floor " + std::to_string(floor));
        }
        st(r, c) = vt(r, c) / denom;
        continue;
      }
      cplx sum = 0.0;
      for (int j = 0; j < d; ++j) {
        if (blocks.block_of[j] == blocks.block_of[r]) continue;
        if (std::abs(vt(r, j)) <= drop || std::abs(vt(j, c)) <= drop) continue;
        const double dr = en(r) - en(j);
        const double dc = en(c) - en(j);
        if (std::abs(dr) < floor || std::abs(dc) < floor) {
          throw GuardError("second_order_matrix_form: denominator below floor "
                           "between states " + std::to_string(r) + ", " +
                           std::to_string(c) + " and " + std::to_string(j));
        }
        sum += vt(r, j) * vt(j, c) * (1.0 / dr + 1.0 / dc);
      }
      ht(r, c) = vt(r, c) + 0.5 * sum;
      if (r == c) ht(r, c) += en(r);
    }
  }

  OperatorMatrix s = spectrum.from_eigenbasis(h0.space(), st);
  OperatorMatrix h_prime = spectrum.from_eigenbasis(h0.space(), ht);
  tag_if_hermitian(h_prime);

  Diagnostics diag;
  diag.offdiag_residual = 0.0;  // off-block entries are never populated
  diag.s_antihermiticity = ops::max_abs(ops::add(s, ops::adjoint(s)));
  diag.s_block_norm = ops::max_abs(
      spectral::project_block_diagonal(s, spectrum, blocks));
  return SWResult{std::move(s), std::move(h_prime), 2, Variant::BlockDiagonal,
                  diag};
}

CompareResult compare_spectra(const OperatorMatrix& h0, const OperatorMatrix& v,
                              const OperatorMatrix& h_prime,
                              const spectral::Spectrum& spectrum,
                              const spectral::BlockStructure& blocks) {
  const int d = h0.dim();
  CompareResult out;

  Eigen::SelfAdjointEigenSolver<DenseMat> exact_solver(h0.dense() + v.dense(),
                                                       Eigen::EigenvaluesOnly);
  if (exact_solver.info() != Eigen::Success) {
    throw GuardError("compare_spectra: eigensolver failed on H0 + V");
  }
  out.exact_eigenvalues.assign(exact_solver.eigenvalues().data(),
                               exact_solver.eigenvalues().data() + d);

  const DenseMat hpt = spectrum.to_eigenbasis(h_prime);
  std::vector<std::pair<double, int>> approx;  // (eigenvalue, block)
  approx.reserve(d);
  out.block_eigenvalues.resize(blocks.block_count());
  for (int b = 0; b < blocks.block_count(); ++b) {
    const auto& members = blocks.blocks[b];
    const int m = static_cast<int>(members.size());
    DenseMat sub(m, m);
    for (int cc = 0; cc < m; ++cc) {
      for (int rr = 0; rr < m; ++rr) sub(rr, cc) = hpt(members[rr], members[cc]);
    }
    Eigen::SelfAdjointEigenSolver<DenseMat> block_solver(sub, Eigen::EigenvaluesOnly);
    if (block_solver.info() != Eigen::Success) {
      throw GuardError("compare_spectra: eigensolver failed on block " +
                       std::to_string(b));
    }
    for (int i = 0; i < m; ++i) {
      const double value = block_solver.eigenvalues()(i);
      out.block_eigenvalues[b].push_back(value);
      approx.emplace_back(value, b);
    }
  }

  std::stable_sort(approx.begin(), approx.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  out.per_block.assign(blocks.block_count(), 0.0);
  for (int i = 0; i < d; ++i) {
    const double delta = std::abs(approx[i].first - out.exact_eigenvalues[i]);
    out.max_delta = std::max(out.max_delta, delta);
    out.per_block[approx[i].second] = std::max(out.per_block[approx[i].second], delta);
  }
  return out;
}

}  // namespace swlab::sw
