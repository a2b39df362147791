// Acceptance gate: every shipped guarantee, one PASS/FAIL line each.
// Exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "oracles.hpp"
#include "swlab/dispersive.hpp"
#include "swlab/eigenop.hpp"
#include "swlab/models.hpp"
#include "swlab/operator_core.hpp"
#include "swlab/spec_io.hpp"
#include "swlab/spectral.hpp"
#include "swlab/sw.hpp"

using namespace swlab;
using models::build_preset;
using models::ParamMap;
using models::PresetModel;
using spectral::BlockOptions;

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
  void note(const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
  }
};

// ---------------------------------------------------------------------------
// shared helpers

sw::SWResult run_engine(const PresetModel& m, int order = 2) {
  sw::EngineOptions opts;
  opts.order = order;
  return sw::transform(m.h0, m.v, m.blocks, opts);
}

double spectral_error(const PresetModel& m, int order) {
  sw::SWResult res = run_engine(m, order);
  spectral::Spectrum sp = spectral::diagonalize(m.h0);
  spectral::BlockStructure blocks = spectral::make_blocks(m.h0, sp, m.blocks);
  return sw::compare_spectra(m.h0, m.v, res.h_prime, sp, blocks).max_delta;
}

double offblock_residual(const PresetModel& m) {
  sw::SWResult res = run_engine(m, 2);
  OperatorMatrix rotated = ops::matrix_exponential_rotate(m.h0 + m.v, res.s);
  spectral::Spectrum sp = spectral::diagonalize(m.h0);
  spectral::BlockStructure blocks = spectral::make_blocks(m.h0, sp, m.blocks);
  OperatorMatrix proj = spectral::project_block_diagonal(rotated, sp, blocks);
  return ops::max_abs(rotated - proj);
}

double unitarity_defect(const PresetModel& m) {
  sw::SWResult res = run_engine(m, 2);
  OperatorMatrix rotated = ops::matrix_exponential_rotate(m.h0 + m.v, res.s);
  return testsup::spectra_delta(rotated.dense(), (m.h0 + m.v).dense());
}

// every parameter that carries one power of the perturbation, per preset
const std::map<std::string, std::vector<std::string>>& coupling_params() {
  static const std::map<std::string, std::vector<std::string>> map = {
      {"qutrit", {"v01_re", "v01_im", "v12_re", "v12_im"}},
      {"three_boson", {"g"}},
      {"one_boson_n", {"g"}},
      {"two_boson", {"g"}},
      {"anderson", {"v1", "v2"}},
      {"dispersive_boson_generic", {"b0", "b1", "b2", "b3", "b4"}},
      {"jaynes_cummings", {"g"}},
      {"rabi", {"g"}},
      {"dispersive_qubit_generic", {"b01", "b12", "b23", "b02"}},
      {"giant_atom_chain", {"g0", "g1", "g2", "g3", "g4", "g5"}},
      {"two_chains",
       {"v00", "v01", "v02", "v10", "v11", "v12", "v20", "v21", "v22"}},
      {"cubic_fb", {"g1", "g2"}},
      {"dirac_fixed_p", {"px", "py", "pz", "phi"}},
      {"hubbard_tU", {"t"}},
  };
  return map;
}

// preset with its perturbation parameters scaled by `factor` on top of `base`
PresetModel scaled_preset(const std::string& name, const ParamMap& base,
                          double factor) {
  const models::PresetInfo* info = nullptr;
  for (const auto& pi : models::preset_catalog()) {
    if (pi.name == name) info = &pi;
  }
  ParamMap params = base;
  for (const std::string& pname : coupling_params().at(name)) {
    double value = 0.0;
    bool found = false;
    if (auto it = base.find(pname); it != base.end()) {
      value = it->second;
      found = true;
    }
    if (!found) {
      for (const auto& pi : info->params) {
        if (pi.name == pname) {
          value = pi.value;
          found = true;
        }
      }
    }
    params[pname] = value * factor;
  }
  return build_preset(name, params);
}

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  std::string cmd = std::string(SWLAB_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  CliResult r;
  if (pipe == nullptr) return r;
  char buf[4096];
  size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, got);
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// ---------------------------------------------------------------------------
// criterion 1: three-level model, dressed {0,1} block, exact at second order

Outcome criterion_qutrit() {
  Outcome out;
  auto rng = testsup::make_rng(20260814);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    ParamMap p;
    p["e0"] = testsup::uniform(rng, -1.0, 0.5);
    p["e1"] = p["e0"] + testsup::uniform(rng, 0.2, 2.0);
    p["v01_re"] = testsup::uniform(rng, -0.5, 0.5);
    p["v01_im"] = testsup::uniform(rng, -0.5, 0.5);
    p["v12_re"] = testsup::uniform(rng, -0.2, 0.2);
    p["v12_im"] = testsup::uniform(rng, -0.2, 0.2);
    double v12 = std::hypot(p["v12_re"], p["v12_im"]);
    // keep the far level at least ten couplings away
    p["e2"] = p["e1"] + 10.0 * v12 + testsup::uniform(rng, 0.5, 4.0);

    PresetModel m = build_preset("qutrit", p);
    sw::SWResult res = run_engine(m);
    worst = std::max(worst, ops::max_abs_diff(*m.oracle, res.h_prime));
  }
  out.require(worst <= 1e-12, "entrywise delta " + fmt(worst) + " > 1e-12");
  out.note("20 draws, max entrywise delta " + fmt(worst));
  return out;
}

// ---------------------------------------------------------------------------
// criterion 2: textbook reductions on random level systems

Outcome criterion_textbook() {
  Outcome out;
  auto rng = testsup::make_rng(77001);
  double worst_single = 0.0;
  double worst_block = 0.0;

  for (int trial = 0; trial < 100; ++trial) {
    int dim = 6 + int(testsup::uniform(rng, 0.0, 4.999));
    ProductSpace space({{FactorKind::Qudit, dim, "q"}});

    // non-degenerate draw: singleton blocks, diagonal vs the textbook sum
    Eigen::VectorXd e = testsup::random_energies(rng, dim, 0.4);
    DenseMat vm = testsup::random_hermitian(rng, dim, 1e-4);
    DenseMat h0m = DenseMat::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) h0m(i, i) = e(i);
    OperatorMatrix h0 = OperatorMatrix::from_dense(space, h0m, true);
    OperatorMatrix v = OperatorMatrix::from_dense(space, vm);
    sw::SWResult res = sw::transform(h0, v, BlockOptions::degeneracy());
    std::vector<double> oracle = testsup::textbook_diagonal(e, vm);
    DenseMat hp = res.h_prime.dense();
    for (int r = 0; r < dim; ++r) {
      double rel = std::abs(hp(r, r).real() - oracle[r]) /
                   std::max(1.0, std::abs(oracle[r]));
      worst_single = std::max(worst_single, rel);
    }

    // degenerate draw: exact repeats, full block formula
    std::vector<int> block_of(dim);
    DenseMat h0d = DenseMat::Zero(dim, dim);
    Eigen::VectorXd ed(dim);
    double level = testsup::uniform(rng, -1.0, 0.0);
    int block = 0;
    for (int i = 0; i < dim; ++i) {
      ed(i) = level;
      block_of[i] = block;
      bool repeat = (i + 1 < dim) && (testsup::uniform(rng, 0.0, 1.0) < 0.4);
      if (!repeat) {
        level += testsup::uniform(rng, 0.4, 1.4);
        ++block;
      }
      h0d(i, i) = ed(i);
    }
    OperatorMatrix h0b = OperatorMatrix::from_dense(space, h0d, true);
    DenseMat vb = testsup::random_hermitian(rng, dim, 1e-4);
    sw::SWResult resb = sw::transform(h0b, OperatorMatrix::from_dense(space, vb),
                                      BlockOptions::degeneracy());
    DenseMat oracle_b = testsup::block_hprime(ed, vb, block_of);
    double rel = (resb.h_prime.dense() - oracle_b).cwiseAbs().maxCoeff() /
                 std::max(1.0, oracle_b.cwiseAbs().maxCoeff());
    worst_block = std::max(worst_block, rel);
  }

  out.require(worst_single <= 1e-12,
              "singleton diagonal " + fmt(worst_single) + " > 1e-12");
  out.require(worst_block <= 1e-10,
              "degenerate blocks " + fmt(worst_block) + " > 1e-10");
  out.note("100 draws; singleton " + fmt(worst_single) + ", degenerate " +
           fmt(worst_block));
  return out;
}

// ---------------------------------------------------------------------------
// criterion 3: eigenoperator route vs matrix-element route

Outcome criterion_path_equivalence() {
  Outcome out;
  double worst = 0.0;
  std::string worst_name;

  auto check = [&](const std::string& name, const OperatorMatrix& h0,
                   const OperatorMatrix& v, const BlockOptions& blocks) {
    sw::SWResult a = sw::transform(h0, v, blocks);
    sw::SWResult b = sw::second_order_matrix_form(h0, v, blocks);
    double rel_h = ops::max_abs_diff(a.h_prime, b.h_prime) /
                   std::max(1.0, ops::max_abs(a.h_prime));
    double rel_s =
        ops::max_abs_diff(a.s, b.s) / std::max(1.0, ops::max_abs(a.s));
    double rel = std::max(rel_h, rel_s);
    if (rel > worst) {
      worst = rel;
      worst_name = name;
    }
  };

  for (const auto& info : models::preset_catalog()) {
    PresetModel m = build_preset(info.name, {});
    check(info.name, m.h0, m.v, m.blocks);
  }

  auto rng = testsup::make_rng(88123);
  for (int trial = 0; trial < 100; ++trial) {
    int dim = 6 + int(testsup::uniform(rng, 0.0, 6.999));
    ProductSpace space({{FactorKind::Qudit, dim, "q"}});
    DenseMat h0m = DenseMat::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
      h0m(i, i) = std::round(testsup::uniform(rng, 0.0, 6.0));  // forced repeats
    }
    OperatorMatrix h0 = OperatorMatrix::from_dense(space, h0m, true);
    OperatorMatrix v = OperatorMatrix::from_dense(
        space, testsup::random_hermitian(rng, dim, 0.05));
    check("random#" + std::to_string(trial), h0, v, BlockOptions::degeneracy());
  }

  out.require(worst <= 1e-10,
              "routes differ by " + fmt(worst) + " on " + worst_name);
  out.note("14 presets + 100 random draws, worst rel delta " + fmt(worst) +
           (worst_name.empty() ? "" : " (" + worst_name + ")"));
  return out;
}

// ---------------------------------------------------------------------------
// criterion 4: closed-form Bohr components of the standard drives

Outcome criterion_components() {
  Outcome out;
  double worst = 0.0;
  std::string worst_case;

  auto masked = [&](const std::string& name, const OperatorMatrix& got,
                    const OperatorMatrix& expected,
                    const std::vector<bool>& mask) {
    double d = ops::max_abs_diff_masked(got, expected, mask);
    if (d > worst) {
      worst = d;
      worst_case = name;
    }
  };

  auto component = [&](const eigenop::BohrDecomposition& dec, double omega) {
    const auto* c = dec.find(omega, 1e-8);
    if (c == nullptr) {
      out.require(false, "no component at omega " + fmt(omega));
      return OperatorMatrix();
    }
    return c->op;
  };

  {  // linear, quadratic and quartic single-mode drives
    for (int power : {1, 2, 4}) {
      PresetModel m = build_preset(
          "one_boson_n", {{"power", double(power)}, {"n_max", 12.0}});
      double g = 1e-3, omega = 1.0;
      spectral::Spectrum sp = spectral::diagonalize(m.h0);
      eigenop::BohrDecomposition dec = eigenop::eigen_decompose(m.v, sp);
      std::vector<bool> mask = ops::interior_mask(m.space, power);
      OperatorMatrix a = ops::build_ladder(m.space, 0);
      OperatorMatrix n = ops::build_number(m.space, 0);
      OperatorMatrix one = OperatorMatrix::identity(m.space);
      std::string tag = "power " + std::to_string(power);
      if (power == 1) {
        masked(tag, component(dec, omega), g * a, mask);
      } else if (power == 2) {
        masked(tag + " w=0", component(dec, 0.0), g * (2.0 * n + one), mask);
        masked(tag + " w=2", component(dec, 2 * omega), g * (a * a), mask);
      } else {
        OperatorMatrix v0 = 6.0 * (n * n) + 6.0 * n + 3.0 * one;
        masked(tag + " w=0", component(dec, 0.0), g * v0, mask);
        OperatorMatrix v2 =
            4.0 * (ops::adjoint(a) * (a * a * a)) + 6.0 * (a * a);
        masked(tag + " w=2", component(dec, 2 * omega), g * v2, mask);
        masked(tag + " w=4", component(dec, 4 * omega), g * (a * a * a * a),
               mask);
      }
      // adjoint pairing on the negative side
      for (const auto& c : dec.components) {
        if (c.omega <= 0) continue;
        const auto* partner = dec.find(-c.omega, 1e-8);
        if (partner == nullptr) {
          out.require(false, tag + ": missing adjoint partner");
          continue;
        }
        masked(tag + " pairing", ops::adjoint(c.op), partner->op, mask);
      }
    }
  }

  {  // two quadrature-coupled modes: beam-splitter and two-mode-squeeze parts
    PresetModel m = build_preset("two_boson", {});
    double g = 0.02, wa = 5.0, wb = 1.0;
    spectral::Spectrum sp = spectral::diagonalize(m.h0);
    eigenop::BohrDecomposition dec = eigenop::eigen_decompose(m.v, sp);
    std::vector<bool> mask = ops::interior_mask(m.space, 1);
    OperatorMatrix a = ops::build_ladder(m.space, 0);
    OperatorMatrix b = ops::build_ladder(m.space, 1);
    masked("two-mode w=wa-wb", component(dec, wa - wb),
           g * (a * ops::adjoint(b)), mask);
    masked("two-mode w=wa+wb", component(dec, wa + wb), g * (a * b), mask);
  }

  {  // exchange coupling: one rotating pair
    PresetModel m = build_preset("jaynes_cummings", {});
    double g = 0.02;
    spectral::Spectrum sp = spectral::diagonalize(m.h0);
    eigenop::BohrDecomposition dec = eigenop::eigen_decompose(m.v, sp);
    std::vector<bool> mask = ops::interior_mask(m.space, 1);
    OperatorMatrix a = ops::build_ladder(m.space, 0);
    OperatorMatrix sig_p = ops::build_transition(m.space, 1, 1, 0);
    OperatorMatrix sig_m = ops::build_transition(m.space, 1, 0, 1);
    if (dec.components.size() != 2) {
      out.require(false, "exchange drive: expected 2 components, got " +
                             std::to_string(dec.components.size()));
    }
    masked("exchange w=wr-wq", component(dec, 9.0), g * (a * sig_p), mask);
    masked("exchange w=-(wr-wq)", component(dec, -9.0),
           g * (ops::adjoint(a) * sig_m), mask);
  }

  {  // quadrature coupling adds the counter-rotating pair
    PresetModel m = build_preset("rabi", {});
    double g = 0.02;
    spectral::Spectrum sp = spectral::diagonalize(m.h0);
    eigenop::BohrDecomposition dec = eigenop::eigen_decompose(m.v, sp);
    std::vector<bool> mask = ops::interior_mask(m.space, 1);
    OperatorMatrix a = ops::build_ladder(m.space, 0);
    OperatorMatrix sig_p = ops::build_transition(m.space, 1, 1, 0);
    OperatorMatrix sig_m = ops::build_transition(m.space, 1, 0, 1);
    if (dec.components.size() != 4) {
      out.require(false, "quadrature drive: expected 4 components, got " +
                             std::to_string(dec.components.size()));
    }
    masked("quadrature w=wr-wq", component(dec, 9.0), g * (a * sig_p), mask);
    masked("quadrature w=wr+wq", component(dec, 11.0), g * (a * sig_m), mask);
  }

  {  // a bare annihilator against an interacting pair: hole vs doublon lines
    models::HubbardOperators hub = models::hubbard_operators(0.7, 1.1, 2.0);
    OperatorMatrix c1 = ops::build_ladder(hub.space, 0);
    spectral::Spectrum sp = spectral::diagonalize(hub.h0);
    eigenop::BohrDecomposition dec = eigenop::eigen_decompose(c1, sp);
    std::vector<bool> mask(hub.space.dim(), true);
    OperatorMatrix n2 = ops::build_number(hub.space, 1);
    OperatorMatrix h2 = ops::build_hole(hub.space, 1);
    masked("annihilator hole line", component(dec, 0.7), c1 * h2, mask);
    masked("annihilator doublon line", component(dec, 0.7 + 2.0), c1 * n2, mask);
  }

  {  // cubic three-mode drive against its closed-form component list
    PresetModel m = build_preset("three_boson", {});
    spectral::Spectrum sp = spectral::diagonalize(m.h0);
    eigenop::BohrDecomposition dec = eigenop::eigen_decompose(m.v, sp);
    std::vector<bool> mask = ops::interior_mask(m.space, m.interior_margin);
    const auto& expected = m.components_oracle->components;
    if (dec.components.size() != expected.size()) {
      out.require(false, "cubic drive: component count " +
                             std::to_string(dec.components.size()) + " vs " +
                             std::to_string(expected.size()));
    } else {
      for (size_t i = 0; i < expected.size(); ++i) {
        out.require(
            std::abs(dec.components[i].omega - expected[i].omega) < 1e-10,
            "cubic drive: frequency mismatch");
        masked("cubic component " + fmt(expected[i].omega),
               dec.components[i].op, expected[i].op, mask);
      }
    }
  }

  out.require(worst <= 1e-10,
              "component delta " + fmt(worst) + " on " + worst_case + " > 1e-10");
  out.note("worst masked component delta " + fmt(worst));
  return out;
}

// ---------------------------------------------------------------------------
// criterion 5: quartic-drive diagonal coefficients in the falling-factorial basis

Outcome criterion_quartic_coefficients() {
  Outcome out;
  double g = 1e-3, omega = 1.0;
  PresetModel m = build_preset(
      "one_boson_n",
      {{"power", 4.0}, {"g", g}, {"omega", omega}, {"n_max", 12.0}});
  sw::SWResult res = run_engine(m);

  spectral::Spectrum sp = spectral::diagonalize(m.h0);
  eigenop::BohrDecomposition dec = eigenop::eigen_decompose(m.v, sp);
  const eigenop::BohrComponent* v0 = dec.zero_component();
  if (v0 == nullptr) {
    out.require(false, "no zero-frequency component");
    return out;
  }

  // fit c0 + c1 n + c2 n(n-1) + c3 n(n-1)(n-2) through rows n = 0..3
  auto fit = [](const std::vector<double>& r) {
    std::vector<double> c(4);
    c[0] = r[0];
    c[1] = r[1] - c[0];
    c[2] = (r[2] - c[0] - 2 * c[1]) / 2.0;
    c[3] = (r[3] - c[0] - 3 * c[1] - 6 * c[2]) / 6.0;
    return c;
  };

  DenseMat hp = res.h_prime.dense();
  DenseMat v0d = v0->op.dense();
  std::vector<double> first(4), second(4);
  for (int n = 0; n < 4; ++n) {
    first[n] = v0d(n, n).real();
    second[n] = hp(n, n).real() - omega * n - first[n];
  }

  std::vector<double> c1 = fit(first);
  std::vector<double> c2 = fit(second);
  const double expect1[4] = {3.0 * g, 12.0 * g, 6.0 * g, 0.0};
  const double pref = -2.0 * g * g / omega;
  const double expect2[4] = {21.0 * pref, 144.0 * pref, 153.0 * pref,
                             34.0 * pref};

  double worst = 0.0;
  for (int k = 0; k < 4; ++k) {
    if (expect1[k] != 0.0) {
      worst = std::max(worst, std::abs(c1[k] - expect1[k]) / std::abs(expect1[k]));
    } else {
      worst = std::max(worst, std::abs(c1[k]) / g);
    }
    worst = std::max(worst, std::abs(c2[k] - expect2[k]) / std::abs(expect2[k]));
  }
  out.require(worst <= 1e-8, "coefficient rel error " + fmt(worst) + " > 1e-8");
  out.note("first order (3,12,6) and second order (21,144,153,34), worst rel " +
           fmt(worst));
  return out;
}

// ---------------------------------------------------------------------------
// criterion 6: dispersive qubit readout splitting

struct SplittingError {
  double worst_rel = 0.0;  // against the shift, not the bare splitting
  double worst_abs = 0.0;
};

SplittingError jc_splitting_error(double g) {
  double wr = 10.0, wq = 1.0;
  PresetModel m = build_preset("jaynes_cummings", {{"g", g}});
  DenseMat h = (m.h0 + m.v).dense();
  Eigen::SelfAdjointEigenSolver<DenseMat> es(h);

  // dressed eigenvalue adiabatically connected to a product state = the one
  // whose eigenvector has the dominant overlap with it
  auto dressed = [&](int n, int qubit) {
    int idx = m.space.index_of({n, qubit});
    int best = 0;
    double best_w = -1.0;
    for (int k = 0; k < h.rows(); ++k) {
      double w = std::norm(es.eigenvectors()(idx, k));
      if (w > best_w) {
        best_w = w;
        best = k;
      }
    }
    return es.eigenvalues()(best);
  };

  double chi = g * g / (wr - wq);
  SplittingError err;
  for (int n = 0; n <= 3; ++n) {
    double exact = dressed(n, 1) - dressed(n, 0);
    double formula = (wq - chi) - 2.0 * chi * n;
    double shift = std::abs(chi * (1.0 + 2.0 * n));
    err.worst_abs = std::max(err.worst_abs, std::abs(exact - formula));
    err.worst_rel = std::max(err.worst_rel, std::abs(exact - formula) / shift);
  }
  return err;
}

Outcome criterion_readout_splitting() {
  Outcome out;
  SplittingError full = jc_splitting_error(0.02);
  SplittingError half = jc_splitting_error(0.01);

  out.require(full.worst_rel <= 0.01,
              "splitting off by " + fmt(full.worst_rel * 100) + "% of the shift");

  // The exchange model is even in g (only g^2 enters any eigenvalue), so the
  // truncation error is fourth order and halving g divides it by ~16, beating
  // the generic third-order factor of 8. Require at least the generic decay
  // and report the measured one.
  double ratio = full.worst_abs / half.worst_abs;
  out.require(ratio >= 6.5, "error decay " + fmt(ratio) + " < 6.5 per halving");
  out.note("splitting within " + fmt(full.worst_rel * 100) +
           "% of the shift for n<=3; error decay per g halving " + fmt(ratio) +
           " (even-coupling model: ~16 expected, generic would be ~8)");
  return out;
}

// ---------------------------------------------------------------------------
// criterion 7: every specialized assembler against the generic engine

Outcome criterion_assemblers() {
  Outcome out;
  double worst = 0.0;
  std::string worst_name;

  auto check_model = [&](const std::string& name,
                         const dispersive::EffectiveModel& model,
                         const BlockOptions& blocks, int margin) {
    sw::SWResult res = sw::transform(model.h0, model.v, blocks);
    std::vector<bool> mask = ops::interior_mask(model.space, margin);
    double rel = ops::max_abs_diff_masked(model.h_prime, res.h_prime, mask) /
                 std::max(1.0, ops::max_abs(res.h_prime));
    if (rel > worst) {
      worst = rel;
      worst_name = name;
    }
  };

  auto check_preset = [&](const std::string& name) {
    PresetModel m = build_preset(name, {});
    sw::SWResult res = run_engine(m);
    std::vector<bool> mask = ops::interior_mask(m.space, m.interior_margin);
    double rel = ops::max_abs_diff_masked(*m.oracle, res.h_prime, mask) /
                 std::max(1.0, ops::max_abs(res.h_prime));
    if (rel > worst) {
      worst = rel;
      worst_name = name;
    }
  };

  check_preset("dispersive_boson_generic");  // single mode
  check_preset("jaynes_cummings");
  check_preset("rabi");
  check_preset("dispersive_qubit_generic");  // qubit form
  check_preset("giant_atom_chain");
  check_preset("two_chains");
  check_preset("cubic_fb");  // two modes + three fermion sites

  {  // two-mode assembler, distinct frequencies, cross terms dropped
    ProductSpace bath({{FactorKind::Qudit, 3, "b"}});
    DenseMat hm = DenseMat::Zero(3, 3);
    hm(1, 1) = 0.9;
    hm(2, 2) = 2.1;
    dispersive::MultiMode in;
    in.mode_dims = {4, 4};
    in.omega_r = {8.0, 11.5};
    in.h_b = OperatorMatrix::from_dense(bath, hm, true);
    in.b = {cplx(0.012, 0.003) * ops::build_transition(bath, 0, 0, 1) +
                cplx(0.02, 0.0) * ops::build_transition(bath, 0, 1, 2),
            cplx(0.015, 0.0) * ops::build_transition(bath, 0, 0, 1) +
                cplx(0.0, 0.011) * ops::build_transition(bath, 0, 1, 2)};
    in.keep_cross = {{true, false}, {false, true}};
    check_model("multi_mode detuned", dispersive::multi_mode(in),
                BlockOptions::subsystem({0, 1}), 1);

    in.omega_r = {8.0, 8.0};  // degenerate modes: cross terms stay
    in.keep_cross.clear();
    check_model("multi_mode degenerate", dispersive::multi_mode(in),
                BlockOptions::subsystem({0, 1}), 1);
  }

  out.require(worst <= 1e-9,
              "assembler " + worst_name + " off by " + fmt(worst) + " > 1e-9");
  out.note("worst assembler-vs-engine rel delta " + fmt(worst) + " (" +
           worst_name + ")");
  return out;
}

// ---------------------------------------------------------------------------
// criterion 8: the 64-dimensional impurity model, closed form vs engine

Outcome criterion_impurity() {
  Outcome out;
  auto start = std::chrono::steady_clock::now();

  PresetModel m = build_preset("anderson", {});
  out.require(m.space.dim() == 64, "space dimension is not 64");
  sw::SWResult res = run_engine(m);
  double rel = ops::max_abs_diff(*m.oracle, res.h_prime) /
               std::max(1.0, ops::max_abs(res.h_prime));

  double seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  out.require(rel <= 1e-9, "engine vs closed form " + fmt(rel) + " > 1e-9");
  out.require(seconds < 30.0, "took " + fmt(seconds) + " s (budget 30 s)");
  out.note("rel delta " + fmt(rel) + " in " + fmt(seconds) + " s");
  return out;
}

// ---------------------------------------------------------------------------
// criterion 9: strong-coupling exchange gap of the two-site Hubbard model

double hubbard_sw_gap(double t, double u) {
  PresetModel m = build_preset("hubbard_tU", {{"t", t}, {"u", u}});
  sw::SWResult res = run_engine(m, 3);
  std::vector<bool> keep(m.space.dim(), false);
  int kept = 0;
  for (int idx = 0; idx < m.space.dim(); ++idx) {
    int s1 = m.space.occupation(idx, 0) + m.space.occupation(idx, 1);
    int s2 = m.space.occupation(idx, 2) + m.space.occupation(idx, 3);
    if (s1 == 1 && s2 == 1) keep[idx] = kept++, keep[idx] = true;
  }
  ProductSpace target({{FactorKind::Qudit, 4, "half"}});
  OperatorMatrix sub = ops::restrict_to_states(res.h_prime, keep, target);
  Eigen::VectorXd evals = testsup::eigenvalues(sub.dense());
  return evals(1) - evals(0);
}

Outcome criterion_hubbard_gap() {
  Outcome out;
  double u = 1.0;
  std::vector<double> errors;
  for (double t : {0.05, 0.025}) {
    double sw_gap = hubbard_sw_gap(t, u);
    double exact_gap = (std::sqrt(u * u + 16.0 * t * t) - u) / 2.0;
    double formula = 4.0 * t * t / u;
    double rel = std::abs(sw_gap - formula) / formula;
    double bound = 25.0 * (t / u) * (t / u);
    out.require(rel <= bound, "gap at t=" + fmt(t) + " off formula by " +
                                  fmt(rel) + " > " + fmt(bound));
    errors.push_back(std::abs(sw_gap - exact_gap));
  }
  double ratio = errors[0] / errors[1];
  out.require(ratio >= 12.0 && ratio <= 20.0,
              "error ratio " + fmt(ratio) + " outside 16 +- 4");
  out.note("gap tracks 4t^2/U; error vs exact falls x" + fmt(ratio) +
           " when t halves");
  return out;
}

// ---------------------------------------------------------------------------
// criterion 10: band splitting of the four-component free particle

Outcome criterion_band_split() {
  Outcome out;
  double mass = 1.0, e_charge = 1.0, phi = 0.3;
  double px = 0.1, py = 0.0, pz = 0.0;
  double p2 = px * px + py * py + pz * pz;

  PresetModel m = build_preset("dirac_fixed_p", {});
  sw::SWResult res = run_engine(m);

  // the +mass block consists of the first two product states
  std::vector<bool> keep = {true, true, false, false};
  ProductSpace target({{FactorKind::Qudit, 2, "upper"}});
  OperatorMatrix upper = ops::restrict_to_states(res.h_prime, keep, target);
  Eigen::VectorXd evals = testsup::eigenvalues(upper.dense());

  double parabolic = mass + p2 / (2.0 * mass) - e_charge * phi;
  double exact = std::sqrt(mass * mass + p2) - e_charge * phi;
  double budget = 1.5 * p2 * p2 / (8.0 * mass * mass * mass);

  double worst = 0.0;
  for (int i = 0; i < 2; ++i) {
    worst = std::max(worst, std::abs(evals(i) - parabolic));
    // the quadratic approximation overshoots the exact relativistic value
    out.require(evals(i) >= exact - 1e-12,
                "band eigenvalue fell below the exact value");
  }
  out.require(worst <= budget,
              "band deviation " + fmt(worst) + " > " + fmt(budget));
  out.note("upper band at " + fmt(evals(0)) + " vs exact " + fmt(exact) +
           "; |dE| " + fmt(std::abs(evals(0) - exact)) + " <= " + fmt(budget));
  return out;
}

// ---------------------------------------------------------------------------
// criterion 11: unitarity and the residual / spectral decay laws

Outcome criterion_scaling_laws() {
  Outcome out;

  struct Case {
    std::string name;
    ParamMap base;
    // Which generic decay bands this model pins. A law degenerates to a
    // faster even-order one whenever the relevant quantity is an even
    // function of the couplings being halved:
    //  - band_res: the exact-rotation off-block residual has a genuine
    //    second-order piece (ratio ~4); models whose second-order off-block
    //    commutators cancel (exchange-only couplings, single fermion
    //    species, relativistic blocks, half-filling) decay ~8 instead.
    //  - band_o2: the order-2 block-spectrum error has a genuine third-order
    //    piece (ratio ~8); models with coupling-parity-even spectra skip the
    //    odd orders and decay ~16.
    //  - band_o3: the order-3 error has a genuine fourth-order piece
    //    (ratio ~16).
    bool band_res;
    bool band_o2;
    bool band_o3;
  };
  const std::vector<Case> cases = {
      // the three-level model's block spectrum is even in its cross-block
      // coupling, so it decays ~16 already at order 2
      {"qutrit", {}, true, false, true},
      {"one_boson_n", {{"power", 2.0}, {"g", 5e-3}, {"n_max", 10.0}}, true, true, true},
      {"one_boson_n", {{"power", 4.0}, {"g", 2e-4}, {"n_max", 8.0}}, true, true, true},
      {"two_boson", {{"degenerate", 1.0}, {"omega_b", 5.0}}, true, true, true},
      {"two_boson", {}, true, false, false},
      {"three_boson", {}, true, false, false},
      {"anderson", {}, true, false, false},
      {"dispersive_boson_generic", {}, true, false, false},
      {"jaynes_cummings", {}, false, false, false},
      {"rabi", {}, true, false, false},
      {"dispersive_qubit_generic", {}, false, false, false},
      {"giant_atom_chain", {}, false, false, false},
      {"two_chains", {}, false, false, false},
      {"cubic_fb", {}, true, false, false},
      {"dirac_fixed_p", {}, false, false, false},
      {"hubbard_tU", {}, false, false, false},
  };

  double worst_unitarity = 0.0;
  double band_lo_res = 1e300, band_hi_res = 0.0;
  double band_lo_2 = 1e300, band_hi_2 = 0.0;
  double band_lo_3 = 1e300, band_hi_3 = 0.0;

  for (const auto& c : cases) {
    PresetModel full = scaled_preset(c.name, c.base, 1.0);
    PresetModel half = scaled_preset(c.name, c.base, 0.5);
    PresetModel quarter = scaled_preset(c.name, c.base, 0.25);

    // 11a: exact rotation by the generator preserves the spectrum
    double defect = unitarity_defect(full);
    worst_unitarity = std::max(worst_unitarity, defect);
    out.require(defect <= 1e-10,
                c.name + ": rotation spectrum defect " + fmt(defect));

    // 11b: off-block residual of the exact rotation, ~x4 per halving
    double res_ratio =
        offblock_residual(half) / offblock_residual(quarter);
    out.require(res_ratio >= 3.4, c.name + ": residual decay " +
                                      fmt(res_ratio) + " < 3.4 per halving");

    // 11c/11d: block-spectrum error decay at orders 2 and 3
    double r2 =
        spectral_error(half, 2) / spectral_error(quarter, 2);
    double r3 =
        spectral_error(half, 3) / spectral_error(quarter, 3);
    out.require(r2 >= 6.5,
                c.name + ": order-2 decay " + fmt(r2) + " < 6.5 per halving");
    out.require(r3 >= 12.0,
                c.name + ": order-3 decay " + fmt(r3) + " < 12 per halving");

    // generic models must sit inside the stated bands, not just above them
    if (c.band_res) {
      out.require(res_ratio <= 4.6, c.name + ": residual decay " +
                                        fmt(res_ratio) + " outside 4 +- 0.6");
      band_lo_res = std::min(band_lo_res, res_ratio);
      band_hi_res = std::max(band_hi_res, res_ratio);
    }
    if (c.band_o2) {
      out.require(r2 <= 9.5,
                  c.name + ": order-2 decay " + fmt(r2) + " outside 8 +- 1.5");
      band_lo_2 = std::min(band_lo_2, r2);
      band_hi_2 = std::max(band_hi_2, r2);
    }
    if (c.band_o3) {
      out.require(r3 <= 20.0,
                  c.name + ": order-3 decay " + fmt(r3) + " outside 16 +- 4");
      band_lo_3 = std::min(band_lo_3, r3);
      band_hi_3 = std::max(band_hi_3, r3);
    }
  }

  out.note("rotation defect <= " + fmt(worst_unitarity) +
           "; generic bands: residual x[" + fmt(band_lo_res) + "," +
           fmt(band_hi_res) + "], order-2 x[" + fmt(band_lo_2) + "," +
           fmt(band_hi_2) + "], order-3 x[" + fmt(band_lo_3) + "," +
           fmt(band_hi_3) + "]; coupling-parity-even models decay faster");
  return out;
}

// ---------------------------------------------------------------------------
// criterion 12: the command-line tool is byte-deterministic

Outcome criterion_cli_determinism() {
  Outcome out;
  const std::vector<std::string> specs = {
      "qutrit",          "three_boson",
      "one_boson_n",     "two_boson",
      "anderson",        "dispersive_boson_generic",
      "jaynes_cummings", "rabi",
      "dispersive_qubit_generic", "giant_atom_chain",
      "two_chains",      "cubic_fb",
      "dirac_fixed_p",   "hubbard_tU",
  };
  int checked = 0;
  for (const auto& name : specs) {
    std::string path = std::string(SWLAB_PRESET_DIR) + "/" + name + ".json";
    CliResult a = run_cli("compare " + path);
    CliResult b = run_cli("compare " + path);
    out.require(a.code == 0, name + ": exit code " + std::to_string(a.code));
    out.require(a.out == b.out, name + ": reports differ between runs");
    if (a.code == 0 && a.out == b.out) ++checked;
  }

  std::string sweep =
      std::string(SWLAB_PRESET_DIR) + "/jaynes_cummings_sweep.json";
  CliResult a = run_cli("sweep " + sweep + " --csv tmp_acc_sweep.csv");
  std::string csv_a = [] {
    FILE* f = fopen("tmp_acc_sweep.csv", "rb");
    std::string s;
    if (f) {
      char buf[4096];
      size_t got;
      while ((got = fread(buf, 1, sizeof(buf), f)) > 0) s.append(buf, got);
      fclose(f);
    }
    return s;
  }();
  CliResult b = run_cli("sweep " + sweep + " --csv tmp_acc_sweep.csv");
  std::string csv_b = [] {
    FILE* f = fopen("tmp_acc_sweep.csv", "rb");
    std::string s;
    if (f) {
      char buf[4096];
      size_t got;
      while ((got = fread(buf, 1, sizeof(buf), f)) > 0) s.append(buf, got);
      fclose(f);
    }
    return s;
  }();
  std::remove("tmp_acc_sweep.csv");
  out.require(a.code == 0, "sweep exit code " + std::to_string(a.code));
  out.require(a.out == b.out && csv_a == csv_b,
              "sweep output differs between runs");
  if (a.code == 0) ++checked;

  out.note(std::to_string(checked) + "/15 shipped specs byte-identical across runs");
  return out;
}

}  // namespace

int main() {
  struct Entry {
    int id;
    std::string name;
    std::function<Outcome()> run;
  };
  const std::vector<Entry> entries = {
      {1, "three-level block dressing is exact", criterion_qutrit},
      {2, "textbook reductions on random spectra", criterion_textbook},
      {3, "eigenoperator route == matrix-element route", criterion_path_equivalence},
      {4, "closed-form Bohr components of standard drives", criterion_components},
      {5, "quartic-drive diagonal coefficients", criterion_quartic_coefficients},
      {6, "dispersive readout splitting", criterion_readout_splitting},
      {7, "specialized assemblers vs generic engine", criterion_assemblers},
      {8, "64-dim impurity model closed form", criterion_impurity},
      {9, "two-site Hubbard exchange gap", criterion_hubbard_gap},
      {10, "free-particle band splitting", criterion_band_split},
      {11, "unitarity and decay laws", criterion_scaling_laws},
      {12, "CLI determinism on shipped specs", criterion_cli_determinism},
  };

  int failures = 0;
  for (const auto& entry : entries) {
    Outcome out;
    try {
      out = entry.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    if (!out.pass) ++failures;
    std::printf("[%2d] %s  %s%s%s\n", entry.id, out.pass ? "PASS" : "FAIL",
                entry.name.c_str(), out.detail.empty() ? "" : " -- ",
                out.detail.c_str());
    std::fflush(stdout);
  }
  if (failures > 0) {
    std::printf("%d of %zu acceptance criteria failed\n", failures,
                entries.size());
    return 1;
  }
  std::printf("all %zu acceptance criteria passed\n", entries.size());
  return 0;
}
