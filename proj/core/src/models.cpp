#include "swlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <utility>

#include "swlab/common.hpp"
#include "swlab/dispersive.hpp"

namespace swlab::models {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw SpecError(msg); }

FactorSpec boson(int n_max, std::string label) {
  return {FactorKind::Boson, n_max + 1, std::move(label)};
}
FactorSpec qudit(int levels, std::string label) {
  return {FactorKind::Qudit, levels, std::move(label)};
}
FactorSpec fermion(std::string label) {
  return {FactorKind::Fermion, 2, std::move(label)};
}

int int_param(const ParamMap& p, const std::string& name, int lo, int hi) {
  const double x = p.at(name);
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9) fail(name + " must be an integer");
  const int v = static_cast<int>(r);
  if (v < lo || v > hi) {
    std::ostringstream os;
    os << name << " = " << v << " outside [" << lo << ", " << hi << "]";
    fail(os.str());
  }
  return v;
}

bool flag_param(const ParamMap& p, const std::string& name) {
  return int_param(p, name, 0, 1) == 1;
}

void require_nonzero(double x, const std::string& what) {
  if (x == 0.0) fail(what + " must be nonzero");
}

void warn_ratio(PresetModel& m, double coupling, double gap,
                const std::string& what) {
  if (std::abs(coupling) * 10.0 >= std::abs(gap)) {
    std::ostringstream os;
    os << what << ": coupling " << coupling << " is not small against gap "
       << gap << "; second-order accuracy degrades";
    m.warnings.push_back(os.str());
  }
}

// Merge a raw (frequency, operator) list into a decomposition: drop zero
// operators, sort ascending, and fuse entries whose frequencies coincide
// (commensurate parameter choices make distinct terms land on one line).
struct RawComponent {
  double omega;
  OperatorMatrix op;
};

eigenop::BohrDecomposition merge_components(std::vector<RawComponent> raw) {
  std::vector<RawComponent> kept;
  for (auto& rc : raw) {
    if (ops::max_abs(rc.op) > 0.0) kept.push_back(std::move(rc));
  }
  std::sort(kept.begin(), kept.end(),
            [](const RawComponent& a, const RawComponent& b) {
              return a.omega < b.omega;
            });
  double scale = 1.0;
  for (const auto& rc : kept) scale = std::max(scale, std::abs(rc.omega));
  const double tol = 1e-12 * scale;

  eigenop::BohrDecomposition out;
  out.bin_tol = tol;
  std::size_t i = 0;
  while (i < kept.size()) {
    OperatorMatrix sum = kept[i].op;
    std::size_t j = i + 1;
    while (j < kept.size() && kept[j].omega - kept[j - 1].omega <= tol) {
      sum = sum + kept[j].op;
      ++j;
    }
    double omega = kept[i].omega;
    if (std::abs(omega) <= tol) omega = 0.0;
    const double weight = sum.entries().squaredNorm();
    if (weight > 0.0) {
      out.components.push_back({omega, std::move(sum), weight});
    }
    i = j;
  }
  return out;
}

// Pauli operators on a two-level qudit factor; index 0 is the ground state.
struct PauliSet {
  OperatorMatrix sp, sm, sx, sz, pe, pg;
};

PauliSet paulis(const ProductSpace& space, int f) {
  PauliSet s;
  s.sp = ops::build_transition(space, f, 1, 0);
  s.sm = ops::build_transition(space, f, 0, 1);
  s.pe = ops::build_transition(space, f, 1, 1);
  s.pg = ops::build_transition(space, f, 0, 0);
  s.sx = s.sp + s.sm;
  s.sz = s.pe - s.pg;
  return s;
}

// ---- qutrit ----------------------------------------------------------------

PresetModel qutrit(const ParamMap& p) {
  const double e0 = p.at("e0"), e1 = p.at("e1"), e2 = p.at("e2");
  const cplx v01(p.at("v01_re"), p.at("v01_im"));
  const cplx v12(p.at("v12_re"), p.at("v12_im"));
  const double w21 = e2 - e1;
  require_nonzero(w21, "qutrit: e2 - e1 (splits the {0,1} block from level 2)");

  ProductSpace space({qudit(3, "qutrit")});
  DenseMat h0 = DenseMat::Zero(3, 3);
  h0(0, 0) = e0;
  h0(1, 1) = e1;
  h0(2, 2) = e2;
  DenseMat v = DenseMat::Zero(3, 3);
  v(0, 1) = v01;
  v(1, 0) = std::conj(v01);
  v(1, 2) = v12;
  v(2, 1) = std::conj(v12);

  // Levels 0,1 stay one block, so v01 survives untouched; v12 pushes the
  // levels 1 and 2 apart by |v12|^2 / w21.
  DenseMat o = h0;
  o(0, 1) = v01;
  o(1, 0) = std::conj(v01);
  const double shift = std::norm(v12) / w21;
  o(1, 1) -= shift;
  o(2, 2) += shift;

  PresetModel m;
  m.space = space;
  m.h0 = OperatorMatrix::from_dense(space, h0, true);
  m.v = OperatorMatrix::from_dense(space, v, true);
  m.oracle = OperatorMatrix::from_dense(space, o, true);
  m.blocks = spectral::BlockOptions::explicit_lists({{0, 1}, {2}});
  m.interior_margin = 0;
  warn_ratio(m, std::abs(v12), w21, "qutrit");
  return m;
}

// ---- single bosonic mode ----------------------------------------------------

PresetModel one_boson_n(const ParamMap& p) {
  const double w = p.at("omega"), g = p.at("g");
  require_nonzero(w, "one_boson_n: omega");
  const int power = int_param(p, "power", 1, 4);
  if (power == 3) fail("one_boson_n: power must be 1, 2 or 4");
  const int n_max = int_param(p, "n_max", power, 4096);

  ProductSpace space({boson(n_max, "a")});
  auto a = ops::build_ladder(space, 0);
  auto x = a + ops::adjoint(a);
  OperatorMatrix v = x;
  for (int k = 1; k < power; ++k) v = v * x;
  v = g * v;
  v.set_hermitian_hint(true);

  // Closed-form diagonal: exact for the linear drive, second order otherwise.
  DenseMat o = DenseMat::Zero(n_max + 1, n_max + 1);
  for (int n = 0; n <= n_max; ++n) {
    const double nn = n;
    double d = w * nn;
    if (power == 1) {
      d += -g * g / w;
    } else if (power == 2) {
      d += 2.0 * (g - g * g / w) * nn + g - g * g / w;
    } else {
      const double k2 = nn * (nn - 1.0);
      const double k3 = k2 * (nn - 2.0);
      d += g * (3.0 + 12.0 * nn + 6.0 * k2);
      d -= (2.0 * g * g / w) * (21.0 + 144.0 * nn + 153.0 * k2 + 34.0 * k3);
    }
    o(n, n) = d;
  }

  PresetModel m;
  m.space = space;
  m.h0 = w * ops::build_number(space, 0);
  m.h0.set_hermitian_hint(true);
  m.v = v;
  m.oracle = OperatorMatrix::from_dense(space, o, true);
  m.blocks = spectral::BlockOptions::degeneracy();
  m.interior_margin = power;
  warn_ratio(m, g, w, "one_boson_n");
  return m;
}

// ---- two bosonic modes ------------------------------------------------------

PresetModel two_boson(const ParamMap& p) {
  const double wa = p.at("omega_a"), wb = p.at("omega_b"), g = p.at("g");
  const int n_a = int_param(p, "n_a", 2, 4096);
  const int n_b = int_param(p, "n_b", 2, 4096);
  const bool degenerate = flag_param(p, "degenerate");
  require_nonzero(wa + wb, "two_boson: omega_a + omega_b");

  ProductSpace space({boson(n_a, "a"), boson(n_b, "b")});
  auto a = ops::build_ladder(space, 0);
  auto b = ops::build_ladder(space, 1);
  auto num_a = ops::build_number(space, 0);
  auto num_b = ops::build_number(space, 1);
  auto id = OperatorMatrix::identity(space);

  PresetModel m;
  m.space = space;
  m.h0 = wa * num_a + wb * num_b;
  m.h0.set_hermitian_hint(true);
  m.v = g * ((a + ops::adjoint(a)) * (b + ops::adjoint(b)));
  m.v.set_hermitian_hint(true);
  m.interior_margin = 1;

  const double s = g * g / (wa + wb);
  if (degenerate) {
    if (wa != wb) {
      fail("two_boson: degenerate=1 requires omega_a == omega_b");
    }
    // Equal-occupation blocks keep the beam-splitter term; only the
    // two-mode-squeezing transition is rotated away.
    m.oracle = m.h0 + g * (ops::adjoint(a) * b + a * ops::adjoint(b)) -
               s * (num_a + num_b + id);
    m.blocks = spectral::BlockOptions::degeneracy();
  } else {
    const double d = wa - wb;
    require_nonzero(d, "two_boson: omega_a - omega_b (set degenerate=1 instead)");
    m.oracle = m.h0 - (g * g / d) * (num_b - num_a) - s * (num_a + num_b + id) -
               (g * g * wa / (d * (wa + wb))) *
                   (b * b + ops::adjoint(b) * ops::adjoint(b));
    m.blocks = spectral::BlockOptions::subsystem({0});
    warn_ratio(m, g, d, "two_boson");
  }
  m.oracle->set_hermitian_hint(true);
  return m;
}

// ---- three bosonic modes: decomposition reference ---------------------------

PresetModel three_boson(const ParamMap& p) {
  const double wa = p.at("omega_a"), wb = p.at("omega_b"), wc = p.at("omega_c");
  const double big = p.at("Omega"), g = p.at("g");
  const int n_a = int_param(p, "n_a", 2, 4096);
  const int n_b = int_param(p, "n_b", 1, 4096);
  const int n_c = int_param(p, "n_c", 2, 4096);

  ProductSpace space({boson(n_a, "a"), boson(n_b, "b"), boson(n_c, "c")});
  auto a = ops::build_ladder(space, 0);
  auto b = ops::build_ladder(space, 1);
  auto c = ops::build_ladder(space, 2);
  auto id = OperatorMatrix::identity(space);
  auto xa = a + ops::adjoint(a);
  auto xb = b + ops::adjoint(b);
  auto xc = c + ops::adjoint(c);

  PresetModel m;
  m.space = space;
  m.h0 = wa * ops::build_number(space, 0) + wb * ops::build_number(space, 1) +
         wc * ops::build_number(space, 2);
  m.h0.set_hermitian_hint(true);
  m.v = (-0.5 * g) * ((xa * xa - (big * big) * (xc * xc)) * xb);
  m.v.set_hermitian_hint(true);

  auto ad = ops::adjoint(a);
  auto cd = ops::adjoint(c);
  std::vector<RawComponent> raw;
  auto add_pair = [&raw](double omega, OperatorMatrix op) {
    raw.push_back({-omega, ops::adjoint(op)});
    raw.push_back({omega, std::move(op)});
  };
  add_pair(wb - 2.0 * wa, (-0.5 * g) * (ad * ad * b));
  add_pair(wb - 2.0 * wc, (0.5 * g * big * big) * (cd * cd * b));
  add_pair(wb + 2.0 * wa, (-0.5 * g) * (a * a * b));
  add_pair(wb + 2.0 * wc, (0.5 * g * big * big) * (c * c * b));
  auto occ = (2.0 * ops::build_number(space, 0) + id) -
             (big * big) * (2.0 * ops::build_number(space, 2) + id);
  add_pair(wb, (-0.5 * g) * (occ * b));
  m.components_oracle = merge_components(std::move(raw));

  m.blocks = spectral::BlockOptions::degeneracy();
  m.interior_margin = 2;
  return m;
}

// ---- Jaynes-Cummings and Rabi ------------------------------------------------

PresetModel qubit_in_cavity(const ParamMap& p, bool counter_rotating) {
  const double wr = p.at("omega_r"), wq = p.at("omega_q"), g = p.at("g");
  const int n_max = int_param(p, "n_max", 1, 4096);

  ProductSpace bath({qudit(2, "qubit")});
  DenseMat hb = DenseMat::Zero(2, 2);
  hb(0, 0) = -0.5 * wq;
  hb(1, 1) = 0.5 * wq;
  DenseMat bm = DenseMat::Zero(2, 2);
  bm(0, 1) = g;               // sigma_minus coupling
  if (counter_rotating) bm(1, 0) = g;  // full sigma_x coupling

  dispersive::SingleMode in;
  in.mode_dim = n_max + 1;
  in.omega_r = wr;
  in.h_b = OperatorMatrix::from_dense(bath, hb, true);
  in.b = OperatorMatrix::from_dense(bath, bm, !counter_rotating ? std::optional<bool>(false)
                                                                : std::optional<bool>(true));
  auto model = dispersive::single_mode(in);

  PresetModel m;
  m.space = model.space;
  m.h0 = model.h0;
  m.v = model.v;
  m.blocks = spectral::BlockOptions::subsystem({0});
  m.interior_margin = 1;

  auto num = ops::build_number(m.space, 0);
  auto qb = paulis(m.space, 1);
  auto id = OperatorMatrix::identity(m.space);
  if (!counter_rotating) {
    const double chi = g * g / (wr - wq);
    m.oracle = wr * num - chi * (num * qb.sz) + (0.5 * (wq - chi)) * qb.sz -
               (0.5 * chi) * id;
  } else {
    // Both rotating and counter-rotating shifts; the constant is the
    // vacuum contribution of the counter-rotating channel.
    const double chi = g * g / (wr - wq) - g * g / (wr + wq);
    m.oracle = wr * num - chi * (num * qb.sz) + (0.5 * (wq - chi)) * qb.sz -
               (g * g * wr / ((wr - wq) * (wr + wq))) * id;
  }
  m.oracle->set_hermitian_hint(true);
  warn_ratio(m, g, wr - wq, counter_rotating ? "rabi" : "jaynes_cummings");
  return m;
}

// ---- generic dispersive mode against a qudit ladder --------------------------

PresetModel dispersive_boson_generic(const ParamMap& p) {
  const double wr = p.at("omega_r");
  const int d = int_param(p, "d_levels", 2, 6);
  const int n_max = int_param(p, "n_max", 1, 4096);
  std::vector<double> e(d);
  std::vector<double> bc(d - 1);
  for (int j = 0; j < d; ++j) e[j] = p.at("e" + std::to_string(j));
  for (int j = 0; j + 1 < d; ++j) bc[j] = p.at("b" + std::to_string(j));

  ProductSpace bath({qudit(d, "ladder")});
  DenseMat hb = DenseMat::Zero(d, d);
  DenseMat bm = DenseMat::Zero(d, d);
  for (int j = 0; j < d; ++j) hb(j, j) = e[j];
  for (int j = 0; j + 1 < d; ++j) bm(j, j + 1) = bc[j];

  dispersive::SingleMode in;
  in.mode_dim = n_max + 1;
  in.omega_r = wr;
  in.h_b = OperatorMatrix::from_dense(bath, hb, true);
  in.b = OperatorMatrix::from_dense(bath, bm, false);
  auto model = dispersive::single_mode(in);

  PresetModel m;
  m.space = model.space;
  m.h0 = model.h0;
  m.v = model.v;
  m.blocks = spectral::BlockOptions::subsystem({0});
  m.interior_margin = 1;

  // Per-step shifts chi_j = |b_j|^2 / (omega_r - (e_{j+1} - e_j)): the mode
  // frequency picks up chi_j (P_{j+1} - P_j) and the ladder level j+1 drops
  // by chi_j.
  auto num = ops::build_number(m.space, 0);
  OperatorMatrix mode_shift(m.space);
  OperatorMatrix ladder_shift(m.space);
  for (int j = 0; j + 1 < d; ++j) {
    const double denom = wr - (e[j + 1] - e[j]);
    require_nonzero(denom, "dispersive_boson_generic: omega_r - transition " +
                               std::to_string(j));
    const double chi = bc[j] * bc[j] / denom;
    auto pj = ops::build_transition(m.space, 1, j, j);
    auto pj1 = ops::build_transition(m.space, 1, j + 1, j + 1);
    mode_shift = mode_shift + chi * (pj1 - pj);
    ladder_shift = ladder_shift + chi * pj1;
    warn_ratio(m, bc[j], denom, "dispersive_boson_generic");
  }
  OperatorMatrix bath_levels(m.space);
  for (int j = 0; j < d; ++j) {
    bath_levels = bath_levels + e[j] * ops::build_transition(m.space, 1, j, j);
  }
  m.oracle = wr * num - num * mode_shift + bath_levels - ladder_shift;
  m.oracle->set_hermitian_hint(true);
  return m;
}

// ---- qubit dispersively coupled to a structured bath -------------------------

PresetModel dispersive_qubit_generic(const ParamMap& p) {
  const double wr = p.at("omega_r");
  const double eb[4] = {p.at("eb0"), p.at("eb1"), p.at("eb2"), p.at("eb3")};

  ProductSpace bath({qudit(4, "bath")});
  DenseMat hb = DenseMat::Zero(4, 4);
  for (int j = 0; j < 4; ++j) hb(j, j) = eb[j];
  DenseMat bm = DenseMat::Zero(4, 4);
  bm(0, 1) = p.at("b01");
  bm(1, 2) = p.at("b12");
  bm(2, 3) = p.at("b23");
  bm(0, 2) = p.at("b02");

  dispersive::QubitSystem in;
  in.omega_r = wr;
  in.h_b = OperatorMatrix::from_dense(bath, hb, true);
  in.b = OperatorMatrix::from_dense(bath, bm, false);
  auto model = dispersive::qubit(in);

  PresetModel m;
  m.space = model.space;
  m.h0 = model.h0;
  m.v = model.v;
  m.oracle = model.h_prime;
  m.blocks = spectral::BlockOptions::subsystem({0});
  m.interior_margin = 0;  // finite qudit bath: the closed form is exact
  return m;
}

// ---- giant atom on a mode chain ----------------------------------------------

PresetModel giant_atom_chain(const ParamMap& p) {
  const double wr = p.at("omega_r");
  const bool bosonic = flag_param(p, "bosonic");
  const int n_sites = int_param(p, "n_sites", 2, 6);
  const int local_dim = int_param(p, "local_dim", 2, 16);

  dispersive::GiantAtom in;
  in.omega_r = wr;
  in.chain_kind = bosonic ? FactorKind::Boson : FactorKind::Fermion;
  in.chain_local_dim = local_dim;
  for (int k = 0; k < n_sites; ++k) {
    in.eps.push_back(p.at("eps" + std::to_string(k)));
    in.g.push_back(cplx(p.at("g" + std::to_string(k)), 0.0));
  }
  auto model = dispersive::giant_atom(in);

  PresetModel m;
  m.space = model.space;
  m.h0 = model.h0;
  m.v = model.v;
  m.oracle = model.h_prime;
  m.blocks = spectral::BlockOptions::subsystem({0});
  m.interior_margin = bosonic ? 1 : 0;
  for (int k = 0; k < n_sites; ++k) {
    warn_ratio(m, std::abs(in.g[k]), wr - in.eps[k], "giant_atom_chain");
  }
  return m;
}

// ---- two coupled chains -------------------------------------------------------

PresetModel two_chains(const ParamMap& p) {
  const int n_a = int_param(p, "n_a", 1, 3);
  const int n_b = int_param(p, "n_b", 1, 3);

  dispersive::TwoChains in;
  in.kind_a = flag_param(p, "kind_a") ? FactorKind::Boson : FactorKind::Fermion;
  in.kind_b = flag_param(p, "kind_b") ? FactorKind::Boson : FactorKind::Fermion;
  in.local_dim_a = int_param(p, "local_dim_a", 2, 16);
  in.local_dim_b = int_param(p, "local_dim_b", 2, 16);
  for (int i = 0; i < n_a; ++i) in.e_a.push_back(p.at("ea" + std::to_string(i)));
  for (int k = 0; k < n_b; ++k) in.e_b.push_back(p.at("eb" + std::to_string(k)));
  in.v = DenseMat::Zero(n_a, n_b);
  for (int i = 0; i < n_a; ++i) {
    for (int k = 0; k < n_b; ++k) {
      in.v(i, k) = p.at("v" + std::to_string(i) + std::to_string(k));
    }
  }
  auto model = dispersive::two_chains(in);

  PresetModel m;
  m.space = model.space;
  m.h0 = model.h0;
  m.v = model.v;
  m.oracle = model.h_prime;
  m.blocks = spectral::BlockOptions::gap_threshold(p.at("block_delta"));
  m.interior_margin =
      (in.kind_a == FactorKind::Boson || in.kind_b == FactorKind::Boson) ? 1 : 0;
  for (int i = 0; i < n_a; ++i) {
    for (int k = 0; k < n_b; ++k) {
      if (std::abs(in.v(i, k)) > 0.0) {
        warn_ratio(m, std::abs(in.v(i, k)), in.e_a[i] - in.e_b[k], "two_chains");
      }
    }
  }
  return m;
}

// ---- two modes cubically coupled to a fermion bath ----------------------------

PresetModel cubic_fb(const ParamMap& p) {
  const int mode_dim = int_param(p, "mode_dim", 2, 64);

  DenseMat h = DenseMat::Zero(3, 3);
  h(0, 0) = p.at("eps0");
  h(1, 1) = p.at("eps1");
  h(2, 2) = p.at("eps2");
  h(0, 1) = h(1, 0) = p.at("t");
  h(1, 2) = h(2, 1) = p.at("t");

  const double g1 = p.at("g1"), g2 = p.at("g2");
  DenseMat m1 = DenseMat::Zero(3, 3);
  m1(0, 1) = m1(1, 0) = g1;
  m1(1, 2) = m1(2, 1) = g1;
  DenseMat m2 = DenseMat::Zero(3, 3);  // deliberately non-Hermitian
  m2(0, 1) = g2;
  m2(1, 2) = g2;
  m2(0, 2) = 0.5 * g2;

  dispersive::CubicModel cm;
  cm.omega_r = {p.at("omega_r1"), p.at("omega_r2")};
  cm.m = {m1, m2};
  cm.h = h;
  cm.mode_dim = mode_dim;
  // keep mode-mode cross terms only when the block threshold would group the
  // two mode ladders anyway; otherwise they are off-block and the engine
  // drops them
  const double delta = p.at("block_delta");
  cm.keep_cross = {{true, false}, {false, true}};
  if (std::abs(cm.omega_r[0] - cm.omega_r[1]) <= delta) {
    cm.keep_cross = {{true, true}, {true, true}};
  }
  auto model = dispersive::cubic_composite(cm);

  PresetModel m;
  m.space = model.space;
  m.h0 = model.h0;
  m.v = model.v;
  m.oracle = model.h_prime;
  m.blocks = spectral::BlockOptions::gap_threshold(p.at("block_delta"));
  m.interior_margin = 1;
  return m;
}

// ---- conduction band with a correlated impurity -------------------------------

PresetModel anderson(const ParamMap& p) {
  const double ed = p.at("eps_d"), u = p.at("u");
  const double ek[2] = {p.at("eps_k1"), p.at("eps_k2")};
  const double vk[2] = {p.at("v1"), p.at("v2")};

  // Factor order: (k1 up, k1 dn, k2 up, k2 dn, d up, d dn).
  ProductSpace space({fermion("k1u"), fermion("k1d"), fermion("k2u"),
                      fermion("k2d"), fermion("du"), fermion("dd")});
  auto cf = [&](int f) { return ops::build_ladder(space, f); };
  auto nf = [&](int f) { return ops::build_number(space, f); };
  const int d_up = 4, d_dn = 5;

  PresetModel m;
  m.space = space;
  m.h0 = ek[0] * (nf(0) + nf(1)) + ek[1] * (nf(2) + nf(3)) +
         ed * (nf(d_up) + nf(d_dn)) + u * (nf(d_up) * nf(d_dn));
  m.h0.set_hermitian_hint(true);

  OperatorMatrix v(space);
  for (int k = 0; k < 2; ++k) {
    for (int s = 0; s < 2; ++s) {
      auto hop = ops::adjoint(cf(2 * k + s)) * cf(4 + s);
      v = v + vk[k] * (hop + ops::adjoint(hop));
    }
  }
  v.set_hermitian_hint(true);
  m.v = v;

  double w[2][2], wu[2][2], j[2][2];
  for (int k = 0; k < 2; ++k) {
    require_nonzero(ek[k] - ed, "anderson: eps_k - eps_d");
    require_nonzero(ek[k] - ed - u, "anderson: eps_k - eps_d - u");
  }
  for (int k = 0; k < 2; ++k) {
    for (int q = 0; q < 2; ++q) {
      w[k][q] = 0.5 * vk[k] * vk[q] * (1.0 / (ek[k] - ed) + 1.0 / (ek[q] - ed));
      wu[k][q] = 0.5 * vk[k] * vk[q] *
                 (1.0 / (ek[k] - ed - u) + 1.0 / (ek[q] - ed - u));
      j[k][q] = 2.0 * (wu[k][q] - w[k][q]);
    }
  }

  // Impurity renormalizations. The doublon coefficient is sum_k J_kk, fixed
  // by requiring <dd|H'|dd> = -2 sum_k |V_k|^2/(eps_k - eps_d - u) for an
  // empty band, which the matrix-element form gives directly.
  OperatorMatrix o = m.h0 - (w[0][0] + w[1][1]) * (nf(d_up) + nf(d_dn)) -
                     (j[0][0] + j[1][1]) * (nf(d_up) * nf(d_dn));
  for (int k = 0; k < 2; ++k) {
    for (int q = 0; q < 2; ++q) {
      for (int s = 0; s < 2; ++s) {
        const int sb = 1 - s;
        auto scatter = ops::adjoint(cf(2 * k + s)) * cf(2 * q + s);
        o = o + w[k][q] * scatter + (0.5 * j[k][q]) * (scatter * nf(4 + sb));
        // Spin exchange: conduction and impurity flip together.
        auto flip = ops::adjoint(cf(2 * k + s)) * cf(2 * q + sb) *
                    (ops::adjoint(cf(4 + sb)) * cf(4 + s));
        o = o - (0.5 * j[k][q]) * flip;
      }
    }
  }
  o.set_hermitian_hint(true);
  m.oracle = o;

  m.blocks = spectral::BlockOptions::subsystem({d_up, d_dn});
  m.interior_margin = 0;
  for (int k = 0; k < 2; ++k) {
    warn_ratio(m, vk[k], ek[k] - ed, "anderson");
  }
  return m;
}

// ---- Dirac Hamiltonian at fixed momentum --------------------------------------

PresetModel dirac_fixed_p(const ParamMap& p) {
  const double mass = p.at("mass");
  require_nonzero(mass, "dirac_fixed_p: mass");
  const double e_charge = p.at("e_charge"), phi = p.at("phi");
  const double px = p.at("px"), py = p.at("py"), pz = p.at("pz");

  ProductSpace space({qudit(2, "band"), qudit(2, "spin")});
  auto beta = ops::build_transition(space, 0, 0, 0) -
              ops::build_transition(space, 0, 1, 1);
  auto band_x = ops::build_transition(space, 0, 0, 1) +
                ops::build_transition(space, 0, 1, 0);
  auto sx = ops::build_transition(space, 1, 0, 1) +
            ops::build_transition(space, 1, 1, 0);
  auto sy = cplx(0.0, -1.0) * ops::build_transition(space, 1, 0, 1) +
            cplx(0.0, 1.0) * ops::build_transition(space, 1, 1, 0);
  auto sz = ops::build_transition(space, 1, 0, 0) -
            ops::build_transition(space, 1, 1, 1);
  auto id = OperatorMatrix::identity(space);

  PresetModel m;
  m.space = space;
  m.h0 = mass * beta;
  m.h0.set_hermitian_hint(true);
  m.v = (-e_charge * phi) * id +
        band_x * (px * sx + py * sy + pz * sz);
  m.v.set_hermitian_hint(true);

  const double p2 = px * px + py * py + pz * pz;
  m.oracle = (mass + p2 / (2.0 * mass)) * beta - (e_charge * phi) * id;
  m.oracle->set_hermitian_hint(true);

  m.blocks = spectral::BlockOptions::degeneracy();
  m.interior_margin = 0;
  warn_ratio(m, std::sqrt(p2), 2.0 * mass, "dirac_fixed_p");
  return m;
}

// ---- two-site Fermi-Hubbard t/U ------------------------------------------------

PresetModel hubbard_tU(const ParamMap& p) {
  const double t = p.at("t"), u = p.at("u");
  require_nonzero(u, "hubbard_tU: u");

  // Factor order: (site1 up, site1 dn, site2 up, site2 dn).
  ProductSpace space(
      {fermion("s1u"), fermion("s1d"), fermion("s2u"), fermion("s2d")});
  auto cf = [&](int f) { return ops::build_ladder(space, f); };
  auto nf = [&](int f) { return ops::build_number(space, f); };
  auto hf = [&](int f) { return ops::build_hole(space, f); };

  PresetModel m;
  m.space = space;
  m.h0 = u * (nf(0) * nf(1) + nf(2) * nf(3));
  m.h0.set_hermitian_hint(true);

  OperatorMatrix v(space), v0_half(space), vp(space);
  for (int s = 0; s < 2; ++s) {
    const int sb = 1 - s;
    auto hop12 = ops::adjoint(cf(s)) * cf(2 + s);      // c1s^dag c2s
    auto hop21 = ops::adjoint(cf(2 + s)) * cf(s);
    v = v + (-t) * (hop12 + hop21);
    // Split by doublon count: hops that conserve it, raise it, lower it.
    v0_half = v0_half + (-t) * (nf(sb) * hop12 * nf(2 + sb) +
                                hf(sb) * hop12 * hf(2 + sb));
    vp = vp + (-t) * (nf(sb) * hop12 * hf(2 + sb) +
                      nf(2 + sb) * hop21 * hf(sb));
  }
  v.set_hermitian_hint(true);
  m.v = v;

  auto v0 = v0_half + ops::adjoint(v0_half);
  auto vm = ops::adjoint(vp);
  m.oracle = m.h0 + v0 + (-1.0 / u) * ops::commutator(vm, vp);
  m.oracle->set_hermitian_hint(true);

  m.blocks = spectral::BlockOptions::degeneracy();
  m.interior_margin = 0;
  warn_ratio(m, t, u, "hubbard_tU");
  return m;
}

// ---- catalog -------------------------------------------------------------------

std::vector<ParamInfo> series(const std::string& stem,
                              const std::vector<double>& values,
                              const std::string& doc) {
  std::vector<ParamInfo> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back({stem + std::to_string(i), values[i], doc});
  }
  return out;
}

PresetInfo info(std::string name, std::string summary,
                std::vector<std::vector<ParamInfo>> groups) {
  PresetInfo pi;
  pi.name = std::move(name);
  pi.summary = std::move(summary);
  for (auto& g : groups) {
    for (auto& x : g) pi.params.push_back(std::move(x));
  }
  return pi;
}

std::vector<PresetInfo> make_catalog() {
  std::vector<PresetInfo> c;
  c.push_back(info(
      "qutrit", "three levels; {0,1} block dressed by the far level 2",
      {{{"e0", 0.0, "level 0"},
        {"e1", 1.0, "level 1"},
        {"e2", 5.0, "level 2"},
        {"v01_re", 0.3, "coupling 0-1, real part"},
        {"v01_im", 0.0, "coupling 0-1, imaginary part"},
        {"v12_re", 0.1, "coupling 1-2, real part"},
        {"v12_im", 0.0, "coupling 1-2, imaginary part"}}}));
  c.push_back(info(
      "three_boson", "three modes with a cubic drive; decomposition reference",
      {{{"omega_a", 1.0, "mode a frequency"},
        {"omega_b", 5.3, "mode b frequency"},
        {"omega_c", 2.6, "mode c frequency"},
        {"Omega", 0.8, "relative weight of the c quadrature"},
        {"g", 0.01, "drive strength"},
        {"n_a", 6.0, "Fock truncation of a"},
        {"n_b", 6.0, "Fock truncation of b"},
        {"n_c", 6.0, "Fock truncation of c"}}}));
  c.push_back(info(
      "one_boson_n", "single mode with (a+a^dag)^power drive",
      {{{"omega", 1.0, "mode frequency"},
        {"g", 0.001, "drive strength"},
        {"power", 4.0, "drive power: 1, 2 or 4"},
        {"n_max", 12.0, "Fock truncation"}}}));
  c.push_back(info(
      "two_boson", "two quadrature-coupled modes, detuned or degenerate",
      {{{"omega_a", 5.0, "mode a frequency"},
        {"omega_b", 1.0, "mode b frequency"},
        {"g", 0.02, "coupling"},
        {"n_a", 6.0, "Fock truncation of a"},
        {"n_b", 6.0, "Fock truncation of b"},
        {"degenerate", 0.0, "1: equal-frequency regime blocks"}}}));
  c.push_back(info(
      "anderson", "two conduction modes hybridized with a correlated impurity",
      {{{"eps_d", -5.0, "impurity level"},
        {"u", 8.0, "impurity double-occupation cost"},
        {"eps_k1", -0.3, "conduction level 1"},
        {"eps_k2", 0.4, "conduction level 2"},
        {"v1", 0.1, "hybridization 1"},
        {"v2", 0.08, "hybridization 2"}}}));
  c.push_back(info(
      "dispersive_boson_generic", "mode dispersively probing a qudit ladder",
      {{{"omega_r", 10.0, "mode frequency"},
        {"d_levels", 4.0, "ladder levels (2..6)"},
        {"n_max", 5.0, "Fock truncation"}},
       series("e", {0.0, 1.0, 2.3, 3.9, 5.8, 8.0}, "ladder level"),
       series("b", {0.02, 0.03, 0.025, 0.02, 0.02}, "ladder step coupling")}));
  c.push_back(info(
      "jaynes_cummings", "qubit-mode exchange coupling, dispersive regime",
      {{{"omega_r", 10.0, "mode frequency"},
        {"omega_q", 1.0, "qubit splitting"},
        {"g", 0.02, "exchange coupling"},
        {"n_max", 8.0, "Fock truncation"}}}));
  c.push_back(info(
      "rabi", "qubit-mode quadrature coupling, dispersive regime",
      {{{"omega_r", 10.0, "mode frequency"},
        {"omega_q", 1.0, "qubit splitting"},
        {"g", 0.02, "quadrature coupling"},
        {"n_max", 8.0, "Fock truncation"}}}));
  c.push_back(info(
      "dispersive_qubit_generic", "qubit dressed by a four-level bath",
      {{{"omega_r", 10.0, "qubit splitting"},
        {"eb0", 0.0, "bath level 0"},
        {"eb1", 0.8, "bath level 1"},
        {"eb2", 1.7, "bath level 2"},
        {"eb3", 2.9, "bath level 3"},
        {"b01", 0.03, "bath coupling 0-1"},
        {"b12", 0.02, "bath coupling 1-2"},
        {"b23", 0.025, "bath coupling 2-3"},
        {"b02", 0.015, "bath coupling 0-2"}}}));
  c.push_back(info(
      "giant_atom_chain", "qubit coupled to several chain modes at once",
      {{{"omega_r", 10.0, "qubit splitting"},
        {"bosonic", 0.0, "1: bosonic chain modes"},
        {"n_sites", 4.0, "chain modes (2..6)"},
        {"local_dim", 3.0, "per-mode dimension for bosonic chains"}},
       series("eps", {-0.4, -0.1, 0.2, 0.5, 0.8, 1.1}, "chain mode energy"),
       series("g", {0.05, 0.08, 0.05, 0.08, 0.05, 0.05}, "chain mode coupling")}));
  c.push_back(info(
      "two_chains", "two quadratic chains exchanging particles off-resonantly",
      {{{"kind_a", 0.0, "chain a: 0 fermionic, 1 bosonic"},
        {"kind_b", 0.0, "chain b: 0 fermionic, 1 bosonic"},
        {"n_a", 2.0, "chain a modes (1..3)"},
        {"n_b", 2.0, "chain b modes (1..3)"},
        {"local_dim_a", 3.0, "per-mode dimension if chain a is bosonic"},
        {"local_dim_b", 3.0, "per-mode dimension if chain b is bosonic"},
        {"block_delta", 2.0, "gap threshold for the recommended blocks"}},
       series("ea", {5.0, 5.3, 5.6}, "chain a energy"),
       series("eb", {0.0, 0.3, 0.6}, "chain b energy"),
       {{"v00", 0.05, "coupling a0-b0"},
        {"v01", 0.0, "coupling a0-b1"},
        {"v02", 0.0, "coupling a0-b2"},
        {"v10", 0.0, "coupling a1-b0"},
        {"v11", 0.05, "coupling a1-b1"},
        {"v12", 0.0, "coupling a1-b2"},
        {"v20", 0.0, "coupling a2-b0"},
        {"v21", 0.0, "coupling a2-b1"},
        {"v22", 0.05, "coupling a2-b2"}}}));
  c.push_back(info(
      "cubic_fb", "two modes cubically coupled to a three-site fermion bath",
      {{{"omega_r1", 10.0, "mode 1 frequency"},
        {"omega_r2", 13.7, "mode 2 frequency"},
        {"mode_dim", 4.0, "per-mode Fock dimension"},
        {"t", 0.1, "bath hopping"},
        {"eps0", 0.0, "bath site 0"},
        {"eps1", 0.35, "bath site 1"},
        {"eps2", 0.8, "bath site 2"},
        {"g1", 0.04, "mode 1 coupling scale"},
        {"g2", 0.03, "mode 2 coupling scale"},
        {"block_delta", 1.0, "gap threshold for the recommended blocks"}}}));
  c.push_back(info(
      "dirac_fixed_p", "four-component free particle at fixed momentum",
      {{{"mass", 1.0, "rest mass"},
        {"e_charge", 1.0, "charge"},
        {"phi", 0.3, "scalar potential"},
        {"px", 0.1, "momentum x"},
        {"py", 0.0, "momentum y"},
        {"pz", 0.0, "momentum z"}}}));
  c.push_back(info(
      "hubbard_tU", "two-site Fermi-Hubbard model in the strong-coupling limit",
      {{{"t", 0.05, "hopping"},
        {"u", 1.0, "double-occupation cost"}}}));
  return c;
}

}  // namespace

const std::vector<PresetInfo>& preset_catalog() {
  static const std::vector<PresetInfo> catalog = make_catalog();
  return catalog;
}

bool is_preset(const std::string& name) {
  for (const auto& pi : preset_catalog()) {
    if (pi.name == name) return true;
  }
  return false;
}

PresetModel build_preset(const std::string& name, const ParamMap& params) {
  const PresetInfo* found = nullptr;
  for (const auto& pi : preset_catalog()) {
    if (pi.name == name) {
      found = &pi;
      break;
    }
  }
  if (!found) fail("unknown preset '" + name + "'");

  ParamMap merged;
  for (const auto& pi : found->params) merged[pi.name] = pi.value;
  for (const auto& [key, value] : params) {
    auto it = merged.find(key);
    if (it == merged.end()) {
      fail("preset '" + name + "' has no parameter '" + key + "'");
    }
    if (!std::isfinite(value)) {
      fail("preset '" + name + "': parameter '" + key + "' is not finite");
    }
    it->second = value;
  }

  if (name == "qutrit") return qutrit(merged);
  if (name == "three_boson") return three_boson(merged);
  if (name == "one_boson_n") return one_boson_n(merged);
  if (name == "two_boson") return two_boson(merged);
  if (name == "anderson") return anderson(merged);
  if (name == "dispersive_boson_generic") return dispersive_boson_generic(merged);
  if (name == "jaynes_cummings") return qubit_in_cavity(merged, false);
  if (name == "rabi") return qubit_in_cavity(merged, true);
  if (name == "dispersive_qubit_generic") return dispersive_qubit_generic(merged);
  if (name == "giant_atom_chain") return giant_atom_chain(merged);
  if (name == "two_chains") return two_chains(merged);
  if (name == "cubic_fb") return cubic_fb(merged);
  if (name == "dirac_fixed_p") return dirac_fixed_p(merged);
  if (name == "hubbard_tU") return hubbard_tU(merged);
  fail("unknown preset '" + name + "'");
}

HubbardOperators hubbard_operators(double eps1, double eps2, double u) {
  HubbardOperators out;
  out.space = ProductSpace({fermion("c1"), fermion("c2")});
  const auto& space = out.space;
  auto c1 = ops::build_ladder(space, 0);
  auto c2 = ops::build_ladder(space, 1);
  auto n1 = ops::build_number(space, 0);
  auto n2 = ops::build_number(space, 1);
  auto h1 = ops::build_hole(space, 0);
  auto h2 = ops::build_hole(space, 1);

  // Basis order: 0 empty, 1 = c1^dag|0>, 2 = c2^dag|0>, 3 = c1^dag c2^dag|0>.
  out.x[0][0] = h1 * h2;
  out.x[1][1] = n1 * h2;
  out.x[2][2] = n2 * h1;
  out.x[3][3] = n1 * n2;
  out.x[1][0] = ops::adjoint(c1) * h2;
  out.x[2][0] = ops::adjoint(c2) * h1;
  out.x[3][0] = ops::adjoint(c1) * ops::adjoint(c2);
  out.x[2][1] = ops::adjoint(c2) * c1;
  out.x[3][1] = -(n1 * ops::adjoint(c2));  // sign from the order in |d>
  out.x[3][2] = n2 * ops::adjoint(c1);
  for (int i = 0; i < 4; ++i) {
    for (int j = i + 1; j < 4; ++j) {
      out.x[i][j] = ops::adjoint(out.x[j][i]);
    }
  }
  out.level = {0.0, eps1, eps2, eps1 + eps2 + u};
  out.h0 = eps1 * n1 + eps2 * n2 + u * (n1 * n2);
  out.h0.set_hermitian_hint(true);
  return out;
}

}  // namespace swlab::models
