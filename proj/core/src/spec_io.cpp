#include "swlab/spec_io.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "swlab/common.hpp"
#include "swlab/eigenop.hpp"

namespace swlab::spec_io {

namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// ---- strict JSON helpers -----------------------------------------------------

void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) {
      if (it.key() == a) {
        ok = true;
        break;
      }
    }
    if (!ok) throw SpecError(where + ": unknown key '" + it.key() + "'");
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double as_number(const json& j, const std::string& where) {
  if (!j.is_number()) throw SpecError(where + " must be a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw SpecError(where + " must be finite");
  return x;
}

int as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw SpecError(where + " must be an integer");
  return j.get<int>();
}

std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw SpecError(where + " must be a string");
  return j.get<std::string>();
}

// ---- spec sections -------------------------------------------------------------

std::vector<FactorSpec> parse_space(const json& arr) {
  if (!arr.is_array() || arr.empty()) {
    throw SpecError("space must be a non-empty array of factor objects");
  }
  std::vector<FactorSpec> out;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "space[" + std::to_string(i) + "]";
    const json& f = arr[i];
    if (!f.is_object()) throw SpecError(where + " must be an object");
    check_keys(f, where, {"kind", "dim", "label"});
    const json* kind = find(f, "kind");
    if (!kind) throw SpecError(where + ": missing 'kind'");
    const std::string name = as_string(*kind, where + ".kind");
    FactorSpec fs;
    if (name == "qudit") {
      fs.kind = FactorKind::Qudit;
    } else if (name == "boson") {
      fs.kind = FactorKind::Boson;
    } else if (name == "fermion") {
      fs.kind = FactorKind::Fermion;
    } else {
      throw SpecError(where + ".kind: '" + name +
                      "' is not one of qudit, boson, fermion");
    }
    if (const json* dim = find(f, "dim")) {
      fs.dim = as_int(*dim, where + ".dim");
    } else if (fs.kind == FactorKind::Fermion) {
      fs.dim = 2;
    } else {
      throw SpecError(where + ": 'dim' is required for " + name + " factors");
    }
    if (fs.kind == FactorKind::Fermion && fs.dim != 2) {
      throw SpecError(where + ": fermion factors have dim 2");
    }
    if (fs.dim < 2) throw SpecError(where + ".dim must be at least 2");
    if (const json* label = find(f, "label")) {
      fs.label = as_string(*label, where + ".label");
    }
    out.push_back(std::move(fs));
  }
  return out;
}

OperatorSpec parse_operator(const json& o, const std::string& where) {
  if (!o.is_object()) throw SpecError(where + " must be an object");
  check_keys(o, where, {"preset", "params", "matrix"});
  const json* preset = find(o, "preset");
  const json* params = find(o, "params");
  const json* matrix = find(o, "matrix");
  if ((preset != nullptr) == (matrix != nullptr)) {
    throw SpecError(where + ": give exactly one of 'preset' or 'matrix'");
  }

  OperatorSpec out;
  if (preset) {
    out.preset = as_string(*preset, where + ".preset");
    if (params) {
      if (!params->is_object()) {
        throw SpecError(where + ".params must be an object of numbers");
      }
      for (auto it = params->begin(); it != params->end(); ++it) {
        out.params[it.key()] =
            as_number(it.value(), where + ".params." + it.key());
      }
    }
    return out;
  }

  if (params) throw SpecError(where + ": 'params' only applies to presets");
  if (!matrix->is_array() || matrix->empty()) {
    throw SpecError(where + ".matrix must be a row-major array of [re, im] pairs");
  }
  const std::size_t n = matrix->size();
  const auto d = static_cast<std::size_t>(std::llround(std::sqrt(double(n))));
  if (d * d != n) {
    throw SpecError(where + ".matrix: length " + std::to_string(n) +
                    " is not a square matrix");
  }
  DenseMat m(static_cast<int>(d), static_cast<int>(d));
  for (std::size_t e = 0; e < n; ++e) {
    const json& pair = (*matrix)[e];
    const std::string pw = where + ".matrix[" + std::to_string(e) + "]";
    if (!pair.is_array() || pair.size() != 2) {
      throw SpecError(pw + " must be a [re, im] pair");
    }
    m(static_cast<int>(e / d), static_cast<int>(e % d)) =
        cplx(as_number(pair[0], pw + "[0]"), as_number(pair[1], pw + "[1]"));
  }
  out.matrix = std::move(m);
  return out;
}

spectral::BlockOptions parse_blocks(const json& b) {
  if (!b.is_object()) throw SpecError("blocks must be an object");
  const json* s = find(b, "strategy");
  if (!s) throw SpecError("blocks: missing 'strategy'");
  const std::string strategy = as_string(*s, "blocks.strategy");

  if (strategy == "explicit") {
    check_keys(b, "blocks", {"strategy", "blocks"});
    const json* lists = find(b, "blocks");
    if (!lists || !lists->is_array() || lists->empty()) {
      throw SpecError("blocks: strategy 'explicit' needs a non-empty 'blocks' array");
    }
    std::vector<std::vector<int>> idx;
    for (std::size_t i = 0; i < lists->size(); ++i) {
      const json& inner = (*lists)[i];
      const std::string where = "blocks.blocks[" + std::to_string(i) + "]";
      if (!inner.is_array() || inner.empty()) {
        throw SpecError(where + " must be a non-empty array of state indices");
      }
      std::vector<int> block;
      for (std::size_t k = 0; k < inner.size(); ++k) {
        const int v = as_int(inner[k], where + "[" + std::to_string(k) + "]");
        if (v < 0) throw SpecError(where + ": negative state index");
        block.push_back(v);
      }
      idx.push_back(std::move(block));
    }
    return spectral::BlockOptions::explicit_lists(std::move(idx));
  }
  if (strategy == "gap_threshold") {
    check_keys(b, "blocks", {"strategy", "delta"});
    const json* delta = find(b, "delta");
    if (!delta) throw SpecError("blocks: strategy 'gap_threshold' needs 'delta'");
    const double x = as_number(*delta, "blocks.delta");
    if (x <= 0.0) throw SpecError("blocks.delta must be positive");
    return spectral::BlockOptions::gap_threshold(x);
  }
  if (strategy == "degeneracy") {
    check_keys(b, "blocks", {"strategy", "tol"});
    double tol = 1e-12;
    if (const json* t = find(b, "tol")) {
      tol = as_number(*t, "blocks.tol");
      if (tol <= 0.0) throw SpecError("blocks.tol must be positive");
    }
    return spectral::BlockOptions::degeneracy(tol);
  }
  if (strategy == "subsystem") {
    check_keys(b, "blocks", {"strategy", "factors"});
    const json* factors = find(b, "factors");
    if (!factors || !factors->is_array() || factors->empty()) {
      throw SpecError("blocks: strategy 'subsystem' needs a non-empty 'factors' array");
    }
    std::vector<int> fs;
    for (std::size_t k = 0; k < factors->size(); ++k) {
      const int f =
          as_int((*factors)[k], "blocks.factors[" + std::to_string(k) + "]");
      if (f < 0) throw SpecError("blocks.factors: negative factor index");
      fs.push_back(f);
    }
    return spectral::BlockOptions::subsystem(std::move(fs));
  }
  throw SpecError("blocks.strategy: '" + strategy +
                  "' is not one of explicit, gap_threshold, degeneracy, subsystem");
}

sw::EngineOptions parse_engine(const json& e) {
  if (!e.is_object()) throw SpecError("engine must be an object");
  check_keys(e, "engine", {"order", "variant", "bin_tol"});
  sw::EngineOptions out;
  if (const json* o = find(e, "order")) {
    out.order = as_int(*o, "engine.order");
  }
  if (const json* v = find(e, "variant")) {
    const std::string name = as_string(*v, "engine.variant");
    if (name == "block_diagonal") {
      out.variant = sw::Variant::BlockDiagonal;
    } else if (name == "single_generator") {
      out.variant = sw::Variant::SingleGenerator;
    } else {
      throw SpecError("engine.variant: '" + name +
                      "' is not block_diagonal or single_generator");
    }
  }
  if (const json* t = find(e, "bin_tol")) {
    out.bin_tol = as_number(*t, "engine.bin_tol");
    if (out.bin_tol <= 0.0) throw SpecError("engine.bin_tol must be positive");
  }
  return out;
}

SweepSpec parse_sweep(const json& s) {
  if (!s.is_object()) throw SpecError("sweep must be an object");
  check_keys(s, "sweep", {"param", "values"});
  const json* param = find(s, "param");
  const json* values = find(s, "values");
  if (!param) throw SpecError("sweep: missing 'param'");
  if (!values) throw SpecError("sweep: missing 'values'");
  SweepSpec out;
  out.param = as_string(*param, "sweep.param");
  if (out.param.empty()) throw SpecError("sweep.param must be non-empty");
  if (!values->is_array() || values->empty()) {
    throw SpecError("sweep.values must be a non-empty array of numbers");
  }
  for (std::size_t k = 0; k < values->size(); ++k) {
    out.values.push_back(
        as_number((*values)[k], "sweep.values[" + std::to_string(k) + "]"));
  }
  return out;
}

// ---- engine option validation ---------------------------------------------------

void validate_engine_limits(const sw::EngineOptions& e) {
  if (e.variant == sw::Variant::BlockDiagonal) {
    if (e.order < 2 || e.order > 3) {
      throw SpecError("engine.order: variant block_diagonal supports orders 2..3");
    }
  } else {
    if (e.order < 2 || e.order > 6) {
      throw SpecError("engine.order: variant single_generator supports orders 2..6");
    }
  }
}

// ---- report pieces ----------------------------------------------------------------

json frequencies_json(const eigenop::BohrDecomposition& dec) {
  json arr = json::array();
  for (const auto& c : dec.components) {
    json row;
    row["component_norm"] = std::sqrt(c.weight);
    row["omega"] = c.omega;
    arr.push_back(std::move(row));
  }
  return arr;
}

json triplets_json(const OperatorMatrix& m) {
  json arr = json::array();
  const SparseMat& s = m.entries();
  for (int k = 0; k < s.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(s, k); it; ++it) {
      arr.push_back(json::array({static_cast<int>(it.row()),
                                 static_cast<int>(it.col()),
                                 it.value().real(), it.value().imag()}));
    }
  }
  return arr;
}

json block_spectra_json(const OperatorMatrix& h_prime,
                        const spectral::Spectrum& spectrum,
                        const spectral::BlockStructure& blocks) {
  const DenseMat hp = spectrum.to_eigenbasis(h_prime);
  json arr = json::array();
  for (const auto& block : blocks.blocks) {
    const int n = static_cast<int>(block.size());
    DenseMat sub(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) sub(i, j) = hp(block[i], block[j]);
    }
    Eigen::SelfAdjointEigenSolver<DenseMat> es(0.5 * (sub + sub.adjoint()));
    std::vector<double> eigs(es.eigenvalues().data(),
                             es.eigenvalues().data() + n);
    arr.push_back(eigs);
  }
  return arr;
}

json provenance_json(const ModelSpec& spec, double wall_ms,
                     const ReportOptions& options) {
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx",
                static_cast<unsigned long long>(fnv1a64(spec.raw_text)));
  json p;
  p["spec_hash"] = std::string("fnv1a64:") + hex;
  p["tool_version"] = version();
  p["wall_time_ms"] = options.timings ? wall_ms : 0.0;
  return p;
}

json empty_report() {
  json rep;
  rep["frequencies"] = json::array();
  rep["s_diagnostics"] = json(json::value_t::object);
  rep["hprime"] = json::array();
  rep["block_spectra"] = json::array();
  rep["compare"] = json(json::value_t::object);
  rep["sweep_rows"] = json::array();
  rep["warnings"] = json::array();
  return rep;
}

std::string finish(json& rep, const ModelSpec& spec, Clock::time_point t0,
                   const ReportOptions& options) {
  rep["provenance"] = provenance_json(spec, elapsed_ms(t0), options);
  return rep.dump(2) + "\n";
}

}  // namespace

// ---- public API ----------------------------------------------------------------------

ModelSpec parse_spec(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw SpecError(std::string("spec: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw SpecError("spec: top level must be an object");
  check_keys(j, "spec", {"space", "h0", "v", "blocks", "engine", "sweep"});

  ModelSpec out;
  out.raw_text = json_text;
  const json* h0 = find(j, "h0");
  if (!h0) throw SpecError("spec: missing 'h0'");
  const json* v = find(j, "v");
  if (!v) throw SpecError("spec: missing 'v'");
  out.h0 = parse_operator(*h0, "h0");
  out.v = parse_operator(*v, "v");
  if (const json* s = find(j, "space")) out.space = parse_space(*s);
  if (const json* b = find(j, "blocks")) out.blocks = parse_blocks(*b);
  if (const json* e = find(j, "engine")) out.engine = parse_engine(*e);
  if (const json* sw_section = find(j, "sweep")) {
    out.sweep = parse_sweep(*sw_section);
  }
  return out;
}

ModelSpec load_spec(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot read spec file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_spec(buf.str());
}

ResolvedModel resolve(const ModelSpec& spec) {
  ResolvedModel rm;
  std::optional<models::PresetModel> pm;
  if (spec.h0.preset && spec.v.preset) {
    if (*spec.h0.preset != *spec.v.preset) {
      throw SpecError("h0 and v name different presets ('" + *spec.h0.preset +
                      "' vs '" + *spec.v.preset + "')");
    }
    if (spec.h0.params != spec.v.params) {
      throw SpecError(
          "h0 and v must use identical params when both come from a preset");
    }
    pm = models::build_preset(*spec.h0.preset, spec.h0.params);
    rm.preset = *spec.h0.preset;
    rm.preset_params = spec.h0.params;
  } else if (spec.h0.preset) {
    pm = models::build_preset(*spec.h0.preset, spec.h0.params);
  } else if (spec.v.preset) {
    pm = models::build_preset(*spec.v.preset, spec.v.params);
  }

  if (pm) {
    rm.space = pm->space;
    if (spec.space) {
      ProductSpace declared(*spec.space);
      if (!declared.compatible_with(rm.space)) {
        throw SpecError("space: declared factors are incompatible with the preset space");
      }
    }
    rm.warnings = pm->warnings;
  } else {
    if (!spec.space) {
      throw SpecError("space is required when h0 and v are explicit matrices");
    }
    rm.space = ProductSpace(*spec.space);
  }

  auto side = [&](const OperatorSpec& os, const char* name,
                  bool is_h0) -> OperatorMatrix {
    if (os.preset) return is_h0 ? pm->h0 : pm->v;
    const DenseMat& m = *os.matrix;
    if (m.rows() != rm.space.dim()) {
      throw SpecError(std::string(name) + ".matrix: dimension " +
                      std::to_string(m.rows()) + " does not match space dimension " +
                      std::to_string(rm.space.dim()));
    }
    return OperatorMatrix::from_dense(rm.space, m);
  };
  rm.h0 = side(spec.h0, "h0", true);
  rm.v = side(spec.v, "v", false);

  if (spec.blocks) {
    rm.blocks = *spec.blocks;
  } else if (pm) {
    rm.blocks = pm->blocks;
  } else {
    rm.blocks = spectral::BlockOptions::degeneracy();
  }
  return rm;
}

std::string run_decompose(const ModelSpec& spec, const ReportOptions& options) {
  const auto t0 = Clock::now();
  auto rm = resolve(spec);
  ops::require_hermitian(rm.h0, "h0");

  auto spectrum = spectral::diagonalize(rm.h0);
  eigenop::DecomposeOptions dopt;
  dopt.bin_tol = spec.engine.bin_tol;
  auto dec = eigenop::eigen_decompose(rm.v, spectrum, dopt);

  double defect = 0.0;
  for (const auto& c : dec.components) {
    auto comm = ops::commutator(rm.h0, c.op);
    defect = std::max(defect, ops::max_abs(comm + c.omega * c.op));
  }

  json rep = empty_report();
  rep["frequencies"] = frequencies_json(dec);
  json diag;
  diag["bin_tol"] = dec.bin_tol;
  diag["component_count"] = static_cast<int>(dec.components.size());
  diag["eigenop_defect"] = defect;
  diag["recomposition_error"] = dec.recomposition_error;
  rep["s_diagnostics"] = diag;
  rep["warnings"] = rm.warnings;
  return finish(rep, spec, t0, options);
}

std::string run_transform(const ModelSpec& spec, const ReportOptions& options) {
  const auto t0 = Clock::now();
  validate_engine_limits(spec.engine);
  if (options.cross_check &&
      (spec.engine.order != 2 || spec.engine.variant != sw::Variant::BlockDiagonal)) {
    throw SpecError("cross-check requires order 2 and variant block_diagonal");
  }
  auto rm = resolve(spec);
  auto ws = sw::prepare(rm.h0, rm.v, rm.blocks, spec.engine);
  auto res = sw::run_prepared(rm.h0, ws, spec.engine);

  json rep = empty_report();
  rep["frequencies"] = frequencies_json(ws.vo_components);
  json diag;
  diag["offdiag_residual"] = res.diagnostics.offdiag_residual;
  diag["recomposition_error"] = res.diagnostics.recomposition_error;
  diag["s_antihermiticity"] = res.diagnostics.s_antihermiticity;
  diag["s_block_norm"] = res.diagnostics.s_block_norm;
  if (options.cross_check) {
    auto mf = sw::second_order_matrix_form(rm.h0, rm.v, rm.blocks, spec.engine);
    diag["cross_check_delta"] = ops::max_abs_diff(res.h_prime, mf.h_prime);
  }
  rep["s_diagnostics"] = diag;
  rep["hprime"] = triplets_json(res.h_prime);
  rep["block_spectra"] = block_spectra_json(res.h_prime, ws.spectrum, ws.blocks);
  rep["warnings"] = rm.warnings;
  return finish(rep, spec, t0, options);
}

std::string run_compare(const ModelSpec& spec, const ReportOptions& options) {
  const auto t0 = Clock::now();
  validate_engine_limits(spec.engine);
  auto rm = resolve(spec);
  auto ws = sw::prepare(rm.h0, rm.v, rm.blocks, spec.engine);
  auto res = sw::run_prepared(rm.h0, ws, spec.engine);
  auto cmp = sw::compare_spectra(rm.h0, rm.v, res.h_prime, ws.spectrum, ws.blocks);

  json rep = empty_report();
  rep["frequencies"] = frequencies_json(ws.vo_components);
  json diag;
  diag["offdiag_residual"] = res.diagnostics.offdiag_residual;
  diag["recomposition_error"] = res.diagnostics.recomposition_error;
  diag["s_antihermiticity"] = res.diagnostics.s_antihermiticity;
  diag["s_block_norm"] = res.diagnostics.s_block_norm;
  rep["s_diagnostics"] = diag;
  rep["hprime"] = triplets_json(res.h_prime);
  rep["block_spectra"] = cmp.block_eigenvalues;
  json c;
  c["max_delta"] = cmp.max_delta;
  c["per_block"] = cmp.per_block;
  rep["compare"] = c;
  rep["warnings"] = rm.warnings;
  return finish(rep, spec, t0, options);
}

std::string run_sweep(const ModelSpec& spec, const ReportOptions& options,
                      std::string* csv_out) {
  const auto t0 = Clock::now();
  validate_engine_limits(spec.engine);
  if (!spec.sweep) throw SpecError("sweep: spec has no 'sweep' section");
  if (!spec.h0.preset || !spec.v.preset) {
    throw SpecError("sweep requires h0 and v to come from a preset");
  }
  auto base = resolve(spec);  // validates preset agreement, space, blocks

  json rows = json::array();
  std::string csv = "param,value,max_delta,offdiag_residual,runtime_ms\n";
  for (const double value : spec.sweep->values) {
    const auto row_t0 = Clock::now();
    models::ParamMap params = spec.h0.params;
    params[spec.sweep->param] = value;
    auto pm = models::build_preset(*spec.h0.preset, params);
    const auto& blocks = spec.blocks ? *spec.blocks : pm.blocks;
    auto ws = sw::prepare(pm.h0, pm.v, blocks, spec.engine);
    auto res = sw::run_prepared(pm.h0, ws, spec.engine);
    auto cmp = sw::compare_spectra(pm.h0, pm.v, res.h_prime, ws.spectrum, ws.blocks);
    const double ms = options.timings ? elapsed_ms(row_t0) : 0.0;

    json row;
    row["max_delta"] = cmp.max_delta;
    row["offdiag_residual"] = res.diagnostics.offdiag_residual;
    row["param"] = spec.sweep->param;
    row["runtime_ms"] = ms;
    row["value"] = value;
    rows.push_back(std::move(row));
    csv += spec.sweep->param + "," + format_double(value) + "," +
           format_double(cmp.max_delta) + "," +
           format_double(res.diagnostics.offdiag_residual) + "," +
           format_double(ms) + "\n";
  }

  json rep = empty_report();
  rep["sweep_rows"] = rows;
  rep["warnings"] = base.warnings;
  if (csv_out) *csv_out = csv;
  return finish(rep, spec, t0, options);
}

std::string render_presets() {
  std::string out;
  for (const auto& pi : models::preset_catalog()) {
    out += pi.name + "  -  " + pi.summary + "\n";
    for (const auto& p : pi.params) {
      out += "    " + p.name + " = " + format_double(p.value) + "  (" + p.doc + ")\n";
    }
    out += "\n";
  }
  return out;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char ch : data) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace swlab::spec_io
