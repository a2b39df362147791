#pragma once

// Model-spec files (strict JSON) and deterministic machine-readable reports.
//
// A spec file has the keys
//   space  : optional factor list [{kind, dim, label}, ...]
//   h0, v  : {"preset": name, "params": {...}} or {"matrix": [[re, im], ...]}
//   blocks : {"strategy": ...} (explicit | gap_threshold | degeneracy | subsystem)
//   engine : {"order": N, "variant": name, "bin_tol": x}
//   sweep  : {"param": name, "values": [...]}
// Unknown keys anywhere are rejected. Explicit matrices are row-major lists
// of [re, im] pairs and must match the declared space dimension.
//
// Reports are JSON with lexicographically sorted keys and shortest
// round-trip float formatting, so identical inputs produce byte-identical
// files. Timing fields are written as 0 unless timings are requested, which
// keeps golden files stable.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "swlab/models.hpp"
#include "swlab/operator_core.hpp"
#include "swlab/spectral.hpp"
#include "swlab/sw.hpp"

namespace swlab::spec_io {

// One side (h0 or v) of a model spec: a preset reference or a raw matrix.
struct OperatorSpec {
  std::optional<std::string> preset;
  models::ParamMap params;
  std::optional<DenseMat> matrix;
};

struct SweepSpec {
  std::string param;
  std::vector<double> values;
};

struct ModelSpec {
  std::optional<std::vector<FactorSpec>> space;
  OperatorSpec h0;
  OperatorSpec v;
  std::optional<spectral::BlockOptions> blocks;
  sw::EngineOptions engine;
  std::optional<SweepSpec> sweep;
  std::string raw_text;  // exact file bytes, hashed into report provenance
};

// Throws SpecError on malformed JSON, unknown keys, or type errors.
ModelSpec parse_spec(const std::string& json_text);
ModelSpec load_spec(const std::string& path);

// Spec resolved to concrete operators. When both h0 and v name a preset they
// must name the same one with identical params; a declared space must be
// compatible with the preset space. The block choice in the file wins over
// the preset recommendation.
struct ResolvedModel {
  ProductSpace space;
  OperatorMatrix h0;
  OperatorMatrix v;
  spectral::BlockOptions blocks;
  std::optional<std::string> preset;
  models::ParamMap preset_params;  // file-level overrides only
  std::vector<std::string> warnings;
};

ResolvedModel resolve(const ModelSpec& spec);

struct ReportOptions {
  bool timings = false;      // false: wall_time_ms / runtime_ms print as 0
  bool cross_check = false;  // transform: also run the matrix-element form
};

// Each runner returns the serialized report. Engine options are taken from
// spec.engine (command-line overrides should be applied to the spec first).
std::string run_decompose(const ModelSpec& spec, const ReportOptions& options);
std::string run_transform(const ModelSpec& spec, const ReportOptions& options);
std::string run_compare(const ModelSpec& spec, const ReportOptions& options);
// The sweep report mirrors the CSV rows; the CSV text itself (header line
// `param,value,max_delta,offdiag_residual,runtime_ms`) lands in *csv_out.
std::string run_sweep(const ModelSpec& spec, const ReportOptions& options,
                      std::string* csv_out);

// Plain-text catalog of preset names and parameter schemas.
std::string render_presets();

// Shortest round-trip decimal form (never more than 17 significant digits).
std::string format_double(double x);

// FNV-1a 64-bit hash of the raw spec text, as printed in provenance.
std::uint64_t fnv1a64(const std::string& data);

}  // namespace swlab::spec_io
