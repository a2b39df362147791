// swlab: batch front end over the Schrieffer-Wolff core library.
//
// Subcommands read a model-spec JSON file and emit a deterministic report:
//   decompose  Bohr-frequency decomposition of the perturbation
//   transform  block-diagonalizing transformation (H', S, diagnostics)
//   compare    H' block spectra against exact diagonalization
//   sweep      compare repeated over declared parameter values (+ CSV)
//   presets    list model-zoo presets and their parameter schemas
//
// Exit codes: 0 success, 2 spec/validation error, 3 numerical guard.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include <Eigen/Core>

#include "CLI11.hpp"
#include "swlab/common.hpp"
#include "swlab/spec_io.hpp"

namespace {

struct CliArgs {
  std::string spec_path;
  std::string out_path;
  std::string csv_path;
  double bin_tol = -1.0;
  int order = 2;
  std::string variant;
  bool timings = false;
  bool cross_check = false;
};

int write_file(const std::string& text, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    std::cerr << "error: cannot write '" << path << "'\n";
    return 2;
  }
  out << text;
  return 0;
}

std::string derive_csv_path(const std::string& out_path) {
  const auto dot = out_path.rfind('.');
  if (dot == std::string::npos || out_path.find('/', dot) != std::string::npos) {
    return out_path + ".csv";
  }
  return out_path.substr(0, dot) + ".csv";
}

}  // namespace

int main(int argc, char** argv) {
  // SWLAB_THREADS caps internal parallelism; unset means all cores.
  if (const char* env = std::getenv("SWLAB_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) Eigen::setNbThreads(n);
  }

  CLI::App app{"Schrieffer-Wolff effective Hamiltonians for finite composite "
               "quantum systems (swlab " +
               std::string(swlab::version()) + ")"};
  app.require_subcommand(1);

  CliArgs args;
  auto add_common = [&args](CLI::App* sub) {
    sub->add_option("spec", args.spec_path, "model-spec file (strict JSON)")
        ->required();
    sub->add_option("--out", args.out_path,
                    "write the JSON report here instead of stdout");
    sub->add_option("--bin-tol", args.bin_tol,
                    "frequency binning tolerance override");
    sub->add_option("--order", args.order, "perturbative order override");
    sub->add_option("--variant", args.variant,
                    "engine variant override: block_diagonal | single_generator");
    sub->add_flag("--timings", args.timings,
                  "record wall times (breaks byte-for-byte determinism)");
  };

  auto* cmd_decompose =
      app.add_subcommand("decompose", "Bohr-frequency decomposition of V");
  add_common(cmd_decompose);
  auto* cmd_transform =
      app.add_subcommand("transform", "block-diagonalizing transformation");
  add_common(cmd_transform);
  cmd_transform->add_flag(
      "--cross-check", args.cross_check,
      "also run the matrix-element second-order form and report the deviation");
  auto* cmd_compare = app.add_subcommand(
      "compare", "H' block spectra against exact diagonalization");
  add_common(cmd_compare);
  auto* cmd_sweep = app.add_subcommand(
      "sweep", "compare repeated over the declared parameter values");
  add_common(cmd_sweep);
  cmd_sweep->add_option(
      "--csv", args.csv_path,
      "CSV side file (default: the --out path with a .csv extension; "
      "omitted entirely when writing to stdout)");
  auto* cmd_presets = app.add_subcommand(
      "presets", "list model-zoo presets and parameter schemas");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_presets->parsed()) {
      std::cout << swlab::spec_io::render_presets();
      return 0;
    }

    CLI::App* active = app.get_subcommands().front();
    auto spec = swlab::spec_io::load_spec(args.spec_path);
    if (active->count("--bin-tol") > 0) {
      if (args.bin_tol <= 0.0) throw swlab::SpecError("--bin-tol must be positive");
      spec.engine.bin_tol = args.bin_tol;
    }
    if (active->count("--order") > 0) {
      spec.engine.order = args.order;
    }
    if (active->count("--variant") > 0) {
      if (args.variant == "block_diagonal") {
        spec.engine.variant = swlab::sw::Variant::BlockDiagonal;
      } else if (args.variant == "single_generator") {
        spec.engine.variant = swlab::sw::Variant::SingleGenerator;
      } else {
        throw swlab::SpecError("--variant: '" + args.variant +
                               "' is not block_diagonal or single_generator");
      }
    }

    swlab::spec_io::ReportOptions options;
    options.timings = args.timings;
    options.cross_check = args.cross_check;

    std::string report;
    std::string csv;
    if (cmd_decompose->parsed()) {
      report = swlab::spec_io::run_decompose(spec, options);
    } else if (cmd_transform->parsed()) {
      report = swlab::spec_io::run_transform(spec, options);
    } else if (cmd_compare->parsed()) {
      report = swlab::spec_io::run_compare(spec, options);
    } else {
      report = swlab::spec_io::run_sweep(spec, options, &csv);
    }

    if (cmd_sweep->parsed()) {
      std::string csv_path = args.csv_path;
      if (csv_path.empty() && !args.out_path.empty()) {
        csv_path = derive_csv_path(args.out_path);
      }
      if (!csv_path.empty()) {
        const int rc = write_file(csv, csv_path);
        if (rc != 0) return rc;
      }
    }

    if (args.out_path.empty()) {
      std::cout << report;
      return 0;
    }
    return write_file(report, args.out_path);
  } catch (const swlab::SpecError& e) {
    std::cerr << "spec error: " << e.what() << "\n";
    return 2;
  } catch (const swlab::GuardError& e) {
    std::cerr << "guard error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
