#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace swlab {

using cplx = std::complex<double>;

// Contract violations in user-supplied input: malformed spec files, mismatched
// spaces, out-of-range arguments. The CLI maps these to exit code 2.
class SpecError : public std::runtime_error {
 public:
  explicit SpecError(const std::string& what) : std::runtime_error(what) {}
};

// Physics guards that fire on numerically ill-posed problems: resonant or
// vanishing denominators, merged +/- frequency clusters, broken
// anti-Hermiticity. The CLI maps these to exit code 3.
class GuardError : public std::runtime_error {
 public:
  explicit GuardError(const std::string& what) : std::runtime_error(what) {}
};

// Library version string, e.g. "0.1.0".
const char* version();

}  // namespace swlab
