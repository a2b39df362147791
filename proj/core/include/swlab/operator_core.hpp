#pragma once

// Composite quantum systems (qudit / truncated boson / fermion factors) and
// sparse complex operators on them, with the small algebra needed by the
// Schrieffer-Wolff machinery: ladder/transition/number builders, products and
// commutators, and exact unitary rotation by an anti-Hermitian generator.
//
// Conventions used throughout the library:
//  - Factor 0 is the most significant digit of a product-basis index, i.e.
//    operators compose as op(factor 0) x op(factor 1) x ... (Kronecker order).
//  - Fermion ladder operators carry a Jordan-Wigner string over the preceding
//    *fermion* factors; boson and qudit factors commute with everything else.
//  - ||.|| in tolerance statements is the maximum absolute entry (max-norm).

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "swlab/common.hpp"

namespace swlab {

using SparseMat = Eigen::SparseMatrix<cplx>;
using DenseMat = Eigen::MatrixXcd;

enum class FactorKind { Qudit, Boson, Fermion };

const char* to_string(FactorKind kind);

struct FactorSpec {
  FactorKind kind = FactorKind::Qudit;
  int dim = 2;  // boson: n_max + 1 levels; fermion: always 2
  std::string label;
};

// Ordered list of factors; the order fixes both the tensor-product basis and
// the Jordan-Wigner ordering of fermion factors.
class ProductSpace {
 public:
  ProductSpace() = default;
  explicit ProductSpace(std::vector<FactorSpec> factors);

  int dim() const { return dim_; }
  int factor_count() const { return static_cast<int>(factors_.size()); }
  const FactorSpec& factor(int f) const;
  const std::vector<FactorSpec>& factors() const { return factors_; }

  // Occupation (level index) of factor f in product-basis state `index`.
  int occupation(int index, int f) const;
  // Inverse of `occupation`: product-basis index for the given digit string.
  int index_of(const std::vector<int>& occupations) const;

  // Spaces are compatible when kinds and dims agree factor by factor;
  // labels are cosmetic.
  bool compatible_with(const ProductSpace& other) const;

 private:
  std::vector<FactorSpec> factors_;
  std::vector<int> strides_;
  int dim_ = 0;
};

// Sparse complex operator bound to a ProductSpace. Entries are kept compressed
// with sorted inner indices, so iteration order is deterministic.
class OperatorMatrix {
 public:
  OperatorMatrix() = default;
  explicit OperatorMatrix(ProductSpace space);  // zero operator
  OperatorMatrix(ProductSpace space, SparseMat entries,
                 std::optional<bool> hermitian_hint = std::nullopt);

  static OperatorMatrix identity(const ProductSpace& space);
  static OperatorMatrix from_dense(const ProductSpace& space, const DenseMat& m,
                                   std::optional<bool> hermitian_hint = std::nullopt);

  const ProductSpace& space() const { return space_; }
  const SparseMat& entries() const { return entries_; }
  DenseMat dense() const { return DenseMat(entries_); }
  int dim() const { return space_.dim(); }
  int nonzeros() const { return static_cast<int>(entries_.nonZeros()); }

  std::optional<bool> hermitian_hint() const { return hermitian_hint_; }
  void set_hermitian_hint(std::optional<bool> hint) { hermitian_hint_ = hint; }

 private:
  ProductSpace space_;
  SparseMat entries_;
  std::optional<bool> hermitian_hint_;
};

namespace ops {

// ---- builders -------------------------------------------------------------

// Lowering operator on factor f: boson annihilator a (entries sqrt(n) on the
// superdiagonal) or fermion annihilator c with its Jordan-Wigner string.
// Rejects qudit factors; use build_transition for those.
OperatorMatrix build_ladder(const ProductSpace& space, int f);

// |i><j| on a qudit or boson factor. Rejected for fermions, where an
// unstringed transition is not a physical operator; the diagonal cases are
// covered by build_number / build_hole.
OperatorMatrix build_transition(const ProductSpace& space, int f, int i, int j);

// Level-number operator diag(0, 1, ..., dim-1) on factor f (any kind).
OperatorMatrix build_number(const ProductSpace& space, int f);

// Hole operator 1 - n on a fermion factor.
OperatorMatrix build_hole(const ProductSpace& space, int f);

// ---- algebra ---------------------------------------------------------------

OperatorMatrix add(const OperatorMatrix& a, const OperatorMatrix& b);
OperatorMatrix sub(const OperatorMatrix& a, const OperatorMatrix& b);
OperatorMatrix scale(cplx c, const OperatorMatrix& a);
OperatorMatrix mul(const OperatorMatrix& a, const OperatorMatrix& b);
OperatorMatrix adjoint(const OperatorMatrix& a);
OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b);

// Literal Kronecker composition onto the concatenated space [a-factors,
// b-factors]. Correct for composing boson/qudit-mode operators with a
// self-contained subsystem operator; when Jordan-Wigner strings must span
// both parts, build directly on the full space instead.
OperatorMatrix tensor_product(const OperatorMatrix& a, const OperatorMatrix& b);

// e^S H e^{-S} for anti-Hermitian S, computed through the eigendecomposition
// of -iS (exactly unitary, spectrum preserving). Errors when
// max|S + S^dagger| exceeds 1e-10.
OperatorMatrix matrix_exponential_rotate(const OperatorMatrix& h,
                                         const OperatorMatrix& s);

// ---- norms and checks -------------------------------------------------------

double max_abs(const OperatorMatrix& a);
double max_abs_diff(const OperatorMatrix& a, const OperatorMatrix& b);
// max|A - A^dagger|; 0 for Hermitian operators.
double hermiticity_defect(const OperatorMatrix& a);
bool is_hermitian(const OperatorMatrix& a, double tol = 1e-12);
// Throws SpecError unless A is Hermitian within tol * max(1, max_abs(A)).
void require_hermitian(const OperatorMatrix& a, const std::string& role,
                       double tol = 1e-12);

// ---- truncation interior -----------------------------------------------------

// Marks product states whose every boson occupation is at most
// (factor dim - 1 - margin). Non-boson factors are unconstrained. The interior
// is where truncated-space results agree with the untruncated theory.
std::vector<bool> interior_mask(const ProductSpace& space, int margin);

// max |A_{rc} - B_{rc}| over rows and columns that are both inside the mask.
double max_abs_diff_masked(const OperatorMatrix& a, const OperatorMatrix& b,
                           const std::vector<bool>& mask);

// Compression of A onto the states selected by `keep` (order preserving);
// `target` must have dim == count(keep).
OperatorMatrix restrict_to_states(const OperatorMatrix& a,
                                  const std::vector<bool>& keep,
                                  const ProductSpace& target);

}  // namespace ops

inline OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
  return ops::add(a, b);
}
inline OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
  return ops::sub(a, b);
}
inline OperatorMatrix operator*(cplx c, const OperatorMatrix& a) {
  return ops::scale(c, a);
}
inline OperatorMatrix operator*(double c, const OperatorMatrix& a) {
  return ops::scale(cplx(c, 0.0), a);
}
inline OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
  return ops::mul(a, b);
}
inline OperatorMatrix operator-(const OperatorMatrix& a) {
  return ops::scale(cplx(-1.0, 0.0), a);
}

}  // namespace swlab
