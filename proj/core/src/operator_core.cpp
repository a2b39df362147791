#include "swlab/operator_core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <utility>

#ifndef SWLAB_VERSION
#define SWLAB_VERSION "0.0.0"
#endif

namespace swlab {

const char* version() { return SWLAB_VERSION; }

const char* to_string(FactorKind kind) {
  switch (kind) {
    case FactorKind::Qudit: return "qudit";
    case FactorKind::Boson: return "boson";
    case FactorKind::Fermion: return "fermion";
  }
  return "?";
}

namespace {

constexpr int kMaxDim = 1 << 20;

std::string factor_name(const FactorSpec& f, int index) {
  std::string name = "factor " + std::to_string(index);
  if (!f.label.empty()) name += " ('" + f.label + "')";
  return name;
}

}  // namespace

ProductSpace::ProductSpace(std::vector<FactorSpec> factors)
    : factors_(std::move(factors)) {
  if (factors_.empty()) throw SpecError("ProductSpace needs at least one factor");
  long long total = 1;
  for (size_t i = 0; i < factors_.size(); ++i) {
    const FactorSpec& f = factors_[i];
    if (f.kind == FactorKind::Fermion && f.dim != 2) {
      throw SpecError(factor_name(f, static_cast<int>(i)) +
                      ": fermion factors must have dim 2, got " +
                      std::to_string(f.dim));
    }
    if (f.dim < 1) {
      throw SpecError(factor_name(f, static_cast<int>(i)) +
                      ": dim must be positive, got " + std::to_string(f.dim));
    }
    total *= f.dim;
    if (total > kMaxDim) {
      throw SpecError("ProductSpace dimension exceeds the supported maximum of " +
                      std::to_string(kMaxDim));
    }
  }
  dim_ = static_cast<int>(total);
  strides_.assign(factors_.size(), 1);
  for (int f = static_cast<int>(factors_.size()) - 2; f >= 0; --f) {
    strides_[f] = strides_[f + 1] * factors_[f + 1].dim;
  }
}

const FactorSpec& ProductSpace::factor(int f) const {
  if (f < 0 || f >= factor_count()) {
    throw SpecError("factor index " + std::to_string(f) + " out of range (have " +
                    std::to_string(factor_count()) + " factors)");
  }
  return factors_[f];
}

int ProductSpace::occupation(int index, int f) const {
  return (index / strides_[f]) % factors_[f].dim;
}

int ProductSpace::index_of(const std::vector<int>& occupations) const {
  if (static_cast<int>(occupations.size()) != factor_count()) {
    throw SpecError("occupation list length does not match factor count");
  }
  int index = 0;
  for (int f = 0; f < factor_count(); ++f) {
    if (occupations[f] < 0 || occupations[f] >= factors_[f].dim) {
      throw SpecError("occupation " + std::to_string(occupations[f]) +
                      " out of range for " + factor_name(factors_[f], f));
    }
    index += occupations[f] * strides_[f];
  }
  return index;
}

bool ProductSpace::compatible_with(const ProductSpace& other) const {
  if (factor_count() != other.factor_count()) return false;
  for (int f = 0; f < factor_count(); ++f) {
    if (factors_[f].kind != other.factors_[f].kind) return false;
    if (factors_[f].dim != other.factors_[f].dim) return false;
  }
  return true;
}

OperatorMatrix::OperatorMatrix(ProductSpace space)
    : space_(std::move(space)), entries_(space_.dim(), space_.dim()) {
  entries_.makeCompressed();
}

OperatorMatrix::OperatorMatrix(ProductSpace space, SparseMat entries,
                               std::optional<bool> hermitian_hint)
    : space_(std::move(space)),
      entries_(std::move(entries)),
      hermitian_hint_(hermitian_hint) {
  if (entries_.rows() != space_.dim() || entries_.cols() != space_.dim()) {
    throw SpecError("operator shape " + std::to_string(entries_.rows()) + "x" +
                    std::to_string(entries_.cols()) +
                    " does not match space dimension " +
                    std::to_string(space_.dim()));
  }
  entries_.prune([](int, int, const cplx& v) { return v != cplx(0.0, 0.0); });
  entries_.makeCompressed();
}

OperatorMatrix OperatorMatrix::identity(const ProductSpace& space) {
  SparseMat m(space.dim(), space.dim());
  m.setIdentity();
  return OperatorMatrix(space, std::move(m), true);
}

OperatorMatrix OperatorMatrix::from_dense(const ProductSpace& space,
                                          const DenseMat& m,
                                          std::optional<bool> hermitian_hint) {
  if (m.rows() != space.dim() || m.cols() != space.dim()) {
    throw SpecError("dense matrix shape does not match space dimension " +
                    std::to_string(space.dim()));
  }
  return OperatorMatrix(space, m.sparseView(0.0, 0.0), hermitian_hint);
}

namespace ops {

namespace {

void require_same_space(const OperatorMatrix& a, const OperatorMatrix& b,
                        const char* op) {
  if (!a.space().compatible_with(b.space())) {
    throw SpecError(std::string(op) + ": operators live on incompatible spaces");
  }
}

SparseMat kron(const SparseMat& a, const SparseMat& b) {
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(static_cast<size_t>(a.nonZeros()) * b.nonZeros());
  for (int ka = 0; ka < a.outerSize(); ++ka) {
    for (SparseMat::InnerIterator ita(a, ka); ita; ++ita) {
      for (int kb = 0; kb < b.outerSize(); ++kb) {
        for (SparseMat::InnerIterator itb(b, kb); itb; ++itb) {
          trips.emplace_back(ita.row() * b.rows() + itb.row(),
                             ita.col() * b.cols() + itb.col(),
                             ita.value() * itb.value());
        }
      }
    }
  }
  SparseMat out(a.rows() * b.rows(), a.cols() * b.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  out.makeCompressed();
  return out;
}

SparseMat local_identity(int dim) {
  SparseMat m(dim, dim);
  m.setIdentity();
  return m;
}

// Fermion parity diag(1, -1) used for Jordan-Wigner strings.
SparseMat local_parity() {
  SparseMat m(2, 2);
  m.insert(0, 0) = cplx(1.0, 0.0);
  m.insert(1, 1) = cplx(-1.0, 0.0);
  m.makeCompressed();
  return m;
}

// Chains local factor matrices into the product-space operator; any factor not
// present in `locals` gets the identity.
OperatorMatrix build_chain(const ProductSpace& space,
                           const std::vector<std::pair<int, SparseMat>>& locals,
                           std::optional<bool> hermitian_hint) {
  SparseMat acc = local_identity(1);
  for (int f = 0; f < space.factor_count(); ++f) {
    const SparseMat* piece = nullptr;
    for (const auto& [pf, m] : locals) {
      if (pf == f) piece = &m;
    }
    acc = piece ? kron(acc, *piece) : kron(acc, local_identity(space.factor(f).dim));
  }
  return OperatorMatrix(space, std::move(acc), hermitian_hint);
}

void require_factor_kind(const ProductSpace& space, int f, FactorKind kind,
                         const char* op) {
  const FactorSpec& spec = space.factor(f);
  if (spec.kind != kind) {
    throw SpecError(std::string(op) + ": " + factor_name(spec, f) + " is a " +
                    to_string(spec.kind) + ", expected " + to_string(kind));
  }
}

}  // namespace

OperatorMatrix build_ladder(const ProductSpace& space, int f) {
  const FactorSpec& spec = space.factor(f);
  if (spec.kind == FactorKind::Qudit) {
    throw SpecError("build_ladder: " + factor_name(spec, f) +
                    " is a qudit; ladder operators are defined for boson and "
                    "fermion factors, use build_transition instead");
  }
  std::vector<std::pair<int, SparseMat>> locals;
  if (spec.kind == FactorKind::Fermion) {
    // c_f = (prod of parities on earlier fermion factors) x c
    for (int g = 0; g < f; ++g) {
      if (space.factor(g).kind == FactorKind::Fermion) {
        locals.emplace_back(g, local_parity());
      }
    }
  }
  SparseMat a(spec.dim, spec.dim);
  for (int n = 1; n < spec.dim; ++n) {
    a.insert(n - 1, n) = cplx(std::sqrt(static_cast<double>(n)), 0.0);
  }
  a.makeCompressed();
  locals.emplace_back(f, std::move(a));
  return build_chain(space, locals, std::nullopt);
}

OperatorMatrix build_transition(const ProductSpace& space, int f, int i, int j) {
  const FactorSpec& spec = space.factor(f);
  if (spec.kind == FactorKind::Fermion) {
    throw SpecError("build_transition: " + factor_name(spec, f) +
                    " is a fermion; off-diagonal transitions need a "
                    "Jordan-Wigner string (use build_ladder), diagonal "
                    "projectors are build_number / build_hole combinations");
  }
  if (i < 0 || i >= spec.dim || j < 0 || j >= spec.dim) {
    throw SpecError("build_transition: levels (" + std::to_string(i) + ", " +
                    std::to_string(j) + ") out of range for " +
                    factor_name(spec, f));
  }
  SparseMat t(spec.dim, spec.dim);
  t.insert(i, j) = cplx(1.0, 0.0);
  t.makeCompressed();
  return build_chain(space, {{f, std::move(t)}},
                     i == j ? std::optional<bool>(true) : std::optional<bool>());
}

OperatorMatrix build_number(const ProductSpace& space, int f) {
  const FactorSpec& spec = space.factor(f);
  SparseMat n(spec.dim, spec.dim);
  for (int k = 1; k < spec.dim; ++k) n.insert(k, k) = cplx(static_cast<double>(k), 0.0);
  n.makeCompressed();
  return build_chain(space, {{f, std::move(n)}}, true);
}

OperatorMatrix build_hole(const ProductSpace& space, int f) {
  require_factor_kind(space, f, FactorKind::Fermion, "build_hole");
  SparseMat h(2, 2);
  h.insert(0, 0) = cplx(1.0, 0.0);
  h.makeCompressed();
  return build_chain(space, {{f, std::move(h)}}, true);
}

OperatorMatrix add(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_space(a, b, "add");
  std::optional<bool> hint;
  if (a.hermitian_hint() == true && b.hermitian_hint() == true) hint = true;
  return OperatorMatrix(a.space(), a.entries() + b.entries(), hint);
}

OperatorMatrix sub(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_space(a, b, "sub");
  std::optional<bool> hint;
  if (a.hermitian_hint() == true && b.hermitian_hint() == true) hint = true;
  return OperatorMatrix(a.space(), a.entries() - b.entries(), hint);
}

OperatorMatrix scale(cplx c, const OperatorMatrix& a) {
  std::optional<bool> hint;
  if (a.hermitian_hint() == true && c.imag() == 0.0) hint = true;
  return OperatorMatrix(a.space(), SparseMat(c * a.entries()), hint);
}

OperatorMatrix mul(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_space(a, b, "mul");
  SparseMat prod = a.entries() * b.entries();
  return OperatorMatrix(a.space(), std::move(prod));
}

OperatorMatrix adjoint(const OperatorMatrix& a) {
  return OperatorMatrix(a.space(), SparseMat(a.entries().adjoint()),
                        a.hermitian_hint());
}

OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_space(a, b, "commutator");
  SparseMat c = a.entries() * b.entries() - b.entries() * a.entries();
  return OperatorMatrix(a.space(), std::move(c));
}

OperatorMatrix tensor_product(const OperatorMatrix& a, const OperatorMatrix& b) {
  std::vector<FactorSpec> factors = a.space().factors();
  const std::vector<FactorSpec>& more = b.space().factors();
  factors.insert(factors.end(), more.begin(), more.end());
  std::optional<bool> hint;
  if (a.hermitian_hint() == true && b.hermitian_hint() == true) hint = true;
  return OperatorMatrix(ProductSpace(std::move(factors)),
                        kron(a.entries(), b.entries()), hint);
}

OperatorMatrix matrix_exponential_rotate(const OperatorMatrix& h,
                                         const OperatorMatrix& s) {
  require_same_space(h, s, "matrix_exponential_rotate");
  DenseMat sd = s.dense();
  const double anti_defect = (sd + sd.adjoint().eval()).cwiseAbs().maxCoeff();
  if (anti_defect > 1e-10) {
    throw GuardError("matrix_exponential_rotate: generator is not "
                     "anti-Hermitian, max|S + S^dagger| = " +
                     std::to_string(anti_defect));
  }
  // S = iK with K Hermitian; symmetrize K to absorb the allowed 1e-10 slack.
  DenseMat k = cplx(0.0, -1.0) * sd;
  k = (k + k.adjoint().eval()) / 2.0;
  Eigen::SelfAdjointEigenSolver<DenseMat> solver(k);
  if (solver.info() != Eigen::Success) {
    throw GuardError("matrix_exponential_rotate: eigensolver failed");
  }
  const Eigen::VectorXd lambda = solver.eigenvalues();
  const DenseMat w = solver.eigenvectors();
  Eigen::VectorXcd phases(lambda.size());
  for (int i = 0; i < lambda.size(); ++i) {
    phases(i) = std::exp(cplx(0.0, lambda(i)));
  }
  DenseMat u = w * phases.asDiagonal() * w.adjoint();
  DenseMat rotated = u * h.dense() * u.adjoint();
  return OperatorMatrix::from_dense(h.space(), rotated, h.hermitian_hint());
}

double max_abs(const OperatorMatrix& a) {
  double m = 0.0;
  const SparseMat& e = a.entries();
  for (int k = 0; k < e.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(e, k); it; ++it) {
      m = std::max(m, std::abs(it.value()));
    }
  }
  return m;
}

double max_abs_diff(const OperatorMatrix& a, const OperatorMatrix& b) {
  require_same_space(a, b, "max_abs_diff");
  return max_abs(sub(a, b));
}

double hermiticity_defect(const OperatorMatrix& a) {
  SparseMat d = a.entries() - SparseMat(a.entries().adjoint());
  double m = 0.0;
  for (int k = 0; k < d.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(d, k); it; ++it) {
      m = std::max(m, std::abs(it.value()));
    }
  }
  return m;
}

bool is_hermitian(const OperatorMatrix& a, double tol) {
  return hermiticity_defect(a) <= tol * std::max(1.0, max_abs(a));
}

void require_hermitian(const OperatorMatrix& a, const std::string& role,
                       double tol) {
  const double defect = hermiticity_defect(a);
  const double bound = tol * std::max(1.0, max_abs(a));
  if (defect > bound) {
    throw SpecError(role + " must be Hermitian: max|A - A^dagger| = " +
                    std::to_string(defect) + " exceeds " + std::to_string(bound));
  }
  if (a.hermitian_hint() == false) {
    throw SpecError(role + " carries hermitian_hint = false but a Hermitian "
                           "operator is required");
  }
}

std::vector<bool> interior_mask(const ProductSpace& space, int margin) {
  if (margin < 0) throw SpecError("interior_mask: margin must be >= 0");
  std::vector<bool> mask(space.dim(), true);
  for (int f = 0; f < space.factor_count(); ++f) {
    if (space.factor(f).kind != FactorKind::Boson) continue;
    const int cap = space.factor(f).dim - 1 - margin;
    for (int s = 0; s < space.dim(); ++s) {
      if (space.occupation(s, f) > cap) mask[s] = false;
    }
  }
  return mask;
}

double max_abs_diff_masked(const OperatorMatrix& a, const OperatorMatrix& b,
                           const std::vector<bool>& mask) {
  require_same_space(a, b, "max_abs_diff_masked");
  if (static_cast<int>(mask.size()) != a.dim()) {
    throw SpecError("max_abs_diff_masked: mask length does not match dimension");
  }
  SparseMat d = a.entries() - b.entries();
  double m = 0.0;
  for (int k = 0; k < d.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(d, k); it; ++it) {
      if (mask[it.row()] && mask[it.col()]) m = std::max(m, std::abs(it.value()));
    }
  }
  return m;
}

OperatorMatrix restrict_to_states(const OperatorMatrix& a,
                                  const std::vector<bool>& keep,
                                  const ProductSpace& target) {
  if (static_cast<int>(keep.size()) != a.dim()) {
    throw SpecError("restrict_to_states: mask length does not match dimension");
  }
  std::vector<int> to_new(a.dim(), -1);
  int count = 0;
  for (int s = 0; s < a.dim(); ++s) {
    if (keep[s]) to_new[s] = count++;
  }
  if (count != target.dim()) {
    throw SpecError("restrict_to_states: target space dim " +
                    std::to_string(target.dim()) + " does not match kept state "
                    "count " + std::to_string(count));
  }
  std::vector<Eigen::Triplet<cplx>> trips;
  const SparseMat& e = a.entries();
  for (int k = 0; k < e.outerSize(); ++k) {
    for (SparseMat::InnerIterator it(e, k); it; ++it) {
      if (to_new[it.row()] >= 0 && to_new[it.col()] >= 0) {
        trips.emplace_back(to_new[it.row()], to_new[it.col()], it.value());
      }
    }
  }
  SparseMat out(target.dim(), target.dim());
  out.setFromTriplets(trips.begin(), trips.end());
  return OperatorMatrix(target, std::move(out), a.hermitian_hint());
}

}  // namespace ops
}  // namespace swlab
