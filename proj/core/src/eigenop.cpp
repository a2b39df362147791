#include "swlab/eigenop.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace swlab::eigenop {

namespace {

struct Entry {
  int row;
  int col;
  cplx value;
  double omega;
};

struct Cluster {
  double representative = 0.0;
  double weight = 0.0;
  std::vector<Entry> entries;
};

// Group entries whose frequencies chain together within bin_tol. The
// representative is the |element|^2-weighted mean, except that a cluster of
// bitwise-identical frequencies keeps that exact value and a cluster lying
// entirely inside [-bin_tol, +bin_tol] is pinned to zero.
std::vector<Cluster> cluster_entries(std::vector<Entry> entries, double bin_tol) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.omega < b.omega; });
  std::vector<Cluster> clusters;
  size_t begin = 0;
  for (size_t i = 0; i <= entries.size(); ++i) {
    const bool cut = (i == entries.size()) ||
                     (i > begin && entries[i].omega - entries[i - 1].omega > bin_tol);
    if (!cut) continue;

    Cluster c;
    const double lo = entries[begin].omega;
    const double hi = entries[i - 1].omega;
    if (lo < -bin_tol && hi > bin_tol) {
      throw GuardError(
          "eigen_decompose: frequency cluster [" + std::to_string(lo) + ", " +
          std::to_string(hi) +
          "] straddles zero beyond bin_tol; a transition would be merged with "
          "its adjoint. Reduce bin_tol or separate the degenerate levels.");
    }
    double wsum = 0.0, wmean = 0.0;
    for (size_t k = begin; k < i; ++k) {
      const double w = std::norm(entries[k].value);
      wsum += w;
      wmean += w * entries[k].omega;
      c.entries.push_back(entries[k]);
    }
    c.weight = wsum;
    if (lo == hi) {
      c.representative = lo;
    } else if (wsum > 0.0) {
      c.representative = wmean / wsum;
    } else {
      c.representative = 0.5 * (lo + hi);
    }
    if (lo >= -bin_tol && hi <= bin_tol) c.representative = 0.0;
    clusters.push_back(std::move(c));
    begin = i;
  }
  return clusters;
}

}  // namespace

const BohrComponent* BohrDecomposition::find(double omega, double tol) const {
  const BohrComponent* best = nullptr;
  double best_dist = tol;
  for (const auto& c : components) {
    const double dist = std::abs(c.omega - omega);
    if (dist <= best_dist) {
      best = &c;
      best_dist = dist;
    }
  }
  return best;
}

const BohrComponent* BohrDecomposition::zero_component() const {
  for (const auto& c : components) {
    if (c.omega == 0.0) return &c;
  }
  return nullptr;
}

BohrDecomposition eigen_decompose(const OperatorMatrix& v,
                                  const spectral::Spectrum& spectrum,
                                  const DecomposeOptions& options) {
  if (v.dim() != spectrum.dim()) {
    throw SpecError("eigen_decompose: operator dimension does not match spectrum");
  }
  const int d = v.dim();
  const double spread = spectrum.spread();
  const double bin_tol =
      options.bin_tol >= 0.0 ? options.bin_tol : 1e-9 * std::max(1.0, spread);
  const double drop_rel = options.drop_tol >= 0.0 ? options.drop_tol : 4e-15;

  BohrDecomposition out;
  out.bin_tol = bin_tol;
  out.spread = spread;

  std::vector<Entry> entries;
  if (spectrum.diagonal_input) {
    // Product states are eigenstates: read frequencies straight off the
    // original sparse entries, so the partition is bitwise exact.
    std::vector<double> energy_of(d);
    for (int j = 0; j < d; ++j) energy_of[spectrum.permutation[j]] = spectrum.energies(j);
    const SparseMat& e = v.entries();
    for (int k = 0; k < e.outerSize(); ++k) {
      for (SparseMat::InnerIterator it(e, k); it; ++it) {
        entries.push_back(Entry{static_cast<int>(it.row()), static_cast<int>(it.col()),
                                it.value(),
                                energy_of[it.col()] - energy_of[it.row()]});
      }
    }
  } else {
    const DenseMat tilde = spectrum.to_eigenbasis(v);
    const double drop = drop_rel * tilde.cwiseAbs().maxCoeff();
    for (int c = 0; c < d; ++c) {
      for (int r = 0; r < d; ++r) {
        if (std::abs(tilde(r, c)) > drop) {
          entries.push_back(Entry{r, c, tilde(r, c),
                                  spectrum.energies(c) - spectrum.energies(r)});
        }
      }
    }
  }

  if (entries.empty()) return out;

  std::vector<Cluster> clusters = cluster_entries(std::move(entries), bin_tol);
  out.components.reserve(clusters.size());
  for (auto& cluster : clusters) {
    std::vector<Eigen::Triplet<cplx>> trips;
    trips.reserve(cluster.entries.size());
    for (const Entry& e : cluster.entries) trips.emplace_back(e.row, e.col, e.value);
    SparseMat m(d, d);
    m.setFromTriplets(trips.begin(), trips.end());

    OperatorMatrix op = spectrum.diagonal_input
                            ? OperatorMatrix(v.space(), std::move(m))
                            : spectrum.from_eigenbasis(v.space(), DenseMat(m));
    if (cluster.representative == 0.0) op.set_hermitian_hint(v.hermitian_hint());
    out.components.push_back(
        BohrComponent{cluster.representative, std::move(op), cluster.weight});
  }

  OperatorMatrix total(v.space());
  for (const auto& c : out.components) total = ops::add(total, c.op);
  out.recomposition_error = ops::max_abs_diff(total, v);
  return out;
}

double verify_time_evolution(const OperatorMatrix& v,
                             const spectral::Spectrum& spectrum,
                             const BohrDecomposition& decomposition,
                             const std::vector<double>& times) {
  const int d = v.dim();
  const DenseMat tilde = spectrum.to_eigenbasis(v);
  std::vector<DenseMat> tilde_components;
  tilde_components.reserve(decomposition.components.size());
  for (const auto& c : decomposition.components) {
    tilde_components.push_back(spectrum.to_eigenbasis(c.op));
  }

  double worst = 0.0;
  for (double t : times) {
    DenseMat exact(d, d);
    for (int c = 0; c < d; ++c) {
      for (int r = 0; r < d; ++r) {
        const double phase = (spectrum.energies(r) - spectrum.energies(c)) * t;
        exact(r, c) = std::polar(1.0, phase) * tilde(r, c);
      }
    }
    DenseMat recomposed = DenseMat::Zero(d, d);
    for (size_t k = 0; k < decomposition.components.size(); ++k) {
      recomposed += std::polar(1.0, -decomposition.components[k].omega * t) *
                    tilde_components[k];
    }
    worst = std::max(worst, (exact - recomposed).cwiseAbs().maxCoeff());
  }
  return worst;
}

ComponentBlockSplit split_component_by_blocks(
    const BohrComponent& component, const spectral::Spectrum& spectrum,
    const spectral::BlockStructure& blocks) {
  spectral::SplitV split = spectral::split_v(component.op, spectrum, blocks);
  return ComponentBlockSplit{std::move(split.v_d), std::move(split.v_o)};
}

}  // namespace swlab::eigenop
