// Cluster-separation and heavy-tailed spectral diagnostics.
#pragma once

#include "prefk/core.hpp"

#include <limits>
#include <vector>

namespace prefk {

struct ClusterAssignment {
  std::vector<RealVector> points;
  std::vector<std::size_t> labels;
  std::size_t k = 0;
};

/// Davies-Bouldin score (1/k) sum_i max_{j != i} (S_i + S_j) / D_ij, where S_i
/// is the mean distance of cluster i's points to its centroid and D_ij the
/// distance between centroids. Lower is better.
inline double davies_bouldin(const ClusterAssignment& a) {
  if (a.k < 2) throw Error(ErrorKind::InvalidInput, "Davies-Bouldin needs at least two clusters");
  if (a.points.size() != a.labels.size() || a.points.empty()) {
    throw Error(ErrorKind::InvalidInput, "points and labels must align");
  }
  const Eigen::Index dim = a.points.front().size();
  std::vector<RealVector> centroid(a.k, RealVector::Zero(dim));
  std::vector<std::size_t> count(a.k, 0);
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    if (a.points[i].size() != dim) throw Error(ErrorKind::InvalidInput, "points differ in dimension");
    if (a.labels[i] >= a.k) throw Error(ErrorKind::InvalidInput, "label out of range");
    centroid[a.labels[i]] += a.points[i];
    ++count[a.labels[i]];
  }
  for (std::size_t c = 0; c < a.k; ++c) {
    if (count[c] == 0) throw Error(ErrorKind::InvalidInput, "cluster " + std::to_string(c) + " is empty");
    centroid[c] /= static_cast<double>(count[c]);
  }
  std::vector<double> scatter(a.k, 0.0);
  for (std::size_t i = 0; i < a.points.size(); ++i) scatter[a.labels[i]] += (a.points[i] - centroid[a.labels[i]]).norm();
  for (std::size_t c = 0; c < a.k; ++c) scatter[c] /= static_cast<double>(count[c]);

  double total = 0.0;
  for (std::size_t i = 0; i < a.k; ++i) {
    double worst = 0.0;
    for (std::size_t j = 0; j < a.k; ++j) {
      if (i == j) continue;
      const double dist = (centroid[i] - centroid[j]).norm();
      if (!(dist > 0.0)) {
        throw Error(ErrorKind::DegenerateClusters, "clusters " + std::to_string(i) + " and " + std::to_string(j) +
                                                       " share a centroid");
      }
      worst = std::max(worst, (scatter[i] + scatter[j]) / dist);
    }
    total += worst;
  }
  return total / static_cast<double>(a.k);
}

/// Empirical spectral density: descending eigenvalues of W^T W, computed from
/// the smaller of the two Gram matrices (identical nonzero spectrum).
struct ESD {
  RealVector eigenvalues;
};

inline ESD esd_from_matrix(const RealMatrix& w) {
  if (w.size() == 0) throw Error(ErrorKind::InvalidInput, "weight matrix is empty");
  if (!w.allFinite()) throw Error(ErrorKind::InvalidInput, "weight matrix has non-finite entries");
  const RealMatrix gram = w.rows() < w.cols() ? RealMatrix(w * w.transpose()) : RealMatrix(w.transpose() * w);
  RealVector ev = sym_spd_eigvals(gram);
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::max(ev(i), 0.0);
  return ESD{ev};
}

/// Hill estimate of the density exponent alpha in rho(lambda) ~ lambda^-alpha:
/// 1 + k / sum_{i<=k} ln(lambda_(i) / lambda_(k+1)). A perfectly flat tail
/// yields +infinity.
inline double hill_alpha(const ESD& esd, std::size_t k) {
  const auto n = static_cast<std::size_t>(esd.eigenvalues.size());
  if (k < 2 || k >= n) throw Error(ErrorKind::InvalidInput, "tail size must satisfy 2 <= k < n");
  const double floor = esd.eigenvalues(static_cast<Eigen::Index>(k));
  if (!(floor > 0.0)) throw Error(ErrorKind::InvalidInput, "tail eigenvalues must be positive");
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += std::log(esd.eigenvalues(static_cast<Eigen::Index>(i)) / floor);
  if (sum == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 + static_cast<double>(k) / sum;
}

struct TailRule {
  double fraction = 0.1;
  std::size_t min_k = 2;

  std::size_t tail_size(std::size_t n) const {
    return std::max(min_k, static_cast<std::size_t>(fraction * static_cast<double>(n)));
  }
};

struct LayerFit {
  double alpha;
  double lambda_max;
};

struct HTSRReport {
  std::vector<LayerFit> layers;
  double weighted_alpha = 0.0;
};

/// (1/L) sum_l alpha_l ln lambda_max_l. A layer with lambda_max = 1
/// contributes zero whatever its alpha.
inline double weighted_alpha_from_fits(const std::vector<LayerFit>& fits) {
  if (fits.empty()) throw Error(ErrorKind::InvalidInput, "weighted alpha needs at least one layer");
  double sum = 0.0;
  for (std::size_t l = 0; l < fits.size(); ++l) {
    const double log_max = std::log(fits[l].lambda_max);
    if (log_max == 0.0) continue;
    if (!std::isfinite(fits[l].alpha)) {
      throw Error(ErrorKind::InvalidInput, "layer " + std::to_string(l) + " has a flat spectral tail", l);
    }
    sum += fits[l].alpha * log_max;
  }
  return sum / static_cast<double>(fits.size());
}

inline HTSRReport weighted_alpha(const std::vector<RealMatrix>& layers, const TailRule& rule = {}) {
  if (layers.empty()) throw Error(ErrorKind::InvalidInput, "weighted alpha needs at least one layer");
  HTSRReport report;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    try {
      const ESD esd = esd_from_matrix(layers[l]);
      const auto n = static_cast<std::size_t>(esd.eigenvalues.size());
      report.layers.push_back({hill_alpha(esd, rule.tail_size(n)), esd.eigenvalues(0)});
    } catch (const Error& e) {
      throw Error(e.kind(), "layer " + std::to_string(l) + ": " + e.message(), l);
    }
  }
  report.weighted_alpha = weighted_alpha_from_fits(report.layers);
  return report;
}

}  // namespace prefk
