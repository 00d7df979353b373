// Data-driven kernel and divergence selection: geometric metrics over
// embedding triplets, distributional metrics over policy/reference pairs, and
// the two first-match decision rules.
#pragma once

#include "prefk/core.hpp"
#include "prefk/divergences.hpp"

#include <string>
#include <vector>

namespace prefk {

struct EmbeddingTriplet {
  RealVector x;
  RealVector y_pos;
  RealVector y_neg;
};

enum class PndForm { Ratio, Difference };

struct KernelSelectionMetrics {
  double pnd = 0.0;
  double pnav = 0.0;
  double tat = 0.0;
  double nag = 0.0;
  PndForm form = PndForm::Ratio;
};

struct DivergenceSelectionMetrics {
  double support_overlap = 1.0;
  double drift = 0.0;
  double kurtosis = 0.0;
  double smoothness = 0.0;
};

/// Decision thresholds. Kernel rule: eps1..eps5; divergence rule: div_eps1..3.
/// `low_overlap`, `low_smoothness` and `support_floor` formalize qualitative
/// conditions; `balance_tol` is the half-width of "approximately balanced".
struct Thresholds {
  double eps1 = 0.5;
  double eps2 = 0.3;
  double eps3 = 0.2;
  double eps4 = 0.7;
  double eps5 = 0.1;
  double div_eps1 = 0.6;
  double div_eps2 = 0.3;
  double div_eps3 = 3.0;
  double low_overlap = 0.3;
  double low_smoothness = 0.1;
  double support_floor = 1e-8;
  double balance_tol = 0.05;

  void validate() const {
    for (double v : {eps1, eps2, eps3, eps4, eps5, div_eps1, div_eps2, div_eps3, low_overlap, low_smoothness,
                     support_floor, balance_tol}) {
      if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorKind::InvalidInput, "thresholds must be positive");
    }
  }
};

struct TripletDistances {
  double d_pos;
  double d_neg;
  double d_pair;
};

inline TripletDistances triplet_distances(const EmbeddingTriplet& t) {
  if (t.x.size() == 0 || t.x.size() != t.y_pos.size() || t.x.size() != t.y_neg.size()) {
    throw Error(ErrorKind::InvalidInput, "triplet embeddings must share one nonzero dimension");
  }
  return {(t.x - t.y_pos).norm(), (t.x - t.y_neg).norm(), (t.y_pos - t.y_neg).norm()};
}

inline KernelSelectionMetrics kernel_metrics(const std::vector<EmbeddingTriplet>& triplets,
                                             PndForm form = PndForm::Ratio) {
  if (triplets.empty()) throw Error(ErrorKind::InvalidInput, "kernel metrics need at least one triplet");
  KernelSelectionMetrics m;
  m.form = form;
  for (std::size_t i = 0; i < triplets.size(); ++i) {
    const auto d = triplet_distances(triplets[i]);
    const double span = d.d_pos + d.d_neg;
    if (span == 0.0) throw Error(ErrorKind::DegenerateTriplet, "both distances are zero", i);
    if (form == PndForm::Ratio) {
      if (d.d_neg == 0.0) throw Error(ErrorKind::DegenerateTriplet, "rejected distance is zero", i);
      m.pnd += d.d_pos / d.d_neg;
    } else {
      m.pnd += d.d_pos - d.d_neg;
    }
    const double gap = d.d_pos - d.d_neg;
    m.pnav += gap * gap;
    m.tat += d.d_pair / span;
    m.nag += (d.d_neg - d.d_pos) / span;
  }
  const double n = static_cast<double>(triplets.size());
  m.pnd /= n;
  m.pnav /= n;
  m.tat /= n;
  m.nag /= n;
  return m;
}

/// |{i : p_i > floor and q_i > floor}| / |{i : p_i > floor or q_i > floor}|.
inline double support_overlap(const ProbabilityDistribution& p, const ProbabilityDistribution& q, double floor = 1e-8) {
  if (p.size() != q.size()) throw Error(ErrorKind::InvalidInput, "distributions differ in dimension");
  int both = 0, either = 0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const bool in_p = p[i] > floor, in_q = q[i] > floor;
    both += in_p && in_q;
    either += in_p || in_q;
  }
  return either == 0 ? 1.0 : static_cast<double>(both) / either;
}

inline double drift_magnitude(const std::vector<EmbeddingTriplet>& triplets) {
  if (triplets.empty()) throw Error(ErrorKind::InvalidInput, "drift needs at least one triplet");
  double sum = 0.0;
  for (const auto& t : triplets) {
    const auto d = triplet_distances(t);
    sum += d.d_pos - d.d_neg;
  }
  return sum / static_cast<double>(triplets.size());
}

/// Population kurtosis E[(x - mu)^4] / E[(x - mu)^2]^2 (not excess kurtosis).
inline double kurtosis(const std::vector<double>& samples) {
  if (samples.empty()) throw Error(ErrorKind::InvalidInput, "kurtosis needs samples");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double s : samples) {
    const double d2 = (s - mean) * (s - mean);
    m2 += d2;
    m4 += d2 * d2;
  }
  m2 /= n;
  m4 /= n;
  if (!(m2 > 0.0)) throw Error(ErrorKind::KurtosisUndefined, "samples have zero variance");
  return m4 / (m2 * m2);
}

/// Mean Wasserstein-1 distance between consecutive checkpoints; 0 when only
/// one checkpoint exists.
inline double smoothness(const std::vector<ProbabilityDistribution>& checkpoints) {
  if (checkpoints.empty()) throw Error(ErrorKind::InvalidInput, "smoothness needs at least one checkpoint");
  if (checkpoints.size() == 1) return 0.0;
  double sum = 0.0;
  for (std::size_t t = 0; t + 1 < checkpoints.size(); ++t) sum += wasserstein_1d(checkpoints[t], checkpoints[t + 1]);
  return sum / static_cast<double>(checkpoints.size() - 1);
}

inline DivergenceSelectionMetrics divergence_metrics(const std::vector<ProbabilityDistribution>& policy_dists,
                                                     const std::vector<ProbabilityDistribution>& ref_dists,
                                                     const std::vector<ProbabilityDistribution>& checkpoints,
                                                     const std::vector<double>& stat_samples,
                                                     const std::vector<EmbeddingTriplet>& triplets,
                                                     const Thresholds& th = {}) {
  if (policy_dists.empty() || policy_dists.size() != ref_dists.size()) {
    throw Error(ErrorKind::InvalidInput, "policy and reference distributions must align and be nonempty");
  }
  DivergenceSelectionMetrics m;
  double overlap = 0.0;
  for (std::size_t i = 0; i < policy_dists.size(); ++i) {
    overlap += support_overlap(policy_dists[i], ref_dists[i], th.support_floor);
  }
  m.support_overlap = overlap / static_cast<double>(policy_dists.size());
  m.drift = triplets.empty() ? 0.0 : drift_magnitude(triplets);
  m.kurtosis = kurtosis(stat_samples);
  m.smoothness = smoothness(checkpoints);
  return m;
}

struct SelectionResult {
  std::string name;
  std::string rule;
};

inline SelectionResult select_kernel(const KernelSelectionMetrics& m, const Thresholds& th = {}) {
  const double balance = m.form == PndForm::Ratio ? 1.0 : 0.0;
  if (m.pnav > th.eps1 && m.tat < th.eps2) return {"rbf", "pnav>eps1 and tat<eps2"};
  if (std::abs(m.nag) < th.balance_tol && std::abs(m.pnd - balance) < th.balance_tol) {
    return {"polynomial", "nag~0 and pnd~balance"};
  }
  if (m.nag > 0.0 && m.pnav < th.eps3) return {"mahalanobis", "nag>0 and pnav<eps3"};
  if (m.tat > th.eps4 && m.pnd < th.eps5) return {"spectral", "tat>eps4 and pnd<eps5"};
  return {"rbf", "default"};
}

inline SelectionResult select_divergence(const DivergenceSelectionMetrics& m, const Thresholds& th = {}) {
  if (m.support_overlap > th.div_eps1) return {"bhattacharyya", "overlap>eps1"};
  if (m.drift > th.div_eps2) return {"wasserstein", "drift>eps2"};
  if (m.kurtosis > th.div_eps3) return {"renyi", "kurtosis>eps3"};
  if (m.support_overlap <= th.low_overlap && m.kurtosis <= th.div_eps3) {
    return {"js", "low overlap and low kurtosis"};
  }
  if (m.smoothness <= th.low_smoothness && m.kurtosis <= th.div_eps3) {
    return {"hellinger", "low smoothness and low kurtosis"};
  }
  return {"kl", "default"};
}

}  // namespace prefk
