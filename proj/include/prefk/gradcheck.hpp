// Seeded random gradient-check cases spanning every kernel x divergence pair.
#pragma once

#include "prefk/gradient.hpp"

#include <random>
#include <vector>

namespace prefk {

inline constexpr std::size_t kGradcheckKernelCount = 6;
inline constexpr std::size_t kGradcheckDivergenceCount = 7;

inline const char* gradcheck_kernel_label(std::size_t i) {
  static constexpr std::array<const char*, kGradcheckKernelCount> names{"identity", "polynomial", "rbf",
                                                                        "spectral", "mahalanobis", "hmk"};
  return names.at(i);
}

inline DivergenceKind gradcheck_divergence(std::size_t i) {
  switch (i) {
    case 0: return KullbackLeibler{};
    case 1: return JensenShannon{};
    case 2: return Hellinger{};
    case 3: return Renyi{2.0};
    case 4: return Bhattacharyya{};
    case 5: return Wasserstein1D{};
    default: return FDivergence::chi_squared();
  }
}

inline const char* gradcheck_divergence_label(std::size_t i) {
  static constexpr std::array<const char*, kGradcheckDivergenceCount> names{
      "kl", "js", "hellinger", "renyi2", "bhattacharyya", "wasserstein", "f_chi2"};
  return names.at(i);
}

struct GradcheckCase {
  ObjectiveConfig config;
  ToyPolicy policy;
  ToyPolicy reference;
  std::vector<PreferenceRecord> records;
};

/// A random small problem: 3 contexts, 4 outcomes, 3-dim embeddings with
/// entries in [0.5, 1.5] (so dot products stay away from the ratio poles),
/// standard-normal policy and reference logits, six records, and random
/// mixture logits. Kernel hyperparameters come from `quartet`.
inline GradcheckCase make_gradcheck_case(std::size_t kernel_index, std::size_t divergence_index, std::uint64_t seed,
                                         const ObjectiveConfig& base, const KernelQuartet& quartet = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.5, 1.5);
  constexpr Eigen::Index X = 3, C = 4, M = 3;

  GradcheckCase gc;
  gc.config = base;
  gc.config.divergence = gradcheck_divergence(divergence_index);
  gc.policy.logits = RealMatrix(X, C);
  gc.policy.U = RealMatrix(X, M);
  gc.policy.V = RealMatrix(C, M);
  for (Eigen::Index i = 0; i < gc.policy.logits.size(); ++i) gc.policy.logits(i) = normal(rng);
  for (Eigen::Index i = 0; i < gc.policy.U.size(); ++i) gc.policy.U(i) = unit(rng);
  for (Eigen::Index i = 0; i < gc.policy.V.size(); ++i) gc.policy.V(i) = unit(rng);
  gc.reference = gc.policy;
  for (Eigen::Index i = 0; i < gc.reference.logits.size(); ++i) gc.reference.logits(i) = normal(rng);

  std::uniform_int_distribution<std::size_t> ctx(0, X - 1), out(0, C - 1);
  for (int n = 0; n < 6; ++n) {
    PreferenceRecord rec{ctx(rng), out(rng), 0};
    do rec.y_neg = out(rng);
    while (rec.y_neg == rec.y_pos);
    gc.records.push_back(rec);
  }

  switch (kernel_index) {
    case 0: gc.config.kernel = KernelSpec{IdentityKernel{}}; break;
    case 1: gc.config.kernel = KernelSpec{quartet.polynomial}; break;
    case 2: gc.config.kernel = KernelSpec{quartet.rbf}; break;
    case 3: gc.config.kernel = KernelSpec{quartet.spectral}; break;
    case 4: gc.config.kernel = KernelSpec{quartet.mahalanobis}; break;
    default: {
      HierarchicalMixture h{quartet, {}};
      for (double& t : h.state.theta) t = normal(rng);
      for (double& p : h.state.psi) p = normal(rng);
      gc.config.kernel = h;
    }
  }
  return gc;
}

struct GradcheckOutcome {
  std::size_t trial;
  std::size_t kernel_index;
  std::size_t divergence_index;
  double max_rel_err;
};

/// Trial t exercises kernel t mod 6 and divergence (t / 6) mod 7, so any 42
/// consecutive trials cover every pair. Results are ordered by trial.
inline std::vector<GradcheckOutcome> run_gradcheck_trials(const ObjectiveConfig& base, const KernelQuartet& quartet,
                                                          std::uint64_t seed, std::size_t trials) {
  std::vector<GradcheckOutcome> out;
  out.reserve(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t k = t % kGradcheckKernelCount;
    const std::size_t d = (t / kGradcheckKernelCount) % kGradcheckDivergenceCount;
    const GradcheckCase gc = make_gradcheck_case(k, d, seed * 1000003ULL + t, base, quartet);
    out.push_back({t, k, d, grad_check(gc.config, gc.records, gc.policy, gc.reference).max_rel_err});
  }
  return out;
}

}  // namespace prefk
