// Synthetic preference data and the gradient-ascent training loop.
#pragma once

#include "prefk/gradient.hpp"
#include "prefk/mixture.hpp"
#include "prefk/policy.hpp"

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace prefk {

enum class GeneratorKind { SeparableClusters, LocalStructure, Random };

inline const char* to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::SeparableClusters: return "separable_clusters";
    case GeneratorKind::LocalStructure: return "local_structure";
    case GeneratorKind::Random: return "random";
  }
  return "unknown";
}

inline std::optional<GeneratorKind> generator_from_string(const std::string& name) {
  if (name == "separable_clusters") return GeneratorKind::SeparableClusters;
  if (name == "local_structure") return GeneratorKind::LocalStructure;
  if (name == "random") return GeneratorKind::Random;
  return std::nullopt;
}

struct GeneratorSizes {
  std::size_t contexts = 4;
  std::size_t outcomes = 6;
  std::size_t records = 32;
  std::size_t dim = 4;
};

struct SyntheticData {
  ToyPolicy policy;
  std::vector<PreferenceRecord> records;
};

namespace detail {

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}

  double normal() { return normal_(rng_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }

  RealMatrix normal_matrix(std::size_t rows, std::size_t cols, double scale) {
    RealMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = scale * normal();
    return m;
  }

 private:
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace detail

inline constexpr double kBlobSigma = 0.25;

/// Deterministic synthetic preference data.
///
/// separable_clusters: outcomes split into a chosen half and a rejected half,
///   each an isotropic Gaussian blob (sigma 0.25) sharing a unit offset along
///   the first axis; blobs sit max(8, 6 sqrt(m)) sigma apart along the second
///   axis. Contexts point along the first axis and are orthogonal to the
///   second. Needs dim >= 2, outcomes >= 2.
/// local_structure: contexts and outcomes grouped into tight neighborhoods
///   around positive centers; y+ shares the context's neighborhood, y- does not.
/// random: every table entry i.i.d. standard normal, uniform records.
inline SyntheticData gen_synthetic(GeneratorKind kind, const GeneratorSizes& sizes, RandomSeed seed) {
  if (sizes.contexts == 0 || sizes.outcomes < 2 || sizes.records == 0 || sizes.dim == 0) {
    throw Error(ErrorKind::InvalidInput, "generator sizes must be positive with at least two outcomes");
  }
  detail::Sampler rng(seed.value);
  const std::size_t X = sizes.contexts, C = sizes.outcomes, m = sizes.dim;
  SyntheticData data;
  ToyPolicy& pol = data.policy;

  switch (kind) {
    case GeneratorKind::SeparableClusters: {
      if (m < 2) throw Error(ErrorKind::InvalidInput, "separable_clusters needs dim >= 2");
      const double gap = std::max(8.0, 6.0 * std::sqrt(static_cast<double>(m))) * kBlobSigma;
      const std::size_t chosen = C / 2;
      pol.logits = rng.normal_matrix(X, C, 0.1);
      pol.U = rng.normal_matrix(X, m, 0.1);
      pol.U.col(0).array() += 1.0;
      pol.U.col(1).setZero();
      pol.V = rng.normal_matrix(C, m, kBlobSigma);
      for (std::size_t y = 0; y < C; ++y) {
        const auto row = static_cast<Eigen::Index>(y);
        pol.V(row, 0) += 1.0;
        pol.V(row, 1) += (y < chosen ? 0.5 : -0.5) * gap;
      }
      for (std::size_t n = 0; n < sizes.records; ++n) {
        data.records.push_back({rng.index(X), rng.index(chosen), chosen + rng.index(C - chosen)});
      }
      break;
    }
    case GeneratorKind::LocalStructure: {
      const std::size_t groups = std::min<std::size_t>({std::max<std::size_t>(2, std::min(X, C / 2)), C, 4});
      if (groups < 2) throw Error(ErrorKind::InvalidInput, "local_structure needs at least two neighborhoods");
      RealMatrix centers = RealMatrix::Ones(static_cast<Eigen::Index>(groups), static_cast<Eigen::Index>(m));
      for (std::size_t g = 0; g < groups; ++g) centers(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(g % m)) += 1.5;
      pol.logits = rng.normal_matrix(X, C, 0.1);
      pol.U = rng.normal_matrix(X, m, 0.1);
      pol.V = rng.normal_matrix(C, m, 0.1);
      for (std::size_t x = 0; x < X; ++x) pol.U.row(static_cast<Eigen::Index>(x)) += centers.row(static_cast<Eigen::Index>(x % groups));
      for (std::size_t y = 0; y < C; ++y) pol.V.row(static_cast<Eigen::Index>(y)) += centers.row(static_cast<Eigen::Index>(y % groups));
      for (std::size_t n = 0; n < sizes.records; ++n) {
        const std::size_t x = rng.index(X);
        const std::size_t g = x % groups;
        std::vector<std::size_t> same, other;
        for (std::size_t y = 0; y < C; ++y) (y % groups == g ? same : other).push_back(y);
        data.records.push_back({x, same[rng.index(same.size())], other[rng.index(other.size())]});
      }
      break;
    }
    case GeneratorKind::Random: {
      pol.logits = rng.normal_matrix(X, C, 1.0);
      pol.U = rng.normal_matrix(X, m, 1.0);
      pol.V = rng.normal_matrix(C, m, 1.0);
      for (std::size_t n = 0; n < sizes.records; ++n) {
        const std::size_t y_pos = rng.index(C);
        std::size_t y_neg = rng.index(C - 1);
        if (y_neg >= y_pos) ++y_neg;
        data.records.push_back({rng.index(X), y_pos, y_neg});
      }
      break;
    }
  }
  return data;
}

struct TrainConfig {
  double eta = 0.05;
  std::size_t steps = 200;
  RandomSeed seed{42};
  ObjectiveConfig objective{};
  EntropyRegConfig entropy{};
  std::size_t snapshot_interval = 50;  // 0 disables snapshots
};

struct TraceRow {
  std::size_t step = 0;
  LossBreakdown loss{};
  std::optional<Weights4> lambda;
  std::optional<Weights2> tau;
  std::optional<double> entropy;
  std::optional<double> min_lambda;
};

struct PolicySnapshot {
  std::size_t step;
  ToyPolicy policy;
};

struct TrainTrace {
  std::vector<TraceRow> rows;
  std::vector<PolicySnapshot> snapshots;
  ToyPolicy final_policy;
  ObjectiveKernel final_kernel;
  std::optional<std::string> failure;  // set when a NumericalFailure cut the run short

  bool ok() const noexcept { return !failure.has_value(); }
};

namespace detail {

inline TraceRow make_row(std::size_t step, const LossBreakdown& loss, const ObjectiveKernel& kernel) {
  TraceRow row{step, loss, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  std::optional<Weights4> lambda;
  if (const auto* flat = std::get_if<FlatMixture>(&kernel)) lambda = flat->state.lambda();
  if (const auto* hmk = std::get_if<HierarchicalMixture>(&kernel)) {
    lambda = hmk->state.lambda();
    row.tau = hmk->state.tau();
  }
  if (lambda) {
    row.lambda = lambda;
    row.entropy = entropy_reg(*lambda).value;
    row.min_lambda = *std::min_element(lambda->begin(), lambda->end());
  }
  return row;
}

}  // namespace detail

/// Gradient ascent on the full objective over the policy tables; mixture
/// weights (when present) take a simultaneous descent step on the negated
/// objective plus entropy regularization. The reference policy is the frozen
/// initial policy. The trace holds steps + 1 rows unless a numerical failure
/// cuts it short.
inline TrainTrace train_run(const TrainConfig& config, const SyntheticData& data) {
  if (!(config.eta > 0.0) || !std::isfinite(config.eta)) throw Error(ErrorKind::InvalidInput, "eta must be positive");
  config.objective.validate();
  data.policy.validate();
  for (const auto& rec : data.records) data.policy.validate(rec);

  const ToyPolicy reference = data.policy;
  ToyPolicy policy = data.policy;
  ObjectiveConfig objective = config.objective;
  TrainTrace trace;
  trace.rows.reserve(config.steps + 1);

  try {
    for (std::size_t step = 0;; ++step) {
      const LossBreakdown loss = evaluate_objective(objective, policy, reference, data.records);
      if (!std::isfinite(loss.total)) throw Error(ErrorKind::NumericalFailure, "objective is not finite");
      trace.rows.push_back(detail::make_row(step, loss, objective.kernel));
      if (config.snapshot_interval > 0 && step % config.snapshot_interval == 0) {
        trace.snapshots.push_back({step, policy});
      }
      if (step == config.steps) break;

      const RealVector grad = analytic_grad(objective, data.records, policy, reference);
      const MixtureGrad wgrad = mixture_weight_grad(objective, data.records, policy);
      policy = policy.with_parameters(policy.flatten() + config.eta * grad);

      const Weights4 neg_lambda{-wgrad.lambda[0], -wgrad.lambda[1], -wgrad.lambda[2], -wgrad.lambda[3]};
      if (auto* flat = std::get_if<FlatMixture>(&objective.kernel)) {
        flat->state = mixture_step(flat->state, neg_lambda, config.entropy, config.eta);
      } else if (auto* hmk = std::get_if<HierarchicalMixture>(&objective.kernel)) {
        hmk->state = mixture_step(hmk->state, neg_lambda, {-wgrad.tau[0], -wgrad.tau[1]}, config.entropy, config.eta);
      }
    }
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NumericalFailure && e.kind() != ErrorKind::DegenerateRatio) throw;
    trace.failure = e.what();
  }
  trace.final_policy = policy;
  trace.final_kernel = objective.kernel;
  return trace;
}

}  // namespace prefk
