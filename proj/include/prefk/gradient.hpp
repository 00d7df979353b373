// Closed-form gradients of the full objective for the toy policy, and the
// central finite-difference oracle used to certify them.
#pragma once

#include "prefk/loss.hpp"
#include "prefk/policy.hpp"
#include "prefk/wide.hpp"

#include <type_traits>

namespace prefk {

/// Full objective of `policy` on `records`, regularized toward `reference`.
inline LossBreakdown evaluate_objective(const ObjectiveConfig& config, const ToyPolicy& policy,
                                        const ToyPolicy& reference, const std::vector<PreferenceRecord>& records) {
  if (records.empty()) throw Error(ErrorKind::InvalidInput, "objective needs a nonempty batch");
  std::vector<TripletSignals> batch;
  std::vector<ProbabilityDistribution> pol, ref;
  batch.reserve(records.size());
  pol.reserve(records.size());
  ref.reserve(records.size());
  for (const auto& rec : records) {
    batch.push_back(policy_forward(policy, rec));
    pol.push_back(policy.distribution(rec.x));
    ref.push_back(reference.distribution(rec.x));
  }
  return full_objective(config, batch, pol, ref);
}

/// Gradient of the full objective with respect to the flattened policy
/// parameters (logits, U, V). Accumulation follows record order.
inline RealVector analytic_grad(const ObjectiveConfig& config, const std::vector<PreferenceRecord>& records,
                                const ToyPolicy& policy, const ToyPolicy& reference) {
  if (records.empty()) throw Error(ErrorKind::InvalidInput, "gradient needs a nonempty batch");
  RealVector grad = RealVector::Zero(policy.parameter_count());
  const double inv_n = 1.0 / static_cast<double>(records.size());
  const double reg_scale = config.alpha * config.beta;
  const bool with_embedding = config.gamma != 0.0;
  const Eigen::Index c = policy.outcomes();
  const Eigen::Index m = policy.dim();

  for (std::size_t n = 0; n < records.size(); ++n) {
    const PreferenceRecord& rec = records[n];
    const TripletSignals s = policy_forward(policy, rec);
    const TermEval t = evaluate_terms(config.kernel, s, with_embedding);

    // dz / d logits[x, :] = onehot(y+) - onehot(y-); the log-partition cancels.
    grad(policy.logit_offset(rec.x, rec.y_pos)) += inv_n * t.dprob_dz;
    grad(policy.logit_offset(rec.x, rec.y_neg)) -= inv_n * t.dprob_dz;

    if (with_embedding) {
      const auto x = static_cast<Eigen::Index>(rec.x);
      const double w_pos = inv_n * config.gamma * t.dembed_dpos;
      const double w_neg = inv_n * config.gamma * t.dembed_ddneg;
      // d(e_x . e_y) = (d e_x) . e_y + e_x . (d e_y)
      grad.segment(policy.context_offset(rec.x), m) +=
          w_pos * policy.V.row(static_cast<Eigen::Index>(rec.y_pos)).transpose() +
          w_neg * policy.V.row(static_cast<Eigen::Index>(rec.y_neg)).transpose();
      grad.segment(policy.outcome_offset(rec.y_pos), m) += w_pos * policy.U.row(x).transpose();
      grad.segment(policy.outcome_offset(rec.y_neg), m) += w_neg * policy.U.row(x).transpose();
    }

    if (reg_scale != 0.0) {
      const ProbabilityDistribution p = policy.distribution(rec.x);
      const ProbabilityDistribution q = reference.distribution(rec.x);
      const RealVector dp = divergence_grad(config.divergence, p, q);
      // Full softmax Jacobian: d p_j / d logit_k = p_j (delta_jk - p_k).
      const RealVector& pv = p.probs();
      const RealVector dlogits = (pv.array() * (dp.array() - pv.dot(dp))).matrix();
      grad.segment(policy.logit_offset(rec.x, 0), c) -= inv_n * reg_scale * dlogits;
    }
  }
  if (!grad.allFinite()) throw Error(ErrorKind::NumericalFailure, "analytic gradient is not finite");
  return grad;
}

struct MixtureGrad {
  Weights4 lambda{};
  Weights2 tau{};
};

/// Gradient of the objective with respect to the mixture weights (lambda and,
/// for HMK, tau) treated as free coordinates. Zero for single kernels.
inline MixtureGrad mixture_weight_grad(const ObjectiveConfig& config, const std::vector<PreferenceRecord>& records,
                                       const ToyPolicy& policy) {
  if (records.empty()) throw Error(ErrorKind::InvalidInput, "gradient needs a nonempty batch");
  MixtureGrad g;
  if (std::holds_alternative<KernelSpec>(config.kernel)) return g;
  const double inv_n = 1.0 / static_cast<double>(records.size());
  const bool with_embedding = config.gamma != 0.0;
  for (const auto& rec : records) {
    const TermEval t = evaluate_terms(config.kernel, policy_forward(policy, rec), with_embedding);
    for (std::size_t i = 0; i < 4; ++i) g.lambda[i] += inv_n * (t.dprob_dlambda[i] + config.gamma * t.dembed_dlambda[i]);
    for (std::size_t j = 0; j < 2; ++j) g.tau[j] += inv_n * (t.dprob_dtau[j] + config.gamma * t.dembed_dtau[j]);
  }
  return g;
}

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate,
/// taken in the precision `f` returns.
template <class F>
RealVector central_difference(F&& f, const RealVector& x, double h = 1e-5) {
  using Value = std::invoke_result_t<F&, const RealVector&>;
  if (!(h > 0.0) || !std::isfinite(h)) throw Error(ErrorKind::InvalidInput, "finite-difference step must be positive");
  RealVector g(x.size());
  RealVector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const Value up = f(probe);
    probe(i) = x(i) - h;
    const Value down = f(probe);
    probe(i) = x(i);
    g(i) = static_cast<double>((up - down) / (2 * static_cast<Value>(h)));
  }
  return g;
}

/// Central differences of the objective, evaluated in long double.
inline RealVector finite_diff_grad(const ObjectiveConfig& config, const std::vector<PreferenceRecord>& records,
                                   const ToyPolicy& policy, const ToyPolicy& reference, double h = 1e-5) {
  auto f = [&](const RealVector& theta) {
    return wide::objective_total(config, policy.with_parameters(theta), reference, records);
  };
  return central_difference(f, policy.flatten(), h);
}

struct GradientReport {
  RealVector analytic;
  RealVector numeric;
  double max_rel_err = 0.0;
  Eigen::Index worst_index = -1;
};

/// max_i |a_i - n_i| / max(1e-8, |a_i| + |n_i|).
inline GradientReport compare_gradients(RealVector analytic, RealVector numeric) {
  if (analytic.size() != numeric.size()) throw Error(ErrorKind::InvalidInput, "gradient vectors differ in size");
  GradientReport report{std::move(analytic), std::move(numeric), 0.0, -1};
  for (Eigen::Index i = 0; i < report.analytic.size(); ++i) {
    const double a = report.analytic(i), n = report.numeric(i);
    const double err = std::abs(a - n) / std::max(1e-8, std::abs(a) + std::abs(n));
    if (err > report.max_rel_err) {
      report.max_rel_err = err;
      report.worst_index = i;
    }
  }
  return report;
}

inline GradientReport grad_check(const ObjectiveConfig& config, const std::vector<PreferenceRecord>& records,
                                 const ToyPolicy& policy, const ToyPolicy& reference, double h = 1e-5) {
  return compare_gradients(analytic_grad(config, records, policy, reference),
                           finite_diff_grad(config, records, policy, reference, h));
}

}  // namespace prefk
