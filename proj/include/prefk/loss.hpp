// Hybrid preference loss, its kernelized variants, and the full objective
// evaluated on precomputed per-triplet signals.
//
// The objective is maximized:
//   total = mean_n [ K(z_n) + gamma * E(e_x.e_y+, e_x.e_y-) ] - alpha * beta * mean_n D(pi_n || pi_ref_n)
// where z = ln pi(y+|x) - ln pi(y-|x) and E is the kernel's embedding term.
#pragma once

#include "prefk/core.hpp"
#include "prefk/divergences.hpp"
#include "prefk/kernels.hpp"
#include "prefk/mixture.hpp"

#include <variant>
#include <vector>

namespace prefk {

struct TripletSignals {
  double logp_pos = 0.0;
  double logp_neg = 0.0;
  double dot_pos = 1.0;
  double dot_neg = 1.0;
  std::optional<double> log_ratio;  // exact z when known; overrides logp_pos - logp_neg

  double z() const noexcept { return log_ratio ? *log_ratio : logp_pos - logp_neg; }
  double r() const {
    if (dot_neg == 0.0) throw Error(ErrorKind::DegenerateRatio, "dot product with the rejected embedding is zero");
    return dot_pos / dot_neg;
  }

  static TripletSignals from_log_ratio(double z, double dot_pos, double dot_neg) {
    return TripletSignals{z, 0.0, dot_pos, dot_neg, z};
  }
};

/// z + gamma ln(dot_pos / dot_neg). With gamma = 0 this is the DPO log-ratio.
inline double hybrid_loss(const TripletSignals& s, double gamma) {
  if (gamma == 0.0) return s.z();
  const double r = s.r();
  if (!(r > 0.0)) throw Error(ErrorKind::DegenerateRatio, "embedding ratio must be positive");
  return s.z() + gamma * std::log(r);
}

inline double kernelized_hybrid_loss(const KernelSpec& spec, const TripletSignals& s, double gamma) {
  const double prob = scalar_kernel(spec, s.z());
  if (gamma == 0.0) return prob;
  return prob + gamma * scalar_kernel_embed(spec, s.dot_pos, s.dot_neg);
}

using ObjectiveKernel = std::variant<KernelSpec, FlatMixture, HierarchicalMixture>;

inline std::string objective_kernel_name(const ObjectiveKernel& k) {
  if (const auto* spec = std::get_if<KernelSpec>(&k)) return kernel_name(*spec);
  if (std::holds_alternative<FlatMixture>(k)) return "mixture";
  return "hmk";
}

struct ObjectiveConfig {
  double alpha = 0.5;
  double beta = 1.0;
  double gamma = 0.5;
  ObjectiveKernel kernel = KernelSpec{RbfKernel{}};
  DivergenceKind divergence = KullbackLeibler{};
  bool allow_out_of_range = false;

  void validate() const {
    auto check = [&](double v, double lo, double hi, const char* name) {
      if (!std::isfinite(v)) throw Error(ErrorKind::InvalidInput, std::string(name) + " must be finite");
      if (!allow_out_of_range && (v < lo || v > hi)) {
        throw Error(ErrorKind::InvalidInput, std::string(name) + " outside its recommended range");
      }
    };
    check(alpha, 0.1, 1.0, "alpha");
    check(beta, 0.5, 2.0, "beta");
    check(gamma, 0.1, 1.0, "gamma");
    if (const auto* spec = std::get_if<KernelSpec>(&kernel)) prefk::validate(*spec);
  }
};

struct LossBreakdown {
  double prob_term = 0.0;
  double embed_term = 0.0;
  double regularizer = 0.0;
  double total = 0.0;
};

/// One triplet's kernel terms with every partial derivative the gradient
/// assembly needs. Mixture weight partials are zero for single kernels.
struct TermEval {
  double prob = 0.0;
  double embed = 0.0;
  double dprob_dz = 0.0;
  double dembed_dpos = 0.0;
  double dembed_ddneg = 0.0;
  Weights4 dprob_dlambda{};
  Weights4 dembed_dlambda{};
  Weights2 dprob_dtau{};
  Weights2 dembed_dtau{};
};

inline TermEval evaluate_terms(const ObjectiveKernel& kernel, const TripletSignals& s, bool with_embedding = true) {
  TermEval t;
  const double z = s.z();

  if (const auto* spec = std::get_if<KernelSpec>(&kernel)) {
    const ScalarEval k = scalar_kernel_eval(*spec, z);
    t.prob = k.value;
    t.dprob_dz = k.derivative;
    if (with_embedding) {
      const EmbedEval e = embedding_term(*spec, s.dot_pos, s.dot_neg);
      t.embed = e.value;
      t.dembed_dpos = e.d_dot_pos;
      t.dembed_ddneg = e.d_dot_neg;
    }
    return t;
  }

  std::array<ScalarEval, 4> kv{};
  std::array<EmbedEval, 4> ev{};
  const bool flat = std::holds_alternative<FlatMixture>(kernel);
  const KernelQuartet& quartet =
      flat ? std::get<FlatMixture>(kernel).kernels : std::get<HierarchicalMixture>(kernel).kernels;
  for (std::size_t i = 0; i < 4; ++i) {
    const KernelSpec component = flat ? flat_component(quartet, i) : hmk_component(quartet, i);
    kv[i] = scalar_kernel_eval(component, z);
    if (with_embedding) ev[i] = embedding_term(component, s.dot_pos, s.dot_neg);
  }

  // Effective per-slot coefficient: lambda_i for the flat mixture, tau_g(i) lambda_i for HMK.
  Weights4 coef{};
  Weights4 lambda{};
  Weights2 tau{1.0, 1.0};
  if (flat) {
    lambda = std::get<FlatMixture>(kernel).state.lambda();
    coef = lambda;
  } else {
    const HMKState& st = std::get<HierarchicalMixture>(kernel).state;
    lambda = st.lambda();
    tau = st.tau();
    for (std::size_t i = 0; i < 4; ++i) coef[i] = tau[i < 2 ? 0 : 1] * lambda[i];
  }

  for (std::size_t i = 0; i < 4; ++i) {
    t.prob += coef[i] * kv[i].value;
    t.dprob_dz += coef[i] * kv[i].derivative;
    t.embed += coef[i] * ev[i].value;
    t.dembed_dpos += coef[i] * ev[i].d_dot_pos;
    t.dembed_ddneg += coef[i] * ev[i].d_dot_neg;
    const double group_tau = flat ? 1.0 : tau[i < 2 ? 0 : 1];
    t.dprob_dlambda[i] = group_tau * kv[i].value;
    t.dembed_dlambda[i] = group_tau * ev[i].value;
  }
  if (!flat) {
    t.dprob_dtau = {lambda[0] * kv[0].value + lambda[1] * kv[1].value,
                    lambda[2] * kv[2].value + lambda[3] * kv[3].value};
    t.dembed_dtau = {lambda[0] * ev[0].value + lambda[1] * ev[1].value,
                     lambda[2] * ev[2].value + lambda[3] * ev[3].value};
  }
  return t;
}

/// Kernelized hybrid loss for any objective kernel, including mixtures.
inline double kernelized_hybrid_loss(const ObjectiveKernel& kernel, const TripletSignals& s, double gamma) {
  const TermEval t = evaluate_terms(kernel, s, gamma != 0.0);
  return t.prob + gamma * t.embed;
}

inline LossBreakdown compose(double prob, double embed, double regularizer, const ObjectiveConfig& config) {
  LossBreakdown out{prob, embed, regularizer, 0.0};
  out.total = prob + config.gamma * embed - config.alpha * config.beta * regularizer;
  return out;
}

/// Mean kernelized hybrid loss over the batch minus alpha * beta times the
/// mean divergence between aligned policy and reference distributions.
inline LossBreakdown full_objective(const ObjectiveConfig& config, const std::vector<TripletSignals>& batch,
                                    const std::vector<ProbabilityDistribution>& policy_dists,
                                    const std::vector<ProbabilityDistribution>& ref_dists) {
  if (batch.empty()) throw Error(ErrorKind::InvalidInput, "objective needs a nonempty batch");
  if (policy_dists.size() != batch.size() || ref_dists.size() != batch.size()) {
    throw Error(ErrorKind::InvalidInput, "distribution pairs must align with the batch");
  }
  const bool with_embedding = config.gamma != 0.0;
  long double prob = 0.0L, embed = 0.0L;
  for (const auto& s : batch) {
    const TermEval t = evaluate_terms(config.kernel, s, with_embedding);
    prob += t.prob;
    embed += t.embed;
  }
  const auto n = static_cast<long double>(batch.size());
  double reg = 0.0;
  if (config.alpha * config.beta != 0.0) {
    std::vector<DistributionPair> pairs;
    pairs.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) pairs.emplace_back(policy_dists[i], ref_dists[i]);
    reg = divergence_regularizer(config.divergence, pairs);
  }
  return compose(static_cast<double>(prob / n), static_cast<double>(embed / n), reg, config);
}

}  // namespace prefk
