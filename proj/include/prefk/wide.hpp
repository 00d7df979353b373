// Objective value in long double, for the finite-difference oracle. Only the
// parameter-dependent chain is widened; kernel hyperparameters and mixture
// weights enter as doubles.
#pragma once

#include "prefk/loss.hpp"
#include "prefk/policy.hpp"

#include <cmath>
#include <vector>

namespace prefk::wide {

using Wide = long double;
using WideVector = Eigen::Matrix<Wide, Eigen::Dynamic, 1>;

inline WideVector softmax(const RealVector& scores) {
  const WideVector s = scores.cast<Wide>();
  const Wide shift = s.maxCoeff();
  WideVector e(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i) e(i) = std::exp(s(i) - shift);
  return e / e.sum();
}

inline Wide gaussian(Wide z, double center, double sigma) {
  const Wide dz = z - center;
  return std::exp(-dz * dz / (2.0L * sigma * sigma));
}

inline Wide scalar_kernel(const KernelSpec& spec, Wide z) {
  struct {
    Wide z;
    Wide operator()(const IdentityKernel&) const { return z; }
    Wide operator()(const PolynomialKernel& k) const { return std::pow(z + k.c, static_cast<Wide>(k.d)); }
    Wide operator()(const RbfKernel& k) const { return gaussian(z, 0.0, k.sigma); }
    Wide operator()(const SpectralKernel& k) const {
      Wide sum = 0.0L;
      for (std::size_t i = 1; i <= k.p(); ++i) {
        sum += std::exp(-k.lambdas[i - 1] * z * z) * std::cos(static_cast<Wide>(i) * z);
      }
      return sum;
    }
    Wide operator()(const MahalanobisScalarKernel& k) const { return gaussian(z, k.mu, k.sigma); }
    Wide operator()(const MahalanobisVectorKernel&) const {
      throw Error(ErrorKind::InvalidKernelForm, "vector Mahalanobis kernel has no scalar form");
    }
  } visitor{z};
  return std::visit(visitor, spec);
}

inline Wide embedding_term(const KernelSpec& spec, Wide dot_pos, Wide dot_neg) {
  if (dot_neg == 0.0L) throw Error(ErrorKind::DegenerateRatio, "dot product with the rejected embedding is zero");
  const Wide r = dot_pos / dot_neg;
  if (std::holds_alternative<IdentityKernel>(spec)) {
    if (!(r > 0.0L)) throw Error(ErrorKind::DegenerateRatio, "embedding ratio must be positive for the log term");
    return std::log(std::abs(dot_pos)) - std::log(std::abs(dot_neg));
  }
  if (const auto* k = std::get_if<PolynomialKernel>(&spec)) {
    const Wide den = dot_neg + k->c;
    if (den == 0.0L) throw Error(ErrorKind::DegenerateRatio, "polynomial embedding denominator is zero");
    return std::pow((dot_pos + k->c) / den, static_cast<Wide>(k->d));
  }
  if (const auto* k = std::get_if<MahalanobisScalarKernel>(&spec)) return gaussian(r, k->mu_prime, k->sigma_prime);
  return scalar_kernel(spec, r);
}

/// prob + gamma * embed for one triplet; mixtures weight their components as
/// the double-precision path does.
inline Wide hybrid_term(const ObjectiveKernel& kernel, Wide z, Wide dot_pos, Wide dot_neg, double gamma) {
  auto single = [&](const KernelSpec& spec) {
    Wide v = scalar_kernel(spec, z);
    if (gamma != 0.0) v += gamma * embedding_term(spec, dot_pos, dot_neg);
    return v;
  };
  if (const auto* spec = std::get_if<KernelSpec>(&kernel)) return single(*spec);
  Wide sum = 0.0L;
  if (const auto* flat = std::get_if<FlatMixture>(&kernel)) {
    const Weights4 lambda = flat->state.lambda();
    for (std::size_t i = 0; i < 4; ++i) sum += lambda[i] * single(flat_component(flat->kernels, i));
    return sum;
  }
  const auto& h = std::get<HierarchicalMixture>(kernel);
  const Weights4 lambda = h.state.lambda();
  const Weights2 tau = h.state.tau();
  for (std::size_t i = 0; i < 4; ++i) sum += tau[i < 2 ? 0 : 1] * lambda[i] * single(hmk_component(h.kernels, i));
  return sum;
}

inline Wide divergence(const DivergenceKind& kind, const WideVector& p, const WideVector& q) {
  const Eigen::Index c = p.size();
  auto infinite = [](const char* what) { return Error(ErrorKind::InfiniteDivergence, what); };
  struct {
    const WideVector& p;
    const WideVector& q;
    Eigen::Index c;
    decltype(infinite)& fail;
    Wide operator()(const KullbackLeibler&) const {
      Wide s = 0.0L;
      for (Eigen::Index i = 0; i < c; ++i) {
        if (p(i) == 0.0L) continue;
        if (q(i) == 0.0L) throw fail("KL: p > 0 where q = 0");
        s += p(i) * std::log(p(i) / q(i));
      }
      return s;
    }
    Wide operator()(const JensenShannon&) const {
      Wide s = 0.0L;
      for (Eigen::Index i = 0; i < c; ++i) {
        const Wide m = 0.5L * (p(i) + q(i));
        if (p(i) > 0.0L) s += 0.5L * p(i) * std::log(p(i) / m);
        if (q(i) > 0.0L) s += 0.5L * q(i) * std::log(q(i) / m);
      }
      return s;
    }
    Wide operator()(const Hellinger&) const {
      Wide s = 0.0L;
      for (Eigen::Index i = 0; i < c; ++i) {
        const Wide d = std::sqrt(p(i)) - std::sqrt(q(i));
        s += d * d;
      }
      return std::sqrt(s / 2.0L);
    }
    Wide operator()(const Renyi& r) const {
      Wide a = 0.0L;
      for (Eigen::Index i = 0; i < c; ++i) {
        if (p(i) == 0.0L) continue;
        if (q(i) == 0.0L) {
          if (r.alpha > 1.0) throw fail("Renyi: p > 0 where q = 0");
          continue;
        }
        a += std::pow(p(i), static_cast<Wide>(r.alpha)) * std::pow(q(i), static_cast<Wide>(1.0 - r.alpha));
      }
      if (a <= 0.0L) throw fail("Renyi: disjoint supports");
      return std::log(a) / (r.alpha - 1.0);
    }
    Wide operator()(const Bhattacharyya&) const {
      Wide bc = 0.0L;
      for (Eigen::Index i = 0; i < c; ++i) bc += std::sqrt(p(i) * q(i));
      if (bc <= 0.0L) throw fail("Bhattacharyya coefficient is zero");
      return -std::log(bc);
    }
    Wide operator()(const Wasserstein1D&) const {
      Wide cp = 0.0L, cq = 0.0L, s = 0.0L;
      for (Eigen::Index i = 0; i + 1 < c; ++i) {
        cp += p(i);
        cq += q(i);
        s += std::abs(cp - cq);
      }
      return s;
    }
    Wide operator()(const FDivergence& f) const {
      Wide s = 0.0L;
      for (Eigen::Index i = 0; i < c; ++i) {
        if (q(i) == 0.0L) {
          if (p(i) == 0.0L) continue;
          if (!f.slope_at_infinity()) throw fail("f-divergence: p > 0 where q = 0");
          s += p(i) * *f.slope_at_infinity();
          continue;
        }
        s += q(i) * f.f_wide(p(i) / q(i));
      }
      return s;
    }
  } visitor{p, q, c, infinite};
  return std::visit(visitor, kind);
}

/// Objective total of `policy` on `records`, regularized toward `reference`.
inline Wide objective_total(const ObjectiveConfig& config, const ToyPolicy& policy, const ToyPolicy& reference,
                            const std::vector<PreferenceRecord>& records) {
  if (records.empty()) throw Error(ErrorKind::InvalidInput, "objective needs a nonempty batch");
  const Wide reg_scale = static_cast<Wide>(config.alpha) * config.beta;
  Wide hybrid = 0.0L, reg = 0.0L;
  for (const auto& rec : records) {
    policy.validate(rec);
    const auto x = static_cast<Eigen::Index>(rec.x);
    const auto yp = static_cast<Eigen::Index>(rec.y_pos);
    const auto yn = static_cast<Eigen::Index>(rec.y_neg);
    const Wide z = static_cast<Wide>(policy.logits(x, yp)) - policy.logits(x, yn);
    Wide dot_pos = 0.0L, dot_neg = 0.0L;
    for (Eigen::Index j = 0; j < policy.dim(); ++j) {
      dot_pos += static_cast<Wide>(policy.U(x, j)) * policy.V(yp, j);
      dot_neg += static_cast<Wide>(policy.U(x, j)) * policy.V(yn, j);
    }
    hybrid += hybrid_term(config.kernel, z, dot_pos, dot_neg, config.gamma);
    if (reg_scale != 0.0L) {
      reg += divergence(config.divergence, softmax(policy.logits.row(x).transpose()),
                        softmax(reference.logits.row(x).transpose()));
    }
  }
  const auto n = static_cast<Wide>(records.size());
  return hybrid / n - reg_scale * reg / n;
}

}  // namespace prefk::wide
