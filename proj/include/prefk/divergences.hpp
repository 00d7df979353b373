// Discrete divergence measures between categorical distributions, their
// gradients with respect to the first argument, and the batch regularizer.
//
// All logarithms are natural. The convention 0 ln 0 = 0 holds everywhere;
// mass in P against zero mass in Q raises InfiniteDivergence instead of
// returning a sentinel.
#pragma once

#include "prefk/core.hpp"

#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace prefk {

struct KullbackLeibler {};
struct JensenShannon {};
struct Hellinger {};
struct Bhattacharyya {};
struct Wasserstein1D {};

struct Renyi {
  double alpha = 2.0;
};

/// A registered generator f of an f-divergence. `prime` is f'. When
/// `slope_at_infinity` is set, a term with q = 0 and p > 0 contributes
/// p * slope_at_infinity; otherwise it is infinite.
class FDivergence {
 public:
  using Fn = std::function<long double(long double)>;

  FDivergence(std::string name, Fn f, Fn prime, std::optional<double> slope_at_infinity = std::nullopt)
      : name_(std::move(name)), f_(std::move(f)), prime_(std::move(prime)), slope_inf_(slope_at_infinity) {
    if (!f_ || !prime_) throw Error(ErrorKind::InvalidFunction, "f-divergence '" + name_ + "' is missing f or f'");
    const auto at_one = static_cast<double>(f_(1.0L));
    if (!std::isfinite(at_one) || std::abs(at_one) > 1e-12) {
      throw Error(ErrorKind::InvalidFunction, "f-divergence '" + name_ + "' has f(1) = " + std::to_string(at_one));
    }
  }

  const std::string& name() const noexcept { return name_; }
  double f(double t) const { return static_cast<double>(f_(t)); }
  double prime(double t) const { return static_cast<double>(prime_(t)); }
  long double f_wide(long double t) const { return f_(t); }
  std::optional<double> slope_at_infinity() const noexcept { return slope_inf_; }

  /// f(t) = t ln t, which reproduces KL(P||Q).
  static FDivergence kl() {
    return FDivergence(
        "kl", [](long double t) { return t > 0.0L ? t * std::log(t) : 0.0L; },
        [](long double t) { return std::log(t) + 1.0L; });
  }
  /// f(t) = (t - 1)^2, Pearson chi-square.
  static FDivergence chi_squared() {
    return FDivergence(
        "chi2", [](long double t) { return (t - 1.0L) * (t - 1.0L); }, [](long double t) { return 2.0L * (t - 1.0L); });
  }
  /// f(t) = -ln t, which reproduces KL(Q||P).
  static FDivergence reverse_kl() {
    return FDivergence(
        "reverse_kl", [](long double t) { return -std::log(t); }, [](long double t) { return -1.0L / t; }, 0.0);
  }
  /// f(t) = (sqrt t - 1)^2, twice the squared Hellinger distance.
  static FDivergence squared_hellinger() {
    return FDivergence(
        "squared_hellinger", [](long double t) { return (std::sqrt(t) - 1.0L) * (std::sqrt(t) - 1.0L); },
        [](long double t) { return 1.0L - 1.0L / std::sqrt(t); }, 1.0);
  }

  static std::optional<FDivergence> by_name(const std::string& name) {
    if (name == "kl") return kl();
    if (name == "chi2") return chi_squared();
    if (name == "reverse_kl") return reverse_kl();
    if (name == "squared_hellinger") return squared_hellinger();
    return std::nullopt;
  }

 private:
  std::string name_;
  Fn f_;
  Fn prime_;
  std::optional<double> slope_inf_;
};

using DivergenceKind =
    std::variant<KullbackLeibler, JensenShannon, Hellinger, Renyi, Bhattacharyya, Wasserstein1D, FDivergence>;

inline std::string divergence_name(const DivergenceKind& kind) {
  struct {
    std::string operator()(const KullbackLeibler&) const { return "kl"; }
    std::string operator()(const JensenShannon&) const { return "js"; }
    std::string operator()(const Hellinger&) const { return "hellinger"; }
    std::string operator()(const Renyi&) const { return "renyi"; }
    std::string operator()(const Bhattacharyya&) const { return "bhattacharyya"; }
    std::string operator()(const Wasserstein1D&) const { return "wasserstein"; }
    std::string operator()(const FDivergence&) const { return "f"; }
  } visitor;
  return std::visit(visitor, kind);
}

namespace detail {

inline void require_same_dim(const ProbabilityDistribution& p, const ProbabilityDistribution& q) {
  if (p.size() != q.size()) {
    throw Error(ErrorKind::InvalidInput, "distributions differ in dimension");
  }
}

inline void require_renyi_order(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorKind::InvalidInput, "Renyi order must be positive");
  if (alpha == 1.0) throw Error(ErrorKind::UseKLInstead, "Renyi order 1 is the KL divergence");
}

inline double clamp_nonnegative(double v) { return v < 0.0 ? 0.0 : v; }

}  // namespace detail

inline double kl_divergence(const ProbabilityDistribution& p, const ProbabilityDistribution& q) {
  detail::require_same_dim(p, q);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) throw Error(ErrorKind::InfiniteDivergence, "KL: p > 0 where q = 0", static_cast<std::size_t>(i));
    sum += p[i] * std::log(p[i] / q[i]);
  }
  return detail::clamp_nonnegative(sum);
}

inline double js_divergence(const ProbabilityDistribution& p, const ProbabilityDistribution& q) {
  detail::require_same_dim(p, q);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const double m = 0.5 * (p[i] + q[i]);
    if (p[i] > 0.0) sum += 0.5 * p[i] * std::log(p[i] / m);
    if (q[i] > 0.0) sum += 0.5 * q[i] * std::log(q[i] / m);
  }
  return detail::clamp_nonnegative(sum);
}

inline double hellinger_distance(const ProbabilityDistribution& p, const ProbabilityDistribution& q) {
  detail::require_same_dim(p, q);
  const double s = (p.probs().array().sqrt() - q.probs().array().sqrt()).square().sum();
  return std::sqrt(s) / std::sqrt(2.0);
}

inline double bhattacharyya_distance(const ProbabilityDistribution& p, const ProbabilityDistribution& q) {
  detail::require_same_dim(p, q);
  const double bc = (p.probs().array() * q.probs().array()).sqrt().sum();
  if (bc <= 0.0) throw Error(ErrorKind::InfiniteDivergence, "Bhattacharyya coefficient is zero");
  return detail::clamp_nonnegative(-std::log(std::min(bc, 1.0)));
}

inline double renyi(double alpha, const ProbabilityDistribution& p, const ProbabilityDistribution& q) {
  detail::require_renyi_order(alpha);
  detail::require_same_dim(p, q);
  double a = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) {
      if (alpha > 1.0) throw Error(ErrorKind::InfiniteDivergence, "Renyi: p > 0 where q = 0", static_cast<std::size_t>(i));
      continue;
    }
    a += std::pow(p[i], alpha) * std::pow(q[i], 1.0 - alpha);
  }
  if (a <= 0.0) throw Error(ErrorKind::InfiniteDivergence, "Renyi: disjoint supports");
  return detail::clamp_nonnegative(std::log(a) / (alpha - 1.0));
}

/// Earth mover's distance on unit-spaced ordered outcomes.
inline double wasserstein_1d(const ProbabilityDistribution& p, const ProbabilityDistribution& q) {
  detail::require_same_dim(p, q);
  double cdf_p = 0.0, cdf_q = 0.0, sum = 0.0;
  for (Eigen::Index i = 0; i + 1 < p.size(); ++i) {
    cdf_p += p[i];
    cdf_q += q[i];
    sum += std::abs(cdf_p - cdf_q);
  }
  return sum;
}

inline double f_divergence(const FDivergence& f, const ProbabilityDistribution& p, const ProbabilityDistribution& q) {
  detail::require_same_dim(p, q);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (q[i] == 0.0) {
      if (p[i] == 0.0) continue;
      if (!f.slope_at_infinity()) {
        throw Error(ErrorKind::InfiniteDivergence, "f-divergence: p > 0 where q = 0", static_cast<std::size_t>(i));
      }
      sum += p[i] * *f.slope_at_infinity();
      continue;
    }
    sum += q[i] * f.f(p[i] / q[i]);
  }
  if (!std::isfinite(sum)) throw Error(ErrorKind::InfiniteDivergence, "f-divergence is unbounded");
  return detail::clamp_nonnegative(sum);
}

inline double divergence(const DivergenceKind& kind, const ProbabilityDistribution& p, const ProbabilityDistribution& q) {
  struct {
    const ProbabilityDistribution& p;
    const ProbabilityDistribution& q;
    double operator()(const KullbackLeibler&) const { return kl_divergence(p, q); }
    double operator()(const JensenShannon&) const { return js_divergence(p, q); }
    double operator()(const Hellinger&) const { return hellinger_distance(p, q); }
    double operator()(const Renyi& r) const { return renyi(r.alpha, p, q); }
    double operator()(const Bhattacharyya&) const { return bhattacharyya_distance(p, q); }
    double operator()(const Wasserstein1D&) const { return wasserstein_1d(p, q); }
    double operator()(const FDivergence& f) const { return f_divergence(f, p, q); }
  } visitor{p, q};
  return std::visit(visitor, kind);
}

/// Gradient of divergence(kind, P, Q) with respect to the entries of P,
/// treating them as free coordinates. P must be strictly positive. Hellinger at
/// P = Q and Wasserstein CDF ties use the zero subgradient.
inline RealVector divergence_grad(const DivergenceKind& kind, const ProbabilityDistribution& p,
                                  const ProbabilityDistribution& q) {
  detail::require_same_dim(p, q);
  const RealVector& pv = p.probs();
  const RealVector& qv = q.probs();
  if ((pv.array() <= 0.0).any()) {
    throw Error(ErrorKind::NotDifferentiableHere, "divergence gradient needs strictly positive P");
  }
  const Eigen::Index c = pv.size();
  RealVector g = RealVector::Zero(c);

  struct {
    const RealVector& pv;
    const RealVector& qv;
    RealVector& g;
    Eigen::Index c;

    void require_full_q() const {
      if ((qv.array() <= 0.0).any()) {
        throw Error(ErrorKind::InfiniteDivergence, "gradient undefined where q = 0");
      }
    }
    void operator()(const KullbackLeibler&) const {
      require_full_q();
      g = ((pv.array() / qv.array()).log() + 1.0).matrix();
    }
    void operator()(const JensenShannon&) const {
      g = (0.5 * (2.0 * pv.array() / (pv.array() + qv.array())).log()).matrix();
    }
    void operator()(const Hellinger&) const {
      const Eigen::ArrayXd diff = pv.array().sqrt() - qv.array().sqrt();
      const double s = diff.square().sum();
      if (s == 0.0) return;
      g = (diff / pv.array().sqrt() / (2.0 * std::sqrt(2.0) * std::sqrt(s))).matrix();
    }
    void operator()(const Renyi& r) const {
      detail::require_renyi_order(r.alpha);
      if (r.alpha > 1.0) require_full_q();
      const Eigen::ArrayXd terms = pv.array().pow(r.alpha) * qv.array().pow(1.0 - r.alpha);
      const double a = terms.sum();
      if (a <= 0.0) throw Error(ErrorKind::InfiniteDivergence, "Renyi: disjoint supports");
      g = (r.alpha / (r.alpha - 1.0) * terms / pv.array() / a).matrix();
    }
    void operator()(const Bhattacharyya&) const {
      const double bc = (pv.array() * qv.array()).sqrt().sum();
      if (bc <= 0.0) throw Error(ErrorKind::InfiniteDivergence, "Bhattacharyya coefficient is zero");
      g = (-0.5 * (qv.array() / pv.array()).sqrt() / bc).matrix();
    }
    void operator()(const Wasserstein1D&) const {
      // d/dp_i sum_k |F_P(k) - F_Q(k)| = sum_{k >= i} sign(F_P(k) - F_Q(k))
      double cdf_p = 0.0, cdf_q = 0.0;
      RealVector sign = RealVector::Zero(c);
      for (Eigen::Index k = 0; k + 1 < c; ++k) {
        cdf_p += pv(k);
        cdf_q += qv(k);
        const double gap = cdf_p - cdf_q;
        sign(k) = gap > 0.0 ? 1.0 : (gap < 0.0 ? -1.0 : 0.0);
      }
      double tail = 0.0;
      for (Eigen::Index i = c - 1; i >= 0; --i) {
        tail += sign(i);
        g(i) = tail;
      }
    }
    void operator()(const FDivergence& f) const {
      require_full_q();
      for (Eigen::Index i = 0; i < c; ++i) g(i) = f.prime(pv(i) / qv(i));
    }
  } visitor{pv, qv, g, c};
  std::visit(visitor, kind);
  if (!g.allFinite()) throw Error(ErrorKind::NumericalFailure, "divergence gradient is not finite");
  return g;
}

using DistributionPair = std::pair<ProbabilityDistribution, ProbabilityDistribution>;

/// Mean divergence over (policy, reference) pairs, reduced in index order.
inline double divergence_regularizer(const DivergenceKind& kind, const std::vector<DistributionPair>& pairs) {
  if (pairs.empty()) throw Error(ErrorKind::InvalidInput, "regularizer needs at least one pair");
  double sum = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    try {
      sum += divergence(kind, pairs[i].first, pairs[i].second);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::InfiniteDivergence) {
        throw Error(ErrorKind::InfiniteDivergence, std::string("pair ") + std::to_string(i) + ": " + e.message(), i);
      }
      throw;
    }
  }
  return sum / static_cast<double>(pairs.size());
}

}  // namespace prefk
