// Linear softmax table policy with learnable context/outcome embeddings.
#pragma once

#include "prefk/core.hpp"
#include "prefk/loss.hpp"

#include <vector>

namespace prefk {

struct PreferenceRecord {
  std::size_t x = 0;
  std::size_t y_pos = 0;
  std::size_t y_neg = 1;

  friend bool operator==(const PreferenceRecord&, const PreferenceRecord&) = default;
};

/// pi(y|x) = softmax(logits.row(x))_y, e_x = U.row(x), e_y = V.row(y).
struct ToyPolicy {
  RealMatrix logits;  // contexts x outcomes
  RealMatrix U;       // contexts x dim
  RealMatrix V;       // outcomes x dim

  Eigen::Index contexts() const noexcept { return logits.rows(); }
  Eigen::Index outcomes() const noexcept { return logits.cols(); }
  Eigen::Index dim() const noexcept { return U.cols(); }
  Eigen::Index parameter_count() const noexcept { return logits.size() + U.size() + V.size(); }

  void validate() const {
    if (logits.rows() == 0 || logits.cols() < 2) throw Error(ErrorKind::InvalidInput, "policy needs >= 2 outcomes");
    if (U.rows() != logits.rows() || V.rows() != logits.cols() || U.cols() != V.cols() || U.cols() == 0) {
      throw Error(ErrorKind::InvalidInput, "policy tables have inconsistent shapes");
    }
    if (!logits.allFinite() || !U.allFinite() || !V.allFinite()) {
      throw Error(ErrorKind::InvalidInput, "policy parameters must be finite");
    }
  }

  void validate(const PreferenceRecord& rec) const {
    if (rec.x >= static_cast<std::size_t>(contexts()) || rec.y_pos >= static_cast<std::size_t>(outcomes()) ||
        rec.y_neg >= static_cast<std::size_t>(outcomes())) {
      throw Error(ErrorKind::InvalidInput, "preference record index out of range");
    }
    if (rec.y_pos == rec.y_neg) throw Error(ErrorKind::InvalidInput, "preferred and rejected outcomes coincide");
  }

  ProbabilityDistribution distribution(std::size_t x) const {
    return ProbabilityDistribution(softmax(logits.row(static_cast<Eigen::Index>(x)).transpose()));
  }

  /// Parameters flattened as logits, U, V, each row-major.
  RealVector flatten() const {
    RealVector out(parameter_count());
    Eigen::Index k = 0;
    for (const RealMatrix* m : {&logits, &U, &V}) {
      for (Eigen::Index i = 0; i < m->rows(); ++i)
        for (Eigen::Index j = 0; j < m->cols(); ++j) out(k++) = (*m)(i, j);
    }
    return out;
  }

  ToyPolicy with_parameters(const RealVector& flat) const {
    if (flat.size() != parameter_count()) throw Error(ErrorKind::InvalidInput, "parameter vector has wrong size");
    ToyPolicy out = *this;
    Eigen::Index k = 0;
    for (RealMatrix* m : {&out.logits, &out.U, &out.V}) {
      for (Eigen::Index i = 0; i < m->rows(); ++i)
        for (Eigen::Index j = 0; j < m->cols(); ++j) (*m)(i, j) = flat(k++);
    }
    return out;
  }

  Eigen::Index logit_offset(std::size_t x, std::size_t y) const {
    return static_cast<Eigen::Index>(x) * outcomes() + static_cast<Eigen::Index>(y);
  }
  Eigen::Index context_offset(std::size_t x) const { return logits.size() + static_cast<Eigen::Index>(x) * dim(); }
  Eigen::Index outcome_offset(std::size_t y) const {
    return logits.size() + U.size() + static_cast<Eigen::Index>(y) * dim();
  }
};

inline TripletSignals policy_forward(const ToyPolicy& policy, const PreferenceRecord& rec) {
  policy.validate(rec);
  const auto x = static_cast<Eigen::Index>(rec.x);
  const RealVector logp = log_softmax(policy.logits.row(x).transpose());
  const auto ctx = policy.U.row(x);
  TripletSignals s;
  s.logp_pos = logp(static_cast<Eigen::Index>(rec.y_pos));
  s.logp_neg = logp(static_cast<Eigen::Index>(rec.y_neg));
  // The log-partition cancels in z; take the logit difference so it cancels exactly.
  s.log_ratio = policy.logits(x, static_cast<Eigen::Index>(rec.y_pos)) - policy.logits(x, static_cast<Eigen::Index>(rec.y_neg));
  s.dot_pos = ctx.dot(policy.V.row(static_cast<Eigen::Index>(rec.y_pos)));
  s.dot_neg = ctx.dot(policy.V.row(static_cast<Eigen::Index>(rec.y_neg)));
  return s;
}

/// Gradient of ln pi(y|x) with respect to row x of the logit table:
/// onehot(y) - pi(.|x).
inline RealVector log_prob_grad(const ToyPolicy& policy, std::size_t x, std::size_t y) {
  if (x >= static_cast<std::size_t>(policy.contexts()) || y >= static_cast<std::size_t>(policy.outcomes())) {
    throw Error(ErrorKind::InvalidInput, "log_prob_grad index out of range");
  }
  RealVector g = -softmax(policy.logits.row(static_cast<Eigen::Index>(x)).transpose());
  g(static_cast<Eigen::Index>(y)) += 1.0;
  return g;
}

}  // namespace prefk
