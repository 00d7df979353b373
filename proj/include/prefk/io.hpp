// JSON/JSONL/CSV serialization: run configs, triplet datasets, traces, reports.
#pragma once

#include "prefk/analysis.hpp"
#include "prefk/selection.hpp"
#include "prefk/train.hpp"

#include <json.hpp>

#include <charconv>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace prefk {

using Json = nlohmann::json;

/// Everything a CLI run needs. The generator block is used when no dataset
/// is supplied.
struct RunConfig {
  TrainConfig train{};
  GeneratorKind generator = GeneratorKind::SeparableClusters;
  GeneratorSizes sizes{};
  Thresholds thresholds{};
  double collapse_threshold = kDefaultCollapseThreshold;
};

namespace detail {

[[noreturn]] inline void schema_error(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::InvalidInput, (path.empty() ? std::string("config") : path) + ": " + msg);
}

/// Reads keys off one JSON object and rejects any key nobody asked for.
class ObjectReader {
 public:
  ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) schema_error(path_, "expected an object");
  }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void number(const std::string& key, double& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number()) schema_error(child(key), "expected a number");
      out = v->get<double>();
    }
  }
  template <typename Int>
  void count(const std::string& key, Int& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_unsigned()) schema_error(child(key), "expected a nonnegative integer");
      out = static_cast<Int>(v->get<std::uint64_t>());
    }
  }
  void integer(const std::string& key, int& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_integer()) schema_error(child(key), "expected an integer");
      out = v->get<int>();
    }
  }
  void boolean(const std::string& key, bool& out) {
    if (const Json* v = find(key)) {
      if (!v->is_boolean()) schema_error(child(key), "expected true or false");
      out = v->get<bool>();
    }
  }
  std::string string(const std::string& key) {
    const Json* v = find(key);
    if (!v) schema_error(child(key), "is required");
    if (!v->is_string()) schema_error(child(key), "expected a string");
    return v->get<std::string>();
  }
  template <std::size_t N>
  void array(const std::string& key, std::array<double, N>& out) {
    if (const Json* v = find(key)) {
      if (!v->is_array() || v->size() != N) schema_error(child(key), "expected " + std::to_string(N) + " numbers");
      for (std::size_t i = 0; i < N; ++i) {
        if (!(*v)[i].is_number()) schema_error(child(key), "expected numbers");
        out[i] = (*v)[i].get<double>();
      }
    }
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) schema_error(child(key), "unknown key");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline std::vector<double> number_list(const Json& j, const std::string& path) {
  if (!j.is_array()) schema_error(path, "expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) schema_error(path, "expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

inline RealMatrix matrix_from_json(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) schema_error(path, "expected a nonempty array of rows");
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) schema_error(path, "rows must be nonempty arrays");
  RealMatrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = number_list(j[r], path + "[" + std::to_string(r) + "]");
    if (row.size() != cols) schema_error(path, "rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return m;
}

}  // namespace detail

inline Json to_json(const RealVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Json to_json(const RealMatrix& m) {
  Json out = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

// ---- kernels ---------------------------------------------------------------

inline Json to_json(const PolynomialKernel& k) { return {{"c", k.c}, {"d", k.d}}; }
inline Json to_json(const RbfKernel& k) { return {{"sigma", k.sigma}}; }
inline Json to_json(const SpectralKernel& k) { return {{"lambdas", k.lambdas}}; }
inline Json to_json(const MahalanobisScalarKernel& k) {
  return {{"mu", k.mu}, {"sigma", k.sigma}, {"mu_prime", k.mu_prime}, {"sigma_prime", k.sigma_prime}};
}

inline Json to_json(const KernelQuartet& q) {
  return {{"polynomial", to_json(q.polynomial)},
          {"rbf", to_json(q.rbf)},
          {"spectral", to_json(q.spectral)},
          {"mahalanobis", to_json(q.mahalanobis)}};
}

inline Json to_json(const ObjectiveKernel& kernel) {
  struct {
    Json operator()(const KernelSpec& spec) const {
      struct {
        Json operator()(const IdentityKernel&) const { return {{"type", "identity"}}; }
        Json operator()(const PolynomialKernel& k) const { return with_type("polynomial", to_json(k)); }
        Json operator()(const RbfKernel& k) const { return with_type("rbf", to_json(k)); }
        Json operator()(const SpectralKernel& k) const { return with_type("spectral", to_json(k)); }
        Json operator()(const MahalanobisScalarKernel& k) const { return with_type("mahalanobis", to_json(k)); }
        Json operator()(const MahalanobisVectorKernel& k) const {
          return {{"type", "mahalanobis_vector"}, {"covariance", to_json(k.sigma())}};
        }
        static Json with_type(const char* type, Json j) {
          j["type"] = type;
          return j;
        }
      } inner;
      return std::visit(inner, spec);
    }
    Json operator()(const FlatMixture& m) const {
      return {{"type", "mixture"}, {"components", to_json(m.kernels)}, {"theta", m.state.theta}};
    }
    Json operator()(const HierarchicalMixture& m) const {
      return {{"type", "hmk"}, {"components", to_json(m.kernels)}, {"theta", m.state.theta}, {"psi", m.state.psi}};
    }
  } visitor;
  return std::visit(visitor, kernel);
}

namespace detail {

inline PolynomialKernel read_polynomial(ObjectReader& r) {
  PolynomialKernel k;
  r.number("c", k.c);
  r.integer("d", k.d);
  validate(k);
  return k;
}
inline RbfKernel read_rbf(ObjectReader& r) {
  RbfKernel k;
  r.number("sigma", k.sigma);
  validate(k);
  return k;
}
inline SpectralKernel read_spectral(ObjectReader& r) {
  SpectralKernel k;
  if (const Json* v = r.find("lambdas")) k.lambdas = number_list(*v, r.child("lambdas"));
  validate(k);
  return k;
}
inline MahalanobisScalarKernel read_mahalanobis(ObjectReader& r) {
  MahalanobisScalarKernel k;
  r.number("mu", k.mu);
  r.number("sigma", k.sigma);
  r.number("mu_prime", k.mu_prime);
  r.number("sigma_prime", k.sigma_prime);
  validate(k);
  return k;
}

inline KernelQuartet read_quartet(const Json* j, const std::string& path) {
  KernelQuartet q;
  if (!j) return q;
  ObjectReader r(*j, path);
  auto sub = [&](const char* key, auto reader, auto& slot) {
    if (const Json* v = r.find(key)) {
      ObjectReader inner(*v, r.child(key));
      slot = reader(inner);
      inner.finish();
    }
  };
  sub("polynomial", read_polynomial, q.polynomial);
  sub("rbf", read_rbf, q.rbf);
  sub("spectral", read_spectral, q.spectral);
  sub("mahalanobis", read_mahalanobis, q.mahalanobis);
  r.finish();
  return q;
}

}  // namespace detail

inline ObjectiveKernel kernel_from_json(const Json& j, const std::string& path = "kernel") {
  detail::ObjectReader r(j, path);
  const std::string type = r.string("type");
  ObjectiveKernel out;
  if (type == "identity") {
    out = KernelSpec{IdentityKernel{}};
  } else if (type == "polynomial") {
    out = KernelSpec{detail::read_polynomial(r)};
  } else if (type == "rbf") {
    out = KernelSpec{detail::read_rbf(r)};
  } else if (type == "spectral") {
    out = KernelSpec{detail::read_spectral(r)};
  } else if (type == "mahalanobis") {
    out = KernelSpec{detail::read_mahalanobis(r)};
  } else if (type == "mahalanobis_vector") {
    const Json* cov = r.find("covariance");
    if (!cov) detail::schema_error(r.child("covariance"), "is required");
    out = KernelSpec{MahalanobisVectorKernel(detail::matrix_from_json(*cov, r.child("covariance")))};
  } else if (type == "mixture") {
    FlatMixture m{detail::read_quartet(r.find("components"), r.child("components")), {}};
    r.array("theta", m.state.theta);
    out = m;
  } else if (type == "hmk") {
    HierarchicalMixture m{detail::read_quartet(r.find("components"), r.child("components")), {}};
    r.array("theta", m.state.theta);
    r.array("psi", m.state.psi);
    out = m;
  } else {
    detail::schema_error(r.child("type"), "unknown kernel '" + type + "'");
  }
  r.finish();
  return out;
}

// ---- divergences -----------------------------------------------------------

inline Json to_json(const DivergenceKind& kind) {
  struct {
    Json operator()(const KullbackLeibler&) const { return {{"type", "kl"}}; }
    Json operator()(const JensenShannon&) const { return {{"type", "js"}}; }
    Json operator()(const Hellinger&) const { return {{"type", "hellinger"}}; }
    Json operator()(const Renyi& d) const { return {{"type", "renyi"}, {"alpha", d.alpha}}; }
    Json operator()(const Bhattacharyya&) const { return {{"type", "bhattacharyya"}}; }
    Json operator()(const Wasserstein1D&) const { return {{"type", "wasserstein"}}; }
    Json operator()(const FDivergence& f) const { return {{"type", "f"}, {"function", f.name()}}; }
  } visitor;
  return std::visit(visitor, kind);
}

inline DivergenceKind divergence_from_json(const Json& j, const std::string& path = "divergence") {
  detail::ObjectReader r(j, path);
  const std::string type = r.string("type");
  DivergenceKind out;
  if (type == "kl") {
    out = KullbackLeibler{};
  } else if (type == "js") {
    out = JensenShannon{};
  } else if (type == "hellinger") {
    out = Hellinger{};
  } else if (type == "bhattacharyya") {
    out = Bhattacharyya{};
  } else if (type == "wasserstein") {
    out = Wasserstein1D{};
  } else if (type == "renyi") {
    Renyi d{2.0};
    r.number("alpha", d.alpha);
    if (!(d.alpha > 0.0) || d.alpha == 1.0) detail::schema_error(r.child("alpha"), "must be positive and not 1");
    out = d;
  } else if (type == "f") {
    const std::string fn = r.string("function");
    auto f = FDivergence::by_name(fn);
    if (!f) detail::schema_error(r.child("function"), "unknown f-divergence '" + fn + "'");
    out = *f;
  } else {
    detail::schema_error(r.child("type"), "unknown divergence '" + type + "'");
  }
  r.finish();
  return out;
}

// ---- thresholds and run config ---------------------------------------------

inline Json to_json(const Thresholds& t) {
  return {{"eps1", t.eps1},           {"eps2", t.eps2},
          {"eps3", t.eps3},           {"eps4", t.eps4},
          {"eps5", t.eps5},           {"div_eps1", t.div_eps1},
          {"div_eps2", t.div_eps2},   {"div_eps3", t.div_eps3},
          {"low_overlap", t.low_overlap}, {"low_smoothness", t.low_smoothness},
          {"support_floor", t.support_floor}, {"balance_tol", t.balance_tol}};
}

inline Thresholds thresholds_from_json(const Json& j, const std::string& path = "thresholds") {
  Thresholds t;
  detail::ObjectReader r(j, path);
  r.number("eps1", t.eps1);
  r.number("eps2", t.eps2);
  r.number("eps3", t.eps3);
  r.number("eps4", t.eps4);
  r.number("eps5", t.eps5);
  r.number("div_eps1", t.div_eps1);
  r.number("div_eps2", t.div_eps2);
  r.number("div_eps3", t.div_eps3);
  r.number("low_overlap", t.low_overlap);
  r.number("low_smoothness", t.low_smoothness);
  r.number("support_floor", t.support_floor);
  r.number("balance_tol", t.balance_tol);
  r.finish();
  try {
    t.validate();
  } catch (const Error& e) {
    detail::schema_error(path, e.message());
  }
  return t;
}

inline Json to_json(const RunConfig& c) {
  const ObjectiveConfig& o = c.train.objective;
  return {{"objective",
           {{"alpha", o.alpha},
            {"beta", o.beta},
            {"gamma", o.gamma},
            {"allow_out_of_range", o.allow_out_of_range},
            {"kernel", to_json(o.kernel)},
            {"divergence", to_json(o.divergence)}}},
          {"train",
           {{"eta", c.train.eta},
            {"steps", c.train.steps},
            {"seed", c.train.seed.value},
            {"entropy_weight", c.train.entropy.weight},
            {"snapshot_interval", c.train.snapshot_interval},
            {"collapse_threshold", c.collapse_threshold}}},
          {"generator",
           {{"kind", to_string(c.generator)},
            {"contexts", c.sizes.contexts},
            {"outcomes", c.sizes.outcomes},
            {"records", c.sizes.records},
            {"dim", c.sizes.dim}}},
          {"thresholds", to_json(c.thresholds)}};
}

/// Missing keys keep their defaults; unknown keys and ill-typed values are
/// rejected with the offending path.
inline RunConfig run_config_from_json(const Json& j) {
  RunConfig c;
  detail::ObjectReader root(j, "");
  if (const Json* v = root.find("objective")) {
    detail::ObjectReader r(*v, "objective");
    ObjectiveConfig& o = c.train.objective;
    r.number("alpha", o.alpha);
    r.number("beta", o.beta);
    r.number("gamma", o.gamma);
    r.boolean("allow_out_of_range", o.allow_out_of_range);
    if (const Json* k = r.find("kernel")) o.kernel = kernel_from_json(*k, "objective.kernel");
    if (const Json* d = r.find("divergence")) o.divergence = divergence_from_json(*d, "objective.divergence");
    r.finish();
    try {
      o.validate();
    } catch (const Error& e) {
      detail::schema_error("objective", e.message());
    }
  }
  if (const Json* v = root.find("train")) {
    detail::ObjectReader r(*v, "train");
    r.number("eta", c.train.eta);
    r.count("steps", c.train.steps);
    r.count("seed", c.train.seed.value);
    r.number("entropy_weight", c.train.entropy.weight);
    r.count("snapshot_interval", c.train.snapshot_interval);
    r.number("collapse_threshold", c.collapse_threshold);
    r.finish();
    if (!(c.train.eta > 0.0)) detail::schema_error("train.eta", "must be positive");
    if (!(c.train.entropy.weight >= 0.0)) detail::schema_error("train.entropy_weight", "must be nonnegative");
    if (!(c.collapse_threshold > 0.0) || c.collapse_threshold > 0.25) {
      detail::schema_error("train.collapse_threshold", "must lie in (0, 0.25]");
    }
  }
  if (const Json* v = root.find("generator")) {
    detail::ObjectReader r(*v, "generator");
    if (r.find("kind")) {
      const std::string kind = r.string("kind");
      const auto g = generator_from_string(kind);
      if (!g) detail::schema_error("generator.kind", "unknown generator '" + kind + "'");
      c.generator = *g;
    }
    r.count("contexts", c.sizes.contexts);
    r.count("outcomes", c.sizes.outcomes);
    r.count("records", c.sizes.records);
    r.count("dim", c.sizes.dim);
    r.finish();
  }
  if (const Json* v = root.find("thresholds")) c.thresholds = thresholds_from_json(*v);
  root.finish();
  return c;
}

inline Json parse_json_text(std::istream& in, const std::string& what) {
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::InvalidInput, what + ": " + e.what());
  }
}

// ---- triplet datasets ------------------------------------------------------

struct TripletFileRecord {
  RealVector x;
  RealVector y_pos;
  RealVector y_neg;
  std::optional<double> logp_pos;
  std::optional<double> logp_neg;
  std::optional<ProbabilityDistribution> policy_dist;
  std::optional<ProbabilityDistribution> ref_dist;

  EmbeddingTriplet triplet() const { return {x, y_pos, y_neg}; }
};

struct TripletDataset {
  std::vector<TripletFileRecord> records;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each record
  bool has_logp = false;
  bool has_dists = false;
};

namespace detail {

[[noreturn]] inline void line_error(std::size_t line, const std::string& msg) {
  throw Error(ErrorKind::InvalidInput, "line " + std::to_string(line) + ": " + msg, line);
}

inline RealVector line_vector(const Json& j, const char* key, std::size_t line) {
  const auto it = j.find(key);
  if (it == j.end()) line_error(line, std::string("missing \"") + key + "\"");
  if (!it->is_array() || it->empty()) line_error(line, std::string("\"") + key + "\" must be a nonempty array");
  RealVector v(static_cast<Eigen::Index>(it->size()));
  for (std::size_t i = 0; i < it->size(); ++i) {
    if (!(*it)[i].is_number()) line_error(line, std::string("\"") + key + "\" must hold numbers");
    v(static_cast<Eigen::Index>(i)) = (*it)[i].get<double>();
  }
  if (!v.allFinite()) line_error(line, std::string("\"") + key + "\" must be finite");
  return v;
}

}  // namespace detail

/// One JSON object per line; blank lines are skipped. Embedding dimension and
/// the presence of the optional field pairs are fixed by the first record.
inline TripletDataset parse_triplet_jsonl(std::istream& in) {
  static const std::set<std::string> known{"x", "y_pos", "y_neg", "logp_pos", "logp_neg", "policy_dist", "ref_dist"};
  TripletDataset ds;
  std::string text;
  std::size_t line = 0;
  Eigen::Index dim = 0, classes = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    Json j;
    try {
      j = Json::parse(text);
    } catch (const Json::parse_error& e) {
      detail::line_error(line, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) detail::line_error(line, "expected a JSON object");
    for (const auto& [key, _] : j.items()) {
      if (!known.count(key)) detail::line_error(line, "unknown key \"" + key + "\"");
    }
    TripletFileRecord rec;
    rec.x = detail::line_vector(j, "x", line);
    rec.y_pos = detail::line_vector(j, "y_pos", line);
    rec.y_neg = detail::line_vector(j, "y_neg", line);
    if (rec.x.size() != rec.y_pos.size() || rec.x.size() != rec.y_neg.size()) {
      detail::line_error(line, "x, y_pos and y_neg differ in dimension");
    }
    if (dim == 0) dim = rec.x.size();
    if (rec.x.size() != dim) {
      detail::line_error(line, "embedding dimension " + std::to_string(rec.x.size()) + " differs from " +
                                   std::to_string(dim) + " on earlier lines");
    }

    const bool lp = j.contains("logp_pos"), ln = j.contains("logp_neg");
    if (lp != ln) detail::line_error(line, "logp_pos and logp_neg must appear together");
    if (lp) {
      if (!j["logp_pos"].is_number() || !j["logp_neg"].is_number()) {
        detail::line_error(line, "logp_pos and logp_neg must be numbers");
      }
      rec.logp_pos = j["logp_pos"].get<double>();
      rec.logp_neg = j["logp_neg"].get<double>();
    }
    const bool pd = j.contains("policy_dist"), rd = j.contains("ref_dist");
    if (pd != rd) detail::line_error(line, "policy_dist and ref_dist must appear together");
    if (pd) {
      const RealVector p = detail::line_vector(j, "policy_dist", line);
      const RealVector q = detail::line_vector(j, "ref_dist", line);
      if (p.size() != q.size()) detail::line_error(line, "policy_dist and ref_dist differ in length");
      if (classes == 0) classes = p.size();
      if (p.size() != classes) detail::line_error(line, "distribution length differs from earlier lines");
      try {
        rec.policy_dist = ProbabilityDistribution(p);
        rec.ref_dist = ProbabilityDistribution(q);
      } catch (const Error& e) {
        detail::line_error(line, e.message());
      }
    }
    if (ds.records.empty()) {
      ds.has_logp = lp;
      ds.has_dists = pd;
    } else if (ds.has_logp != lp || ds.has_dists != pd) {
      detail::line_error(line, "optional fields must be present on every line or on none");
    }
    ds.records.push_back(std::move(rec));
    ds.line_numbers.push_back(line);
  }
  if (ds.records.empty()) throw Error(ErrorKind::InvalidInput, "dataset has no records");
  return ds;
}

/// Builds a trainable problem from a triplet file: each distinct context and
/// outcome embedding becomes a table row; logits start at zero.
inline SyntheticData data_from_triplets(const TripletDataset& ds) {
  std::vector<RealVector> contexts, outcomes;
  auto index_of = [](std::vector<RealVector>& rows, const RealVector& v) {
    for (std::size_t i = 0; i < rows.size(); ++i)
      if (rows[i] == v) return i;
    rows.push_back(v);
    return rows.size() - 1;
  };
  SyntheticData data;
  for (const auto& rec : ds.records) {
    const std::size_t x = index_of(contexts, rec.x);
    const std::size_t yp = index_of(outcomes, rec.y_pos);
    const std::size_t yn = index_of(outcomes, rec.y_neg);
    data.records.push_back({x, yp, yn});
  }
  for (std::size_t n = 0; n < data.records.size(); ++n) {
    if (data.records[n].y_pos == data.records[n].y_neg) {
      detail::line_error(ds.line_numbers[n], "y_pos and y_neg are the same embedding");
    }
  }
  const auto dim = ds.records.front().x.size();
  data.policy.logits = RealMatrix::Zero(static_cast<Eigen::Index>(contexts.size()), static_cast<Eigen::Index>(outcomes.size()));
  data.policy.U.resize(static_cast<Eigen::Index>(contexts.size()), dim);
  data.policy.V.resize(static_cast<Eigen::Index>(outcomes.size()), dim);
  for (std::size_t i = 0; i < contexts.size(); ++i) data.policy.U.row(static_cast<Eigen::Index>(i)) = contexts[i].transpose();
  for (std::size_t i = 0; i < outcomes.size(); ++i) data.policy.V.row(static_cast<Eigen::Index>(i)) = outcomes[i].transpose();
  return data;
}

// ---- traces and snapshots --------------------------------------------------

/// Shortest decimal that round-trips to the same double.
inline std::string format_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline constexpr const char* kTraceHeader = "step,lambda1,lambda2,lambda3,lambda4,tau1,tau2,entropy,loss";

/// Columns absent for a given kernel (lambda without a mixture, tau without
/// HMK) are left empty.
inline void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << kTraceHeader << '\n';
  for (const auto& row : rows) {
    out << row.step;
    for (std::size_t i = 0; i < 4; ++i) out << ',' << (row.lambda ? format_real((*row.lambda)[i]) : "");
    for (std::size_t j = 0; j < 2; ++j) out << ',' << (row.tau ? format_real((*row.tau)[j]) : "");
    out << ',' << (row.entropy ? format_real(*row.entropy) : "");
    out << ',' << format_real(row.loss.total) << '\n';
  }
}

inline Json to_json(const PolicySnapshot& s) {
  return {{"step", s.step}, {"logits", to_json(s.policy.logits)}, {"U", to_json(s.policy.U)}, {"V", to_json(s.policy.V)}};
}

inline Json snapshots_json(const std::vector<PolicySnapshot>& snaps) {
  Json out = Json::array();
  for (const auto& s : snaps) out.push_back(to_json(s));
  return out;
}

/// JSON has no infinity; non-finite reals are written as null.
inline Json real_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace prefk
