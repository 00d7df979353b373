// Command implementations behind the prefk executable. Each command writes a
// JSON report to `out`, diagnostics to `err`, and returns the exit status:
// 0 success, 1 analysis or check failure, 2 input or config error.
#pragma once

#include "prefk/gradcheck.hpp"
#include "prefk/io.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

namespace prefk::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInput = 2;
inline constexpr double kGradTolerance = 1e-4;

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

inline bool is_input_error(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput:
    case ErrorKind::SingularMatrix:
    case ErrorKind::InvalidFunction:
    case ErrorKind::InvalidKernelForm:
    case ErrorKind::UseKLInstead:
    case ErrorKind::DegenerateTriplet:
    case ErrorKind::RangeUndefined: return true;
    default: return false;
  }
}

/// Runs `body`, mapping library errors onto the exit-code table.
inline int guarded(Streams io, const std::function<int()>& body) {
  try {
    return body();
  } catch (const Error& e) {
    io.err << "prefk: " << e.what() << '\n';
    return is_input_error(e.kind()) ? kExitInput : kExitFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    io.err << "prefk: InvalidInput: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    io.err << "prefk: error: " << e.what() << '\n';
    return kExitFailure;
  }
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidInput, "cannot open '" + path + "'");
  return in;
}

inline RunConfig load_config(const std::optional<std::string>& path) {
  if (!path) return RunConfig{};
  auto in = open_input(*path);
  return run_config_from_json(parse_json_text(in, *path));
}

/// Config seed, then PREFK_SEED, then an explicit --seed, each overriding the last.
inline RandomSeed resolve_seed(RandomSeed from_config, const std::optional<std::uint64_t>& flag) {
  RandomSeed seed = from_config;
  if (const char* env = std::getenv("PREFK_SEED"); env && *env) {
    std::uint64_t v = 0;
    const std::string s(env);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      throw Error(ErrorKind::InvalidInput, "PREFK_SEED must be a nonnegative integer, got '" + s + "'");
    }
    seed.value = v;
  }
  if (flag) seed.value = *flag;
  return seed;
}

/// Component hyperparameters for random gradient checks: a mixture's own
/// quartet, or the defaults with the configured single kernel in its slot.
inline KernelQuartet quartet_of(const ObjectiveKernel& kernel) {
  if (const auto* f = std::get_if<FlatMixture>(&kernel)) return f->kernels;
  if (const auto* h = std::get_if<HierarchicalMixture>(&kernel)) return h->kernels;
  KernelQuartet q;
  const auto& spec = std::get<KernelSpec>(kernel);
  if (const auto* k = std::get_if<PolynomialKernel>(&spec)) q.polynomial = *k;
  if (const auto* k = std::get_if<RbfKernel>(&spec)) q.rbf = *k;
  if (const auto* k = std::get_if<SpectralKernel>(&spec)) q.spectral = *k;
  if (const auto* k = std::get_if<MahalanobisScalarKernel>(&spec)) q.mahalanobis = *k;
  return q;
}

// ---- gradcheck -------------------------------------------------------------

struct GradcheckOptions {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::size_t trials = 100;
};

inline int cmd_gradcheck(const GradcheckOptions& opt, Streams io) {
  return guarded(io, [&] {
    const RunConfig cfg = load_config(opt.config);
    if (opt.trials == 0) throw Error(ErrorKind::InvalidInput, "trials must be positive");
    const RandomSeed seed = resolve_seed(cfg.train.seed, opt.seed);
    const auto results = run_gradcheck_trials(cfg.train.objective, quartet_of(cfg.train.objective.kernel), seed.value,
                                              opt.trials);

    std::map<std::pair<std::size_t, std::size_t>, std::pair<std::size_t, double>> per_pair;
    std::size_t failures = 0;
    double worst = 0.0;
    for (const auto& r : results) {
      auto& slot = per_pair[{r.kernel_index, r.divergence_index}];
      ++slot.first;
      slot.second = std::max(slot.second, r.max_rel_err);
      failures += !(r.max_rel_err <= kGradTolerance);
      worst = std::max(worst, r.max_rel_err);
    }
    auto ranked = results;
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.max_rel_err > b.max_rel_err; });
    Json offenders = Json::array();
    for (std::size_t i = 0; i < std::min<std::size_t>(5, ranked.size()); ++i) {
      offenders.push_back({{"trial", ranked[i].trial},
                           {"kernel", gradcheck_kernel_label(ranked[i].kernel_index)},
                           {"divergence", gradcheck_divergence_label(ranked[i].divergence_index)},
                           {"max_rel_err", ranked[i].max_rel_err}});
    }
    Json pairs = Json::array();
    for (const auto& [key, val] : per_pair) {
      pairs.push_back({{"kernel", gradcheck_kernel_label(key.first)},
                       {"divergence", gradcheck_divergence_label(key.second)},
                       {"trials", val.first},
                       {"max_rel_err", val.second}});
    }
    const bool passed = failures == 0;
    io.out << Json{{"trials", opt.trials},
                   {"seed", seed.value},
                   {"tolerance", kGradTolerance},
                   {"max_rel_err", worst},
                   {"failures", failures},
                   {"passed", passed},
                   {"worst", offenders},
                   {"pairs", pairs}}
                  .dump(2)
           << '\n';
    if (!passed) io.err << "prefk: gradcheck: " << failures << " of " << opt.trials << " trials exceed tolerance\n";
    return passed ? kExitOk : kExitFailure;
  });
}

// ---- select ----------------------------------------------------------------

struct SelectOptions {
  std::string data;
  std::optional<std::string> thresholds;
};

inline const char* to_string(PndForm form) { return form == PndForm::Ratio ? "ratio" : "difference"; }

/// Selection report for a parsed dataset. Distribution metrics use the
/// policy_dist rows in file order as training checkpoints, and the log-ratio
/// z (or, without log-probabilities, the distance gap d+ - d-) as the
/// kurtosis sample.
inline Json selection_report(const TripletDataset& ds, const Thresholds& th) {
  std::vector<EmbeddingTriplet> triplets;
  for (const auto& rec : ds.records) triplets.push_back(rec.triplet());

  KernelSelectionMetrics km;
  try {
    km = kernel_metrics(triplets);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateTriplet || !e.index()) throw;
    throw Error(ErrorKind::DegenerateTriplet,
                "line " + std::to_string(ds.line_numbers.at(*e.index())) + ": " + e.message(),
                ds.line_numbers.at(*e.index()));
  }
  const SelectionResult kernel = select_kernel(km, th);
  Json report{{"triplets", ds.records.size()},
              {"metrics",
               {{"kernel",
                 {{"pnd", km.pnd}, {"pnav", km.pnav}, {"tat", km.tat}, {"nag", km.nag}, {"pnd_form", to_string(km.form)}}}}},
              {"thresholds", to_json(th)},
              {"recommended_kernel", kernel.name},
              {"recommended_divergence", nullptr},
              {"rule_fired", {{"kernel", kernel.rule}, {"divergence", nullptr}}}};

  auto insufficient = [&](const std::string& reason) {
    report["metrics"]["divergence"] = {{"status", "insufficient data"}, {"reason", reason}};
    return report;
  };
  if (!ds.has_dists) return insufficient("dataset has no policy_dist/ref_dist fields");

  std::vector<ProbabilityDistribution> pol, ref;
  std::vector<double> samples;
  for (const auto& rec : ds.records) {
    pol.push_back(*rec.policy_dist);
    ref.push_back(*rec.ref_dist);
    if (ds.has_logp) {
      samples.push_back(*rec.logp_pos - *rec.logp_neg);
    } else {
      const auto d = triplet_distances(rec.triplet());
      samples.push_back(d.d_pos - d.d_neg);
    }
  }
  DivergenceSelectionMetrics dm;
  try {
    dm = divergence_metrics(pol, ref, pol, samples, triplets, th);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::KurtosisUndefined) throw;
    return insufficient(e.message());
  }
  const SelectionResult div = select_divergence(dm, th);
  report["metrics"]["divergence"] = {{"status", "ok"},
                                     {"support_overlap", dm.support_overlap},
                                     {"drift", dm.drift},
                                     {"kurtosis", dm.kurtosis},
                                     {"smoothness", dm.smoothness},
                                     {"kurtosis_source", ds.has_logp ? "log_ratio" : "distance_gap"}};
  report["recommended_divergence"] = div.name;
  report["rule_fired"]["divergence"] = div.rule;
  return report;
}

inline int cmd_select(const SelectOptions& opt, Streams io) {
  return guarded(io, [&] {
    Thresholds th;
    if (opt.thresholds) {
      auto in = open_input(*opt.thresholds);
      th = thresholds_from_json(parse_json_text(in, *opt.thresholds));
    }
    auto in = open_input(opt.data);
    const TripletDataset ds = parse_triplet_jsonl(in);
    io.out << selection_report(ds, th).dump(2) << '\n';
    return kExitOk;
  });
}

// ---- train -----------------------------------------------------------------

struct TrainOptions {
  std::optional<std::string> config;
  std::optional<std::string> data;
  std::optional<std::string> generator;
  std::optional<std::size_t> steps;
  std::optional<std::uint64_t> seed;
  std::string out;
};

inline Json weights_json(const std::optional<Weights4>& w) { return w ? Json(*w) : Json(nullptr); }
inline Json weights_json(const std::optional<Weights2>& w) { return w ? Json(*w) : Json(nullptr); }

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::InvalidInput, "cannot write '" + path.string() + "'");
  f << text;
}

inline int cmd_train(const TrainOptions& opt, Streams io) {
  return guarded(io, [&] {
    RunConfig cfg = load_config(opt.config);
    if (opt.data && opt.generator) throw Error(ErrorKind::InvalidInput, "--data and --generator are exclusive");
    if (opt.generator) {
      const auto g = generator_from_string(*opt.generator);
      if (!g) throw Error(ErrorKind::InvalidInput, "unknown generator '" + *opt.generator + "'");
      cfg.generator = *g;
    }
    if (opt.steps) cfg.train.steps = *opt.steps;
    cfg.train.seed = resolve_seed(cfg.train.seed, opt.seed);

    SyntheticData data;
    if (opt.data) {
      auto in = open_input(*opt.data);
      data = data_from_triplets(parse_triplet_jsonl(in));
    } else {
      data = gen_synthetic(cfg.generator, cfg.sizes, cfg.train.seed);
    }

    const TrainTrace trace = train_run(cfg.train, data);
    if (trace.rows.empty()) {
      throw Error(ErrorKind::InvalidInput,
                  "initial objective cannot be evaluated: " + trace.failure.value_or("unknown failure"));
    }
    const std::filesystem::path dir(opt.out);
    std::filesystem::create_directories(dir);

    std::ostringstream csv;
    write_trace_csv(csv, trace.rows);
    write_file(dir / "trace.csv", csv.str());
    write_file(dir / "snapshots.json", snapshots_json(trace.snapshots).dump(2) + "\n");

    const TraceRow& last = trace.rows.back();
    Json collapse = nullptr;
    bool collapsed = false;
    if (last.lambda) {
      std::vector<Weights4> lambdas;
      for (const auto& row : trace.rows) lambdas.push_back(*row.lambda);
      const CollapseReport rep = collapse_detect(lambdas, cfg.collapse_threshold);
      collapsed = rep.collapsed;
      collapse = {{"collapsed", rep.collapsed},
                  {"threshold", cfg.collapse_threshold},
                  {"dominant_index", rep.dominant_index ? Json(*rep.dominant_index + 1) : Json(nullptr)},
                  {"min_lambda_trajectory", rep.min_lambda_trajectory}};
      write_file(dir / "collapse.json", collapse.dump(2) + "\n");
    }
    const Json summary{{"initial_loss", trace.rows.front().loss.total},
                       {"final_loss", last.loss.total},
                       {"collapsed", collapsed},
                       {"dominant_index", collapse.is_null() ? Json(nullptr) : collapse["dominant_index"]},
                       {"final_lambda", weights_json(last.lambda)},
                       {"final_tau", weights_json(last.tau)},
                       {"steps_completed", last.step},
                       {"kernel", objective_kernel_name(cfg.train.objective.kernel)},
                       {"source", opt.data ? *opt.data : std::string(to_string(cfg.generator))},
                       {"seed", cfg.train.seed.value},
                       {"failure", trace.failure ? Json(*trace.failure) : Json(nullptr)}};
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    io.out << summary.dump(2) << '\n';
    if (!trace.ok()) {
      io.err << "prefk: NumericalFailure: " << *trace.failure << " (partial trace of " << trace.rows.size()
             << " rows written)\n";
      return kExitFailure;
    }
    return kExitOk;
  });
}

// ---- analyze ---------------------------------------------------------------

/// One {"point": [reals], "label": k} object per line; labels run 0..k-1.
inline ClusterAssignment parse_cluster_jsonl(std::istream& in) {
  ClusterAssignment a;
  std::string text;
  std::size_t line = 0;
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
      if (key != "point" && key != "label") detail::line_error(line, "unknown key \"" + key + "\"");
    }
    RealVector p = detail::line_vector(j, "point", line);
    if (!a.points.empty() && p.size() != a.points.front().size()) {
      detail::line_error(line, "point dimension differs from earlier lines");
    }
    if (!j.contains("label") || !j["label"].is_number_unsigned()) {
      detail::line_error(line, "\"label\" must be a nonnegative integer");
    }
    const auto label = j["label"].get<std::size_t>();
    a.points.push_back(std::move(p));
    a.labels.push_back(label);
    a.k = std::max(a.k, label + 1);
  }
  if (a.points.empty()) throw Error(ErrorKind::InvalidInput, "cluster file has no points");
  return a;
}

inline std::vector<RealMatrix> parse_layers_json(std::istream& in, const std::string& what) {
  const Json j = parse_json_text(in, what);
  if (!j.is_array() || j.empty()) throw Error(ErrorKind::InvalidInput, what + ": expected a nonempty list of matrices");
  std::vector<RealMatrix> layers;
  for (std::size_t l = 0; l < j.size(); ++l) layers.push_back(detail::matrix_from_json(j[l], "layer " + std::to_string(l)));
  return layers;
}

struct AnalyzeOptions {
  std::string kind;  // "clusters" or "htsr"
  std::string input;
};

inline int cmd_analyze(const AnalyzeOptions& opt, Streams io) {
  return guarded(io, [&] {
    auto in = open_input(opt.input);
    if (opt.kind == "clusters") {
      const ClusterAssignment a = parse_cluster_jsonl(in);
      io.out << Json{{"dbs", davies_bouldin(a)}, {"clusters", a.k}, {"points", a.points.size()}}.dump(2) << '\n';
    } else if (opt.kind == "htsr") {
      const HTSRReport rep = weighted_alpha(parse_layers_json(in, opt.input));
      Json layers = Json::array();
      for (const auto& f : rep.layers) layers.push_back({{"alpha", real_or_null(f.alpha)}, {"lambda_max", f.lambda_max}});
      io.out << Json{{"layers", layers}, {"weighted_alpha", rep.weighted_alpha}}.dump(2) << '\n';
    } else {
      throw Error(ErrorKind::InvalidInput, "analyze kind must be clusters or htsr");
    }
    return kExitOk;
  });
}

// ---- config ----------------------------------------------------------------

/// Prints the effective configuration: defaults, overlaid by `config` if given.
inline int cmd_config(const std::optional<std::string>& config, Streams io) {
  return guarded(io, [&] {
    io.out << to_json(load_config(config)).dump(2) << '\n';
    return kExitOk;
  });
}

}  // namespace prefk::cli
