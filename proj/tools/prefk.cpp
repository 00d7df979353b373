// prefk: gradient checks, kernel/divergence selection, training runs and
// spectral/cluster analysis from the command line.
#include "prefk/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace prefk::cli;
  CLI::App app{"Kernelized preference-optimization toolkit"};
  app.require_subcommand(1);

  GradcheckOptions gc;
  std::uint64_t gc_seed = 0;
  auto* gradcheck = app.add_subcommand("gradcheck", "certify analytic gradients against finite differences");
  gradcheck->add_option("--config", gc.config, "run config JSON");
  gradcheck->add_option("--trials", gc.trials, "random configurations to check")->capture_default_str();
  auto* gc_seed_opt = gradcheck->add_option("--seed", gc_seed, "override the config seed");

  SelectOptions sel;
  auto* select = app.add_subcommand("select", "recommend a kernel and divergence for a triplet dataset");
  select->add_option("--data", sel.data, "triplet JSONL")->required();
  select->add_option("--thresholds", sel.thresholds, "thresholds JSON");

  TrainOptions tr;
  std::size_t tr_steps = 0;
  std::uint64_t tr_seed = 0;
  auto* train = app.add_subcommand("train", "run seeded training and write trace, snapshots and summary");
  train->add_option("--config", tr.config, "run config JSON");
  auto* data_opt = train->add_option("--data", tr.data, "triplet JSONL to train on");
  train->add_option("--generator", tr.generator, "separable_clusters, local_structure or random")->excludes(data_opt);
  auto* steps_opt = train->add_option("--steps", tr_steps, "override the step count");
  auto* tr_seed_opt = train->add_option("--seed", tr_seed, "override the config seed");
  train->add_option("--out", tr.out, "output directory")->required();

  AnalyzeOptions an;
  auto* analyze = app.add_subcommand("analyze", "Davies-Bouldin or weighted-alpha report");
  analyze->add_option("kind", an.kind, "clusters or htsr")->required()->check(CLI::IsMember({"clusters", "htsr"}));
  analyze->add_option("--data", an.input, "clusters: labeled JSONL; htsr: JSON list of matrices")->required();

  std::optional<std::string> cfg_path;
  auto* config = app.add_subcommand("config", "print the effective run config (defaults when none given)");
  config->add_option("--config", cfg_path, "run config JSON to validate and expand");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitInput;
  }

  const Streams io{std::cout, std::cerr};
  if (*gradcheck) {
    if (*gc_seed_opt) gc.seed = gc_seed;
    return cmd_gradcheck(gc, io);
  }
  if (*select) return cmd_select(sel, io);
  if (*train) {
    if (*steps_opt) tr.steps = tr_steps;
    if (*tr_seed_opt) tr.seed = tr_seed;
    return cmd_train(tr, io);
  }
  if (*analyze) return cmd_analyze(an, io);
  return cmd_config(cfg_path, io);
}
