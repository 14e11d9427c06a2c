#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ugraph/commands.hpp"
#include "ugraph/runtime.hpp"

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kIoError = 3, kNumericalError = 4 };

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string dataset, bnn, activenet;
  bool full_scale = false;
};

ugraph::RunConfig resolve_config(const Options& o) {
  ugraph::RunConfig cfg = o.config_path.empty() ? ugraph::RunConfig{} : ugraph::load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

ugraph::cmd::Paths resolve_paths(const Options& o) {
  return {o.out, o.dataset, o.bnn, o.activenet};
}

}  // namespace

int main(int argc, char** argv) {
  ugraph::tune_allocator();
  CLI::App app{"Center-of-mass estimation from wrist force/torque readings: simulation, training and benchmarks"};
  app.require_subcommand(1);
  Options opt;
  app.add_option("--config", opt.config_path, "JSON config file (comments allowed)");
  app.add_option("--seed", opt.seed, "Override the config seed");
  app.add_option("--out", opt.out, "Output directory")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Generate a simulated grasp dataset");
  auto* train_bnn = app.add_subcommand("train-bnn", "Pretrain and sample the Bayesian CoM regressor");
  auto* train_active = app.add_subcommand("train-active", "Label actions with the BNN and fit ActiveNet");
  auto* eval = app.add_subcommand("eval", "Benchmark all methods on held-out scenes");
  auto* ood = app.add_subcommand("ood-study", "Sweep object mass at fixed CoM offsets");
  auto* config = app.add_subcommand("config", "Config utilities");
  config->require_subcommand(1);
  auto* print_default = config->add_subcommand("print-default", "Print the default config with field docs");
  print_default->add_flag("--full-scale", opt.full_scale, "Use the sizes of the original hardware study");

  for (auto* sub : {train_bnn, train_active}) sub->add_option("--dataset", opt.dataset, "Dataset file");
  for (auto* sub : {train_active, eval, ood}) sub->add_option("--bnn", opt.bnn, "BNN model file");
  for (auto* sub : {eval, ood}) sub->add_option("--activenet", opt.activenet, "ActiveNet model file");
  for (auto* sub : {simulate, train_bnn, train_active, eval, ood}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (print_default->parsed()) {
      ugraph::RunConfig cfg = opt.full_scale ? ugraph::RunConfig::full_scale() : ugraph::RunConfig{};
      if (opt.seed) cfg.seed = *opt.seed;
      std::cout << ugraph::commented_config(cfg);
      return kOk;
    }
    const ugraph::RunConfig cfg = resolve_config(opt);
    const auto paths = resolve_paths(opt);
    if (simulate->parsed()) ugraph::cmd::simulate(cfg, paths, std::cout);
    else if (train_bnn->parsed()) ugraph::cmd::train_bnn_cmd(cfg, paths, std::cout);
    else if (train_active->parsed()) ugraph::cmd::train_active_cmd(cfg, paths, std::cout);
    else if (eval->parsed()) ugraph::cmd::eval_cmd(cfg, paths, std::cout);
    else if (ood->parsed()) ugraph::cmd::ood_cmd(cfg, paths, std::cout);
    return kOk;
  } catch (const ugraph::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ugraph::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kIoError;
  } catch (const ugraph::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
}
