#include "vecchia_cli/cli.hpp"

#include <deque>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "common.hpp"

namespace vecchia::cli {

namespace {

// Keys that do not change the result and stay out of the config hash.
bool is_volatile_key(const std::string& key) {
  return key == "out-dir" || key == "out_dir" || key == "output" || key == "threads" || key == "config" ||
         key == "help" || key == "version";
}

// The resolved configuration of the invoked subcommand, in the config-file
// format accepted by --config.
std::string resolved_config(const CLI::App& app, const std::string& command) {
  std::istringstream in(app.config_to_str(true, false));
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    const auto dot = key.find('.');
    if (dot != std::string::npos) {
      if (key.substr(0, dot) != command) continue;
      key = key.substr(dot + 1);
    }
    if (is_volatile_key(key)) continue;
    const std::string value = line.substr(eq + 1);
    if (value == "\"\"" || value == "[]") continue;
    out << line << '\n';
  }
  return out.str();
}

struct Command {
  CLI::App* app = nullptr;
  InputOptions input;
  ModelOptions model;
  StructureFlags structure;
  std::string output;
  std::vector<std::pair<Parameter, CLI::Option*>> model_options;
};

void add_input(Command& c) {
  auto* app = c.app;
  auto& in = c.input;
  app->add_option("--data", in.data, "CSV file with a header row")->check(CLI::ExistingFile);
  app->add_option("--grid", in.grid, "regular grid on the unit cube, e.g. 30x30");
  app->add_option("--response", in.response, "response column");
  app->add_option("--coords", in.coords, "coordinate columns")->delimiter(',');
  app->add_option("--time", in.time, "time column");
  app->add_option("--covariates", in.covariates, "covariate columns of the linear mean")->delimiter(',');
  app->add_flag("--skip-bad", in.skip_bad, "drop malformed rows instead of failing");
  app->add_flag("--sphere-time", in.sphere_time, "coordinates are lon,lat degrees; map to the unit sphere");
}

void add_model(Command& c) {
  auto* app = c.app;
  auto& m = c.model;
  app->add_option("--family", m.family, "covariance family")
      ->check(CLI::IsMember({"matern", "matern-isotropic", "spacetime", "matern-spacetime"}))
      ->capture_default_str();
  c.model_options = {
      {Parameter::variance, app->add_option("--variance", m.variance)->capture_default_str()},
      {Parameter::range, app->add_option("--range", m.range)->capture_default_str()},
      {Parameter::range_time, app->add_option("--range-time", m.range_time)->capture_default_str()},
      {Parameter::smoothness, app->add_option("--smoothness", m.smoothness)->capture_default_str()},
      {Parameter::nugget, app->add_option("--nugget", m.nugget)->capture_default_str()},
  };
  app->add_option("--mean", m.mean, "constant mean")->capture_default_str();
  app->add_option("--jitter", m.jitter, "extra diagonal term")->capture_default_str();
}

void add_structure(Command& c, bool with_m, bool with_grouping) {
  auto* app = c.app;
  auto& s = c.structure;
  app->add_option("--order", s.order, "ordering scheme")
      ->check(CLI::IsMember({"coord", "sum", "middle", "random", "mmd", "ammd"}))
      ->capture_default_str();
  app->add_option("--distance", s.distance, "neighbour metric for space-time data")
      ->check(CLI::IsMember({"spatial", "spacetime"}))
      ->capture_default_str();
  if (with_m) app->add_option("--neighbors", s.m, "previous neighbours per point")->capture_default_str();
  if (with_grouping) {
    app->add_option("--group", s.group, "automatic grouping")->check(CLI::IsMember({"on", "off"}))->capture_default_str();
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vecchia approximations of Gaussian-process likelihoods", "vecchia"};
  app.set_version_flag("--version", std::string(version()));
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "read options from a config file");

  GlobalOptions global;
  app.add_option("--seed", global.seed, "seed of every random stream")->capture_default_str();
  app.add_option("--threads", global.threads, "worker threads (0: VECCHIA_THREADS or all cores)")
      ->capture_default_str();
  app.add_option("--out-dir", global.out_dir, "directory for artifacts and stamps")->capture_default_str();

  std::deque<Command> commands;
  auto make = [&](const std::string& name, const std::string& description) -> Command& {
    Command& c = commands.emplace_back();
    c.app = app.add_subcommand(name, description);
    c.app->add_option("--output", c.output, "artifact path ('-' for stdout)");
    return c;
  };

  Command& order = make("order", "write the ordering as a permutation CSV");
  add_input(order);
  add_structure(order, false, false);

  bool nn_check = false;
  Command& neighbors = make("neighbors", "write the ordered nearest-neighbour sets");
  add_input(neighbors);
  add_structure(neighbors, true, false);
  neighbors.app->add_flag("--nn-check", nn_check, "compare against the exhaustive search");

  bool group_stats = false;
  Command& group = make("group", "write the block partition of the neighbour sets");
  add_input(group);
  add_structure(group, true, false);
  group.app->add_flag("--group-stats", group_stats, "add block statistics to the summary");

  bool exact = false;
  Command& loglik = make("loglik", "evaluate the Vecchia log-likelihood");
  add_input(loglik);
  add_model(loglik);
  add_structure(loglik, true, true);
  loglik.app->add_flag("--exact", exact, "also evaluate the dense exact log-likelihood");

  FitFlags fit_flags;
  Command& fit = make("fit", "estimate covariance parameters over a neighbour schedule");
  add_input(fit);
  add_model(fit);
  add_structure(fit, false, true);
  fit.app->add_option("--schedule", fit_flags.schedule, "neighbour counts per stage")
      ->delimiter(',')
      ->capture_default_str();
  fit.app->add_option("--free", fit_flags.free, "parameters to estimate (default: all)")->delimiter(',');
  fit.app->add_option("--convergence", fit_flags.convergence, "stop when estimates change less than this")
      ->capture_default_str();
  fit.app->add_option("--tolerance", fit_flags.tolerance, "simplex size on the log scale")->capture_default_str();
  fit.app->add_option("--max-evals", fit_flags.max_evaluations, "likelihood evaluations per stage")
      ->capture_default_str();
  fit.app->add_flag("--fixed-mean", fit_flags.fixed_mean, "use --mean instead of estimating it");

  PredictFlags predict_flags;
  std::size_t m_prediction = 0;
  Command& predict = make("predict", "kriging and conditional simulation at new locations");
  add_input(predict);
  add_model(predict);
  add_structure(predict, true, true);
  predict.app->add_option("--locations", predict_flags.locations, "CSV of prediction coordinates")
      ->check(CLI::ExistingFile);
  predict.app->add_option("--predict-grid", predict_flags.grid, "predict on a regular grid");
  auto* m_pred_option =
      predict.app->add_option("--neighbors-pred", m_prediction, "neighbours of prediction points (default: --neighbors)");
  predict.app->add_option("--pred-order", predict_flags.prediction_order, "ordering of the prediction points")
      ->check(CLI::IsMember({"coord", "sum", "middle", "random", "mmd", "ammd"}))
      ->capture_default_str();
  predict.app->add_option("--ensemble", predict_flags.ensemble, "conditional draws")->capture_default_str();
  predict.app->add_flag("--draws", predict_flags.draws, "write every ensemble member");

  std::size_t members = 1;
  Command& sim = make("sim", "unconditional simulation");
  add_input(sim);
  add_model(sim);
  add_structure(sim, true, true);
  sim.app->add_option("--ensemble", members, "number of draws")->capture_default_str();

  BenchmarkFlags bench;
  Command& benchmark = make("benchmark", "KL divergence and timings over orderings, m and grouping");
  add_input(benchmark);
  add_model(benchmark);
  benchmark.app->add_option("--orders", bench.orders, "orderings")
      ->delimiter(',')
      ->check(CLI::IsMember({"coord", "sum", "middle", "random", "mmd", "ammd"}))
      ->capture_default_str();
  benchmark.app->add_option("--neighbors", bench.neighbors, "neighbour counts")->delimiter(',')->capture_default_str();
  benchmark.app->add_option("--grouping", bench.grouping, "grouped, ungrouped or both")
      ->check(CLI::IsMember({"on", "off", "both"}))
      ->capture_default_str();
  benchmark.app->add_option("--releff", bench.releff, "parameters for relative efficiency columns")->delimiter(',');

  int repeat = 1;
  Command& timing = make("timing", "time the phases of one likelihood evaluation");
  add_input(timing);
  add_model(timing);
  add_structure(timing, true, true);
  timing.app->add_option("--repeat", repeat, "likelihood repetitions (best is kept)")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "config"}, {"message", e.what()}}.dump() << '\n';
    return exit_config;
  }

  Command* chosen = nullptr;
  for (Command& c : commands) {
    if (c.app->parsed()) chosen = &c;
  }
  if (chosen == nullptr) {
    err << json{{"error", "config"}, {"message", "no subcommand"}}.dump() << '\n';
    return exit_config;
  }

  for (const auto& [parameter, option] : chosen->model_options) {
    if (option->count() > 0) chosen->model.given.push_back(parameter);
  }
  if (m_pred_option->count() > 0) predict_flags.m_prediction = m_prediction;
  if (chosen->input.data.empty() && chosen->input.grid.empty()) {
    if (chosen == &benchmark) chosen->input.grid = "20x20";
    if (chosen == &timing) chosen->input.grid = "100x100";
  }

  Context ctx;
  ctx.command = chosen->app->get_name();
  ctx.global = global;
  ctx.config_text = resolved_config(app, ctx.command);
  ctx.output = chosen->output;
  ctx.out = &out;

  try {
    const auto& in = chosen->input;
    if (chosen == &order) return cmd_order(ctx, in, order.structure);
    if (chosen == &neighbors) return cmd_neighbors(ctx, in, neighbors.structure, nn_check);
    if (chosen == &group) return cmd_group(ctx, in, group.structure, group_stats);
    if (chosen == &loglik) return cmd_loglik(ctx, in, loglik.model, loglik.structure, exact);
    if (chosen == &fit) return cmd_fit(ctx, in, fit.model, fit.structure, fit_flags);
    if (chosen == &predict) return cmd_predict(ctx, in, predict.model, predict.structure, predict_flags);
    if (chosen == &sim) return cmd_sim(ctx, in, sim.model, sim.structure, members);
    if (chosen == &benchmark) return cmd_benchmark(ctx, in, benchmark.model, bench);
    return cmd_timing(ctx, in, timing.model, timing.structure, repeat);
  } catch (const ParseError& e) {
    err << json{{"error", "input"}, {"line", e.line()}, {"message", e.what()}}.dump() << '\n';
    return exit_config;
  } catch (const InvalidArgument& e) {
    err << json{{"error", "config"}, {"message", e.what()}}.dump() << '\n';
    return exit_config;
  } catch (const std::filesystem::filesystem_error& e) {
    err << json{{"error", "io"}, {"message", e.what()}}.dump() << '\n';
    return exit_config;
  } catch (const NumericalError& e) {
    err << json{{"error", "numerical"}, {"message", e.what()}}.dump() << '\n';
    return exit_numerical;
  } catch (const std::exception& e) {
    err << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
}

}  // namespace vecchia::cli
