#include <chrono>
#include <cmath>
#include <limits>

#include "common.hpp"

namespace vecchia::cli {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

Permutation ordering_for(const Dataset& data, const StructureFlags& flags, const GlobalOptions& global) {
  return make_ordering(flags.scheme(), neighbor_metric_locations(data.locs, flags.metric()), global.seed);
}

std::size_t clamp_m(std::size_t m, std::size_t n) { return std::min(m, n == 0 ? 0 : n - 1); }

std::vector<Parameter> parse_parameters(const std::vector<std::string>& names) {
  std::vector<Parameter> out;
  for (const auto& name : names) {
    const auto p = parse_parameter(name);
    if (!p) throw InvalidArgument("unknown parameter '" + name + "'");
    out.push_back(*p);
  }
  return out;
}

}  // namespace

int cmd_order(const Context& ctx, const InputOptions& input, const StructureFlags& flags) {
  const Dataset data = load_input(input, false, CovarianceModel{}, ctx.global);
  const auto start = Clock::now();
  const Permutation perm = ordering_for(data, flags, ctx.global);
  const double seconds = seconds_since(start);

  Artifact artifact(ctx, "csv");
  auto& os = artifact.stream();
  os << "position,index\n";
  for (std::size_t i = 0; i < perm.size(); ++i) os << i << ',' << perm[i] << '\n';
  artifact.finish(ctx, {{"n", data.size()}, {"ordering", flags.order}, {"seconds", seconds}});
  return 0;
}

int cmd_neighbors(const Context& ctx, const InputOptions& input, const StructureFlags& flags, bool nn_check) {
  const Dataset data = load_input(input, false, CovarianceModel{}, ctx.global);
  const Locations metric = neighbor_metric_locations(data.locs, flags.metric());
  const Permutation perm = make_ordering(flags.scheme(), metric, ctx.global.seed);
  const std::size_t m = clamp_m(flags.m, data.size());
  const auto start = Clock::now();
  NeighborSearchStats stats;
  const NeighborSets sets = nn_ordered_fast(metric, perm, m, &stats, nullptr, ctx.global.threads);
  const double seconds = seconds_since(start);

  json summary{{"n", data.size()}, {"m", m}, {"ordering", flags.order}, {"seconds", seconds},
               {"exhaustive", stats.exhaustive}};
  if (nn_check) {
    const NeighborSets brute = nn_ordered_brute(metric, perm, m);
    for (std::size_t i = 0; i < sets.size(); ++i) {
      if (!std::ranges::equal(sets.set(i), brute.set(i))) {
        throw NumericalError("neighbour search disagrees with the exhaustive reference at position " +
                             std::to_string(i));
      }
    }
    summary["nn_check"] = "identical";
  }

  Artifact artifact(ctx, "csv");
  auto& os = artifact.stream();
  os << "position,index,neighbors\n";
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const auto prev = sets.previous(i);
    os << i << ',' << perm[i] << ',' << join(std::vector<int>(prev.begin(), prev.end()), ';') << '\n';
  }
  artifact.finish(ctx, summary);
  return 0;
}

int cmd_group(const Context& ctx, const InputOptions& input, const StructureFlags& flags, bool with_stats) {
  const Dataset data = load_input(input, false, CovarianceModel{}, ctx.global);
  const Locations metric = neighbor_metric_locations(data.locs, flags.metric());
  const Permutation perm = make_ordering(flags.scheme(), metric, ctx.global.seed);
  const std::size_t m = clamp_m(flags.m, data.size());
  const NeighborSets sets = nn_ordered_fast(metric, perm, m, nullptr, nullptr, ctx.global.threads);
  const auto start = Clock::now();
  const BlockPartition blocks = group_blocks(sets);
  const double seconds = seconds_since(start);

  Artifact artifact(ctx, "csv");
  auto& os = artifact.stream();
  os << "block,members,union\n";
  for (std::size_t k = 0; k < blocks.block_count(); ++k) {
    const auto b = blocks.block(k);
    const auto u = blocks.union_set(k);
    os << k << ',' << join(std::vector<int>(b.begin(), b.end()), ';') << ','
       << join(std::vector<int>(u.begin(), u.end()), ';') << '\n';
  }
  json summary{{"n", data.size()}, {"m", m}, {"ordering", flags.order}, {"blocks", blocks.block_count()},
               {"seconds", seconds}};
  if (with_stats) {
    const GroupStats s = blocks.stats();
    summary["stats"] = {{"blocks", s.blocks},
                        {"mean_union", s.mean_union},
                        {"max_union", s.max_union},
                        {"mean_expanded", s.mean_expanded},
                        {"max_expanded", s.max_expanded},
                        {"memory", s.memory},
                        {"baseline_memory", s.baseline_memory}};
  }
  artifact.finish(ctx, summary);
  return 0;
}

int cmd_loglik(const Context& ctx, const InputOptions& input, const ModelOptions& model_options,
               const StructureFlags& flags, bool exact) {
  const CovarianceModel model = model_options.build();
  const Dataset data = load_input(input, true, model, ctx.global);
  const std::size_t n = data.size();
  const VecchiaStructure structure(data.locs, ordering_for(data, flags, ctx.global),
                                   StructureOptions{flags.m, flags.grouped(), flags.metric(), ctx.global.threads});
  const Permutation& perm = structure.permutation();

  const auto start = Clock::now();
  const SparseInverseCholesky gamma = structure.build(model, data.locs, ctx.global.threads);
  const std::vector<double> y = perm.apply(data.y);
  double value = 0.0;
  Eigen::VectorXd beta;
  if (data.covariates.cols() > 0) {
    const ProfileResult profile = profile_beta(gamma, permute_rows(data.covariates, perm), y);
    value = profile.loglik;
    beta = profile.beta;
  } else {
    value = loglik(gamma, y, model.mean);
  }
  const double seconds = seconds_since(start);

  json result{{"n", n},
              {"m", clamp_m(flags.m, n)},
              {"ordering", flags.order},
              {"grouped", flags.grouped()},
              {"model", model_json(model)},
              {"loglik", value},
              {"seconds", seconds}};
  if (beta.size() > 0) result["beta"] = std::vector<double>(beta.data(), beta.data() + beta.size());
  if (exact) {
    const DenseGaussian dense(model, data.locs);
    Eigen::VectorXd residual = Eigen::Map<const Eigen::VectorXd>(data.y.data(), static_cast<Eigen::Index>(n));
    if (beta.size() > 0) {
      residual -= data.covariates * beta;
    } else {
      residual.array() -= model.mean;
    }
    const double reference = dense.log_density(residual);
    result["exact_loglik"] = reference;
    result["relative_difference"] = std::abs(value - reference) / std::max(std::abs(reference), 1e-300);
  }
  Artifact artifact(ctx, "json");
  artifact.stream() << result.dump(2) << '\n';
  artifact.finish(ctx, result);
  return 0;
}

int cmd_fit(const Context& ctx, const InputOptions& input, const ModelOptions& model_options,
            const StructureFlags& flags, const FitFlags& fit_flags) {
  const CovarianceModel given = model_options.build();
  const Dataset dataset = load_input(input, true, given, ctx.global);
  FitData data{dataset.locs, dataset.y, std::nullopt};
  if (dataset.covariates.cols() > 0) data.covariates = dataset.covariates;

  FitConfig config;
  config.ordering = flags.scheme();
  config.seed = ctx.global.seed;
  config.schedule = fit_flags.schedule;
  config.grouped = flags.grouped();
  config.distance = flags.metric();
  config.free = parse_parameters(fit_flags.free);
  config.family = given.family;
  config.estimate_mean = !fit_flags.fixed_mean;
  config.tolerance = fit_flags.tolerance;
  config.max_evaluations = fit_flags.max_evaluations;
  config.convergence = fit_flags.convergence;
  config.threads = ctx.global.threads;

  CovarianceModel initial = default_initial_model(data, given.family);
  for (Parameter p : model_options.given) initial.set(p, given.get(p));
  initial.jitter = given.jitter;
  if (fit_flags.fixed_mean) initial.mean = given.mean;
  config.initial = initial;

  const FitResult result = fit(data, config);

  Artifact artifact(ctx, "jsonl");
  auto& os = artifact.stream();
  for (const FitStage& stage : result.stages) {
    json record{{"m", stage.m},
                {"theta", model_json(stage.model)},
                {"loglik", stage.loglik},
                {"initial_loglik", stage.initial_loglik},
                {"evaluations", stage.evaluations},
                {"optimizer_converged", stage.optimizer_converged},
                {"relative_change", stage.relative_change},
                {"seconds", stage.seconds}};
    if (stage.beta.size() > 0) record["beta"] = std::vector<double>(stage.beta.data(), stage.beta.data() + stage.beta.size());
    std::vector<std::string> bound;
    for (Parameter p : stage.at_bound) bound.emplace_back(to_string(p));
    record["at_bound"] = bound;
    os << record.dump() << '\n';
  }
  const FitStage& last = result.final_stage();
  json summary{{"n", data.locs.size()},
               {"converged", result.converged},
               {"final_m", result.final_m},
               {"stages", result.stages.size()},
               {"theta", model_json(last.model)},
               {"loglik", last.loglik}};
  os << json{{"summary", summary}}.dump() << '\n';
  artifact.finish(ctx, summary);
  return 0;
}

int cmd_predict(const Context& ctx, const InputOptions& input, const ModelOptions& model_options,
                const StructureFlags& flags, const PredictFlags& predict) {
  const CovarianceModel model = model_options.build();
  const Dataset observed = load_input(input, true, model, ctx.global);
  if (observed.covariates.cols() > 0) throw InvalidArgument("predict does not take covariates");
  if (predict.locations.empty() == predict.grid.empty()) {
    throw InvalidArgument("give exactly one of --locations and --predict-grid");
  }
  Dataset target;
  if (!predict.locations.empty()) {
    InputOptions spec = input;
    spec.data = predict.locations;
    spec.grid.clear();
    spec.response.clear();
    spec.covariates.clear();
    if (spec.coords.empty()) spec.coords = observed.coordinate_names;
    target = load_input(spec, false, model, ctx.global);
  } else {
    InputOptions spec;
    spec.grid = predict.grid;
    target = load_input(spec, false, model, ctx.global);
  }
  if (target.locs.dim() != observed.locs.dim() || target.locs.has_time() != observed.locs.has_time()) {
    throw InvalidArgument("prediction locations do not match the observed coordinates");
  }
  const auto scheme = parse_ordering(predict.prediction_order);
  if (!scheme) throw InvalidArgument("unknown prediction ordering '" + predict.prediction_order + "'");

  PredictionOptions options;
  options.m = flags.m;
  options.m_prediction = predict.m_prediction;
  options.grouped = flags.grouped();
  options.prediction_ordering = *scheme;
  options.seed = ctx.global.seed;
  options.distance = flags.metric();
  options.threads = ctx.global.threads;
  const auto start = Clock::now();
  const PredictionSetup setup(model, observed.locs, ordering_for(observed, flags, ctx.global), target.locs, options);
  const double setup_seconds = seconds_since(start);

  const auto solve_start = Clock::now();
  EnsembleResult result;
  if (predict.ensemble >= 2) {
    result = conditional_ensemble(setup, observed.y, predict.ensemble, ctx.global.seed, predict.draws,
                                  ctx.global.threads);
  } else {
    result.mean = setup.conditional_expectation(observed.y);
    if (predict.ensemble == 1) {
      result.draws = setup.conditional_draw(observed.y, ctx.global.seed, 0);
    }
  }
  const double solve_seconds = seconds_since(solve_start);

  Artifact artifact(ctx, "csv");
  auto& os = artifact.stream();
  write_coordinate_header(os, target);
  os << "mean";
  if (predict.ensemble >= 2) os << ",sd";
  for (Eigen::Index k = 0; k < result.draws.cols(); ++k) os << ",draw_" << k;
  os << '\n';
  for (std::size_t i = 0; i < target.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    write_coordinates(os, target, i);
    os << result.mean[row];
    if (predict.ensemble >= 2) os << ',' << result.sd[row];
    for (Eigen::Index k = 0; k < result.draws.cols(); ++k) os << ',' << result.draws(row, k);
    os << '\n';
  }
  artifact.finish(ctx, {{"observed", observed.size()},
                        {"predicted", target.size()},
                        {"ensemble", predict.ensemble},
                        {"setup_seconds", setup_seconds},
                        {"seconds", solve_seconds}});
  return 0;
}

int cmd_sim(const Context& ctx, const InputOptions& input, const ModelOptions& model_options,
            const StructureFlags& flags, std::size_t members) {
  if (members == 0) throw InvalidArgument("--ensemble must be at least 1");
  const CovarianceModel model = model_options.build();
  const Dataset data = load_input(input, false, model, ctx.global);
  const VecchiaStructure structure(data.locs, ordering_for(data, flags, ctx.global),
                                   StructureOptions{flags.m, flags.grouped(), flags.metric(), ctx.global.threads});
  const auto start = Clock::now();
  const SparseInverseCholesky gamma = structure.build(model, data.locs, ctx.global.threads);
  const std::size_t n = data.size();
  Eigen::MatrixXd draws(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(members));
  for (std::size_t k = 0; k < members; ++k) {
    const Eigen::VectorXd y = unconditional_draw(gamma, ctx.global.seed, k);
    const auto original = structure.permutation().unapply(std::span<const double>(y.data(), n));
    for (std::size_t i = 0; i < n; ++i) {
      draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = original[i] + model.mean;
    }
  }
  const double seconds = seconds_since(start);

  Artifact artifact(ctx, "csv");
  auto& os = artifact.stream();
  write_coordinate_header(os, data);
  for (std::size_t k = 0; k < members; ++k) os << (k > 0 ? "," : "") << "sim_" << k;
  os << '\n';
  for (std::size_t i = 0; i < n; ++i) {
    write_coordinates(os, data, i);
    for (std::size_t k = 0; k < members; ++k) {
      os << (k > 0 ? "," : "") << draws(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    }
    os << '\n';
  }
  artifact.finish(ctx, {{"n", n}, {"members", members}, {"seconds", seconds}});
  return 0;
}

int cmd_benchmark(const Context& ctx, const InputOptions& input, const ModelOptions& model_options,
                  const BenchmarkFlags& bench) {
  const CovarianceModel model = model_options.build();
  if (model.family != KernelFamily::matern_isotropic) throw InvalidArgument("benchmark uses the isotropic kernel");
  const Dataset data = load_input(input, false, model, ctx.global);
  const std::size_t n = data.size();
  const std::vector<Parameter> releff = parse_parameters(bench.releff);
  std::vector<OrderingScheme> schemes;
  for (const auto& name : bench.orders) {
    const auto s = parse_ordering(name);
    if (!s) throw InvalidArgument("unknown ordering '" + name + "'");
    schemes.push_back(*s);
  }
  std::vector<bool> grouping;
  if (bench.grouping == "off" || bench.grouping == "both") grouping.push_back(false);
  if (bench.grouping == "on" || bench.grouping == "both") grouping.push_back(true);
  if (grouping.empty()) throw InvalidArgument("--grouping must be on, off or both");

  const DenseGaussian exact(model, data.locs);

  Artifact artifact(ctx, "csv");
  auto& os = artifact.stream();
  os << "family,variance,range,smoothness,nugget,ordering,m,grouped,n,blocks,mean_union,kl,setup_seconds,seconds";
  for (Parameter p : releff) os << ",releff_" << to_string(p);
  os << '\n';
  std::size_t rows = 0;
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    const auto order_start = Clock::now();
    const Permutation perm = make_ordering(schemes[s], data.locs, ctx.global.seed);
    const double order_seconds = seconds_since(order_start);
    for (std::size_t m : bench.neighbors) {
      for (bool grouped : grouping) {
        const auto setup_start = Clock::now();
        const VecchiaStructure structure(data.locs, perm,
                                         StructureOptions{m, grouped, NeighborDistance::spatial, ctx.global.threads});
        const double setup_seconds = order_seconds + seconds_since(setup_start);
        const auto start = Clock::now();
        const SparseInverseCholesky gamma = structure.build(model, data.locs, ctx.global.threads);
        const double seconds = seconds_since(start);
        const double kl = kl_divergence_vecchia(gamma, exact.log_det());
        std::size_t blocks = n;
        double mean_union = 0.0;
        if (grouped) {
          const GroupStats st = structure.blocks().stats();
          blocks = st.blocks;
          mean_union = st.mean_union;
        } else {
          mean_union = static_cast<double>(structure.sets().total_entries()) / static_cast<double>(n);
        }
        os << to_string(model.family) << ',' << model.variance << ',' << model.range << ',' << model.smoothness << ','
           << model.nugget << ',' << bench.orders[s] << ',' << clamp_m(m, n) << ',' << (grouped ? 1 : 0) << ',' << n
           << ',' << blocks << ',' << mean_union << ',' << kl << ',' << setup_seconds << ',' << seconds;
        if (!releff.empty()) {
          const InformationMatrices info =
              godambe_information(model, data.locs, perm, structure.conditioning(), releff, {1e-4, ctx.global.threads});
          for (Eigen::Index a = 0; a < info.relative_efficiency.size(); ++a) os << ',' << info.relative_efficiency[a];
        }
        os << '\n';
        ++rows;
      }
    }
  }
  artifact.finish(ctx, {{"n", n}, {"rows", rows}});
  return 0;
}

int cmd_timing(const Context& ctx, const InputOptions& input, const ModelOptions& model_options,
               const StructureFlags& flags, int repeat) {
  if (repeat < 1) throw InvalidArgument("--repeat must be at least 1");
  const CovarianceModel model = model_options.build();
  const Dataset data = load_input(input, true, model, ctx.global);
  const std::size_t n = data.size();
  const std::size_t m = clamp_m(flags.m, n);
  const Locations metric = neighbor_metric_locations(data.locs, flags.metric());

  auto start = Clock::now();
  const Permutation perm = make_ordering(flags.scheme(), metric, ctx.global.seed);
  const double order_seconds = seconds_since(start);

  start = Clock::now();
  const NeighborSets sets = nn_ordered_fast(metric, perm, m, nullptr, nullptr, ctx.global.threads);
  const double neighbor_seconds = seconds_since(start);

  double group_seconds = 0.0;
  std::optional<VecchiaStructure> structure;
  if (flags.grouped()) {
    start = Clock::now();
    structure.emplace(perm, sets, true);
    group_seconds = seconds_since(start);
  } else {
    structure.emplace(perm, sets, false);
  }

  const std::vector<double> y = perm.apply(data.y);
  double best = std::numeric_limits<double>::infinity();
  double value = 0.0;
  for (int r = 0; r < repeat; ++r) {
    start = Clock::now();
    const SparseInverseCholesky gamma = structure->build(model, data.locs, ctx.global.threads);
    value = loglik(gamma, y, model.mean);
    best = std::min(best, seconds_since(start));
  }

  json result{{"n", n},
              {"m", m},
              {"ordering", flags.order},
              {"grouped", flags.grouped()},
              {"threads", ctx.global.threads > 0 ? ctx.global.threads : default_thread_count()},
              {"phases",
               {{"order", order_seconds}, {"neighbors", neighbor_seconds}, {"group", group_seconds},
                {"loglik", best}}},
              {"loglik", value}};
  if (flags.grouped()) result["blocks"] = structure->blocks().block_count();
  Artifact artifact(ctx, "json");
  artifact.stream() << result.dump(2) << '\n';
  artifact.finish(ctx, result);
  return 0;
}

}  // namespace vecchia::cli
