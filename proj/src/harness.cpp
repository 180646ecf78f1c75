#include "aglnet/harness.hpp"

#include <atomic>
#include <bit>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "aglnet/dictionary.hpp"
#include "aglnet/dynamics.hpp"
#include "aglnet/metrics.hpp"
#include "aglnet/optimize.hpp"

namespace aglnet {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(Method m) {
  switch (m) {
    case Method::adaptive_gl: return "adaptive_gl";
    case Method::group_lasso: return "group_lasso";
    case Method::plain_nn: return "plain_nn";
    case Method::dictionary: return "dictionary";
  }
  throw ContractViolation("unknown method");
}

Method method_from_string(const std::string& s) {
  if (s == "adaptive_gl") return Method::adaptive_gl;
  if (s == "group_lasso") return Method::group_lasso;
  if (s == "plain_nn") return Method::plain_nn;
  if (s == "dictionary") return Method::dictionary;
  throw InvalidConfigError("unknown method '" + s + "'");
}

LambdaGrid GridSpec::build() const {
  LambdaGrid g;
  if (!values.empty()) {
    g.values = values;
    g.validate();
    return g;
  }
  return LambdaGrid::log_spaced(count, min, max);
}

std::uint64_t seed_for(std::uint64_t base, int replicate,
                       const std::string& method, const std::string& purpose) {
  return derive_key({base, static_cast<std::uint64_t>(replicate),
                     hash_tag(method), hash_tag(purpose)});
}

namespace {

std::uint64_t lambda_seed(std::uint64_t base, int replicate,
                          const std::string& method, Real lambda) {
  return derive_key({base, static_cast<std::uint64_t>(replicate),
                     hash_tag(method), hash_tag("prox_init"),
                     std::bit_cast<std::uint64_t>(lambda)});
}

// Fixed worker pool draining an index queue; first exception wins.
void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  const int k = std::min(workers, n);
  pool.reserve(k);
  for (int t = 0; t < k; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> g(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

ModelBundle network_bundle(const Architecture& arch, const MlpParams& params,
                           const Scales& scales, int pen_layer, Real threshold,
                           const IndexSet& support) {
  ModelBundle mb;
  mb.kind = "network";
  mb.arch = arch;
  mb.params = params;
  mb.scales = scales;
  mb.penalized_layer = pen_layer;
  mb.threshold = threshold;
  mb.support = support;
  return mb;
}

void fill_metrics(RunReport& rep, const IndexSet& support,
                  const Dataset& test, const VectorXr& preds_raw, int d) {
  rep.support = support;
  const IndexSet& truth = test.true_support;
  if (!truth.empty() && static_cast<int>(truth.size()) < d) {
    const auto sel = selection_metrics(support, truth, d);
    rep.sensitivity = sel.sensitivity;
    rep.specificity = sel.specificity;
  }
  rep.rel_error = relative_test_error(test.raw_y, preds_raw);
}

}  // namespace

long dof_network(const Architecture& arch, int pen_layer, std::size_t s,
                 DofMode mode) {
  const auto& d = arch.layer_dims;
  const long selected = static_cast<long>(s) * d[pen_layer];
  if (mode == DofMode::selected_groups) return selected;
  long rest = 0;
  for (int l = 1; l <= arch.num_layers(); ++l) {
    if (l != pen_layer) rest += static_cast<long>(d[l]) * d[l - 1];
    rest += d[l];  // biases
  }
  return selected + rest;
}

void ExperimentConfig::validate() const {
  if (replicates < 1) throw InvalidConfigError("replicates must be >= 1");
  if (methods.empty()) throw InvalidConfigError("method set must be nonempty");
  if (workers < 1) throw InvalidConfigError("workers must be >= 1");
  if (!(learning_rate > 0.0))
    throw InvalidConfigError("learning rate must be positive");
  if (!(gamma > 0.0)) throw InvalidConfigError("gamma must be positive");
  if (threshold < 0.0)
    throw InvalidConfigError("threshold must be nonnegative");
  if (adam_iters < 0 || prox_epochs < 0 || ista_iters < 0)
    throw InvalidConfigError("iteration budgets must be nonnegative");
  if (penalized_layer != 1 && penalized_layer != 2)
    throw InvalidConfigError("penalized layer must be 1 or 2");
  if (hidden_layers < 1 || width < 1)
    throw InvalidConfigError("network shape must be positive");
  if (dictionary_degree < 1)
    throw InvalidConfigError("dictionary degree must be >= 1");
  architecture().validate();
  lambda_grid.build().validate();
  if (dict_lambda_grid) dict_lambda_grid->build().validate();
  target();  // throws on inconsistent target spec
}

Architecture ExperimentConfig::architecture() const {
  return Architecture::mlp(ode.dim, hidden_layers, width, first_activation);
}

TargetFunction ExperimentConfig::target() const {
  switch (target_id) {
    case TargetId::lorenz_rhs:
      return TargetFunction::lorenz_rhs(target_k, ode.dim, ode.forcing);
    case TargetId::setting1: return TargetFunction::nonpoly(1, ode.dim);
    case TargetId::setting2: return TargetFunction::nonpoly(2, ode.dim);
    case TargetId::setting3: return TargetFunction::nonpoly(3, ode.dim);
    case TargetId::linear_combo:
      return TargetFunction::linear_combo(4, ode.dim, combo_seed);
  }
  throw ContractViolation("unknown target id");
}

namespace {

TargetId target_id_from_string(const std::string& s) {
  if (s == "lorenz_rhs") return TargetId::lorenz_rhs;
  if (s == "setting1") return TargetId::setting1;
  if (s == "setting2") return TargetId::setting2;
  if (s == "setting3") return TargetId::setting3;
  if (s == "linear_combo") return TargetId::linear_combo;
  throw InvalidConfigError("unknown target id '" + s + "'");
}

GridSpec grid_from_json(const json& j) {
  GridSpec g;
  if (j.contains("values")) {
    g.values = j.at("values").get<std::vector<Real>>();
  } else {
    if (j.contains("count")) g.count = j.at("count").get<int>();
    if (j.contains("min")) g.min = j.at("min").get<Real>();
    if (j.contains("max")) g.max = j.at("max").get<Real>();
  }
  return g;
}

json grid_to_json(const GridSpec& g) {
  if (!g.values.empty()) return json{{"values", g.values}};
  return json{{"count", g.count}, {"min", g.min}, {"max", g.max}};
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  static const std::set<std::string> known = {
      "name", "target", "noise", "ode", "train_window", "test_window",
      "noise_scale_window", "redraw_initial_state", "network",
      "penalized_layer", "learning_rate", "gamma", "threshold", "budgets",
      "warm_start", "dictionary_degree", "lambda_grid", "dict_lambda_grid",
      "dof_mode", "methods", "replicates", "base_seed", "workers",
      "output_dir"};
  for (const auto& [key, _] : j.items())
    if (!known.count(key))
      throw InvalidConfigError("unknown config key '" + key + "'");

  ExperimentConfig c;
  if (j.contains("name")) c.name = j.at("name").get<std::string>();
  if (j.contains("target")) {
    const auto& t = j.at("target");
    c.target_id = target_id_from_string(t.at("id").get<std::string>());
    if (t.contains("k")) c.target_k = t.at("k").get<int>();
    if (t.contains("combo_seed"))
      c.combo_seed = t.at("combo_seed").get<std::uint64_t>();
  }
  if (j.contains("noise")) {
    c.sigma_x = j.at("noise").value("sigma_x", 0.0);
    c.sigma_y = j.at("noise").value("sigma_y", 0.0);
  }
  if (j.contains("ode")) {
    const auto& o = j.at("ode");
    c.ode.dim = o.value("dim", 40);
    c.ode.forcing = o.value("forcing", 8.0);
    c.ode.dt = o.value("dt", 0.01);
    c.ode.t0 = o.value("t0", 0.0);
    c.ode.t_final = o.value("t_final", 100.0);
  }
  auto window = [](const json& a) {
    if (!a.is_array() || a.size() != 2)
      throw InvalidConfigError("time windows must be [begin, end] pairs");
    return TimeWindow{a[0].get<double>(), a[1].get<double>()};
  };
  if (j.contains("train_window")) c.train_window = window(j.at("train_window"));
  if (j.contains("test_window")) c.test_window = window(j.at("test_window"));
  if (j.contains("noise_scale_window") && !j.at("noise_scale_window").is_null())
    c.noise_scale_window = window(j.at("noise_scale_window"));
  if (j.contains("redraw_initial_state"))
    c.redraw_initial_state = j.at("redraw_initial_state").get<bool>();
  if (j.contains("network")) {
    const auto& n = j.at("network");
    c.hidden_layers = n.value("hidden_layers", 3);
    c.width = n.value("width", 20);
    const std::string act = n.value("first_activation", std::string("tanh"));
    if (act == "tanh") {
      c.first_activation = Activation::tanh;
    } else if (act == "identity") {
      c.first_activation = Activation::identity;
    } else {
      throw InvalidConfigError("first_activation must be tanh or identity");
    }
  }
  if (j.contains("penalized_layer"))
    c.penalized_layer = j.at("penalized_layer").get<int>();
  if (j.contains("learning_rate"))
    c.learning_rate = j.at("learning_rate").get<Real>();
  if (j.contains("gamma")) c.gamma = j.at("gamma").get<Real>();
  if (j.contains("threshold")) c.threshold = j.at("threshold").get<Real>();
  if (j.contains("budgets")) {
    const auto& b = j.at("budgets");
    c.adam_iters = b.value("adam_iters", c.adam_iters);
    c.prox_epochs = b.value("prox_epochs", c.prox_epochs);
    c.ista_iters = b.value("ista_iters", c.ista_iters);
  }
  if (j.contains("warm_start")) c.warm_start = j.at("warm_start").get<bool>();
  if (j.contains("dictionary_degree"))
    c.dictionary_degree = j.at("dictionary_degree").get<int>();
  if (j.contains("lambda_grid")) c.lambda_grid = grid_from_json(j.at("lambda_grid"));
  if (j.contains("dict_lambda_grid"))
    c.dict_lambda_grid = grid_from_json(j.at("dict_lambda_grid"));
  if (j.contains("dof_mode")) {
    const std::string m = j.at("dof_mode").get<std::string>();
    if (m == "selected_plus_dense") {
      c.dof_mode = DofMode::selected_plus_dense;
    } else if (m == "selected_groups") {
      c.dof_mode = DofMode::selected_groups;
    } else {
      throw InvalidConfigError("unknown dof_mode '" + m + "'");
    }
  }
  if (j.contains("methods")) {
    c.methods.clear();
    for (const auto& m : j.at("methods"))
      c.methods.push_back(method_from_string(m.get<std::string>()));
  }
  if (j.contains("replicates")) c.replicates = j.at("replicates").get<int>();
  if (j.contains("base_seed"))
    c.base_seed = j.at("base_seed").get<std::uint64_t>();
  if (j.contains("workers")) c.workers = j.at("workers").get<int>();
  if (j.contains("output_dir"))
    c.output_dir = j.at("output_dir").get<std::string>();
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  json j;
  j["name"] = name;
  j["target"] = {{"id", aglnet::to_string(target_id)},
                 {"k", target_k},
                 {"combo_seed", combo_seed}};
  j["noise"] = {{"sigma_x", sigma_x}, {"sigma_y", sigma_y}};
  j["ode"] = {{"dim", ode.dim},
              {"forcing", ode.forcing},
              {"dt", ode.dt},
              {"t0", ode.t0},
              {"t_final", ode.t_final}};
  j["train_window"] = {train_window.t_begin, train_window.t_end};
  j["test_window"] = {test_window.t_begin, test_window.t_end};
  j["noise_scale_window"] =
      noise_scale_window
          ? json{noise_scale_window->t_begin, noise_scale_window->t_end}
          : json(nullptr);
  j["redraw_initial_state"] = redraw_initial_state;
  j["network"] = {
      {"hidden_layers", hidden_layers},
      {"width", width},
      {"first_activation",
       first_activation == Activation::identity ? "identity" : "tanh"}};
  j["penalized_layer"] = penalized_layer;
  j["learning_rate"] = learning_rate;
  j["gamma"] = gamma;
  j["threshold"] = threshold;
  j["budgets"] = {{"adam_iters", adam_iters},
                  {"prox_epochs", prox_epochs},
                  {"ista_iters", ista_iters}};
  j["warm_start"] = warm_start;
  j["dictionary_degree"] = dictionary_degree;
  j["lambda_grid"] = grid_to_json(lambda_grid);
  if (dict_lambda_grid) j["dict_lambda_grid"] = grid_to_json(*dict_lambda_grid);
  j["dof_mode"] = dof_mode == DofMode::selected_plus_dense
                      ? "selected_plus_dense"
                      : "selected_groups";
  json ms = json::array();
  for (Method m : methods) ms.push_back(aglnet::to_string(m));
  j["methods"] = std::move(ms);
  j["replicates"] = replicates;
  j["base_seed"] = base_seed;
  j["workers"] = workers;
  j["output_dir"] = output_dir;
  return j;
}

json RunReport::to_json() const {
  auto num_or_null = [](Real v) {
    return std::isnan(v) ? json(nullptr) : json(v);
  };
  json j;
  j["method"] = aglnet::to_string(method);
  j["replicate"] = replicate;
  j["seed"] = seed;
  j["sensitivity"] = num_or_null(sensitivity);
  j["specificity"] = num_or_null(specificity);
  j["rel_error"] = num_or_null(rel_error);
  j["lambda"] = num_or_null(lambda);
  json sup = json::array();
  for (int v : support) sup.push_back(v);
  j["support"] = std::move(sup);
  j["ok"] = ok;
  j["error"] = error;
  return j;
}

RunReport RunReport::from_json(const json& j) {
  auto num = [](const json& v) {
    return v.is_null() ? std::numeric_limits<Real>::quiet_NaN()
                       : v.get<Real>();
  };
  RunReport r;
  r.method = method_from_string(j.at("method").get<std::string>());
  r.replicate = j.at("replicate").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.sensitivity = num(j.at("sensitivity"));
  r.specificity = num(j.at("specificity"));
  r.rel_error = num(j.at("rel_error"));
  r.lambda = num(j.at("lambda"));
  for (const auto& v : j.at("support")) r.support.insert(v.get<int>());
  r.ok = j.at("ok").get<bool>();
  r.error = j.at("error").get<std::string>();
  return r;
}

Trajectory experiment_trajectory(const ExperimentConfig& cfg, int replicate) {
  OdeConfig ode = cfg.ode;
  if (ode.x0.size() == 0) ode.x0 = default_x0(ode.dim);
  if (cfg.redraw_initial_state) {
    RandomStream js(seed_for(cfg.base_seed, replicate, "shared", "x0_jitter"));
    for (Index i = 0; i < ode.x0.size(); ++i)
      ode.x0[i] += 1e-3 * js.normal();
  }
  return integrate(ode);
}

ReplicateData build_replicate_data(const ExperimentConfig& cfg,
                                   const Trajectory& traj, int replicate) {
  ReplicateData rd;
  rd.noise_seed = seed_for(cfg.base_seed, replicate, "shared", "noise");
  const TargetFunction tf = cfg.target();
  NoiseSpec ns{cfg.sigma_x, cfg.sigma_y, rd.noise_seed};
  rd.train = make_dataset(traj, tf, ns, cfg.train_window,
                          cfg.noise_scale_window);
  rd.test = make_test_set(traj, tf, rd.train.scales, cfg.test_window);
  return rd;
}

namespace {

// One (method, replicate) cell body; throws only on programming errors —
// solver-level failures surface via exceptions caught by the caller.
MethodRun run_method_impl(const ExperimentConfig& cfg, Method method,
                          int replicate, const Dataset& train,
                          const Dataset& test, std::uint64_t noise_seed) {
  const Architecture arch = cfg.architecture();
  const int d = static_cast<int>(train.dim());
  const long m = train.samples();
  const std::string tag = to_string(method);

  MethodRun out;
  out.report.method = method;
  out.report.replicate = replicate;
  out.report.seed = noise_seed;

  if (method == Method::plain_nn) {
    auto fit = fit_initial<Real>(arch, train, cfg.adam_iters,
                                 seed_for(cfg.base_seed, replicate, tag,
                                          "adam_init"),
                                 cfg.learning_rate);
    MlpParams params = fit.params;
    truncate_params(params, cfg.threshold);
    const IndexSet support =
        extract_support(params, cfg.penalized_layer, cfg.threshold);
    out.test_predictions =
        train.scales.alpha * forward(params, arch, test.X);
    fill_metrics(out.report, support, test, out.test_predictions, d);
    out.model = network_bundle(arch, params, train.scales,
                               cfg.penalized_layer, cfg.threshold, support);
    return out;
  }

  if (method == Method::dictionary) {
    const Dictionary dict = build_dictionary(train.X, cfg.dictionary_degree);
    const DictGram gram = make_gram(dict, train.y);
    LassoOptions lo;
    lo.iterations = cfg.ista_iters;
    lo.threshold = cfg.threshold;
    auto fit = [&](Real lambda) -> Scored<SparseCoefficients> {
      Scored<SparseCoefficients> sc;
      sc.model = sparse_solve(dict, gram, train.y, lambda, lo);
      sc.mse = sc.model.train_mse;
      sc.dof = static_cast<long>(sc.model.support.size());
      sc.support = dict_support_variables(sc.model, dict);
      return sc;
    };
    const LambdaGrid grid =
        (cfg.dict_lambda_grid ? *cfg.dict_lambda_grid : cfg.lambda_grid)
            .build();
    auto sw = sweep<SparseCoefficients>(fit, grid, m);
    out.path = sw.records;
    const auto& chosen = sw.chosen();
    out.report.lambda = sw.chosen_lambda;

    const auto& sup_terms = chosen.model.support;
    VectorXr cs(static_cast<Index>(sup_terms.size()));
    std::vector<std::vector<int>> sup_exps;
    sup_exps.reserve(sup_terms.size());
    for (std::size_t k = 0; k < sup_terms.size(); ++k) {
      cs[static_cast<Index>(k)] = chosen.model.c[sup_terms[k]];
      sup_exps.push_back(dict.exponents[sup_terms[k]]);
    }
    std::vector<int> local(sup_exps.size());
    for (std::size_t k = 0; k < local.size(); ++k) local[k] = int(k);
    const MatrixXr phi_test = monomial_columns(test.X, sup_exps, local);
    out.test_predictions = train.scales.alpha * (phi_test * cs);
    fill_metrics(out.report, chosen.support, test, out.test_predictions, d);

    ModelBundle mb;
    mb.kind = "dictionary";
    mb.degree = cfg.dictionary_degree;
    mb.exponents = sup_exps;
    mb.coefficients = cs;
    const VectorXr raw_all =
        destandardize_coefficients(chosen.model, dict, train.scales);
    mb.coefficients_raw.resize(cs.size());
    for (std::size_t k = 0; k < sup_terms.size(); ++k)
      mb.coefficients_raw[static_cast<Index>(k)] = raw_all[sup_terms[k]];
    mb.scales = train.scales;
    mb.threshold = cfg.threshold;
    mb.support = chosen.support;
    out.model = std::move(mb);
    return out;
  }

  // penalized network methods
  const bool adaptive = method == Method::adaptive_gl;
  MlpParams initial;
  VectorXr weights;  // empty means all ones (plain group Lasso)
  if (adaptive) {
    auto ifit = fit_initial<Real>(arch, train, cfg.adam_iters,
                                  seed_for(cfg.base_seed, replicate, tag,
                                           "adam_init"),
                                  cfg.learning_rate);
    initial = std::move(ifit.params);
    weights = make_adaptive_weights(initial, cfg.penalized_layer);
  } else if (cfg.warm_start) {
    initial = init_params<Real>(
        arch, seed_for(cfg.base_seed, replicate, tag, "adam_init"));
  }

  auto fit = [&](Real lambda) -> Scored<FitResult> {
    ProxConfig pc;
    pc.lambda = lambda;
    pc.gamma = cfg.gamma;
    pc.penalized_layer = cfg.penalized_layer;
    pc.weights = weights;
    pc.epoch_max = cfg.prox_epochs;
    pc.threshold = cfg.threshold;
    pc.warm_start = cfg.warm_start;
    Scored<FitResult> sc;
    sc.model = fit_penalized(arch, train, initial, pc,
                             lambda_seed(cfg.base_seed, replicate, tag, lambda));
    sc.mse = loss_mse(sc.model.params, arch, train.X, train.y);
    sc.support = sc.model.support;
    sc.dof = dof_network(arch, cfg.penalized_layer, sc.support.size(),
                         cfg.dof_mode);
    return sc;
  };
  auto sw = sweep<FitResult>(fit, cfg.lambda_grid.build(), m);
  out.path = sw.records;
  const auto& chosen = sw.chosen();
  out.report.lambda = sw.chosen_lambda;
  out.test_predictions =
      train.scales.alpha * forward(chosen.model.params, arch, test.X);
  fill_metrics(out.report, chosen.support, test, out.test_predictions, d);
  out.model = network_bundle(arch, chosen.model.params, train.scales,
                             cfg.penalized_layer, cfg.threshold,
                             chosen.support);
  return out;
}

}  // namespace

MethodRun run_method(const ExperimentConfig& cfg, Method method, int replicate,
                     const Dataset& train, const Dataset& test,
                     std::uint64_t noise_seed) {
  const auto t0 = std::chrono::steady_clock::now();
  MethodRun out = run_method_impl(cfg, method, replicate, train, test,
                                  noise_seed);
  out.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const int R = cfg.replicates;
  const int M = static_cast<int>(cfg.methods.size());

  // Phase 1: trajectories + datasets per replicate.
  std::vector<Trajectory> trajs;
  Trajectory shared;
  if (cfg.redraw_initial_state) {
    trajs.resize(R);
    parallel_for(R, cfg.workers,
                 [&](int r) { trajs[r] = experiment_trajectory(cfg, r); });
  } else {
    shared = experiment_trajectory(cfg, 0);
  }
  auto traj_of = [&](int r) -> const Trajectory& {
    return cfg.redraw_initial_state ? trajs[r] : shared;
  };

  std::vector<ReplicateData> data(R);
  parallel_for(R, cfg.workers, [&](int r) {
    data[r] = build_replicate_data(cfg, traj_of(r), r);
  });

  // Phase 2: one task per (method, replicate) cell, results slotted.
  struct Cell {
    MethodRun run;
    bool failed = false;
  };
  std::vector<std::vector<Cell>> cells(M, std::vector<Cell>(R));
  parallel_for(M * R, cfg.workers, [&](int idx) {
    const int mi = idx / R;
    const int r = idx % R;
    Cell& cell = cells[mi][r];
    try {
      cell.run = run_method(cfg, cfg.methods[mi], r, data[r].train,
                            data[r].test, data[r].noise_seed);
    } catch (const std::exception& e) {
      cell.failed = true;
      cell.run.report.method = cfg.methods[mi];
      cell.run.report.replicate = r;
      cell.run.report.seed = data[r].noise_seed;
      cell.run.report.ok = false;
      cell.run.report.error = e.what();
    }
  });

  // Phase 3: deterministic reduce in (method name, replicate) order.
  std::vector<int> order(M);
  for (int i = 0; i < M; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return to_string(cfg.methods[a]) < to_string(cfg.methods[b]);
  });

  ExperimentResult res;
  for (int mi : order) {
    const std::string tag = to_string(cfg.methods[mi]);
    int failures = 0;
    Real sum_sens = 0, sum_spec = 0, sum_err = 0;
    std::vector<Real> senss, specs, errs;
    for (int r = 0; r < R; ++r) {
      const Cell& cell = cells[mi][r];
      res.reports.push_back(cell.run.report);
      res.wall_times[{tag, r}] = cell.run.wall_seconds;
      if (!cell.run.path.empty()) res.paths[{tag, r}] = cell.run.path;
      if (cell.failed) {
        ++failures;
        continue;
      }
      senss.push_back(cell.run.report.sensitivity);
      specs.push_back(cell.run.report.specificity);
      errs.push_back(cell.run.report.rel_error);
      sum_sens += cell.run.report.sensitivity;
      sum_spec += cell.run.report.specificity;
      sum_err += cell.run.report.rel_error;
      if (r == 0) {
        res.models.emplace(tag, cell.run.model);
        MethodCurve curve;
        curve.method = cfg.methods[mi];
        curve.t = data[0].test.times;
        curve.f_true = data[0].test.raw_y;
        curve.f_hat = cell.run.test_predictions;
        res.curves.push_back(std::move(curve));
      }
    }
    if (failures * 5 > R)  // more than 20% of replicates failed
      throw Error("replicate_failures",
                  "method " + tag + " failed in " + std::to_string(failures) +
                      " of " + std::to_string(R) + " replicates");

    MethodSummary s;
    s.method = cfg.methods[mi];
    s.replicates = static_cast<int>(errs.size());
    s.excluded = failures;
    const Real n = static_cast<Real>(errs.size());
    s.mean_sensitivity = sum_sens / n;
    s.mean_specificity = sum_spec / n;
    s.mean_rel_error = sum_err / n;
    auto sample_std = [&](const std::vector<Real>& v, Real mean) -> Real {
      if (v.size() < 2) return 0.0;
      Real acc = 0;
      for (Real x : v) acc += (x - mean) * (x - mean);
      return std::sqrt(acc / static_cast<Real>(v.size() - 1));
    };
    s.std_sensitivity = sample_std(senss, s.mean_sensitivity);
    s.std_specificity = sample_std(specs, s.mean_specificity);
    s.std_rel_error = sample_std(errs, s.mean_rel_error);
    res.summaries.push_back(s);
  }
  return res;
}

void emit_tables(const ExperimentResult& res, const ExperimentConfig& cfg,
                 const std::string& out_dir) {
  if (res.reports.empty())
    throw ContractViolation("emit_tables needs at least one report");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  fs::create_directories(fs::path(out_dir) / "paths", ec);
  fs::create_directories(fs::path(out_dir) / "models", ec);
  auto open = [&](const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw IoError("cannot open " + p.string() + " for writing");
    return f;
  };

  {
    auto f = open(fs::path(out_dir) / "summary.csv");
    f << "method,sigma_x,sigma_y,replicates,excluded,"
         "mean_sensitivity,std_sensitivity,mean_specificity,std_specificity,"
         "mean_rel_error,std_rel_error\n";
    for (const auto& s : res.summaries) {
      f << to_string(s.method) << ',' << fmt_g17(cfg.sigma_x) << ','
        << fmt_g17(cfg.sigma_y) << ',' << s.replicates << ',' << s.excluded
        << ',' << fmt_g17(s.mean_sensitivity) << ','
        << fmt_g17(s.std_sensitivity) << ',' << fmt_g17(s.mean_specificity)
        << ',' << fmt_g17(s.std_specificity) << ','
        << fmt_g17(s.mean_rel_error) << ',' << fmt_g17(s.std_rel_error)
        << "\n";
    }
  }
  {
    auto f = open(fs::path(out_dir) / "runs.jsonl");
    for (const auto& r : res.reports) f << r.to_json().dump() << "\n";
  }
  {
    auto f = open(fs::path(out_dir) / "curves.csv");
    f << "method,index,t,f_true,f_hat\n";
    for (const auto& c : res.curves)
      for (Index i = 0; i < c.t.size(); ++i)
        f << to_string(c.method) << ',' << i << ',' << fmt_g17(c.t[i]) << ','
          << fmt_g17(c.f_true[i]) << ',' << fmt_g17(c.f_hat[i]) << "\n";
  }
  {
    auto f = open(fs::path(out_dir) / "timings.csv");
    f << "method,replicate,wall_time_s\n";
    for (const auto& [key, secs] : res.wall_times)
      f << key.first << ',' << key.second << ',' << secs << "\n";
  }
  for (const auto& [key, path] : res.paths) {
    auto f = open(fs::path(out_dir) / "paths" /
                  (key.first + "_r" + std::to_string(key.second) + ".csv"));
    f << "lambda,mse,dof,bic,support_size,support\n";
    for (const auto& rec : path) {
      f << fmt_g17(rec.lambda) << ',' << fmt_g17(rec.mse) << ',' << rec.dof
        << ',' << fmt_g17(rec.bic) << ',' << rec.support_size << ','
        << index_set_to_string(rec.support) << "\n";
    }
  }
  for (const auto& [tag, model] : res.models)
    write_model((fs::path(out_dir) / "models" / (tag + "_r0.json")).string(),
                model);

  // Replicate-0 test set, so saved models can be re-scored with `eval`.
  const Trajectory traj = experiment_trajectory(cfg, 0);
  const ReplicateData rd = build_replicate_data(cfg, traj, 0);
  write_dataset((fs::path(out_dir) / "test.csv").string(),
                (fs::path(out_dir) / "test.json").string(), rd.test,
                {cfg.sigma_x, cfg.sigma_y, rd.noise_seed});
}

std::vector<std::string> preset_names() {
  return {"table1",     "noise-0.02", "noise-0.03", "noise-0.04",
          "noise-0.05", "nonpoly-1",  "nonpoly-2",  "nonpoly-3",
          "linear-combo"};
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.lambda_grid = GridSpec{{}, 8, 1e-4, 1.0};
  c.adam_iters = 4000;
  c.prox_epochs = 2000;
  c.base_seed = 101;
  c.output_dir = "out/" + name;

  if (name == "table1") {
    c.target_k = 25;
    c.sigma_x = c.sigma_y = 0.02;
    c.methods = {Method::adaptive_gl, Method::group_lasso, Method::plain_nn};
    c.replicates = 10;
    return c;
  }
  if (name.rfind("noise-", 0) == 0) {
    const double sigma = std::stod(name.substr(6));
    if (sigma != 0.02 && sigma != 0.03 && sigma != 0.04 && sigma != 0.05)
      throw InvalidConfigError("unknown preset '" + name + "'");
    c.target_k = 10;
    c.sigma_x = c.sigma_y = sigma;
    c.methods = {Method::adaptive_gl, Method::dictionary};
    c.dict_lambda_grid = GridSpec{{}, 12, 1e-5, 1e-1};
    c.replicates = 10;
    return c;
  }
  if (name.rfind("nonpoly-", 0) == 0) {
    const int which = std::stoi(name.substr(8));
    if (which < 1 || which > 3)
      throw InvalidConfigError("unknown preset '" + name + "'");
    c.target_id = which == 1   ? TargetId::setting1
                  : which == 2 ? TargetId::setting2
                               : TargetId::setting3;
    c.sigma_x = which == 1 ? 0.0 : 0.02;
    c.sigma_y = which == 2 ? 0.0 : 0.02;
    c.methods = {Method::adaptive_gl, Method::dictionary};
    c.dict_lambda_grid = GridSpec{{}, 12, 1e-5, 1e-1};
    c.replicates = 5;
    return c;
  }
  if (name == "linear-combo") {
    c.target_id = TargetId::linear_combo;
    c.sigma_x = 0.0;
    c.sigma_y = 0.02;
    c.first_activation = Activation::identity;
    c.penalized_layer = 2;
    c.methods = {Method::adaptive_gl, Method::dictionary};
    c.dict_lambda_grid = GridSpec{{}, 12, 1e-5, 1e-1};
    c.replicates = 3;
    return c;
  }
  throw InvalidConfigError("unknown preset '" + name + "'");
}

}  // namespace aglnet
