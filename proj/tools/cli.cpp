// Command-line front end: simulate | run | sweep | eval.
// Errors leave as JSON on stderr with a nonzero exit code.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "aglnet/dynamics.hpp"
#include "aglnet/harness.hpp"
#include "aglnet/metrics.hpp"
#include "aglnet/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& code, const std::string& message) {
  json j;
  j["error"] = {{"code", code}, {"message", message}};
  std::cerr << j.dump() << "\n";
  std::exit(1);
}

aglnet::ExperimentConfig load_config(const std::string& arg) {
  if (fs::exists(arg))
    return aglnet::ExperimentConfig::from_json(aglnet::read_json_file(arg));
  for (const auto& name : aglnet::preset_names())
    if (name == arg) return aglnet::preset(name);
  throw aglnet::InvalidConfigError(
      "'" + arg + "' is neither a config file nor a known preset (presets: " +
      [] {
        std::string s;
        for (const auto& n : aglnet::preset_names())
          s += (s.empty() ? "" : ", ") + n;
        return s;
      }() +
      ")");
}

void apply_env_overrides(aglnet::ExperimentConfig& cfg) {
  if (const char* dir = std::getenv("AGLNET_OUTPUT_DIR"))
    cfg.output_dir = dir;
  if (const char* w = std::getenv("AGLNET_WORKERS")) {
    try {
      cfg.workers = std::stoi(w);
    } catch (const std::exception&) {
      throw aglnet::InvalidConfigError("AGLNET_WORKERS must be an integer");
    }
  }
}

int run_main(int argc, char** argv) {
  CLI::App app{"Sparse nonlinear function learning on Lorenz-96 data"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Integrate the system and write the trajectory CSV");
  aglnet::OdeConfig ode;
  std::string sim_out = "trajectory.csv";
  sim->add_option("--dim", ode.dim, "State dimension");
  sim->add_option("--forcing", ode.forcing, "Forcing constant F");
  sim->add_option("--dt", ode.dt, "Step size");
  sim->add_option("--t0", ode.t0, "Start time");
  sim->add_option("--t-final", ode.t_final, "End time");
  sim->add_option("-o,--out", sim_out, "Output CSV path");

  // run
  auto* run = app.add_subcommand("run", "Run a full experiment from a config file or preset");
  std::string run_cfg_arg;
  std::string run_outdir, run_workers;
  run->add_option("config", run_cfg_arg, "Config JSON path or preset name")->required();
  run->add_option("--output-dir", run_outdir, "Override the output directory");
  run->add_option("--workers", run_workers, "Override the worker count");

  // sweep
  auto* swp = app.add_subcommand("sweep", "Run one method's lambda path for one replicate");
  std::string swp_cfg_arg, swp_method = "adaptive_gl", swp_out;
  int swp_rep = 0;
  swp->add_option("config", swp_cfg_arg, "Config JSON path or preset name")->required();
  swp->add_option("--method", swp_method, "adaptive_gl | group_lasso | plain_nn | dictionary");
  swp->add_option("--replicate", swp_rep, "Replicate index");
  swp->add_option("-o,--out", swp_out, "Output directory (default: config output_dir)");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a saved model on a saved dataset");
  std::string ev_model, ev_data, ev_sidecar;
  ev->add_option("--model", ev_model, "Model JSON path")->required();
  ev->add_option("--data", ev_data, "Dataset CSV path")->required();
  ev->add_option("--sidecar", ev_sidecar, "Dataset sidecar JSON (default: CSV path with .json)");

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) {
    if (ode.x0.size() == 0) ode.x0 = aglnet::default_x0(ode.dim);
    ode.validate();
    aglnet::write_trajectory_csv(sim_out, aglnet::integrate(ode));
    std::cout << sim_out << "\n";
    return 0;
  }

  if (run->parsed()) {
    aglnet::ExperimentConfig cfg = load_config(run_cfg_arg);
    apply_env_overrides(cfg);
    if (!run_outdir.empty()) cfg.output_dir = run_outdir;
    if (!run_workers.empty()) cfg.workers = std::stoi(run_workers);
    cfg.validate();
    const aglnet::ExperimentResult res = aglnet::run_experiment(cfg);
    aglnet::emit_tables(res, cfg, cfg.output_dir);
    json done;
    done["output_dir"] = cfg.output_dir;
    done["replicates"] = cfg.replicates;
    json ms = json::array();
    for (const auto& s : res.summaries) {
      ms.push_back({{"method", aglnet::to_string(s.method)},
                    {"mean_rel_error", s.mean_rel_error},
                    {"mean_sensitivity", s.mean_sensitivity},
                    {"mean_specificity", s.mean_specificity},
                    {"excluded", s.excluded}});
    }
    done["summaries"] = std::move(ms);
    std::cout << done.dump(2) << "\n";
    return 0;
  }

  if (swp->parsed()) {
    aglnet::ExperimentConfig cfg = load_config(swp_cfg_arg);
    apply_env_overrides(cfg);
    if (!swp_out.empty()) cfg.output_dir = swp_out;
    cfg.validate();
    const aglnet::Method method = aglnet::method_from_string(swp_method);
    const aglnet::Trajectory traj = aglnet::experiment_trajectory(cfg, swp_rep);
    const aglnet::ReplicateData data =
        aglnet::build_replicate_data(cfg, traj, swp_rep);
    const aglnet::MethodRun mr = aglnet::run_method(
        cfg, method, swp_rep, data.train, data.test, data.noise_seed);

    fs::create_directories(cfg.output_dir);
    const std::string tag = aglnet::to_string(method);
    const fs::path base = fs::path(cfg.output_dir);
    {
      std::ofstream f(base / (tag + "_r" + std::to_string(swp_rep) + ".csv"));
      if (!f) throw aglnet::IoError("cannot open sweep output CSV");
      f << "lambda,mse,dof,bic,support_size,support\n";
      for (const auto& rec : mr.path)
        f << aglnet::fmt_g17(rec.lambda) << ',' << aglnet::fmt_g17(rec.mse)
          << ',' << rec.dof << ',' << aglnet::fmt_g17(rec.bic) << ','
          << rec.support_size << ',' << aglnet::index_set_to_string(rec.support)
          << "\n";
    }
    aglnet::write_model(
        (base / (tag + "_r" + std::to_string(swp_rep) + ".json")).string(),
        mr.model);
    std::cout << mr.report.to_json().dump(2) << "\n";
    return 0;
  }

  // eval
  const aglnet::ModelBundle model = aglnet::read_model(ev_model);
  if (ev_sidecar.empty())
    ev_sidecar = fs::path(ev_data).replace_extension(".json").string();
  const aglnet::Dataset ds = aglnet::read_dataset(ev_data, ev_sidecar);
  const aglnet::VectorXr preds = model.predict_raw(ds.raw_X);
  json out;
  out["samples"] = static_cast<long>(ds.samples());
  out["rel_error"] = aglnet::relative_test_error(ds.raw_y, preds);
  const int d = static_cast<int>(ds.dim());
  if (!ds.true_support.empty() &&
      static_cast<int>(ds.true_support.size()) < d) {
    const auto sel = aglnet::selection_metrics(model.support, ds.true_support, d);
    out["sensitivity"] = sel.sensitivity;
    out["specificity"] = sel.specificity;
  }
  json sup = json::array();
  for (int v : model.support) sup.push_back(v);
  out["support"] = std::move(sup);
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_main(argc, argv);
  } catch (const aglnet::Error& e) {
    fail(e.code(), e.what());
  } catch (const std::exception& e) {
    fail("internal", e.what());
  }
}
