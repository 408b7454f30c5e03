// splitbench: desk-scale workbench for distributed split/federated training
// architectures. Subcommands: run, attack, plan, plot, validate-config.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "splitbench/attack.hpp"
#include "splitbench/experiment.hpp"
#include "splitbench/model_io.hpp"
#include "splitbench/planner.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace splitbench;

namespace {

json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return json::parse(is);
}

/// SPLITBENCH_OUT, when set, roots relative output directories.
std::string resolve_output_dir(const std::string& dir) {
  const char* root = std::getenv("SPLITBENCH_OUT");
  if (root && *root && fs::path(dir).is_relative()) {
    return (fs::path(root) / dir).string();
  }
  return dir;
}

int cmd_run(const std::string& config_path, const std::string& manifest_path,
            const std::string& output_override, int workers_override) {
  SuiteResult result;
  if (!manifest_path.empty()) {
    std::string out = output_override.empty() ? "results_rerun" : output_override;
    result = run_suite_from_manifest(manifest_path, resolve_output_dir(out));
  } else {
    json config = load_json(config_path);
    if (!output_override.empty()) config["output_dir"] = output_override;
    ExperimentConfig cfg = parse_config(config);
    cfg.output_dir = resolve_output_dir(cfg.output_dir);
    if (workers_override > 0) cfg.workers = workers_override;
    result = run_suite(cfg);
  }
  int failures = 0;
  for (const auto& c : result.cells) {
    if (c.ok) {
      std::cout << "[ok]    " << c.id << "\n";
    } else {
      ++failures;
      std::cout << "[error] " << c.id << ": " << c.error << "\n";
    }
  }
  std::cout << result.cells.size() - failures << "/" << result.cells.size()
            << " cells succeeded; results in " << result.output_dir << "\n";
  return result.all_ok() ? 0 : 1;
}

int cmd_attack(const std::string& config_path, const std::string& output_dir) {
  json config = load_json(config_path);
  config["attack"]["enabled"] = true;
  if (!output_dir.empty()) config["output_dir"] = output_dir;
  ExperimentConfig cfg = parse_config(config);
  cfg.output_dir = resolve_output_dir(cfg.output_dir);
  cfg.attack_enabled = true;
  SuiteResult result = run_suite(cfg);
  std::cout << "attack reports in " << result.output_dir << "/cells/*/attack.json\n";
  return result.all_ok() ? 0 : 1;
}

int cmd_plan(const std::string& profile_name, const std::string& profile_path, double bandwidth,
             double latency, double seconds_per_flop, int batch, double alpha, double beta,
             double gamma, double kappa, const std::string& measured_path,
             const std::string& report_path) {
  LayerProfile profile;
  if (!profile_path.empty()) {
    profile = profile_from_json(load_json(profile_path));
  } else if (profile_name == "vgg16") {
    profile = vgg16_profile();
  } else if (profile_name == "lenet") {
    profile = lenet_profile();
  } else if (profile_name == "cnn1d") {
    profile = cnn1d_profile();
  } else {
    profile = profile_model(builtin_model(profile_name));
  }

  LinkModel link{bandwidth, latency};
  ComputeModel compute{seconds_per_flop};
  std::vector<int> fit_cuts;
  for (int d = 0; d <= profile.num_layers(); d += 2) fit_cuts.push_back(d);
  ProfileEstimates est = fit_delay_models(profile, link, compute, batch, fit_cuts);
  PlannerWeights weights{alpha, beta, gamma, kappa};

  json report;
  report["profile"] = profile.model_name;
  report["selected_cut"] = select_cut(est, weights);
  json per_cut = json::array();
  for (std::size_t i = 0; i < est.cuts.size(); ++i) {
    per_cut.push_back({{"cut", est.cuts[i]},
                       {"transmission_s", est.transmission_s[i]},
                       {"compute_s", est.compute_s[i]},
                       {"objective", alpha * est.transmission_s[i] + beta * est.compute_s[i]}});
  }
  report["delay_terms"] = per_cut;

  if (!measured_path.empty()) {
    const json measured = load_json(measured_path);
    for (const auto& row : measured.at("cuts")) {
      const int d = row.at("cut").get<int>();
      est.accuracy[d] = row.at("accuracy").get<double>();
      est.resilience[d] = row.at("resilience").get<double>();
    }
    // restrict the frontier to the measured cuts
    ProfileEstimates sub;
    for (std::size_t i = 0; i < est.cuts.size(); ++i) {
      if (est.accuracy.count(est.cuts[i])) {
        sub.cuts.push_back(est.cuts[i]);
        sub.transmission_s.push_back(est.transmission_s[i]);
        sub.compute_s.push_back(est.compute_s[i]);
      }
    }
    sub.accuracy = est.accuracy;
    sub.resilience = est.resilience;
    report["frontier"] = planner_report_json(enumerate_frontier(sub, weights), weights);
  }

  const std::string out = report.dump(2) + "\n";
  if (report_path.empty()) {
    std::cout << out;
  } else {
    std::ofstream os(report_path);
    os << out;
    std::cout << "planner report written to " << report_path << "\n";
  }
  return 0;
}

int cmd_plot(const std::string& results_dir, const std::string& kind) {
  for (const auto& f : plot_figures(results_dir, kind)) {
    std::cout << "wrote " << f << "\n";
  }
  return 0;
}

int cmd_validate(const std::string& config_path, bool print_schema) {
  if (print_schema) {
    std::cout << config_schema().dump(2) << "\n";
    return 0;
  }
  const json config = load_json(config_path);
  const std::vector<std::string> errors = validate_config(config);
  if (errors.empty()) {
    std::cout << "ok: " << config_path << " (hash " << config_hash(config) << ")\n";
    return 0;
  }
  for (const auto& e : errors) std::cout << "error: " << e << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"splitbench: distributed split/federated training workbench"};
  app.require_subcommand(1);

  std::string config_path, manifest_path, output_dir;
  int workers = 0;
  auto* run = app.add_subcommand("run", "run an experiment suite from a config");
  run->add_option("config", config_path, "experiment config JSON");
  run->add_option("--manifest", manifest_path, "re-run from a suite manifest");
  run->add_option("--output", output_dir, "override the output directory");
  run->add_option("--workers", workers, "worker threads for suite cells");

  std::string atk_config, atk_out;
  auto* attack = app.add_subcommand("attack", "run the reconstruction attack for a config");
  attack->add_option("config", atk_config, "experiment config JSON")->required();
  attack->add_option("--output", atk_out, "override the output directory");

  std::string plan_profile = "vgg16", plan_profile_path, plan_measured, plan_report;
  double bandwidth = 1e6, latency = 0.0, spf = 1e-9;
  double alpha = 2.0, beta = 1.0, gamma = 0.0, kappa = 0.0;
  int plan_batch = 1;
  auto* plan = app.add_subcommand("plan", "fit delay models and select a cut index");
  plan->add_option("--profile", plan_profile, "built-in profile or model name");
  plan->add_option("--profile-json", plan_profile_path, "profile JSON file");
  plan->add_option("--bandwidth", bandwidth, "link bandwidth, bytes/second");
  plan->add_option("--latency", latency, "link latency, seconds");
  plan->add_option("--seconds-per-flop", spf, "compute cost model");
  plan->add_option("--batch", plan_batch, "batch size for the cost model");
  plan->add_option("--alpha", alpha, "transmission-delay weight");
  plan->add_option("--beta", beta, "compute-delay weight");
  plan->add_option("--gamma", gamma, "accuracy weight (full objective)");
  plan->add_option("--kappa", kappa, "resilience weight (full objective)");
  plan->add_option("--measured", plan_measured,
                   "JSON with measured accuracy/resilience per cut for the full objective");
  plan->add_option("--report", plan_report, "write the report here instead of stdout");

  std::string plot_dir, plot_kind = "time_vs_cut";
  auto* plot = app.add_subcommand("plot", "render SVG figures from a results directory");
  plot->add_option("results", plot_dir, "results directory")->required();
  plot->add_option("--kind", plot_kind,
                   "time_vs_cut|memory_vs_cut|accuracy_bars|accuracy_vs_cut|"
                   "resilience_vs_cut|resilience_vs_sweep");

  std::string val_config;
  bool print_schema = false;
  auto* validate = app.add_subcommand("validate-config", "validate a config against the schema");
  validate->add_option("config", val_config, "experiment config JSON");
  validate->add_flag("--print-schema", print_schema, "print the config schema and exit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (config_path.empty() && manifest_path.empty()) {
        std::cerr << "run: provide a config or --manifest\n";
        return 2;
      }
      return cmd_run(config_path, manifest_path, output_dir, workers);
    }
    if (attack->parsed()) return cmd_attack(atk_config, atk_out);
    if (plan->parsed()) {
      return cmd_plan(plan_profile, plan_profile_path, bandwidth, latency, spf, plan_batch,
                      alpha, beta, gamma, kappa, plan_measured, plan_report);
    }
    if (plot->parsed()) return cmd_plot(plot_dir, plot_kind);
    if (validate->parsed()) {
      if (val_config.empty() && !print_schema) {
        std::cerr << "validate-config: provide a config or --print-schema\n";
        return 2;
      }
      return cmd_validate(val_config, print_schema);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
