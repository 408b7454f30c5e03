#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "splitbench/attack.hpp"
#include "splitbench/dataset.hpp"
#include "splitbench/netsim.hpp"
#include "splitbench/protocols.hpp"

namespace splitbench {

enum class EvalScope { SamePart, CrossPart, Union };

/// Optional one-dimensional parameter sweep layered over arch x cut x seed.
struct SweepSpec {
  std::string key;  // privacy.dc_frequency | privacy.loss_multiplier | privacy.noise_multiplier
  std::vector<double> values;
  bool enabled() const { return !key.empty(); }
};

struct ExperimentConfig {
  nlohmann::json raw;  // canonical parsed config (defaults filled)

  SequentialModel model;
  std::vector<Arch> archs;
  std::vector<int> cuts;
  std::vector<std::uint64_t> seeds;
  int epochs = 1;
  int batch_size = 16;
  double learning_rate = 0.1;
  int num_clients = 1;
  int avg_every = 1;
  AvgMode avg_mode = AvgMode::SerAvg;
  bool psl_per_batch_updates = false;
  PrivacyConfig privacy;
  DatasetSpec dataset;
  EvalScope eval_scope = EvalScope::Union;
  bool attack_enabled = false;
  AttackConfig attack;
  bool dump_reconstructions = false;
  LinkModel link;
  LinkModel ps_link;
  ComputeModel compute;
  std::string timing_profile = "model";  // model | vgg16 | lenet | cnn1d
  SweepSpec sweep;
  std::string output_dir = "results";
  int workers = 1;
};

/// The published schema for experiment configs (JSON Schema draft-07 style).
nlohmann::json config_schema();

/// Structural validation against the schema: returns human-readable
/// problems, empty when the config is valid.
std::vector<std::string> validate_config(const nlohmann::json& config);

/// Parses and validates; throws listing all problems when invalid.
ExperimentConfig parse_config(const nlohmann::json& config);

/// FNV-1a over the canonical (sorted-key) dump.
std::string config_hash(const nlohmann::json& config);

struct CellStatus {
  std::string id;
  bool ok = false;
  std::string error;
};

struct SuiteResult {
  std::string output_dir;
  std::vector<CellStatus> cells;
  bool all_ok() const;
};

/// Runs every (arch x cut x seed x sweep) cell, writes metrics.csv,
/// timing.csv, per-cell traces and attack reports, and a manifest with the
/// config hash. Cell failures are recorded and the suite continues.
SuiteResult run_suite(const ExperimentConfig& config);

/// Re-runs a suite from a manifest written by run_suite; outputs are
/// byte-identical for an unchanged manifest.
SuiteResult run_suite_from_manifest(const std::string& manifest_path,
                                    const std::string& output_dir);

/// Renders one figure family from a results directory into SVG files.
/// Kinds: time_vs_cut, memory_vs_cut, accuracy_bars, accuracy_vs_cut,
/// resilience_vs_cut, resilience_vs_sweep.
std::vector<std::string> plot_figures(const std::string& results_dir,
                                      const std::string& figure_kind);

}  // namespace splitbench
