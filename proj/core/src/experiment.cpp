#include "splitbench/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "splitbench/model_io.hpp"
#include "splitbench/svgplot.hpp"

namespace splitbench {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json defaults() {
  return json{
      {"model", "digits_cnn"},
      {"archs", json::array({"fsl"})},
      {"cuts", json::array({2})},
      {"seeds", json::array({1})},
      {"epochs", 5},
      {"batch_size", 16},
      {"learning_rate", 0.1},
      {"num_clients", 2},
      {"avg_every", 1},
      {"avg_mode", "ser_avg"},
      {"psl_per_batch_updates", false},
      {"eval", "union"},
      {"dataset",
       {{"kind", "synthetic_digits"},
        {"num_classes", 10},
        {"samples_per_client", 128},
        {"partition", "iid"},
        {"mix_fraction", 0.10}}},
      {"privacy",
       {{"mode", "none"},
        {"dc_frequency", 0},
        {"loss_multiplier", 0.0},
        {"noise_multiplier", 0.0},
        {"max_grad_norm", 1.0}}},
      {"attack",
       {{"enabled", false},
        {"autoencoder_epochs", 20},
        {"classifier_epochs", 20},
        {"dump_reconstructions", false}}},
      {"link", {{"bandwidth", 1e6}, {"latency", 0.0}}},
      {"ps_link", {{"bandwidth", 1e6}, {"latency", 0.0}}},
      {"compute", {{"seconds_per_flop", 1e-9}}},
      {"timing_profile", "model"},
      {"sweep", {{"key", ""}, {"values", json::array()}}},
      {"output_dir", "results"},
      {"workers", 1},
  };
}

void merge_defaults(json& config, const json& base) {
  for (auto it = base.begin(); it != base.end(); ++it) {
    if (!config.contains(it.key())) {
      config[it.key()] = it.value();
    } else if (it.value().is_object() && config[it.key()].is_object()) {
      merge_defaults(config[it.key()], it.value());
    }
  }
}

const std::set<std::string> kArchNames = {"fl", "sl", "psl", "fsl", "frc"};
const std::set<std::string> kPrivacyModes = {"none", "nopeek", "cpa_dc", "cpa_dp", "dp_full"};
const std::set<std::string> kSweepKeys = {"", "privacy.dc_frequency", "privacy.loss_multiplier",
                                          "privacy.noise_multiplier"};

}  // namespace

json config_schema() {
  // draft-07 style document published for config authors
  json num = {{"type", "number"}};
  json posint = {{"type", "integer"}, {"minimum", 1}};
  return json{
      {"$schema", "http://json-schema.org/draft-07/schema#"},
      {"title", "splitbench experiment config"},
      {"type", "object"},
      {"properties",
       {
           {"model",
            {{"oneOf", json::array({json{{"type", "string"},
                                         {"enum", json::array({"digits_cnn", "digits_mlp",
                                                               "synth1d_mlp"})}},
                                    json{{"type", "object"}}})}}},
           {"archs",
            {{"type", "array"},
             {"minItems", 1},
             {"items", {{"type", "string"}, {"enum", json::array({"fl", "sl", "psl", "fsl", "frc"})}}}}},
           {"cuts", {{"type", "array"}, {"minItems", 1}, {"items", {{"type", "integer"}, {"minimum", 0}}}}},
           {"seeds", {{"type", "array"}, {"minItems", 1}, {"items", {{"type", "integer"}, {"minimum", 0}}}}},
           {"epochs", posint},
           {"batch_size", posint},
           {"learning_rate", {{"type", "number"}, {"exclusiveMinimum", 0}}},
           {"num_clients", posint},
           {"avg_every", posint},
           {"avg_mode", {{"type", "string"}, {"enum", json::array({"none", "ser_avg", "fed_avg"})}}},
           {"psl_per_batch_updates", {{"type", "boolean"}}},
           {"eval", {{"type", "string"}, {"enum", json::array({"same_part", "cross_part", "union"})}}},
           {"dataset",
            {{"type", "object"},
             {"properties",
              {{"kind", {{"type", "string"},
                         {"enum", json::array({"synthetic_digits", "synthetic_1d", "file"})}}},
               {"num_classes", posint},
               {"samples_per_client", posint},
               {"partition", {{"type", "string"}, {"enum", json::array({"iid", "two_part_noniid"})}}},
               {"mix_fraction", {{"type", "number"}, {"minimum", 0}, {"maximum", 1}}},
               {"images_path", {{"type", "string"}}},
               {"labels_path", {{"type", "string"}}}}}}},
           {"privacy",
            {{"type", "object"},
             {"properties",
              {{"mode", {{"type", "string"},
                         {"enum", json::array({"none", "nopeek", "cpa_dc", "cpa_dp", "dp_full"})}}},
               {"dc_frequency", {{"type", "integer"}, {"minimum", 0}}},
               {"loss_multiplier", {{"type", "number"}, {"minimum", 0}}},
               {"noise_multiplier", {{"type", "number"}, {"minimum", 0}}},
               {"max_grad_norm", {{"type", "number"}, {"exclusiveMinimum", 0}}}}}}},
           {"attack",
            {{"type", "object"},
             {"properties",
              {{"enabled", {{"type", "boolean"}}},
               {"autoencoder_epochs", posint},
               {"classifier_epochs", posint},
               {"dump_reconstructions", {{"type", "boolean"}}}}}}},
           {"link",
            {{"type", "object"},
             {"properties",
              {{"bandwidth", {{"type", "number"}, {"exclusiveMinimum", 0}}},
               {"latency", {{"type", "number"}, {"minimum", 0}}}}}}},
           {"ps_link", {{"type", "object"}}},
           {"compute",
            {{"type", "object"},
             {"properties", {{"seconds_per_flop", {{"type", "number"}, {"minimum", 0}}}}}}},
           {"timing_profile",
            {{"type", "string"}, {"enum", json::array({"model", "vgg16", "lenet", "cnn1d"})}}},
           {"sweep",
            {{"type", "object"},
             {"properties",
              {{"key", {{"type", "string"},
                        {"enum", json::array({"", "privacy.dc_frequency", "privacy.loss_multiplier",
                                              "privacy.noise_multiplier"})}}},
               {"values", {{"type", "array"}, {"items", num}}}}}}},
           {"output_dir", {{"type", "string"}}},
           {"workers", posint},
       }},
      {"required", json::array({"archs", "cuts", "seeds"})},
  };
}

std::vector<std::string> validate_config(const json& config) {
  std::vector<std::string> errors;
  if (!config.is_object()) return {"config must be a JSON object"};
  json c = config;
  merge_defaults(c, defaults());

  auto check_pos_int = [&](const char* key) {
    if (!c[key].is_number_integer() || c[key].get<int>() < 1) {
      errors.push_back(std::string(key) + " must be a positive integer");
    }
  };
  auto check_array = [&](const char* key) {
    if (!c[key].is_array() || c[key].empty()) {
      errors.push_back(std::string(key) + " must be a non-empty array");
      return false;
    }
    return true;
  };

  if (check_array("archs")) {
    for (const auto& a : c["archs"]) {
      if (!a.is_string() || !kArchNames.count(a.get<std::string>())) {
        errors.push_back("archs: unknown architecture " + a.dump());
      }
    }
  }
  if (check_array("cuts")) {
    for (const auto& d : c["cuts"]) {
      if (!d.is_number_integer() || d.get<int>() < 0) {
        errors.push_back("cuts: entries must be integers >= 0");
        break;
      }
    }
  }
  if (check_array("seeds")) {
    for (const auto& s : c["seeds"]) {
      if (!s.is_number_integer() || s.get<long long>() < 0) {
        errors.push_back("seeds: entries must be non-negative integers");
        break;
      }
    }
  }
  check_pos_int("epochs");
  check_pos_int("batch_size");
  check_pos_int("num_clients");
  check_pos_int("avg_every");
  check_pos_int("workers");
  if (!c["learning_rate"].is_number() || c["learning_rate"].get<double>() <= 0) {
    errors.push_back("learning_rate must be > 0");
  }
  if (!c["avg_mode"].is_string() ||
      !std::set<std::string>{"none", "ser_avg", "fed_avg"}.count(c["avg_mode"].get<std::string>())) {
    errors.push_back("avg_mode must be one of none|ser_avg|fed_avg");
  }
  if (!c["eval"].is_string() ||
      !std::set<std::string>{"same_part", "cross_part", "union"}.count(c["eval"].get<std::string>())) {
    errors.push_back("eval must be one of same_part|cross_part|union");
  }

  const json& ds = c["dataset"];
  if (!std::set<std::string>{"synthetic_digits", "synthetic_1d", "file"}.count(
          ds.value("kind", ""))) {
    errors.push_back("dataset.kind must be synthetic_digits|synthetic_1d|file");
  }
  const double mix = ds.value("mix_fraction", 0.1);
  if (mix < 0.0 || mix > 1.0) errors.push_back("dataset.mix_fraction must be in [0,1]");
  if (ds.value("partition", "iid") == "two_part_noniid" &&
      ds.value("num_classes", 10) % 2 != 0) {
    errors.push_back("dataset: two_part_noniid needs an even num_classes");
  }

  const json& pv = c["privacy"];
  if (!kPrivacyModes.count(pv.value("mode", ""))) {
    errors.push_back("privacy.mode must be none|nopeek|cpa_dc|cpa_dp|dp_full");
  }
  if (pv.value("dc_frequency", 0) < 0) errors.push_back("privacy.dc_frequency must be >= 0");
  if (pv.value("loss_multiplier", 0.0) < 0) errors.push_back("privacy.loss_multiplier must be >= 0");
  if (pv.value("noise_multiplier", 0.0) < 0) errors.push_back("privacy.noise_multiplier must be >= 0");
  if (pv.value("max_grad_norm", 1.0) <= 0) errors.push_back("privacy.max_grad_norm must be > 0");

  if (c["link"].value("bandwidth", 1.0) <= 0) errors.push_back("link.bandwidth must be > 0");
  if (c["link"].value("latency", 0.0) < 0) errors.push_back("link.latency must be >= 0");
  if (!std::set<std::string>{"model", "vgg16", "lenet", "cnn1d"}.count(
          c["timing_profile"].get<std::string>())) {
    errors.push_back("timing_profile must be model|vgg16|lenet|cnn1d");
  }
  if (!kSweepKeys.count(c["sweep"].value("key", std::string()))) {
    errors.push_back("sweep.key must be empty or one of privacy.dc_frequency|"
                     "privacy.loss_multiplier|privacy.noise_multiplier");
  }

  // the model must exist and every cut must be in range
  try {
    SequentialModel m = c["model"].is_string() ? builtin_model(c["model"].get<std::string>())
                                               : model_from_json(c["model"]);
    if (c["cuts"].is_array()) {
      for (const auto& d : c["cuts"]) {
        if (d.is_number_integer() &&
            (d.get<int>() < 0 || d.get<int>() > m.num_layers())) {
          errors.push_back("cuts: " + d.dump() + " out of range [0," +
                           std::to_string(m.num_layers()) + "] for the model");
        }
      }
    }
  } catch (const std::exception& e) {
    errors.push_back(std::string("model: ") + e.what());
  }
  return errors;
}

ExperimentConfig parse_config(const json& config) {
  std::vector<std::string> errors = validate_config(config);
  if (!errors.empty()) {
    std::string msg = "invalid config:";
    for (const auto& e : errors) msg += "\n  - " + e;
    throw std::invalid_argument(msg);
  }
  json c = config;
  merge_defaults(c, defaults());

  ExperimentConfig out;
  out.raw = c;
  out.model = c["model"].is_string() ? builtin_model(c["model"].get<std::string>())
                                     : model_from_json(c["model"]);
  for (const auto& a : c["archs"]) out.archs.push_back(arch_from_name(a.get<std::string>()));
  for (const auto& d : c["cuts"]) out.cuts.push_back(d.get<int>());
  for (const auto& s : c["seeds"]) out.seeds.push_back(s.get<std::uint64_t>());
  out.epochs = c["epochs"].get<int>();
  out.batch_size = c["batch_size"].get<int>();
  out.learning_rate = c["learning_rate"].get<double>();
  out.num_clients = c["num_clients"].get<int>();
  out.avg_every = c["avg_every"].get<int>();
  out.avg_mode = avg_mode_from_name(c["avg_mode"].get<std::string>());
  out.psl_per_batch_updates = c["psl_per_batch_updates"].get<bool>();

  const json& pv = c["privacy"];
  out.privacy.mode = privacy_mode_from_name(pv["mode"].get<std::string>());
  out.privacy.dc_frequency = pv["dc_frequency"].get<int>();
  out.privacy.loss_multiplier = pv["loss_multiplier"].get<double>();
  out.privacy.noise_multiplier = pv["noise_multiplier"].get<double>();
  out.privacy.max_grad_norm = pv["max_grad_norm"].get<double>();

  const json& ds = c["dataset"];
  const std::string kind = ds["kind"].get<std::string>();
  out.dataset.kind = kind == "synthetic_digits" ? DatasetKind::SyntheticDigits
                     : kind == "synthetic_1d"   ? DatasetKind::Synthetic1d
                                                : DatasetKind::File;
  out.dataset.num_classes = ds["num_classes"].get<int>();
  out.dataset.samples_per_client = ds["samples_per_client"].get<int>();
  out.dataset.partition = ds["partition"].get<std::string>() == "iid"
                              ? PartitionScheme::Iid
                              : PartitionScheme::TwoPartNonIid;
  out.dataset.mix_fraction = ds["mix_fraction"].get<double>();
  out.dataset.images_path = ds.value("images_path", "");
  out.dataset.labels_path = ds.value("labels_path", "");

  const std::string ev = c["eval"].get<std::string>();
  out.eval_scope = ev == "same_part"    ? EvalScope::SamePart
                   : ev == "cross_part" ? EvalScope::CrossPart
                                        : EvalScope::Union;

  const json& at = c["attack"];
  out.attack_enabled = at["enabled"].get<bool>();
  out.attack.autoencoder_epochs = at["autoencoder_epochs"].get<int>();
  out.attack.classifier_epochs = at["classifier_epochs"].get<int>();
  out.attack.batch_size = out.batch_size;
  out.attack.learning_rate = out.learning_rate;
  out.dump_reconstructions = at["dump_reconstructions"].get<bool>();

  out.link.bandwidth = c["link"]["bandwidth"].get<double>();
  out.link.latency = c["link"]["latency"].get<double>();
  out.ps_link.bandwidth = c["ps_link"].value("bandwidth", out.link.bandwidth);
  out.ps_link.latency = c["ps_link"].value("latency", out.link.latency);
  out.compute.seconds_per_flop = c["compute"]["seconds_per_flop"].get<double>();
  out.timing_profile = c["timing_profile"].get<std::string>();

  out.sweep.key = c["sweep"]["key"].get<std::string>();
  for (const auto& v : c["sweep"]["values"]) out.sweep.values.push_back(v.get<double>());
  out.output_dir = c["output_dir"].get<std::string>();
  out.workers = c["workers"].get<int>();
  return out;
}

std::string config_hash(const json& config) {
  json c = config;
  merge_defaults(c, defaults());
  c.erase("output_dir");
  c.erase("workers");
  const std::string dump = c.dump();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool SuiteResult::all_ok() const {
  for (const auto& c : cells) {
    if (!c.ok) return false;
  }
  return true;
}

namespace {

struct Cell {
  Arch arch;
  int cut;
  std::uint64_t seed;
  int sweep_index;  // -1 when no sweep
  std::string id;
};

struct CellOutput {
  std::string metrics_rows;
  std::string attack_row;
  std::string trace_jsonl;
  std::string attack_json;
  Tensor reconstructions;
  bool ok = false;
  std::string error;
};

PrivacyConfig apply_sweep(PrivacyConfig privacy, const SweepSpec& sweep, int index) {
  if (index < 0 || !sweep.enabled()) return privacy;
  const double v = sweep.values[index];
  if (sweep.key == "privacy.dc_frequency") privacy.dc_frequency = static_cast<int>(v);
  if (sweep.key == "privacy.loss_multiplier") privacy.loss_multiplier = v;
  if (sweep.key == "privacy.noise_multiplier") privacy.noise_multiplier = v;
  return privacy;
}

CellOutput run_cell(const ExperimentConfig& cfg, const Cell& cell) {
  CellOutput out;
  try {
    DatasetSpec spec = cfg.dataset;
    spec.seed = cell.seed;
    PartitionedData data = build_data(spec, cfg.num_clients);

    std::vector<ClientData> shards;
    for (int i = 0; i < cfg.num_clients; ++i) {
      Dataset eval;
      switch (cfg.eval_scope) {
        case EvalScope::SamePart: eval = data.test_shards[i]; break;
        case EvalScope::CrossPart:
          eval = data.test_parts.empty() ? data.test_shards[i]
                                         : data.test_parts[1 - data.part_of_client[i]];
          break;
        case EvalScope::Union: eval = data.union_test; break;
      }
      shards.push_back({data.train_shards[i], eval});
    }

    TrainConfig tc;
    tc.arch = cell.arch;
    tc.num_clients = cfg.num_clients;
    tc.cut_index = cell.cut;
    tc.epochs = cfg.epochs;
    tc.batch_size = cfg.batch_size;
    tc.learning_rate = cfg.learning_rate;
    tc.avg_every = cfg.avg_every;
    tc.seed = cell.seed;
    tc.avg_mode = cfg.avg_mode;
    tc.psl_per_batch_updates = cfg.psl_per_batch_updates;
    tc.privacy = apply_sweep(cfg.privacy, cfg.sweep, cell.sweep_index);

    TrainResult result = train(cfg.model, tc, shards);

    std::ostringstream metrics;
    for (const auto& m : result.metrics) {
      metrics << arch_name(cell.arch) << "," << cell.seed << "," << m.epoch << "," << m.pair_id
              << "," << fmt(m.train_acc) << "," << fmt(m.eval_acc) << "," << fmt(m.loss) << "\n";
    }
    out.metrics_rows = metrics.str();

    std::ostringstream trace;
    result.trace.write_jsonl(trace);
    out.trace_jsonl = trace.str();

    const bool split_arch =
        cell.arch == Arch::SL || cell.arch == Arch::PSL || cell.arch == Arch::FSL;
    if (cfg.attack_enabled && split_arch) {
      // victim: the trained pair-0 client; captured data: its own shard
      SequentialModel victim = cfg.model.clone();
      victim.init_weights(cell.seed);
      PartitionedModel parts = cut(victim, cell.cut);
      WeightVector cw = result.client_weights[0];
      load_weights(parts.client, cw);

      const Dataset& source = data.train_shards[0];
      const int n_cap = std::min<int>(64, static_cast<int>(source.size()));
      std::vector<InterceptedBatch> captured;
      for (int lo = 0; lo < n_cap; lo += cfg.batch_size) {
        Dataset b = source.slice(lo, std::min(n_cap, lo + cfg.batch_size));
        Tensor x = b.inputs.detach();
        Tensor z = parts.client.empty() ? x : parts.client.forward(x);
        captured.push_back({z.detach(), x, b.labels});
      }
      Dataset attacker = make_synthetic_letters(
          std::max<int>(128, static_cast<int>(source.size())), derive_seed(cell.seed, 0xA77));

      AttackConfig ac = cfg.attack;
      ac.seed = cell.seed;
      AttackReport report = run_attack(parts.client, cfg.model, captured, source, attacker, ac);
      out.attack_json = report.to_json().dump(2) + "\n";
      out.reconstructions = report.reconstructions;

      const double sweep_value =
          cell.sweep_index >= 0 ? cfg.sweep.values[cell.sweep_index] : 0.0;
      std::ostringstream arow;
      arow << arch_name(cell.arch) << "," << cell.cut << "," << cell.seed << ","
           << (cfg.sweep.enabled() ? cfg.sweep.key : "") << "," << fmt(sweep_value) << ","
           << fmt(report.tau) << "," << report.n_correct << "," << report.n_reconstructed << ","
           << fmt(report.reconstruction_mse) << "," << fmt(result.mean_eval_acc) << "\n";
      out.attack_row = arow.str();
    }
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

}  // namespace

SuiteResult run_suite(const ExperimentConfig& cfg) {
  SuiteResult suite;
  suite.output_dir = cfg.output_dir;
  fs::create_directories(cfg.output_dir);
  fs::create_directories(fs::path(cfg.output_dir) / "cells");

  std::vector<Cell> cells;
  const int sweep_count = cfg.sweep.enabled() ? static_cast<int>(cfg.sweep.values.size()) : 1;
  for (Arch arch : cfg.archs) {
    for (int cut : cfg.cuts) {
      for (std::uint64_t seed : cfg.seeds) {
        for (int v = 0; v < sweep_count; ++v) {
          Cell c;
          c.arch = arch;
          c.cut = cut;
          c.seed = seed;
          c.sweep_index = cfg.sweep.enabled() ? v : -1;
          std::ostringstream id;
          id << arch_name(arch) << "_c" << cut << "_s" << seed;
          if (cfg.sweep.enabled()) id << "_v" << v;
          c.id = id.str();
          cells.push_back(c);
        }
      }
    }
  }

  std::vector<CellOutput> outputs(cells.size());
  std::atomic<std::size_t> next{0};
  const int workers = std::max(1, cfg.workers);
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      outputs[i] = run_cell(cfg, cells[i]);
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }

  // merged CSVs in deterministic cell order
  std::ofstream metrics(fs::path(cfg.output_dir) / "metrics.csv");
  metrics << "arch,seed,epoch,pair_id,train_acc,test_acc,loss\n";
  std::ofstream attacks(fs::path(cfg.output_dir) / "attacks.csv");
  attacks << "arch,cut,seed,sweep_key,sweep_value,tau,n_correct,n_reconstructed,"
             "reconstruction_mse,final_test_acc\n";
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const CellOutput& o = outputs[i];
    metrics << o.metrics_rows;
    attacks << o.attack_row;
    const fs::path cell_dir = fs::path(cfg.output_dir) / "cells" / cells[i].id;
    fs::create_directories(cell_dir);
    {
      std::ofstream ts(cell_dir / "trace.jsonl");
      ts << o.trace_jsonl;
    }
    if (!o.attack_json.empty()) {
      std::ofstream as(cell_dir / "attack.json");
      as << o.attack_json;
      if (cfg.dump_reconstructions && o.reconstructions.defined()) {
        write_pgm_grid((cell_dir / "reconstructions.pgm").string(), o.reconstructions);
      }
    }
    suite.cells.push_back({cells[i].id, o.ok, o.error});
  }
  metrics.close();
  attacks.close();

  // timing rows are seed-independent: one row per (arch, cut, epoch)
  std::ofstream timing(fs::path(cfg.output_dir) / "timing.csv");
  timing << "arch,cut_index,epoch,client_fb,server_fb,client_update,server_update,interm_bytes\n";
  for (Arch arch : cfg.archs) {
    for (int cut : cfg.cuts) {
      SplitCost cost;
      if (cfg.timing_profile == "model") {
        cost = split_cost_from_model(cfg.model, cut, cfg.batch_size, cfg.compute, cfg.compute);
      } else {
        const LayerProfile profile = cfg.timing_profile == "vgg16"   ? vgg16_profile()
                                     : cfg.timing_profile == "lenet" ? lenet_profile()
                                                                     : cnn1d_profile();
        cost = split_cost_from_profile(profile, cut, cfg.batch_size, cfg.compute, cfg.compute);
      }
      SimConfig sim;
      sim.arch = arch;
      sim.num_clients = cfg.num_clients;
      sim.batches_per_client = std::max(1, cfg.dataset.samples_per_client / cfg.batch_size);
      sim.avg_every = cfg.avg_every;
      sim.split_link = cfg.link;
      sim.ps_link = cfg.ps_link;
      sim.psl_per_batch_updates = cfg.psl_per_batch_updates;
      const auto epochs = simulate_epochs(sim, cost, cfg.epochs);
      for (int e = 0; e < static_cast<int>(epochs.size()); ++e) {
        const TimingBreakdown& t = epochs[e];
        timing << arch_name(arch) << "," << cut << "," << e << "," << fmt(t.client_fb) << ","
               << fmt(t.server_fb) << "," << fmt(t.client_update) << "," << fmt(t.server_update)
               << "," << t.interm_bytes << "\n";
      }
    }
  }
  timing.close();

  json manifest;
  json cfg_canonical = cfg.raw;
  merge_defaults(cfg_canonical, defaults());
  cfg_canonical.erase("output_dir");
  cfg_canonical.erase("workers");
  manifest["config"] = cfg_canonical;
  manifest["config_hash"] = config_hash(cfg.raw);
  manifest["seeds"] = cfg.seeds;
  json mcells = json::array();
  for (const auto& c : suite.cells) {
    json jc = {{"id", c.id}, {"status", c.ok ? "ok" : "error"}};
    if (!c.ok) jc["error"] = c.error;
    mcells.push_back(jc);
  }
  manifest["cells"] = mcells;
  manifest["outputs"] = json::array({"metrics.csv", "timing.csv", "attacks.csv"});
  {
    std::ofstream ms(fs::path(cfg.output_dir) / "manifest.json");
    ms << manifest.dump(2) << "\n";
  }
  return suite;
}

SuiteResult run_suite_from_manifest(const std::string& manifest_path,
                                    const std::string& output_dir) {
  std::ifstream is(manifest_path);
  if (!is) throw std::runtime_error("cannot open manifest " + manifest_path);
  json manifest = json::parse(is);
  json config = manifest.at("config");
  config["output_dir"] = output_dir;
  return run_suite(parse_config(config));
}

// ---------------------------------------------------------------------------
// plotting
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("plot: cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        cells.push_back(line.substr(start));
        break;
      }
      cells.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

struct SeriesBuilder {
  // key -> x -> per-seed values
  std::map<std::string, std::map<double, std::vector<double>>> data;
  void add(const std::string& key, double x, double v) { data[key][x].push_back(v); }
  std::vector<PlotSeries> build() const {
    std::vector<PlotSeries> out;
    for (const auto& [key, points] : data) {
      PlotSeries s;
      s.label = key;
      for (const auto& [x, vals] : points) {
        const ConfidenceInterval ci = confidence95(vals);
        s.x.push_back(x);
        s.y.push_back(ci.mean);
        s.ci_low.push_back(ci.lo);
        s.ci_high.push_back(ci.hi);
      }
      out.push_back(std::move(s));
    }
    return out;
  }
};

}  // namespace

std::vector<std::string> plot_figures(const std::string& results_dir,
                                      const std::string& figure_kind) {
  const fs::path dir(results_dir);
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& svg) {
    const std::string path = (dir / name).string();
    write_file(path, svg);
    written.push_back(path);
  };

  std::ifstream ms(dir / "manifest.json");
  if (!ms) throw std::runtime_error("plot: no manifest.json in " + results_dir);
  const json manifest = json::parse(ms);
  const json config = manifest.at("config");

  if (figure_kind == "time_vs_cut") {
    auto rows = read_csv(dir / "timing.csv");
    SeriesBuilder client, server;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      client.add(r[0], std::stod(r[1]), std::stod(r[3]));
      server.add(r[0], std::stod(r[1]), std::stod(r[4]));
    }
    emit("time_vs_cut_client.svg",
         render_line_chart(client.build(),
                           {"Client F&B time per epoch", "cut index", "seconds"}));
    emit("time_vs_cut_server.svg",
         render_line_chart(server.build(),
                           {"Server F&B time per epoch", "cut index", "seconds"}));
  } else if (figure_kind == "memory_vs_cut") {
    const std::string prof_name = config.value("timing_profile", "model");
    LayerProfile profile;
    if (prof_name == "vgg16") profile = vgg16_profile();
    else if (prof_name == "lenet") profile = lenet_profile();
    else if (prof_name == "cnn1d") profile = cnn1d_profile();
    else {
      SequentialModel m = config["model"].is_string()
                              ? builtin_model(config["model"].get<std::string>())
                              : model_from_json(config["model"]);
      profile = profile_model(m);
    }
    const int batch = config.value("batch_size", 16);
    PlotSeries client{"split client", {}, {}, {}, {}};
    PlotSeries server{"split server", {}, {}, {}, {}};
    PlotSeries full{"full model client", {}, {}, {}, {}};
    const double full_mb = static_cast<double>(profile.full_memory(batch).total()) / 1e6;
    for (int d = 0; d <= profile.num_layers(); ++d) {
      client.x.push_back(d);
      client.y.push_back(static_cast<double>(profile.client_memory(d, batch).total()) / 1e6);
      server.x.push_back(d);
      server.y.push_back(static_cast<double>(profile.server_memory(d, batch).total()) / 1e6);
      full.x.push_back(d);
      full.y.push_back(full_mb);
    }
    emit("memory_vs_cut.svg",
         render_line_chart({client, server, full},
                           {"Memory demand vs cut (" + profile.model_name + ")", "cut index",
                            "MB"}));
  } else if (figure_kind == "accuracy_bars" || figure_kind == "accuracy_vs_cut") {
    auto rows = read_csv(dir / "metrics.csv");
    // final-epoch test accuracy per (arch, seed)
    int last_epoch = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      last_epoch = std::max(last_epoch, std::stoi(rows[i][2]));
    }
    if (figure_kind == "accuracy_bars") {
      std::map<std::string, std::map<std::string, std::vector<double>>> per_arch_seed;
      for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (std::stoi(r[2]) != last_epoch) continue;
        per_arch_seed[r[0]][r[1]].push_back(std::stod(r[5]));
      }
      std::vector<std::string> groups;
      PlotSeries s{"final test accuracy", {}, {}, {}, {}};
      for (const auto& [arch, seeds] : per_arch_seed) {
        std::vector<double> per_seed;
        for (const auto& [seed, accs] : seeds) {
          double m = 0;
          for (double a : accs) m += a;
          per_seed.push_back(m / accs.size());
        }
        const ConfidenceInterval ci = confidence95(per_seed);
        groups.push_back(arch);
        s.x.push_back(static_cast<double>(groups.size()));
        s.y.push_back(ci.mean);
        s.ci_low.push_back(ci.lo);
        s.ci_high.push_back(ci.hi);
      }
      emit("accuracy_bars.svg",
           render_bar_chart({s}, groups, {"Final test accuracy", "architecture", "accuracy"}));
    } else {
      // needs cut info: join against attacks.csv when present, else cuts from config
      auto arows = read_csv(dir / "attacks.csv");
      SeriesBuilder b;
      if (arows.size() > 1) {
        for (std::size_t i = 1; i < arows.size(); ++i) {
          const auto& r = arows[i];
          b.add(r[0], std::stod(r[1]), std::stod(r[9]));
        }
      }
      emit("accuracy_vs_cut.svg",
           render_line_chart(b.build(), {"Accuracy vs cut", "cut index", "accuracy"}));
    }
  } else if (figure_kind == "resilience_vs_cut") {
    auto rows = read_csv(dir / "attacks.csv");
    SeriesBuilder b;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      b.add(r[0], std::stod(r[1]), std::stod(r[5]));
    }
    emit("resilience_vs_cut.svg",
         render_line_chart(b.build(), {"Attack resilience vs cut", "cut index", "tau"}));
  } else if (figure_kind == "resilience_vs_sweep") {
    auto rows = read_csv(dir / "attacks.csv");
    SeriesBuilder tau_b, acc_b;
    std::string key;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r[3].empty()) continue;
      key = r[3];
      tau_b.add(r[0], std::stod(r[4]), std::stod(r[5]));
      acc_b.add(r[0], std::stod(r[4]), std::stod(r[9]));
    }
    if (key.empty()) throw std::invalid_argument("plot: no sweep data in attacks.csv");
    emit("resilience_vs_sweep.svg",
         render_line_chart(tau_b.build(), {"Attack resilience vs " + key, key, "tau"}));
    emit("accuracy_vs_sweep.svg",
         render_line_chart(acc_b.build(), {"Accuracy vs " + key, key, "accuracy"}));
  } else {
    throw std::invalid_argument("plot: unknown figure kind '" + figure_kind + "'");
  }
  if (written.empty()) throw std::invalid_argument("plot: empty selection for " + figure_kind);
  return written;
}

}  // namespace splitbench
