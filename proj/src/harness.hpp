#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "client.hpp"
#include "datagen.hpp"
#include "federated.hpp"

namespace fslstm {

enum class ModelVariant { lr, lstm, flr, fgru, flstm1, flstm2, fslstm };

const char* variant_name(ModelVariant v);
ModelVariant variant_from_name(const std::string& name);
bool variant_is_centralized(ModelVariant v);
std::size_t variant_layers(ModelVariant v);  // 0 for the linear models

struct ExperimentConfig {
  std::string preset = "desk";  // desk | paper
  ModelVariant variant = ModelVariant::fslstm;
  TaskKind task = TaskKind::classification;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::string data_dir;  // when set, events/weather are loaded instead of generated

  GeneratorConfig generator;
  FederatedConfig federated;  // per_round == 0 means full participation

  std::size_t hidden = 16;
  double dropout = 0.2;
  std::size_t max_windows_per_sensor = 0;
  double convergence_band = 0.01;  // "within 1% of the final plateau"
  bool write_checkpoints = true;
};

ExperimentConfig preset_config(const std::string& name);

// JSON round trip; from-JSON starts from the named preset and applies
// overrides, rejecting unknown keys.
nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

// All problems at once; empty means valid.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

struct RunArtifact {
  ExperimentConfig config;
  std::vector<RoundReport> rounds;
  RoundMetrics final_metrics;
  double final_eval_loss = 0.0;
  std::size_t rounds_executed = 0;
  std::size_t convergence_round = 0;       // 1-based; rounds_executed if never in band
  double convergence_parallel_ms = 0.0;    // simulated-parallel time through that round
  double total_parallel_ms = 0.0;
  double total_cpu_ms = 0.0;
  ModelParams final_params;
};

// First round whose eval loss is within `band` (relative) of the mean of the
// last up-to-10 rounds.
std::size_t convergence_round(const std::vector<double>& eval_losses, double band);

// Generates (or loads) the data, builds per-sensor datasets, partitions them
// across clients, trains per the config and writes the run artifacts
// (config.json, rounds.jsonl, curve.csv, metrics.json, final_params.bin,
// roc_points.csv for classification, checkpoints/ when enabled).
RunArtifact run_experiment(const ExperimentConfig& cfg);

// Writes events.csv, weather.csv, energy.csv and dataset_manifest.json (config
// echo, derived seed, record counts, per-sensor window/split boundaries for
// the config's task and window length) into out_dir.
void generate_dataset_files(const ExperimentConfig& cfg, const std::string& out_dir);

// Same, on pre-built datasets (no generation step, no dataset files).
RunArtifact run_experiment_on(const ExperimentConfig& cfg,
                              const std::vector<SensorDataset>& datasets);

struct ComparisonRow {
  std::string variant;
  double precision = 0, recall = 0, f1 = 0, balanced_accuracy = 0;
  double mae = 0;
};

struct ComparisonTable {
  std::vector<ComparisonRow> rows;
  // column -> variant with the best value
  std::string best_precision, best_recall, best_f1, best_balanced_accuracy, best_mae;
};

// One row per variant: classification metrics plus regression MAE, both tasks
// run on the same generated data and seed. Writes comparison.csv and
// comparison.json under cfg.out_dir.
ComparisonTable compare_models(const ExperimentConfig& base,
                               const std::vector<ModelVariant>& variants);

ComparisonTable comparison_from_csv(const std::string& path);

struct ConvergenceRecord {
  std::size_t clients = 0;
  std::string variant;
  std::size_t rounds_to_convergence = 0;
  double convergence_time_ms = 0.0;  // simulated-parallel
  std::size_t rounds_executed = 0;
  double final_eval_loss = 0.0;
};

// Re-partitions the same generated data across each K and trains each variant,
// recording rounds- and simulated-time-to-convergence. Writes convergence.csv.
std::vector<ConvergenceRecord> convergence_study(const ExperimentConfig& base,
                                                 const std::vector<std::size_t>& k_values,
                                                 const std::vector<ModelVariant>& variants);

// Plot-ready per-timestep trace of a trained model over the start of a
// dataset's held-out span: (timestamp, actual, predicted) for regression,
// (timestamp, reading, anomaly score, label) for classification. Horizon is
// the number of rows; it must not exceed the held-out size.
void emit_trace(const StackedModel& model, const SensorDataset& dataset,
                std::size_t horizon, const std::string& path);

// Trains per the config, then writes trace.csv for the given sensor dataset
// (default: first). Returns the trace path.
std::string run_trace(const ExperimentConfig& cfg, std::size_t horizon,
                      std::optional<int> sensor_id = std::nullopt);

// Model/dataset plumbing shared with tests.
StackedModel build_model(const ExperimentConfig& cfg, std::size_t feature_count);
std::vector<ClientState> partition_clients(const ExperimentConfig& cfg,
                                           const std::vector<SensorDataset>& datasets,
                                           StackedModel const& model);

}  // namespace fslstm
