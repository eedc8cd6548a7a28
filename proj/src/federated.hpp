#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "model.hpp"
#include "rng.hpp"

namespace fslstm {

struct FederatedConfig {
  std::size_t clients = 1;       // K
  std::size_t rounds = 1;        // R
  std::size_t per_round = 1;     // m, sensors aggregated per round
  std::size_t local_epochs = 1;  // E
  std::size_t batch_size = 32;   // B
  double learning_rate = 0.001;  // eta
  std::size_t window = 32;       // T
  std::uint64_t seed = 0;
  std::size_t workers = 1;             // client updates run on up to this many threads
  double early_stop_tol = 1e-5;        // minimum eval-loss improvement
  std::size_t early_stop_patience = 10;  // consecutive stale rounds; 0 disables
  double eval_threshold = 0.5;
  double max_grad_norm = 0.0;  // optional max-norm gradient safeguard; 0 disables
  bool keep_round_params = false;  // retain the per-round global parameters
};

// What a sensor returns after local training: the weight difference against
// the broadcast global model, its sample count and its mean train loss.
struct LocalUpdate {
  int sensor_id = -1;
  ModelParams delta;
  std::size_t sample_count = 0;
  double train_loss = 0.0;
};

// Client-side evaluation of a global model on the client's held-out data.
// Only model outputs and targets cross back to the server.
struct EvalOutput {
  int sensor_id = -1;
  std::vector<double> scores;   // P(anomalous) or predicted value, per sample
  std::vector<double> targets;  // labels or regression targets
  double loss = 0.0;            // local eval loss
};

struct RoundMetrics {
  // classification, pooled over all sensors' held-out samples
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  double balanced_accuracy = std::numeric_limits<double>::quiet_NaN();
  double auc = std::numeric_limits<double>::quiet_NaN();
  // per-task means
  double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
  // regression
  double mae = 0.0, macro_mae = 0.0;
};

struct RoundReport {
  std::size_t round = 0;  // 1-based
  std::vector<int> participants;
  double train_loss = 0.0;  // sample-weighted over participants
  double eval_loss = 0.0;   // mean of per-sensor eval losses
  RoundMetrics metrics;
  double duration_ms = 0.0;  // simulated-parallel: max client time + server work
  double cpu_ms = 0.0;       // summed client + server work
};

// The entire surface the server is allowed to talk to. Implementations own
// their private data; nothing but parameters, updates and predictions crosses.
class FederatedClient {
 public:
  virtual ~FederatedClient() = default;
  virtual int sensor_id() const = 0;
  virtual std::size_t train_size() const = 0;
  virtual LocalUpdate update(const ModelParams& global, std::uint64_t stream_seed) = 0;
  virtual EvalOutput evaluate(const ModelParams& global) = 0;
};

// Deterministic per-(round, sensor) rng streams; part of the reproducibility
// contract so a run can be replayed piecewise.
inline std::uint64_t client_stream_seed(std::uint64_t seed, std::size_t round,
                                        int sensor_id) {
  return derive_seed(seed, round, static_cast<std::uint64_t>(sensor_id));
}
inline std::uint64_t selection_stream_seed(std::uint64_t seed, std::size_t round) {
  return derive_seed(seed, round, 0xffffffffffffffffull);
}

// Representable difference whose reconstruction base + delta round-trips to
// the trained weight bitwise, so aggregating a single participant returns its
// weights exactly. Holds whenever the difference is no coarser-grained than
// the target (always the case for training-scale updates); a pathological
// magnitude gap falls back to the nearest representable difference.
inline double exact_delta(double base, double target) {
  double d = target - base;
  if (base + d == target) return d;
  const double up = std::nextafter(d, std::numeric_limits<double>::infinity());
  if (base + up == target) return up;
  const double dn = std::nextafter(d, -std::numeric_limits<double>::infinity());
  if (base + dn == target) return dn;
  return d;
}

// Uniform sample of m sensor ids out of 0..k-1, without replacement,
// returned in ascending order.
std::vector<int> select_subset(Rng& rng, std::size_t k, std::size_t m);

// Sample-weighted average of participants' post-training weights
// sum_k (n_k / sum n) * (global + delta_k), reduced in ascending sensor_id
// order so the result is independent of arrival order and worker count.
ModelParams aggregate(const std::vector<LocalUpdate>& updates,
                      const ModelParams& global);

// y_hat^1 ++ ... ++ y_hat^K in the given (ascending sensor id) order.
Vector concat_predictions(const std::vector<Vector>& per_sensor);

RoundMetrics pooled_metrics(TaskKind task, const std::vector<EvalOutput>& outputs,
                            double threshold);

struct FederatedRun {
  ModelParams final_params;
  std::vector<RoundReport> reports;
  std::vector<ModelParams> round_params;  // filled when keep_round_params
};

using RoundSink = std::function<void(const RoundReport&, const ModelParams&)>;

// Algorithm: for each round select a subset, broadcast the global model,
// collect local updates (possibly in parallel), aggregate, evaluate on every
// client's held-out data, and stop early once the eval loss stalls.
FederatedRun run_federated(const FederatedConfig& cfg,
                           std::span<FederatedClient* const> clients, TaskKind task,
                           const ModelParams& initial, const RoundSink& on_round = {});

}  // namespace fslstm
