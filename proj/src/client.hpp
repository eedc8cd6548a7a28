#pragma once

#include <memory>

#include "datagen.hpp"
#include "federated.hpp"
#include "training.hpp"

namespace fslstm {

// One sensor's private state: its dataset D_k and its local model copy w^k.
// Only sensor_update / client_evaluate ever read the dataset; the server side
// of the protocol cannot name this type.
struct ClientState {
  int sensor_id = -1;
  std::shared_ptr<const SensorDataset> dataset;
  StackedModel model;
};

inline LossKind loss_for(TaskKind task) {
  return task == TaskKind::classification ? LossKind::cross_entropy : LossKind::mse;
}

// Loads the broadcast global weights, runs E epochs of minibatch SGD
// (reshuffled each epoch, batch size B, last short batch kept) and returns the
// weight difference, the sample count and the mean train loss over the run.
//
// RNG order within the stream: each epoch draws one shuffle, then forward
// passes consume mask draws in batch order (none when dropout is 0).
LocalUpdate sensor_update(ClientState& client, const ModelParams& global,
                          const FederatedConfig& cfg, std::uint64_t stream_seed);

// Scores the global model on the client's held-out split; returns per-sample
// scores/targets and the local eval loss.
EvalOutput client_evaluate(const ClientState& client, const ModelParams& global);

// Adapter wiring a ClientState into the server-facing interface.
class SimClient final : public FederatedClient {
 public:
  SimClient(ClientState state, FederatedConfig cfg)
      : state_(std::move(state)), cfg_(std::move(cfg)) {}

  int sensor_id() const override { return state_.sensor_id; }
  std::size_t train_size() const override { return state_.dataset->train.size(); }

  LocalUpdate update(const ModelParams& global, std::uint64_t stream_seed) override {
    return sensor_update(state_, global, cfg_, stream_seed);
  }

  EvalOutput evaluate(const ModelParams& global) override {
    return client_evaluate(state_, global);
  }

  const ClientState& state() const { return state_; }

 private:
  ClientState state_;
  FederatedConfig cfg_;
};

}  // namespace fslstm
