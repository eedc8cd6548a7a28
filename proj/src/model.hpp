#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace fslstm {

enum class TaskKind { classification, regression };
enum class CellKind { lstm, gru };

// One training example: a T x F window and its target. The target is a class
// id (0/1) for classification and a real value for regression.
struct Sample {
  Matrix window;
  double target = 0.0;
};

struct LstmCellParams {
  Matrix W_i, W_f, W_g, W_o;  // input weights, hidden x input
  Matrix R_i, R_f, R_g, R_o;  // recurrent weights, hidden x hidden
  Vector b_i, b_f, b_g, b_o;  // biases, hidden

  std::size_t hidden_size() const { return R_i.rows; }
  std::size_t input_size() const { return W_i.cols; }
};

struct LstmState {
  Vector h;  // hidden state
  Vector c;  // cell state

  static LstmState zero(std::size_t hidden) {
    return {Vector(hidden, 0.0), Vector(hidden, 0.0)};
  }
};

// Update/reset/candidate gates; h' = z .* h_prev + (1 - z) .* n with
// n = tanh(W_n x + R_n (r .* h_prev) + b_n).
struct GruCellParams {
  Matrix W_z, W_r, W_n;
  Matrix R_z, R_r, R_n;
  Vector b_z, b_r, b_n;

  std::size_t hidden_size() const { return R_z.rows; }
  std::size_t input_size() const { return W_z.cols; }
};

struct FcHeadParams {
  Matrix W;  // out x in
  Vector b;  // out
};

// Per-step values retained for backpropagation through time.
struct GateCache {
  Vector x;              // layer input at this step
  Vector h_prev_masked;  // recurrent input actually used (dropout applied)
  Vector c_prev;
  Vector i, f, g, o, c;
};

struct GruGateCache {
  Vector x;
  Vector h_prev;         // carried state (unmasked)
  Vector h_prev_masked;  // recurrent input into the gate products
  Vector z, r, n;
};

// Recurrent model with 0..n cell layers and an FC head. Zero layers is the
// logistic-regression baseline operating on the flattened window.
struct StackedModel {
  CellKind cell = CellKind::lstm;
  TaskKind task = TaskKind::classification;
  double dropout_rate = 0.0;
  std::vector<LstmCellParams> lstm_layers;
  std::vector<GruCellParams> gru_layers;
  FcHeadParams head;

  std::size_t num_layers() const {
    return cell == CellKind::lstm ? lstm_layers.size() : gru_layers.size();
  }
  std::size_t hidden_size() const;
  // Per-step feature count F; for the 0-layer model this is the flattened
  // window length T*F.
  std::size_t input_size() const;
  std::size_t output_size() const { return head.W.rows; }
};

// Everything a backward pass needs from one window's forward pass.
struct ForwardCache {
  std::vector<Vector> recurrent_mask;              // [layer]; empty = no dropout
  std::vector<std::vector<GateCache>> lstm_steps;  // [layer][t]
  std::vector<std::vector<GruGateCache>> gru_steps;
  std::vector<std::vector<Vector>> h_raw;     // [layer][t] hidden output pre-ReLU
  std::vector<std::vector<Vector>> out_mask;  // [layer][t]; empty = identity
  std::vector<std::vector<Vector>> layer_out;  // [layer][t] dropout(relu(h))
  Vector head_in;  // vector consumed by the FC head
  Vector logits;
  Vector prediction;
};

std::pair<LstmState, GateCache> lstm_cell_forward(const LstmCellParams& p,
                                                  const Vector& x,
                                                  const LstmState& prev,
                                                  const Vector* recurrent_mask = nullptr);

std::pair<Vector, GruGateCache> gru_cell_forward(const GruCellParams& p, const Vector& x,
                                                 const Vector& h_prev,
                                                 const Vector* recurrent_mask = nullptr);

// Runs the full stack over a T x F window: every cell layer's output sequence
// is ReLU-activated and (in train mode) dropout-masked before feeding the next
// layer; the head consumes the top layer's last-step output, with softmax for
// classification and identity for regression. Recurrent dropout uses one mask
// per layer per sequence on the gate inputs.
std::pair<Vector, ForwardCache> stacked_forward(const StackedModel& m,
                                                const Matrix& window, bool train_mode,
                                                Rng& rng);

Vector logistic_forward(const FcHeadParams& head, const Vector& x, TaskKind task);

// Flat, manifest-ordered view of every learnable tensor. Name and shape order
// is identical across all clients and the server for a given architecture.
struct NamedTensor {
  std::string name;
  std::vector<std::size_t> shape;  // {rows, cols} or {len}
  std::vector<double> values;
};

struct ModelParams {
  std::vector<NamedTensor> tensors;

  std::size_t value_count() const;
  bool same_manifest(const ModelParams& o) const;
};

using Gradients = ModelParams;

ModelParams params_flatten(const StackedModel& m);
// Errors name the first offending tensor on any name/shape mismatch.
void params_load(StackedModel& m, const ModelParams& p);

// Shape clone with all parameters zeroed (gradient accumulators).
StackedModel zeros_like(const StackedModel& m);

// Visits tensors in manifest order. The mutable overload is what flatten,
// load and the in-place SGD step are built on.
void for_each_tensor(StackedModel& m,
                     const std::function<void(const std::string&,
                                              const std::vector<std::size_t>&, double*,
                                              std::size_t)>& fn);
void for_each_tensor(const StackedModel& m,
                     const std::function<void(const std::string&,
                                              const std::vector<std::size_t>&,
                                              const double*, std::size_t)>& fn);

// Builders. Weights are drawn uniform in [-1/sqrt(hidden), +1/sqrt(hidden)]
// (head: fan-in), biases zero except the LSTM forget bias which starts at 1.
StackedModel make_stacked_lstm(std::size_t layers, std::size_t input_dim,
                               std::size_t hidden, std::size_t out_dim, TaskKind task,
                               double dropout_rate, Rng& rng);
StackedModel make_stacked_gru(std::size_t layers, std::size_t input_dim,
                              std::size_t hidden, std::size_t out_dim, TaskKind task,
                              double dropout_rate, Rng& rng);
StackedModel make_logistic(std::size_t input_dim, std::size_t out_dim, TaskKind task,
                           Rng& rng);

}  // namespace fslstm
