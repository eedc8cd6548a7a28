#pragma once

#include <span>
#include <utility>
#include <vector>

#include "model.hpp"

namespace fslstm {

enum class LossKind { cross_entropy, mse };

// Mean one-hot cross-entropy over a batch; probabilities are clamped to
// [1e-12, 1 - 1e-12] so the loss stays finite.
double cross_entropy(const std::vector<int>& y, const std::vector<Vector>& y_prob);

double mse(const Vector& y, const Vector& y_hat);

// Average of per-task losses.
double multitask_objective(const std::vector<double>& per_task_losses);

struct SgdConfig {
  double learning_rate = 0.001;
  std::size_t batch_size = 32;
  std::size_t epochs = 1;
};

// Exact analytic gradients of the mean batch loss w.r.t. every model tensor,
// by backpropagation through time over the caches produced by
// stacked_forward. Returns the gradients (manifest-ordered, congruent with
// params_flatten) and the batch loss.
std::pair<Gradients, double> backward(const StackedModel& m,
                                      std::span<const Sample> batch, LossKind loss,
                                      std::span<const ForwardCache> caches);

// p' = p - eta * g, elementwise.
ModelParams sgd_step(const ModelParams& p, const Gradients& g, double eta);

// Scales the gradient down when its global L2 norm exceeds max_norm;
// max_norm <= 0 leaves it untouched. Returns the pre-clip norm.
double clip_gradients(Gradients& g, double max_norm);

// Same update applied directly to the model tensors.
void sgd_step_in_place(StackedModel& m, const Gradients& g, double eta);

// Per-sample loss used by both backward and evaluation paths.
double sample_loss(const Vector& prediction, double target, LossKind loss);

}  // namespace fslstm
