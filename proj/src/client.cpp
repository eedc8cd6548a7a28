#include "client.hpp"

#include <numeric>
#include <stdexcept>

namespace fslstm {

LocalUpdate sensor_update(ClientState& client, const ModelParams& global,
                          const FederatedConfig& cfg, std::uint64_t stream_seed) {
  if (!client.dataset || client.dataset->train.empty())
    throw std::invalid_argument("sensor_update: client has no training data");
  if (cfg.batch_size == 0) throw std::invalid_argument("sensor_update: batch size is 0");

  params_load(client.model, global);

  const auto& train = client.dataset->train;
  const LossKind loss = loss_for(client.dataset->task);
  const std::size_t n = train.size();

  Rng rng(stream_seed);
  double loss_sum = 0.0;
  std::size_t loss_count = 0;

  // Caches for at most this many samples are held at once; larger batches
  // accumulate gradients over consecutive slices of this size.
  constexpr std::size_t kSlice = 64;

  std::vector<std::size_t> order(n);
  std::vector<Sample> batch;
  std::vector<ForwardCache> caches;

  auto slice_backward = [&](std::size_t off, std::size_t count) {
    batch.clear();
    caches.clear();
    batch.reserve(count);
    caches.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const Sample& s = train[order[off + i]];
      auto [pred, cache] = stacked_forward(client.model, s.window, true, rng);
      batch.push_back(s);
      caches.push_back(std::move(cache));
    }
    return backward(client.model, batch, loss, caches);
  };

  for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    for (std::size_t off = 0; off < n; off += cfg.batch_size) {
      const std::size_t bsz = std::min(cfg.batch_size, n - off);
      double batch_loss = 0.0;
      if (bsz <= kSlice) {
        auto [grads, l] = slice_backward(off, bsz);
        batch_loss = l;
        clip_gradients(grads, cfg.max_grad_norm);
        sgd_step_in_place(client.model, grads, cfg.learning_rate);
      } else {
        Gradients total;
        for (std::size_t s = 0; s < bsz; s += kSlice) {
          const std::size_t count = std::min(kSlice, bsz - s);
          auto [grads, l] = slice_backward(off + s, count);
          const double w = static_cast<double>(count) / static_cast<double>(bsz);
          batch_loss += w * l;
          if (s == 0) {
            total = std::move(grads);
            for (auto& t : total.tensors)
              for (double& v : t.values) v *= w;
          } else {
            for (std::size_t t = 0; t < total.tensors.size(); ++t) {
              auto& dst = total.tensors[t].values;
              const auto& src = grads.tensors[t].values;
              for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += w * src[i];
            }
          }
        }
        clip_gradients(total, cfg.max_grad_norm);
        sgd_step_in_place(client.model, total, cfg.learning_rate);
      }
      loss_sum += batch_loss * static_cast<double>(bsz);
      loss_count += bsz;
    }
  }

  const ModelParams local = params_flatten(client.model);
  LocalUpdate update;
  update.sensor_id = client.sensor_id;
  update.sample_count = n;
  update.train_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
  update.delta = local;
  for (std::size_t t = 0; t < update.delta.tensors.size(); ++t) {
    auto& dst = update.delta.tensors[t].values;
    const auto& base = global.tensors[t].values;
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = exact_delta(base[i], dst[i]);
  }
  return update;
}

EvalOutput client_evaluate(const ClientState& client, const ModelParams& global) {
  if (!client.dataset) throw std::invalid_argument("client_evaluate: no dataset");

  StackedModel model = client.model;
  params_load(model, global);

  const auto& test = client.dataset->test;
  EvalOutput out;
  out.sensor_id = client.sensor_id;
  out.scores.reserve(test.size());
  out.targets.reserve(test.size());

  Rng unused(0);  // eval mode draws nothing
  if (client.dataset->task == TaskKind::classification) {
    std::vector<int> labels;
    std::vector<Vector> probs;
    labels.reserve(test.size());
    probs.reserve(test.size());
    for (const Sample& s : test) {
      auto [pred, cache] = stacked_forward(model, s.window, false, unused);
      out.scores.push_back(pred[1]);  // P(anomalous)
      out.targets.push_back(s.target);
      labels.push_back(static_cast<int>(s.target));
      probs.push_back(pred);
    }
    out.loss = test.empty() ? 0.0 : cross_entropy(labels, probs);
  } else {
    Vector targets, preds;
    targets.reserve(test.size());
    preds.reserve(test.size());
    for (const Sample& s : test) {
      auto [pred, cache] = stacked_forward(model, s.window, false, unused);
      out.scores.push_back(pred[0]);
      out.targets.push_back(s.target);
      targets.push_back(s.target);
      preds.push_back(pred[0]);
    }
    out.loss = test.empty() ? 0.0 : mse(targets, preds);
  }
  return out;
}

}  // namespace fslstm
