#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "model.hpp"
#include "training.hpp"

using namespace fslstm;

namespace {

std::vector<Sample> random_batch(std::size_t n, std::size_t T, std::size_t F,
                                 TaskKind task, Rng& rng) {
  std::vector<Sample> batch(n);
  for (auto& s : batch) {
    s.window = Matrix(T, F);
    for (double& v : s.window.data) v = rng.uniform(-1.5, 1.5);
    s.target = task == TaskKind::classification ? static_cast<double>(rng.below(2))
                                                : rng.uniform(-1.0, 1.0);
  }
  return batch;
}

double batch_loss(const StackedModel& m, const std::vector<Sample>& batch,
                  LossKind loss, std::uint64_t forward_seed) {
  Rng rng(forward_seed);
  const bool train_mode = m.dropout_rate > 0.0;
  double total = 0.0;
  for (const auto& s : batch) {
    auto [pred, cache] = stacked_forward(m, s.window, train_mode, rng);
    total += sample_loss(pred, s.target, loss);
  }
  return total / static_cast<double>(batch.size());
}

// Finite differences are only valid away from the ReLU kinks: a hidden unit
// within the step-sized neighborhood of zero makes the two-sided quotient
// disagree with the subgradient by O(1). Probe batches must clear it.
bool batch_clears_relu_kinks(const StackedModel& m, const std::vector<Sample>& batch,
                             std::uint64_t forward_seed, double margin = 1e-3) {
  Rng rng(forward_seed);
  const bool train_mode = m.dropout_rate > 0.0;
  for (const auto& s : batch) {
    auto [pred, cache] = stacked_forward(m, s.window, train_mode, rng);
    for (const auto& layer : cache.h_raw)
      for (const auto& h : layer)
        for (double v : h)
          if (std::fabs(v) < margin) return false;
  }
  return true;
}

std::vector<Sample> smooth_batch(const StackedModel& m, std::size_t n, std::size_t T,
                                 std::size_t F, TaskKind task, Rng& rng,
                                 std::uint64_t forward_seed = 97) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    auto batch = random_batch(n, T, F, task, rng);
    if (batch_clears_relu_kinks(m, batch, forward_seed)) return batch;
  }
  throw std::runtime_error("no kink-free probe batch found");
}

// central finite differences over every parameter coordinate; the forward rng
// is reseeded per evaluation so dropout masks are held fixed
double max_relative_gradient_error(StackedModel m, const std::vector<Sample>& batch,
                                   LossKind loss, double step = 1e-5,
                                   std::uint64_t forward_seed = 97) {
  Rng rng(forward_seed);
  const bool train_mode = m.dropout_rate > 0.0;
  std::vector<ForwardCache> caches;
  caches.reserve(batch.size());
  for (const auto& s : batch) {
    auto [pred, cache] = stacked_forward(m, s.window, train_mode, rng);
    caches.push_back(std::move(cache));
  }
  auto [grads, loss_value] = backward(m, batch, loss, caches);
  (void)loss_value;

  double worst = 0.0;
  std::size_t tensor_idx = 0;
  for_each_tensor(m, [&](const std::string&, const std::vector<std::size_t>&,
                         double* data, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) {
      const double saved = data[i];
      data[i] = saved + step;
      const double up = batch_loss(m, batch, loss, forward_seed);
      data[i] = saved - step;
      const double down = batch_loss(m, batch, loss, forward_seed);
      data[i] = saved;
      const double fd = (up - down) / (2.0 * step);
      const double an = grads.tensors[tensor_idx].values[i];
      const double err = std::fabs(fd - an) / std::max({std::fabs(fd), std::fabs(an), 1e-6});
      worst = std::max(worst, err);
    }
    ++tensor_idx;
  });
  return worst;
}

}  // namespace

TEST_CASE("cross entropy examples") {
  CHECK(cross_entropy({1}, {{0.0, 1.0}}) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(cross_entropy({1}, {{0.5, 0.5}}) == doctest::Approx(std::log(2.0)));

  // batch of 4 vs per-sample loop
  const std::vector<int> y = {1, 0, 1, 0};
  const std::vector<Vector> probs = {
      {0.2, 0.8}, {0.6, 0.4}, {0.45, 0.55}, {0.9, 0.1}};
  double want = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i)
    want += -std::log(probs[i][static_cast<std::size_t>(y[i])]);
  want /= 4.0;
  CHECK(cross_entropy(y, probs) == doctest::Approx(want).epsilon(1e-12));

  CHECK(cross_entropy({1}, {{1.0, 0.0}}) <= -std::log(1e-12) + 1e-9);  // clamped
  CHECK_THROWS_AS(cross_entropy({1, 0}, {{0.5, 0.5}}), std::invalid_argument);
}

TEST_CASE("mse examples") {
  CHECK(mse({1.0, 2.0}, {1.0, 2.0}) == 0.0);
  CHECK(mse({0.0, 0.0}, {1.0, -1.0}) == doctest::Approx(1.0));

  Rng rng(5);
  Vector y(100), yh(100);
  for (std::size_t i = 0; i < 100; ++i) {
    y[i] = rng.uniform(-3, 3);
    yh[i] = rng.uniform(-3, 3);
  }
  double want = 0.0;
  for (std::size_t i = 0; i < 100; ++i) want += (y[i] - yh[i]) * (y[i] - yh[i]);
  want /= 100.0;
  CHECK(mse(y, yh) == doctest::Approx(want).epsilon(1e-12));
  CHECK_THROWS_AS(mse({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("multitask objective") {
  CHECK(multitask_objective({2.0}) == 2.0);
  CHECK(multitask_objective({1.0, 2.0, 3.0}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(multitask_objective({}), std::invalid_argument);

  Rng rng(8);
  std::vector<double> losses(5);
  for (double& l : losses) l = rng.uniform(0, 4);
  double want = 0.0;
  for (double l : losses) want += l;
  want /= 5.0;
  CHECK(multitask_objective(losses) == doctest::Approx(want).epsilon(1e-12));

  // permutation invariance
  std::vector<double> shuffled = {losses[3], losses[0], losses[4], losses[1], losses[2]};
  CHECK(multitask_objective(shuffled) ==
        doctest::Approx(multitask_objective(losses)).epsilon(1e-12));
}

TEST_CASE("losses are non-negative") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    Vector y(10), yh(10);
    std::vector<int> labels(10);
    std::vector<Vector> probs(10);
    for (std::size_t i = 0; i < 10; ++i) {
      y[i] = rng.uniform(-2, 2);
      yh[i] = rng.uniform(-2, 2);
      labels[i] = static_cast<int>(rng.below(2));
      const double p = rng.uniform(0.0, 1.0);
      probs[i] = {1.0 - p, p};
    }
    CHECK(mse(y, yh) >= 0.0);
    CHECK(cross_entropy(labels, probs) >= 0.0);
  }
}

TEST_CASE("sgd_step examples") {
  Rng rng(31);
  StackedModel m = make_stacked_lstm(1, 2, 3, 2, TaskKind::classification, 0.0, rng);
  const ModelParams p = params_flatten(m);

  Gradients zero = p;
  for (auto& t : zero.tensors) std::fill(t.values.begin(), t.values.end(), 0.0);
  const ModelParams same = sgd_step(p, zero, 0.7);
  for (std::size_t t = 0; t < p.tensors.size(); ++t)
    CHECK(same.tensors[t].values == p.tensors[t].values);

  ModelParams one = p;
  Gradients g = p;
  for (auto& t : one.tensors) std::fill(t.values.begin(), t.values.end(), 1.0);
  for (auto& t : g.tensors) std::fill(t.values.begin(), t.values.end(), 2.0);
  const ModelParams stepped = sgd_step(one, g, 0.5);
  for (const auto& t : stepped.tensors)
    for (double v : t.values) CHECK(v == doctest::Approx(0.0));

  // random tensors vs elementwise loop
  Rng r2(32);
  Gradients rg = p;
  for (auto& t : rg.tensors)
    for (double& v : t.values) v = r2.uniform(-1, 1);
  const double eta = 0.123;
  const ModelParams out = sgd_step(p, rg, eta);
  for (std::size_t t = 0; t < p.tensors.size(); ++t)
    for (std::size_t i = 0; i < p.tensors[t].values.size(); ++i)
      CHECK(out.tensors[t].values[i] ==
            doctest::Approx(p.tensors[t].values[i] - eta * rg.tensors[t].values[i])
                .epsilon(1e-15));

  // in-place variant agrees bitwise
  StackedModel m2 = m;
  sgd_step_in_place(m2, rg, eta);
  const ModelParams inplace = params_flatten(m2);
  for (std::size_t t = 0; t < out.tensors.size(); ++t)
    CHECK(inplace.tensors[t].values == out.tensors[t].values);
}

TEST_CASE("backward: zero gradient when regression prediction equals target") {
  Rng rng(41);
  StackedModel m = make_stacked_lstm(1, 2, 3, 1, TaskKind::regression, 0.0, rng);
  Sample s;
  s.window = Matrix(2, 2);
  for (double& v : s.window.data) v = rng.uniform(-1, 1);
  Rng fr(0);
  auto [pred, cache] = stacked_forward(m, s.window, false, fr);
  s.target = pred[0];  // already perfect
  std::vector<Sample> batch = {s};
  std::vector<ForwardCache> caches = {cache};
  auto [grads, loss] = backward(m, batch, LossKind::mse, caches);
  CHECK(loss == doctest::Approx(0.0));
  for (const auto& t : grads.tensors)
    for (double v : t.values) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("gradients match finite differences: lstm depths, both losses") {
  Rng rng(51);
  for (std::size_t layers : {1u, 2u, 3u}) {
    {
      Rng init(100 + layers);
      StackedModel m =
          make_stacked_lstm(layers, 2, 4, 2, TaskKind::classification, 0.0, init);
      const auto batch = smooth_batch(m, 3, 3, 2, TaskKind::classification, rng);
      CHECK(max_relative_gradient_error(m, batch, LossKind::cross_entropy) < 1e-4);
    }
    {
      Rng init(200 + layers);
      StackedModel m = make_stacked_lstm(layers, 2, 4, 1, TaskKind::regression, 0.0, init);
      const auto batch = smooth_batch(m, 3, 3, 2, TaskKind::regression, rng);
      CHECK(max_relative_gradient_error(m, batch, LossKind::mse) < 1e-4);
    }
  }
}

TEST_CASE("gradients match finite differences: gru and logistic") {
  Rng rng(61);
  {
    Rng init(300);
    StackedModel m = make_stacked_gru(1, 2, 4, 2, TaskKind::classification, 0.0, init);
    const auto batch = smooth_batch(m, 3, 3, 2, TaskKind::classification, rng);
    CHECK(max_relative_gradient_error(m, batch, LossKind::cross_entropy) < 1e-4);
  }
  {
    Rng init(301);
    StackedModel m = make_stacked_gru(2, 2, 4, 1, TaskKind::regression, 0.0, init);
    const auto batch = smooth_batch(m, 3, 3, 2, TaskKind::regression, rng);
    CHECK(max_relative_gradient_error(m, batch, LossKind::mse) < 1e-4);
  }
  {
    Rng init(302);
    StackedModel m = make_logistic(6, 2, TaskKind::classification, init);  // T*F = 6
    const auto batch = random_batch(4, 3, 2, TaskKind::classification, rng);
    CHECK(max_relative_gradient_error(m, batch, LossKind::cross_entropy) < 1e-4);
  }
}

TEST_CASE("gradients match finite differences with active dropout masks") {
  Rng rng(71);
  Rng init(400);
  StackedModel m = make_stacked_lstm(2, 2, 4, 2, TaskKind::classification, 0.3, init);
  const auto batch = smooth_batch(m, 2, 3, 2, TaskKind::classification, rng);
  CHECK(max_relative_gradient_error(m, batch, LossKind::cross_entropy) < 1e-4);
}

TEST_CASE("backward is deterministic given seeded dropout") {
  Rng init(500);
  StackedModel m = make_stacked_lstm(2, 2, 4, 2, TaskKind::classification, 0.25, init);
  Rng bygen(42);
  const auto batch = random_batch(4, 3, 2, TaskKind::classification, bygen);

  auto run = [&]() {
    Rng fr(91);
    std::vector<ForwardCache> caches;
    for (const auto& s : batch) {
      auto [pred, cache] = stacked_forward(m, s.window, true, fr);
      caches.push_back(std::move(cache));
    }
    return backward(m, batch, LossKind::cross_entropy, caches);
  };
  auto [g1, l1] = run();
  auto [g2, l2] = run();
  CHECK(l1 == l2);
  for (std::size_t t = 0; t < g1.tensors.size(); ++t)
    CHECK(g1.tensors[t].values == g2.tensors[t].values);
}

TEST_CASE("one small sgd step does not increase the batch loss") {
  Rng rng(81);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    Rng init(600 + trial);
    StackedModel m = make_stacked_lstm(1, 2, 4, 2, TaskKind::classification, 0.0, init);
    const auto batch = random_batch(4, 3, 2, TaskKind::classification, rng);

    Rng fr(0);
    std::vector<ForwardCache> caches;
    for (const auto& s : batch) {
      auto [pred, cache] = stacked_forward(m, s.window, false, fr);
      caches.push_back(std::move(cache));
    }
    auto [grads, before] = backward(m, batch, LossKind::cross_entropy, caches);
    sgd_step_in_place(m, grads, 1e-4);
    const double after = batch_loss(m, batch, LossKind::cross_entropy, 0);
    CHECK(after <= before + 1e-12);
    ++checked;
  }
  CHECK(checked == 20);
}

TEST_CASE("backward validates loss/task pairing and cache count") {
  Rng init(700);
  StackedModel m = make_stacked_lstm(1, 2, 3, 2, TaskKind::classification, 0.0, init);
  Rng bgen(1);
  const auto batch = random_batch(2, 2, 2, TaskKind::classification, bgen);
  std::vector<ForwardCache> caches(1);
  CHECK_THROWS_AS(backward(m, batch, LossKind::cross_entropy, caches),
                  std::invalid_argument);
  CHECK_THROWS_AS(backward(m, batch, LossKind::mse, caches), std::invalid_argument);
}
