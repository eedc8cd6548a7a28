#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "model.hpp"

using namespace fslstm;

namespace {

LstmCellParams zero_lstm_cell(std::size_t hidden, std::size_t input) {
  LstmCellParams p;
  for (Matrix* w : {&p.W_i, &p.W_f, &p.W_g, &p.W_o}) *w = Matrix(hidden, input);
  for (Matrix* r : {&p.R_i, &p.R_f, &p.R_g, &p.R_o}) *r = Matrix(hidden, hidden);
  for (Vector* b : {&p.b_i, &p.b_f, &p.b_g, &p.b_o}) b->assign(hidden, 0.0);
  return p;
}

// independent transcription of the cell update, scalar loops only
void lstm_step_oracle(const LstmCellParams& p, const Vector& x, const Vector& h_prev,
                      const Vector& c_prev, Vector& h_out, Vector& c_out) {
  const std::size_t H = p.hidden_size();
  auto gate = [&](const Matrix& W, const Matrix& R, const Vector& b, std::size_t j) {
    double a = b[j];
    for (std::size_t k = 0; k < x.size(); ++k) a += W(j, k) * x[k];
    for (std::size_t k = 0; k < H; ++k) a += R(j, k) * h_prev[k];
    return a;
  };
  h_out.resize(H);
  c_out.resize(H);
  for (std::size_t j = 0; j < H; ++j) {
    const double i = 1.0 / (1.0 + std::exp(-gate(p.W_i, p.R_i, p.b_i, j)));
    const double f = 1.0 / (1.0 + std::exp(-gate(p.W_f, p.R_f, p.b_f, j)));
    const double g = std::tanh(gate(p.W_g, p.R_g, p.b_g, j));
    const double o = 1.0 / (1.0 + std::exp(-gate(p.W_o, p.R_o, p.b_o, j)));
    c_out[j] = f * c_prev[j] + i * g;
    h_out[j] = o * std::tanh(c_out[j]);
  }
}

StackedModel tiny_model(std::uint64_t seed, std::size_t layers = 1,
                        TaskKind task = TaskKind::classification,
                        double dropout = 0.0) {
  Rng rng(seed);
  return make_stacked_lstm(layers, 2, 3, task == TaskKind::classification ? 2 : 1, task,
                           dropout, rng);
}

Matrix random_window(std::size_t T, std::size_t F, Rng& rng) {
  Matrix w(T, F);
  for (double& v : w.data) v = rng.uniform(-1.5, 1.5);
  return w;
}

}  // namespace

TEST_CASE("lstm cell: zero parameters, zero state") {
  const LstmCellParams p = zero_lstm_cell(2, 3);
  auto [state, gates] = lstm_cell_forward(p, {0.3, -0.7, 1.1}, LstmState::zero(2));
  for (std::size_t j = 0; j < 2; ++j) {
    CHECK(gates.i[j] == doctest::Approx(0.5));
    CHECK(gates.f[j] == doctest::Approx(0.5));
    CHECK(gates.o[j] == doctest::Approx(0.5));
    CHECK(gates.g[j] == doctest::Approx(0.0));
    CHECK(state.c[j] == doctest::Approx(0.0));
    CHECK(state.h[j] == doctest::Approx(0.0));
  }
}

TEST_CASE("lstm cell: zero parameters, carried cell state") {
  const LstmCellParams p = zero_lstm_cell(1, 1);
  LstmState prev{{0.0}, {2.0}};
  auto [state, gates] = lstm_cell_forward(p, {0.0}, prev);
  CHECK(state.c[0] == doctest::Approx(1.0));
  CHECK(state.h[0] == doctest::Approx(0.5 * std::tanh(1.0)));
  CHECK(state.h[0] == doctest::Approx(0.38079707797788).epsilon(1e-10));
}

TEST_CASE("lstm cell matches independent single-step oracle") {
  Rng rng(17);
  StackedModel m = tiny_model(17);
  const LstmCellParams& p = m.lstm_layers[0];
  for (int trial = 0; trial < 10; ++trial) {
    Vector x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    LstmState prev{{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)},
                   {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)}};
    auto [state, gates] = lstm_cell_forward(p, x, prev);
    Vector h_want, c_want;
    lstm_step_oracle(p, x, prev.h, prev.c, h_want, c_want);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(state.h[j] == doctest::Approx(h_want[j]).epsilon(1e-12));
      CHECK(state.c[j] == doctest::Approx(c_want[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("lstm cell rejects dimension mismatches") {
  const LstmCellParams p = zero_lstm_cell(2, 3);
  CHECK_THROWS_AS(lstm_cell_forward(p, {1.0}, LstmState::zero(2)),
                  std::invalid_argument);
  CHECK_THROWS_AS(lstm_cell_forward(p, {1.0, 2.0, 3.0}, LstmState::zero(5)),
                  std::invalid_argument);
}

TEST_CASE("gate ranges hold for random inputs") {
  Rng rng(23);
  StackedModel m = tiny_model(23);
  const LstmCellParams& p = m.lstm_layers[0];
  for (int trial = 0; trial < 50; ++trial) {
    Vector x = {rng.uniform(-10, 10), rng.uniform(-10, 10)};
    LstmState prev{{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)},
                   {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)}};
    auto [state, gates] = lstm_cell_forward(p, x, prev);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(gates.i[j] > 0.0);
      CHECK(gates.i[j] < 1.0);
      CHECK(gates.f[j] > 0.0);
      CHECK(gates.f[j] < 1.0);
      CHECK(gates.o[j] > 0.0);
      CHECK(gates.o[j] < 1.0);
      CHECK(gates.g[j] > -1.0);
      CHECK(gates.g[j] < 1.0);
      // h = o * tanh(c) stays inside (-1, 1)
      CHECK(state.h[j] > -1.0);
      CHECK(state.h[j] < 1.0);
    }
  }
}

TEST_CASE("zero-initialized classification model predicts [0.5, 0.5]") {
  StackedModel m = tiny_model(1);
  for_each_tensor(m, [](const std::string&, const std::vector<std::size_t>&,
                        double* data, std::size_t len) {
    std::fill(data, data + len, 0.0);
  });
  Rng rng(0);
  Matrix window(4, 2);
  window(0, 0) = 0.4;
  window(3, 1) = -1.0;
  auto [pred, cache] = stacked_forward(m, window, false, rng);
  CHECK(pred[0] == doctest::Approx(0.5));
  CHECK(pred[1] == doctest::Approx(0.5));
}

TEST_CASE("T=1 single-layer stacked forward equals manual composition") {
  StackedModel m = tiny_model(31);
  Rng rng(0);
  Matrix window(1, 2);
  window(0, 0) = 0.7;
  window(0, 1) = -0.2;
  auto [pred, cache] = stacked_forward(m, window, false, rng);

  auto [state, gates] = lstm_cell_forward(m.lstm_layers[0], window.row(0),
                                          LstmState::zero(3));
  const Vector head_in = relu(state.h);
  const Vector manual = logistic_forward(m.head, head_in, m.task);
  REQUIRE(pred.size() == manual.size());
  for (std::size_t i = 0; i < pred.size(); ++i) CHECK(pred[i] == manual[i]);
}

TEST_CASE("dropout_rate zero: train and eval modes agree exactly") {
  StackedModel m = tiny_model(41, 2);
  Rng rng1(5), rng2(6);
  Rng wrng(9);
  const Matrix window = random_window(5, 2, wrng);
  auto [train_pred, c1] = stacked_forward(m, window, true, rng1);
  auto [eval_pred, c2] = stacked_forward(m, window, false, rng2);
  REQUIRE(train_pred.size() == eval_pred.size());
  for (std::size_t i = 0; i < train_pred.size(); ++i)
    CHECK(train_pred[i] == eval_pred[i]);
}

TEST_CASE("forward determinism under identical seeds") {
  StackedModel m = tiny_model(51, 2, TaskKind::classification, 0.3);
  Rng wrng(13);
  const Matrix window = random_window(6, 2, wrng);
  Rng ra(77), rb(77);
  auto [pa, ca] = stacked_forward(m, window, true, ra);
  auto [pb, cb] = stacked_forward(m, window, true, rb);
  CHECK(pa == pb);
}

TEST_CASE("empty window rejected") {
  StackedModel m = tiny_model(61);
  Rng rng(0);
  CHECK_THROWS_AS(stacked_forward(m, Matrix(0, 2), false, rng), std::invalid_argument);
}

TEST_CASE("logistic_forward examples") {
  Rng rng(71);
  StackedModel lr = make_logistic(2, 2, TaskKind::classification, rng);
  for_each_tensor(lr, [](const std::string&, const std::vector<std::size_t>&,
                         double* data, std::size_t len) {
    std::fill(data, data + len, 0.0);
  });
  const Vector p = logistic_forward(lr.head, {3.0, -1.0}, TaskKind::classification);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));

  FcHeadParams head;
  head.W = Matrix(1, 2);
  head.W(0, 0) = 1.0;
  head.b = {0.0};
  const Vector logit = logistic_forward(head, {3.0, 7.0}, TaskKind::regression);
  CHECK(logit[0] == doctest::Approx(3.0));

  // random case vs hand-composed matmul + softmax
  Rng r2(73);
  StackedModel lr2 = make_logistic(3, 2, TaskKind::classification, r2);
  const Vector x = {0.2, -1.4, 0.9};
  const Vector got = logistic_forward(lr2.head, x, TaskKind::classification);
  Vector logits(2, 0.0);
  for (std::size_t i = 0; i < 2; ++i) {
    double acc = lr2.head.b[i];
    for (std::size_t j = 0; j < 3; ++j) acc += lr2.head.W(i, j) * x[j];
    logits[i] = acc;
  }
  const Vector want = softmax(logits);
  CHECK(got[0] == doctest::Approx(want[0]).epsilon(1e-12));
  CHECK(got[1] == doctest::Approx(want[1]).epsilon(1e-12));

  CHECK_THROWS_AS(logistic_forward(head, {1.0, 2.0, 3.0}, TaskKind::regression),
                  std::invalid_argument);
}

TEST_CASE("params flatten/load round trip is bitwise") {
  StackedModel m = tiny_model(81, 3);
  const ModelParams p = params_flatten(m);
  StackedModel m2 = tiny_model(82, 3);  // different weights, same shapes
  params_load(m2, p);
  const ModelParams p2 = params_flatten(m2);
  REQUIRE(p.tensors.size() == p2.tensors.size());
  for (std::size_t t = 0; t < p.tensors.size(); ++t) {
    CHECK(p.tensors[t].name == p2.tensors[t].name);
    CHECK(p.tensors[t].shape == p2.tensors[t].shape);
    CHECK(p.tensors[t].values == p2.tensors[t].values);
  }
}

TEST_CASE("params_load names the offending tensor") {
  StackedModel m = tiny_model(91, 1);
  ModelParams p = params_flatten(m);
  p.tensors[2].values.pop_back();
  p.tensors[2].shape = {p.tensors[2].values.size() / 2, 2};
  CHECK_THROWS_WITH_AS(params_load(m, p), doctest::Contains(p.tensors[2].name.c_str()),
                       std::invalid_argument);
}

TEST_CASE("same config gives identical manifests") {
  StackedModel a = tiny_model(101, 2);
  StackedModel b = tiny_model(202, 2);
  const ModelParams pa = params_flatten(a);
  const ModelParams pb = params_flatten(b);
  CHECK(pa.same_manifest(pb));
  StackedModel c = tiny_model(303, 3);
  CHECK_FALSE(pa.same_manifest(params_flatten(c)));
}

TEST_CASE("gru cell forward and stacked gru run") {
  Rng rng(111);
  StackedModel g = make_stacked_gru(2, 2, 3, 2, TaskKind::classification, 0.0, rng);
  Rng wrng(7);
  const Matrix window = random_window(4, 2, wrng);
  Rng fr(0);
  auto [pred, cache] = stacked_forward(g, window, false, fr);
  CHECK(pred.size() == 2);
  CHECK(pred[0] + pred[1] == doctest::Approx(1.0));

  // zero parameters, zero state: z = r = 0.5, n = 0, h stays 0
  GruCellParams p;
  for (Matrix* w : {&p.W_z, &p.W_r, &p.W_n}) *w = Matrix(2, 2);
  for (Matrix* r : {&p.R_z, &p.R_r, &p.R_n}) *r = Matrix(2, 2);
  for (Vector* b : {&p.b_z, &p.b_r, &p.b_n}) b->assign(2, 0.0);
  auto [h, gates] = gru_cell_forward(p, {1.0, -1.0}, {0.0, 0.0});
  CHECK(gates.z[0] == doctest::Approx(0.5));
  CHECK(gates.r[0] == doctest::Approx(0.5));
  CHECK(h[0] == doctest::Approx(0.0));
}
