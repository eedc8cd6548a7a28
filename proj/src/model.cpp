#include "model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fslstm {

namespace {

Vector cell_preactivation(const Matrix& W, const Vector& x, const Matrix& R,
                          const Vector& h, const Vector& b) {
  Vector a = matvec(W, x);
  add_in_place(a, matvec(R, h));
  add_in_place(a, b);
  return a;
}

Vector flatten_window(const Matrix& window) { return window.data; }

void check_input_len(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    std::ostringstream os;
    os << what << ": expected input of length " << expected << ", got " << got;
    dim_error(os.str());
  }
}

}  // namespace

std::size_t StackedModel::hidden_size() const {
  if (cell == CellKind::lstm && !lstm_layers.empty()) return lstm_layers[0].hidden_size();
  if (cell == CellKind::gru && !gru_layers.empty()) return gru_layers[0].hidden_size();
  return 0;
}

std::size_t StackedModel::input_size() const {
  if (cell == CellKind::lstm && !lstm_layers.empty()) return lstm_layers[0].input_size();
  if (cell == CellKind::gru && !gru_layers.empty()) return gru_layers[0].input_size();
  return head.W.cols;
}

std::pair<LstmState, GateCache> lstm_cell_forward(const LstmCellParams& p,
                                                  const Vector& x, const LstmState& prev,
                                                  const Vector* recurrent_mask) {
  check_input_len(p.input_size(), x.size(), "lstm_cell_forward");
  check_input_len(p.hidden_size(), prev.h.size(), "lstm_cell_forward (hidden)");
  check_input_len(p.hidden_size(), prev.c.size(), "lstm_cell_forward (cell)");

  GateCache cache;
  cache.x = x;
  cache.c_prev = prev.c;
  cache.h_prev_masked = recurrent_mask ? hadamard(prev.h, *recurrent_mask) : prev.h;

  cache.i = sigmoid(cell_preactivation(p.W_i, x, p.R_i, cache.h_prev_masked, p.b_i));
  cache.f = sigmoid(cell_preactivation(p.W_f, x, p.R_f, cache.h_prev_masked, p.b_f));
  cache.g = tanh_v(cell_preactivation(p.W_g, x, p.R_g, cache.h_prev_masked, p.b_g));
  cache.o = sigmoid(cell_preactivation(p.W_o, x, p.R_o, cache.h_prev_masked, p.b_o));

  cache.c = add(hadamard(cache.f, prev.c), hadamard(cache.i, cache.g));
  LstmState next{hadamard(cache.o, tanh_v(cache.c)), cache.c};
  return {std::move(next), std::move(cache)};
}

std::pair<Vector, GruGateCache> gru_cell_forward(const GruCellParams& p, const Vector& x,
                                                 const Vector& h_prev,
                                                 const Vector* recurrent_mask) {
  check_input_len(p.input_size(), x.size(), "gru_cell_forward");
  check_input_len(p.hidden_size(), h_prev.size(), "gru_cell_forward (hidden)");

  GruGateCache cache;
  cache.x = x;
  cache.h_prev = h_prev;
  cache.h_prev_masked = recurrent_mask ? hadamard(h_prev, *recurrent_mask) : h_prev;

  cache.z = sigmoid(cell_preactivation(p.W_z, x, p.R_z, cache.h_prev_masked, p.b_z));
  cache.r = sigmoid(cell_preactivation(p.W_r, x, p.R_r, cache.h_prev_masked, p.b_r));
  Vector a_n = matvec(p.W_n, x);
  add_in_place(a_n, matvec(p.R_n, hadamard(cache.r, cache.h_prev_masked)));
  add_in_place(a_n, p.b_n);
  cache.n = tanh_v(a_n);

  Vector h(h_prev.size());
  for (std::size_t i = 0; i < h.size(); ++i)
    h[i] = cache.z[i] * h_prev[i] + (1.0 - cache.z[i]) * cache.n[i];
  return {std::move(h), std::move(cache)};
}

std::pair<Vector, ForwardCache> stacked_forward(const StackedModel& m,
                                                const Matrix& window, bool train_mode,
                                                Rng& rng) {
  if (window.rows == 0) dim_error("stacked_forward: empty window");
  const std::size_t layers = m.num_layers();
  const std::size_t T = window.rows;

  ForwardCache cache;
  cache.recurrent_mask.resize(layers);
  cache.h_raw.resize(layers);
  cache.out_mask.resize(layers);
  cache.layer_out.resize(layers);
  if (m.cell == CellKind::lstm) cache.lstm_steps.resize(layers);
  else cache.gru_steps.resize(layers);

  if (layers == 0) {
    // logistic-regression baseline: head on the flattened window
    cache.head_in = flatten_window(window);
  } else {
    check_input_len(m.input_size(), window.cols, "stacked_forward (features)");
    const std::size_t hidden = m.hidden_size();
    const bool use_dropout = train_mode && m.dropout_rate > 0.0;
    const double keep_scale = use_dropout ? 1.0 / (1.0 - m.dropout_rate) : 1.0;

    // one recurrent mask per layer per sequence (variational)
    if (use_dropout) {
      for (std::size_t l = 0; l < layers; ++l) {
        Vector mask(hidden);
        for (double& v : mask) v = rng.uniform() < m.dropout_rate ? 0.0 : keep_scale;
        cache.recurrent_mask[l] = std::move(mask);
      }
    }

    std::vector<Vector> inputs(T);
    for (std::size_t t = 0; t < T; ++t) inputs[t] = window.row(t);

    for (std::size_t l = 0; l < layers; ++l) {
      cache.h_raw[l].resize(T);
      cache.layer_out[l].resize(T);
      if (use_dropout) cache.out_mask[l].resize(T);
      const Vector* rmask = use_dropout ? &cache.recurrent_mask[l] : nullptr;

      if (m.cell == CellKind::lstm) {
        cache.lstm_steps[l].resize(T);
        LstmState state = LstmState::zero(hidden);
        for (std::size_t t = 0; t < T; ++t) {
          auto [next, gates] = lstm_cell_forward(m.lstm_layers[l], inputs[t], state, rmask);
          cache.lstm_steps[l][t] = std::move(gates);
          cache.h_raw[l][t] = next.h;
          state = std::move(next);
        }
      } else {
        cache.gru_steps[l].resize(T);
        Vector h(hidden, 0.0);
        for (std::size_t t = 0; t < T; ++t) {
          auto [next, gates] = gru_cell_forward(m.gru_layers[l], inputs[t], h, rmask);
          cache.gru_steps[l][t] = std::move(gates);
          cache.h_raw[l][t] = next;
          h = std::move(next);
        }
      }

      for (std::size_t t = 0; t < T; ++t) {
        Vector out = relu(cache.h_raw[l][t]);
        if (use_dropout) {
          Vector mask(hidden);
          for (double& v : mask) v = rng.uniform() < m.dropout_rate ? 0.0 : keep_scale;
          out = hadamard(out, mask);
          cache.out_mask[l][t] = std::move(mask);
        }
        cache.layer_out[l][t] = out;
        inputs[t] = std::move(out);
      }
    }
    cache.head_in = cache.layer_out[layers - 1][T - 1];
  }

  cache.logits = add(matvec(m.head.W, cache.head_in), m.head.b);
  cache.prediction =
      m.task == TaskKind::classification ? softmax(cache.logits) : cache.logits;
  return {cache.prediction, std::move(cache)};
}

Vector logistic_forward(const FcHeadParams& head, const Vector& x, TaskKind task) {
  check_input_len(head.W.cols, x.size(), "logistic_forward");
  Vector logits = add(matvec(head.W, x), head.b);
  return task == TaskKind::classification ? softmax(logits) : logits;
}

namespace {

template <typename Model, typename Fn>
void visit_tensors(Model& m, const Fn& fn) {
  auto emit_matrix = [&](const std::string& name, auto& mat) {
    fn(name, std::vector<std::size_t>{mat.rows, mat.cols}, mat.data.data(),
       mat.data.size());
  };
  auto emit_vector = [&](const std::string& name, auto& vec) {
    fn(name, std::vector<std::size_t>{vec.size()}, vec.data(), vec.size());
  };

  if (m.cell == CellKind::lstm) {
    for (std::size_t l = 0; l < m.lstm_layers.size(); ++l) {
      auto& p = m.lstm_layers[l];
      const std::string base = "l" + std::to_string(l) + ".";
      emit_matrix(base + "W_i", p.W_i);
      emit_matrix(base + "W_f", p.W_f);
      emit_matrix(base + "W_g", p.W_g);
      emit_matrix(base + "W_o", p.W_o);
      emit_matrix(base + "R_i", p.R_i);
      emit_matrix(base + "R_f", p.R_f);
      emit_matrix(base + "R_g", p.R_g);
      emit_matrix(base + "R_o", p.R_o);
      emit_vector(base + "b_i", p.b_i);
      emit_vector(base + "b_f", p.b_f);
      emit_vector(base + "b_g", p.b_g);
      emit_vector(base + "b_o", p.b_o);
    }
  } else {
    for (std::size_t l = 0; l < m.gru_layers.size(); ++l) {
      auto& p = m.gru_layers[l];
      const std::string base = "l" + std::to_string(l) + ".";
      emit_matrix(base + "W_z", p.W_z);
      emit_matrix(base + "W_r", p.W_r);
      emit_matrix(base + "W_n", p.W_n);
      emit_matrix(base + "R_z", p.R_z);
      emit_matrix(base + "R_r", p.R_r);
      emit_matrix(base + "R_n", p.R_n);
      emit_vector(base + "b_z", p.b_z);
      emit_vector(base + "b_r", p.b_r);
      emit_vector(base + "b_n", p.b_n);
    }
  }
  emit_matrix("head.W", m.head.W);
  emit_vector("head.b", m.head.b);
}

}  // namespace

void for_each_tensor(StackedModel& m,
                     const std::function<void(const std::string&,
                                              const std::vector<std::size_t>&, double*,
                                              std::size_t)>& fn) {
  visit_tensors(m, [&](const std::string& name, const std::vector<std::size_t>& shape,
                       double* data, std::size_t len) { fn(name, shape, data, len); });
}

void for_each_tensor(const StackedModel& m,
                     const std::function<void(const std::string&,
                                              const std::vector<std::size_t>&,
                                              const double*, std::size_t)>& fn) {
  visit_tensors(m, [&](const std::string& name, const std::vector<std::size_t>& shape,
                       const double* data, std::size_t len) { fn(name, shape, data, len); });
}

std::size_t ModelParams::value_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors) n += t.values.size();
  return n;
}

bool ModelParams::same_manifest(const ModelParams& o) const {
  if (tensors.size() != o.tensors.size()) return false;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (tensors[i].name != o.tensors[i].name || tensors[i].shape != o.tensors[i].shape)
      return false;
  }
  return true;
}

ModelParams params_flatten(const StackedModel& m) {
  ModelParams out;
  for_each_tensor(m, [&](const std::string& name, const std::vector<std::size_t>& shape,
                         const double* data, std::size_t len) {
    out.tensors.push_back(NamedTensor{name, shape, Vector(data, data + len)});
  });
  return out;
}

void params_load(StackedModel& m, const ModelParams& p) {
  std::size_t idx = 0;
  for_each_tensor(m, [&](const std::string& name, const std::vector<std::size_t>& shape,
                         double* data, std::size_t len) {
    if (idx >= p.tensors.size()) {
      throw std::invalid_argument("params_load: missing tensor '" + name + "'");
    }
    const NamedTensor& t = p.tensors[idx];
    if (t.name != name) {
      throw std::invalid_argument("params_load: expected tensor '" + name + "', got '" +
                                  t.name + "'");
    }
    if (t.shape != shape || t.values.size() != len) {
      std::ostringstream os;
      os << "params_load: shape mismatch for tensor '" << name << "' (expected";
      for (auto d : shape) os << " " << d;
      os << ", got";
      for (auto d : t.shape) os << " " << d;
      os << ")";
      throw std::invalid_argument(os.str());
    }
    std::copy(t.values.begin(), t.values.end(), data);
    ++idx;
  });
  if (idx != p.tensors.size()) {
    throw std::invalid_argument("params_load: extra tensor '" + p.tensors[idx].name +
                                "' not present in model");
  }
}

StackedModel zeros_like(const StackedModel& m) {
  StackedModel z = m;
  for_each_tensor(z, [](const std::string&, const std::vector<std::size_t>&, double* data,
                        std::size_t len) { std::fill(data, data + len, 0.0); });
  return z;
}

namespace {

void init_matrix(Matrix& m, double bound, Rng& rng) {
  for (double& v : m.data) v = rng.uniform(-bound, bound);
}

LstmCellParams make_lstm_cell(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  LstmCellParams p;
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Matrix* w : {&p.W_i, &p.W_f, &p.W_g, &p.W_o}) {
    *w = Matrix(hidden, input_dim);
    init_matrix(*w, bound, rng);
  }
  for (Matrix* r : {&p.R_i, &p.R_f, &p.R_g, &p.R_o}) {
    *r = Matrix(hidden, hidden);
    init_matrix(*r, bound, rng);
  }
  p.b_i.assign(hidden, 0.0);
  p.b_f.assign(hidden, 1.0);  // open forget gate at start
  p.b_g.assign(hidden, 0.0);
  p.b_o.assign(hidden, 0.0);
  return p;
}

GruCellParams make_gru_cell(std::size_t input_dim, std::size_t hidden, Rng& rng) {
  GruCellParams p;
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  for (Matrix* w : {&p.W_z, &p.W_r, &p.W_n}) {
    *w = Matrix(hidden, input_dim);
    init_matrix(*w, bound, rng);
  }
  for (Matrix* r : {&p.R_z, &p.R_r, &p.R_n}) {
    *r = Matrix(hidden, hidden);
    init_matrix(*r, bound, rng);
  }
  p.b_z.assign(hidden, 0.0);
  p.b_r.assign(hidden, 0.0);
  p.b_n.assign(hidden, 0.0);
  return p;
}

FcHeadParams make_head(std::size_t input_dim, std::size_t out_dim, Rng& rng) {
  FcHeadParams head;
  head.W = Matrix(out_dim, input_dim);
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
  init_matrix(head.W, bound, rng);
  head.b.assign(out_dim, 0.0);
  return head;
}

}  // namespace

StackedModel make_stacked_lstm(std::size_t layers, std::size_t input_dim,
                               std::size_t hidden, std::size_t out_dim, TaskKind task,
                               double dropout_rate, Rng& rng) {
  if (layers == 0) throw std::invalid_argument("make_stacked_lstm: needs >= 1 layer");
  StackedModel m;
  m.cell = CellKind::lstm;
  m.task = task;
  m.dropout_rate = dropout_rate;
  for (std::size_t l = 0; l < layers; ++l)
    m.lstm_layers.push_back(make_lstm_cell(l == 0 ? input_dim : hidden, hidden, rng));
  m.head = make_head(hidden, out_dim, rng);
  return m;
}

StackedModel make_stacked_gru(std::size_t layers, std::size_t input_dim,
                              std::size_t hidden, std::size_t out_dim, TaskKind task,
                              double dropout_rate, Rng& rng) {
  if (layers == 0) throw std::invalid_argument("make_stacked_gru: needs >= 1 layer");
  StackedModel m;
  m.cell = CellKind::gru;
  m.task = task;
  m.dropout_rate = dropout_rate;
  for (std::size_t l = 0; l < layers; ++l)
    m.gru_layers.push_back(make_gru_cell(l == 0 ? input_dim : hidden, hidden, rng));
  m.head = make_head(hidden, out_dim, rng);
  return m;
}

StackedModel make_logistic(std::size_t input_dim, std::size_t out_dim, TaskKind task,
                           Rng& rng) {
  StackedModel m;
  m.cell = CellKind::lstm;  // irrelevant with zero layers
  m.task = task;
  m.dropout_rate = 0.0;
  m.head = make_head(input_dim, out_dim, rng);
  return m;
}

}  // namespace fslstm
