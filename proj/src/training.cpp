#include "training.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fslstm {

namespace {

constexpr double kProbEps = 1e-12;

double clamp_prob(double p) {
  if (p < kProbEps) return kProbEps;
  if (p > 1.0 - kProbEps) return 1.0 - kProbEps;
  return p;
}

}  // namespace

double cross_entropy(const std::vector<int>& y, const std::vector<Vector>& y_prob) {
  if (y.size() != y_prob.size()) {
    std::ostringstream os;
    os << "cross_entropy: " << y.size() << " labels vs " << y_prob.size()
       << " predictions";
    dim_error(os.str());
  }
  if (y.empty()) dim_error("cross_entropy: empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto cls = static_cast<std::size_t>(y[i]);
    if (cls >= y_prob[i].size()) {
      std::ostringstream os;
      os << "cross_entropy: label " << y[i] << " out of range for " << y_prob[i].size()
         << " classes";
      dim_error(os.str());
    }
    total += -std::log(clamp_prob(y_prob[i][cls]));
  }
  return total / static_cast<double>(y.size());
}

double mse(const Vector& y, const Vector& y_hat) {
  if (y.size() != y_hat.size()) {
    std::ostringstream os;
    os << "mse: " << y.size() << " targets vs " << y_hat.size() << " predictions";
    dim_error(os.str());
  }
  if (y.empty()) dim_error("mse: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - y_hat[i];
    total += d * d;
  }
  return total / static_cast<double>(y.size());
}

double multitask_objective(const std::vector<double>& per_task_losses) {
  if (per_task_losses.empty()) dim_error("multitask_objective: empty task list");
  double total = 0.0;
  for (double l : per_task_losses) total += l;
  return total / static_cast<double>(per_task_losses.size());
}

double sample_loss(const Vector& prediction, double target, LossKind loss) {
  if (loss == LossKind::cross_entropy) {
    const auto cls = static_cast<std::size_t>(target);
    if (cls >= prediction.size()) dim_error("sample_loss: label out of range");
    return -std::log(clamp_prob(prediction[cls]));
  }
  const double d = prediction[0] - target;
  return d * d;
}

namespace {

// dL/d(pre-activation) pushed through one LSTM step; accumulates parameter
// gradients and returns gradients w.r.t. the step input and previous state.
struct LstmStepGrads {
  Vector dx;
  Vector dh_prev;  // still to be multiplied by the recurrent mask by the caller
  Vector dc_prev;
};

LstmStepGrads lstm_cell_backward(const LstmCellParams& p, LstmCellParams& g,
                                 const GateCache& s, const Vector& dh, const Vector& dc_in) {
  const std::size_t hidden = p.hidden_size();
  Vector tanh_c(hidden), da_i(hidden), da_f(hidden), da_g(hidden), da_o(hidden);
  Vector dc(hidden);

  for (std::size_t j = 0; j < hidden; ++j) tanh_c[j] = std::tanh(s.c[j]);

  for (std::size_t j = 0; j < hidden; ++j) {
    const double do_j = dh[j] * tanh_c[j];
    da_o[j] = do_j * s.o[j] * (1.0 - s.o[j]);
    dc[j] = dh[j] * s.o[j] * (1.0 - tanh_c[j] * tanh_c[j]) + dc_in[j];
    const double df_j = dc[j] * s.c_prev[j];
    da_f[j] = df_j * s.f[j] * (1.0 - s.f[j]);
    const double di_j = dc[j] * s.g[j];
    da_i[j] = di_j * s.i[j] * (1.0 - s.i[j]);
    const double dg_j = dc[j] * s.i[j];
    da_g[j] = dg_j * (1.0 - s.g[j] * s.g[j]);
  }

  add_outer(g.W_i, da_i, s.x);
  add_outer(g.W_f, da_f, s.x);
  add_outer(g.W_g, da_g, s.x);
  add_outer(g.W_o, da_o, s.x);
  add_outer(g.R_i, da_i, s.h_prev_masked);
  add_outer(g.R_f, da_f, s.h_prev_masked);
  add_outer(g.R_g, da_g, s.h_prev_masked);
  add_outer(g.R_o, da_o, s.h_prev_masked);
  add_in_place(g.b_i, da_i);
  add_in_place(g.b_f, da_f);
  add_in_place(g.b_g, da_g);
  add_in_place(g.b_o, da_o);

  LstmStepGrads out;
  out.dx.assign(s.x.size(), 0.0);
  add_tmatvec(p.W_i, da_i, out.dx);
  add_tmatvec(p.W_f, da_f, out.dx);
  add_tmatvec(p.W_g, da_g, out.dx);
  add_tmatvec(p.W_o, da_o, out.dx);

  out.dh_prev.assign(hidden, 0.0);
  add_tmatvec(p.R_i, da_i, out.dh_prev);
  add_tmatvec(p.R_f, da_f, out.dh_prev);
  add_tmatvec(p.R_g, da_g, out.dh_prev);
  add_tmatvec(p.R_o, da_o, out.dh_prev);

  out.dc_prev = hadamard(dc, s.f);
  return out;
}

struct GruStepGrads {
  Vector dx;
  Vector dh_prev;  // complete: includes the direct carry and masked gate paths
};

GruStepGrads gru_cell_backward(const GruCellParams& p, GruCellParams& g,
                               const GruGateCache& s, const Vector& dh,
                               const Vector* rmask) {
  const std::size_t hidden = p.hidden_size();
  Vector da_z(hidden), da_r(hidden), da_n(hidden), dn(hidden);

  for (std::size_t j = 0; j < hidden; ++j) {
    const double dz_j = dh[j] * (s.h_prev[j] - s.n[j]);
    da_z[j] = dz_j * s.z[j] * (1.0 - s.z[j]);
    dn[j] = dh[j] * (1.0 - s.z[j]);
    da_n[j] = dn[j] * (1.0 - s.n[j] * s.n[j]);
  }

  // q = r .* h_masked feeds R_n
  Vector dq(hidden, 0.0);
  add_tmatvec(p.R_n, da_n, dq);
  for (std::size_t j = 0; j < hidden; ++j) {
    const double dr_j = dq[j] * s.h_prev_masked[j];
    da_r[j] = dr_j * s.r[j] * (1.0 - s.r[j]);
  }

  add_outer(g.W_z, da_z, s.x);
  add_outer(g.W_r, da_r, s.x);
  add_outer(g.W_n, da_n, s.x);
  add_outer(g.R_z, da_z, s.h_prev_masked);
  add_outer(g.R_r, da_r, s.h_prev_masked);
  add_outer(g.R_n, da_n, hadamard(s.r, s.h_prev_masked));
  add_in_place(g.b_z, da_z);
  add_in_place(g.b_r, da_r);
  add_in_place(g.b_n, da_n);

  GruStepGrads out;
  out.dx.assign(s.x.size(), 0.0);
  add_tmatvec(p.W_z, da_z, out.dx);
  add_tmatvec(p.W_r, da_r, out.dx);
  add_tmatvec(p.W_n, da_n, out.dx);

  Vector dh_masked(hidden, 0.0);
  add_tmatvec(p.R_z, da_z, dh_masked);
  add_tmatvec(p.R_r, da_r, dh_masked);
  for (std::size_t j = 0; j < hidden; ++j) dh_masked[j] += dq[j] * s.r[j];

  out.dh_prev.assign(hidden, 0.0);
  for (std::size_t j = 0; j < hidden; ++j) {
    const double mask = rmask ? (*rmask)[j] : 1.0;
    out.dh_prev[j] = dh[j] * s.z[j] + mask * dh_masked[j];
  }
  return out;
}

// Converts a gradient w.r.t. a layer's post-activation output into one w.r.t.
// the raw hidden state (through the dropout mask and ReLU).
Vector through_output(const Vector& d_out, const Vector& h_raw, const Vector* mask) {
  Vector d(h_raw.size());
  for (std::size_t j = 0; j < h_raw.size(); ++j) {
    const double m = mask ? (*mask)[j] : 1.0;
    d[j] = h_raw[j] > 0.0 ? d_out[j] * m : 0.0;
  }
  return d;
}

void accumulate_sample(const StackedModel& m, StackedModel& grad, const Sample& sample,
                       LossKind loss, const ForwardCache& cache) {
  const std::size_t out_dim = m.output_size();

  Vector dlogits(out_dim, 0.0);
  if (loss == LossKind::cross_entropy) {
    const auto cls = static_cast<std::size_t>(sample.target);
    for (std::size_t j = 0; j < out_dim; ++j)
      dlogits[j] = cache.prediction[j] - (j == cls ? 1.0 : 0.0);
  } else {
    dlogits[0] = 2.0 * (cache.prediction[0] - sample.target);
  }

  add_outer(grad.head.W, dlogits, cache.head_in);
  add_in_place(grad.head.b, dlogits);

  const std::size_t layers = m.num_layers();
  if (layers == 0) return;  // linear model: nothing below the head

  const std::size_t T = cache.h_raw[0].size();

  Vector d_top(cache.head_in.size(), 0.0);
  add_tmatvec(m.head.W, dlogits, d_top);

  // gradient w.r.t. each layer's post-activation outputs; top layer only
  // receives signal at the final step
  std::vector<Vector> d_out(T, Vector(m.hidden_size(), 0.0));
  d_out[T - 1] = std::move(d_top);

  for (std::size_t li = layers; li-- > 0;) {
    const Vector* rmask =
        cache.recurrent_mask.empty() || cache.recurrent_mask[li].empty()
            ? nullptr
            : &cache.recurrent_mask[li];
    const bool has_out_mask = !cache.out_mask[li].empty();

    std::vector<Vector> d_in(T);
    Vector dh_next(m.hidden_size(), 0.0);
    Vector dc_next(m.hidden_size(), 0.0);

    for (std::size_t t = T; t-- > 0;) {
      const Vector* omask = has_out_mask ? &cache.out_mask[li][t] : nullptr;
      Vector dh = through_output(d_out[t], cache.h_raw[li][t], omask);
      add_in_place(dh, dh_next);

      if (m.cell == CellKind::lstm) {
        LstmStepGrads sg = lstm_cell_backward(m.lstm_layers[li], grad.lstm_layers[li],
                                              cache.lstm_steps[li][t], dh, dc_next);
        if (rmask) sg.dh_prev = hadamard(sg.dh_prev, *rmask);
        dh_next = std::move(sg.dh_prev);
        dc_next = std::move(sg.dc_prev);
        d_in[t] = std::move(sg.dx);
      } else {
        GruStepGrads sg = gru_cell_backward(m.gru_layers[li], grad.gru_layers[li],
                                            cache.gru_steps[li][t], dh, rmask);
        dh_next = std::move(sg.dh_prev);
        d_in[t] = std::move(sg.dx);
      }
    }
    if (li > 0) d_out = std::move(d_in);
  }
}

}  // namespace

std::pair<Gradients, double> backward(const StackedModel& m,
                                      std::span<const Sample> batch, LossKind loss,
                                      std::span<const ForwardCache> caches) {
  if (batch.empty()) dim_error("backward: empty batch");
  if (batch.size() != caches.size()) {
    std::ostringstream os;
    os << "backward: " << batch.size() << " samples vs " << caches.size() << " caches";
    dim_error(os.str());
  }
  if (loss == LossKind::cross_entropy && m.task != TaskKind::classification)
    dim_error("backward: cross_entropy requires a classification model");
  if (loss == LossKind::mse && m.task != TaskKind::regression)
    dim_error("backward: mse requires a regression model");

  StackedModel grad = zeros_like(m);
  double total_loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    total_loss += sample_loss(caches[i].prediction, batch[i].target, loss);
    accumulate_sample(m, grad, batch[i], loss, caches[i]);
  }

  const double inv_n = 1.0 / static_cast<double>(batch.size());
  for_each_tensor(grad, [&](const std::string&, const std::vector<std::size_t>&,
                            double* data, std::size_t len) {
    for (std::size_t i = 0; i < len; ++i) data[i] *= inv_n;
  });
  return {params_flatten(grad), total_loss * inv_n};
}

double clip_gradients(Gradients& g, double max_norm) {
  double sq = 0.0;
  for (const auto& t : g.tensors)
    for (double v : t.values) sq += v * v;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (auto& t : g.tensors)
      for (double& v : t.values) v *= scale;
  }
  return norm;
}

ModelParams sgd_step(const ModelParams& p, const Gradients& g, double eta) {
  if (!p.same_manifest(g))
    throw std::invalid_argument("sgd_step: parameter/gradient manifests differ");
  ModelParams out = p;
  for (std::size_t t = 0; t < out.tensors.size(); ++t) {
    auto& dst = out.tensors[t].values;
    const auto& src = g.tensors[t].values;
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= eta * src[i];
  }
  return out;
}

void sgd_step_in_place(StackedModel& m, const Gradients& g, double eta) {
  std::size_t idx = 0;
  for_each_tensor(m, [&](const std::string& name, const std::vector<std::size_t>&,
                         double* data, std::size_t len) {
    if (idx >= g.tensors.size() || g.tensors[idx].name != name ||
        g.tensors[idx].values.size() != len) {
      throw std::invalid_argument("sgd_step_in_place: gradient manifest mismatch at '" +
                                  name + "'");
    }
    const auto& src = g.tensors[idx].values;
    for (std::size_t i = 0; i < len; ++i) data[i] -= eta * src[i];
    ++idx;
  });
}

}  // namespace fslstm
