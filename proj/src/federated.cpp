#include "federated.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "evaluation.hpp"
#include "training.hpp"

namespace fslstm {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

// Runs fn(i) for i in [0, n) on up to `workers` threads; exceptions are
// rethrown on the caller with the item index attached.
void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t nthreads = std::max<std::size_t>(1, std::min(workers, n));
  if (nthreads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
  }
}

}  // namespace

std::vector<int> select_subset(Rng& rng, std::size_t k, std::size_t m) {
  if (m == 0 || m > k) {
    std::ostringstream os;
    os << "select_subset: m=" << m << " out of range for k=" << k;
    throw std::invalid_argument(os.str());
  }
  std::vector<int> ids(k);
  std::iota(ids.begin(), ids.end(), 0);
  // partial Fisher-Yates: the first m entries are a uniform sample
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(k - i));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(m);
  std::sort(ids.begin(), ids.end());
  return ids;
}

ModelParams aggregate(const std::vector<LocalUpdate>& updates,
                      const ModelParams& global) {
  if (updates.empty()) throw std::invalid_argument("aggregate: no updates");

  std::vector<std::size_t> order(updates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return updates[a].sensor_id < updates[b].sensor_id;
  });

  double total = 0.0;
  for (const auto& u : updates) {
    if (!u.delta.same_manifest(global)) {
      std::ostringstream os;
      os << "aggregate: update from sensor " << u.sensor_id
         << " has a different parameter manifest";
      throw std::invalid_argument(os.str());
    }
    if (u.sample_count == 0)
      throw std::invalid_argument("aggregate: update with zero samples");
    total += static_cast<double>(u.sample_count);
  }

  ModelParams out = global;
  for (std::size_t t = 0; t < out.tensors.size(); ++t) {
    auto& dst = out.tensors[t].values;
    const auto& base = global.tensors[t].values;
    for (std::size_t idx = 0; idx < order.size(); ++idx) {
      const LocalUpdate& u = updates[order[idx]];
      const double coeff = static_cast<double>(u.sample_count) / total;
      const auto& d = u.delta.tensors[t].values;
      if (idx == 0) {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = coeff * (base[i] + d[i]);
      } else {
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += coeff * (base[i] + d[i]);
      }
    }
  }
  return out;
}

Vector concat_predictions(const std::vector<Vector>& per_sensor) {
  if (per_sensor.empty()) throw std::invalid_argument("concat_predictions: empty list");
  Vector out;
  std::size_t total = 0;
  for (const auto& v : per_sensor) total += v.size();
  out.reserve(total);
  for (const auto& v : per_sensor) out.insert(out.end(), v.begin(), v.end());
  return out;
}

RoundMetrics pooled_metrics(TaskKind task, const std::vector<EvalOutput>& outputs,
                            double threshold) {
  RoundMetrics m;
  if (outputs.empty()) return m;

  std::vector<std::size_t> order(outputs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return outputs[a].sensor_id < outputs[b].sensor_id;
  });

  std::vector<Vector> scores_list, target_list;
  for (std::size_t i : order) {
    scores_list.push_back(outputs[i].scores);
    target_list.push_back(outputs[i].targets);
  }
  const Vector scores = concat_predictions(scores_list);
  const Vector targets = concat_predictions(target_list);
  if (scores.empty()) return m;

  if (task == TaskKind::classification) {
    const ConfusionCounts c = confusion(targets, scores, threshold);
    const Prf prf = precision_recall_f1(c);
    m.precision = prf.precision;
    m.recall = prf.recall;
    m.f1 = prf.f1;
    try {
      m.balanced_accuracy = balanced_accuracy(c);
      m.auc = roc_auc(targets, scores).second;
    } catch (const std::invalid_argument&) {
      // single-class pool: BA/AUC stay NaN
    }
    double psum = 0, rsum = 0, fsum = 0;
    std::size_t tasks = 0;
    for (const auto& o : outputs) {
      if (o.targets.empty()) continue;
      const Prf p = precision_recall_f1(confusion(o.targets, o.scores, threshold));
      psum += p.precision;
      rsum += p.recall;
      fsum += p.f1;
      ++tasks;
    }
    if (tasks > 0) {
      m.macro_precision = psum / static_cast<double>(tasks);
      m.macro_recall = rsum / static_cast<double>(tasks);
      m.macro_f1 = fsum / static_cast<double>(tasks);
    }
  } else {
    m.mae = mae(targets, scores);
    double msum = 0;
    std::size_t tasks = 0;
    for (const auto& o : outputs) {
      if (o.targets.empty()) continue;
      msum += mae(o.targets, o.scores);
      ++tasks;
    }
    if (tasks > 0) m.macro_mae = msum / static_cast<double>(tasks);
  }
  return m;
}

FederatedRun run_federated(const FederatedConfig& cfg,
                           std::span<FederatedClient* const> clients, TaskKind task,
                           const ModelParams& initial, const RoundSink& on_round) {
  if (clients.empty()) throw std::invalid_argument("run_federated: no clients");
  if (cfg.per_round == 0 || cfg.per_round > clients.size()) {
    std::ostringstream os;
    os << "run_federated: per_round=" << cfg.per_round << " out of range for "
       << clients.size() << " clients";
    throw std::invalid_argument(os.str());
  }

  FederatedRun run;
  ModelParams global = initial;

  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t stale_rounds = 0;

  for (std::size_t r = 1; r <= cfg.rounds; ++r) {
    Rng selection_rng(selection_stream_seed(cfg.seed, r));
    const std::vector<int> subset =
        select_subset(selection_rng, clients.size(), cfg.per_round);

    std::vector<LocalUpdate> updates(subset.size());
    std::vector<double> update_ms(subset.size(), 0.0);
    try {
      parallel_for(subset.size(), cfg.workers, [&](std::size_t i) {
        FederatedClient* client = clients[static_cast<std::size_t>(subset[i])];
        const auto start = Clock::now();
        updates[i] =
            client->update(global, client_stream_seed(cfg.seed, r, client->sensor_id()));
        update_ms[i] = ms_since(start);
      });
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "round " << r << ": client update failed: " << e.what();
      throw std::runtime_error(os.str());
    }

    const auto server_start = Clock::now();
    global = aggregate(updates, global);
    const double aggregate_ms = ms_since(server_start);

    std::vector<EvalOutput> evals(clients.size());
    std::vector<double> eval_ms(clients.size(), 0.0);
    try {
      parallel_for(clients.size(), cfg.workers, [&](std::size_t i) {
        const auto start = Clock::now();
        evals[i] = clients[i]->evaluate(global);
        eval_ms[i] = ms_since(start);
      });
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "round " << r << ": client evaluation failed: " << e.what();
      throw std::runtime_error(os.str());
    }

    RoundReport report;
    report.round = r;
    report.participants = subset;

    double weighted_loss = 0.0, weight = 0.0;
    for (const auto& u : updates) {
      weighted_loss += u.train_loss * static_cast<double>(u.sample_count);
      weight += static_cast<double>(u.sample_count);
    }
    report.train_loss = weight > 0 ? weighted_loss / weight : 0.0;

    std::vector<double> task_losses;
    task_losses.reserve(evals.size());
    for (const auto& e : evals) task_losses.push_back(e.loss);
    report.eval_loss = multitask_objective(task_losses);
    report.metrics = pooled_metrics(task, evals, cfg.eval_threshold);

    const double max_update = update_ms.empty()
                                  ? 0.0
                                  : *std::max_element(update_ms.begin(), update_ms.end());
    const double max_eval =
        eval_ms.empty() ? 0.0 : *std::max_element(eval_ms.begin(), eval_ms.end());
    report.duration_ms = max_update + aggregate_ms + max_eval;
    report.cpu_ms = std::accumulate(update_ms.begin(), update_ms.end(), 0.0) +
                    aggregate_ms + std::accumulate(eval_ms.begin(), eval_ms.end(), 0.0);

    run.reports.push_back(report);
    if (cfg.keep_round_params) run.round_params.push_back(global);
    if (on_round) on_round(report, global);

    if (cfg.early_stop_patience > 0) {
      if (best_loss - report.eval_loss >= cfg.early_stop_tol) {
        stale_rounds = 0;
      } else {
        ++stale_rounds;
      }
      best_loss = std::min(best_loss, report.eval_loss);
      if (stale_rounds >= cfg.early_stop_patience) break;
    }
  }

  run.final_params = std::move(global);
  return run;
}

}  // namespace fslstm
