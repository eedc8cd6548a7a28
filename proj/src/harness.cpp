#include "harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "evaluation.hpp"
#include "io.hpp"

namespace fslstm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// seed streams for the pieces of a run
constexpr std::uint64_t kGenStream = 0x6e47;
constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kFedStream = 0xfed5;

const char* task_name(TaskKind t) {
  return t == TaskKind::classification ? "classification" : "regression";
}

TaskKind task_from_name(const std::string& s) {
  if (s == "classification") return TaskKind::classification;
  if (s == "regression") return TaskKind::regression;
  throw std::invalid_argument("unknown task '" + s + "'");
}

json metrics_to_json(const RoundMetrics& m) {
  auto num = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  return json{{"precision", m.precision},
              {"recall", m.recall},
              {"f1", m.f1},
              {"balanced_accuracy", num(m.balanced_accuracy)},
              {"auc", num(m.auc)},
              {"macro_precision", m.macro_precision},
              {"macro_recall", m.macro_recall},
              {"macro_f1", m.macro_f1},
              {"mae", m.mae},
              {"macro_mae", m.macro_mae}};
}

}  // namespace

const char* variant_name(ModelVariant v) {
  switch (v) {
    case ModelVariant::lr: return "lr";
    case ModelVariant::lstm: return "lstm";
    case ModelVariant::flr: return "flr";
    case ModelVariant::fgru: return "fgru";
    case ModelVariant::flstm1: return "flstm1";
    case ModelVariant::flstm2: return "flstm2";
    case ModelVariant::fslstm: return "fslstm";
  }
  return "unknown";
}

ModelVariant variant_from_name(const std::string& name) {
  for (ModelVariant v : {ModelVariant::lr, ModelVariant::lstm, ModelVariant::flr,
                         ModelVariant::fgru, ModelVariant::flstm1, ModelVariant::flstm2,
                         ModelVariant::fslstm}) {
    if (name == variant_name(v)) return v;
  }
  throw std::invalid_argument("unknown model variant '" + name + "'");
}

bool variant_is_centralized(ModelVariant v) {
  return v == ModelVariant::lr || v == ModelVariant::lstm;
}

std::size_t variant_layers(ModelVariant v) {
  switch (v) {
    case ModelVariant::lr:
    case ModelVariant::flr: return 0;
    case ModelVariant::fgru:
    case ModelVariant::flstm1: return 1;
    case ModelVariant::flstm2: return 2;
    case ModelVariant::lstm:
    case ModelVariant::fslstm: return 3;
  }
  return 0;
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  if (name == "desk") {
    c.preset = "desk";
    c.hidden = 16;
    c.dropout = 0.2;
    c.max_windows_per_sensor = 110;
    c.generator.sensor_count = 24;
    c.generator.span_days = 28;
    c.generator.event_target = 24u * 28u * 48u;  // 30-minute cadence
    c.generator.anomaly_rate = 0.05;
    c.federated.clients = 10;
    c.federated.rounds = 60;
    c.federated.per_round = 0;  // full participation
    c.federated.local_epochs = 2;
    c.federated.batch_size = 16;
    c.federated.learning_rate = 2.0;
    c.federated.window = 16;
    c.federated.workers = 0;  // hardware concurrency
    c.federated.early_stop_patience = 15;
  } else if (name == "paper") {
    c.preset = "paper";
    c.hidden = 128;
    c.dropout = 0.2;
    c.max_windows_per_sensor = 0;
    c.generator.sensor_count = 180;
    c.generator.span_days = 123;
    c.generator.event_target = 1000000;
    c.generator.anomaly_rate = 0.05;
    c.federated.clients = 180;
    c.federated.rounds = 50;
    c.federated.per_round = 0;
    c.federated.local_epochs = 1;
    c.federated.batch_size = 1024;
    c.federated.learning_rate = 0.001;
    c.federated.window = 32;
    c.federated.workers = 0;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "' (expected desk or paper)");
  }
  return c;
}

json config_to_json(const ExperimentConfig& cfg) {
  return json{
      {"preset", cfg.preset},
      {"variant", variant_name(cfg.variant)},
      {"task", task_name(cfg.task)},
      {"seed", cfg.seed},
      {"out_dir", cfg.out_dir},
      {"data_dir", cfg.data_dir},
      {"hidden", cfg.hidden},
      {"dropout", cfg.dropout},
      {"max_windows_per_sensor", cfg.max_windows_per_sensor},
      {"convergence_band", cfg.convergence_band},
      {"write_checkpoints", cfg.write_checkpoints},
      {"generator",
       {{"sensors", cfg.generator.sensor_count},
        {"category_weights", cfg.generator.category_weights},
        {"span_days", cfg.generator.span_days},
        {"event_target", cfg.generator.event_target},
        {"anomaly_rate", cfg.generator.anomaly_rate},
        {"energy_period_s", cfg.generator.energy_period_s},
        {"noise", cfg.generator.noise}}},
      {"federated",
       {{"clients", cfg.federated.clients},
        {"rounds", cfg.federated.rounds},
        {"per_round", cfg.federated.per_round},
        {"local_epochs", cfg.federated.local_epochs},
        {"batch_size", cfg.federated.batch_size},
        {"learning_rate", cfg.federated.learning_rate},
        {"window", cfg.federated.window},
        {"workers", cfg.federated.workers},
        {"early_stop_tol", cfg.federated.early_stop_tol},
        {"early_stop_patience", cfg.federated.early_stop_patience},
        {"eval_threshold", cfg.federated.eval_threshold},
        {"max_grad_norm", cfg.federated.max_grad_norm}}}};
}

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  const std::string preset = j.value("preset", std::string("desk"));
  ExperimentConfig cfg = preset_config(preset);

  static const std::vector<std::string> known = {
      "preset",     "variant",  "task",
      "seed",       "out_dir",  "data_dir",
      "hidden",     "dropout",  "max_windows_per_sensor",
      "convergence_band",       "write_checkpoints",
      "generator",  "federated"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw std::invalid_argument("config: unknown key '" + it.key() + "'");
  }

  if (j.contains("variant")) cfg.variant = variant_from_name(j["variant"].get<std::string>());
  if (j.contains("task")) cfg.task = task_from_name(j["task"].get<std::string>());
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  if (j.contains("data_dir")) cfg.data_dir = j["data_dir"].get<std::string>();
  if (j.contains("hidden")) cfg.hidden = j["hidden"].get<std::size_t>();
  if (j.contains("dropout")) cfg.dropout = j["dropout"].get<double>();
  if (j.contains("max_windows_per_sensor"))
    cfg.max_windows_per_sensor = j["max_windows_per_sensor"].get<std::size_t>();
  if (j.contains("convergence_band"))
    cfg.convergence_band = j["convergence_band"].get<double>();
  if (j.contains("write_checkpoints"))
    cfg.write_checkpoints = j["write_checkpoints"].get<bool>();

  if (j.contains("generator")) {
    const json& g = j["generator"];
    static const std::vector<std::string> gknown = {
        "sensors",     "category_weights", "span_days", "event_target",
        "anomaly_rate", "energy_period_s", "noise"};
    for (auto it = g.begin(); it != g.end(); ++it) {
      if (std::find(gknown.begin(), gknown.end(), it.key()) == gknown.end())
        throw std::invalid_argument("config.generator: unknown key '" + it.key() + "'");
    }
    if (g.contains("sensors")) cfg.generator.sensor_count = g["sensors"].get<std::size_t>();
    if (g.contains("category_weights"))
      cfg.generator.category_weights = g["category_weights"].get<std::array<double, 5>>();
    if (g.contains("span_days")) cfg.generator.span_days = g["span_days"].get<int>();
    if (g.contains("event_target"))
      cfg.generator.event_target = g["event_target"].get<std::size_t>();
    if (g.contains("anomaly_rate"))
      cfg.generator.anomaly_rate = g["anomaly_rate"].get<double>();
    if (g.contains("energy_period_s"))
      cfg.generator.energy_period_s = g["energy_period_s"].get<std::int64_t>();
    if (g.contains("noise")) cfg.generator.noise = g["noise"].get<double>();
  }

  if (j.contains("federated")) {
    const json& f = j["federated"];
    static const std::vector<std::string> fknown = {
        "clients",       "rounds",    "per_round",      "local_epochs",
        "batch_size",    "learning_rate", "window",     "workers",
        "early_stop_tol", "early_stop_patience", "eval_threshold", "max_grad_norm"};
    for (auto it = f.begin(); it != f.end(); ++it) {
      if (std::find(fknown.begin(), fknown.end(), it.key()) == fknown.end())
        throw std::invalid_argument("config.federated: unknown key '" + it.key() + "'");
    }
    if (f.contains("clients")) cfg.federated.clients = f["clients"].get<std::size_t>();
    if (f.contains("rounds")) cfg.federated.rounds = f["rounds"].get<std::size_t>();
    if (f.contains("per_round")) cfg.federated.per_round = f["per_round"].get<std::size_t>();
    if (f.contains("local_epochs"))
      cfg.federated.local_epochs = f["local_epochs"].get<std::size_t>();
    if (f.contains("batch_size"))
      cfg.federated.batch_size = f["batch_size"].get<std::size_t>();
    if (f.contains("learning_rate"))
      cfg.federated.learning_rate = f["learning_rate"].get<double>();
    if (f.contains("window")) cfg.federated.window = f["window"].get<std::size_t>();
    if (f.contains("workers")) cfg.federated.workers = f["workers"].get<std::size_t>();
    if (f.contains("early_stop_tol"))
      cfg.federated.early_stop_tol = f["early_stop_tol"].get<double>();
    if (f.contains("early_stop_patience"))
      cfg.federated.early_stop_patience = f["early_stop_patience"].get<std::size_t>();
    if (f.contains("eval_threshold"))
      cfg.federated.eval_threshold = f["eval_threshold"].get<double>();
    if (f.contains("max_grad_norm"))
      cfg.federated.max_grad_norm = f["max_grad_norm"].get<double>();
  }
  return cfg;
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> problems;
  auto need = [&](bool ok, const std::string& msg) {
    if (!ok) problems.push_back(msg);
  };

  need(cfg.federated.rounds >= 1, "federated.rounds must be >= 1");
  need(cfg.federated.clients >= 1, "federated.clients must be >= 1");
  need(cfg.federated.per_round <= cfg.federated.clients,
       "federated.per_round must be <= federated.clients (0 means all)");
  need(cfg.federated.local_epochs >= 1, "federated.local_epochs must be >= 1");
  need(cfg.federated.batch_size >= 1, "federated.batch_size must be >= 1");
  need(std::isfinite(cfg.federated.learning_rate) && cfg.federated.learning_rate > 0.0,
       "federated.learning_rate must be positive");
  need(cfg.federated.window >= 1, "federated.window must be >= 1");
  need(cfg.federated.eval_threshold >= 0.0 && cfg.federated.eval_threshold <= 1.0,
       "federated.eval_threshold must be in [0, 1]");
  need(cfg.dropout >= 0.0 && cfg.dropout < 1.0, "dropout must be in [0, 1)");
  need(cfg.hidden >= 1 || variant_layers(cfg.variant) == 0,
       "hidden must be >= 1 for recurrent variants");
  need(cfg.convergence_band > 0.0, "convergence_band must be positive");

  if (cfg.data_dir.empty()) {
    const auto& g = cfg.generator;
    need(g.sensor_count >= 1, "generator.sensors must be >= 1");
    need(g.span_days >= 1, "generator.span_days must be >= 1");
    need(g.anomaly_rate >= 0.0 && g.anomaly_rate < 0.5,
         "generator.anomaly_rate must be in [0, 0.5)");
    need(g.energy_period_s > 0, "generator.energy_period_s must be > 0");
    double wsum = 0.0;
    for (double w : g.category_weights) {
      wsum += w;
      need(w >= 0.0, "generator.category_weights must be non-negative");
    }
    need(std::fabs(wsum - 1.0) <= 1e-9, "generator.category_weights must sum to 1");
    if (g.sensor_count >= 1) {
      need(g.event_target / g.sensor_count >= cfg.federated.window + 2,
           "generator.event_target too small: each sensor needs at least window+2 records");
    }
    if (cfg.task == TaskKind::regression)
      need(g.category_weights[1] > 0.0,
           "regression needs hvac_thermostat sensors (category_weights[1] > 0)");
  }
  return problems;
}

std::size_t convergence_round(const std::vector<double>& eval_losses, double band) {
  const std::size_t n = eval_losses.size();
  if (n == 0) return 0;
  const std::size_t tail = std::min<std::size_t>(10, n);
  double plateau = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) plateau += eval_losses[i];
  plateau /= static_cast<double>(tail);
  for (std::size_t r = 0; r < n; ++r) {
    if (std::fabs(eval_losses[r] - plateau) <= band * std::fabs(plateau)) return r + 1;
  }
  return n;
}

StackedModel build_model(const ExperimentConfig& cfg, std::size_t feature_count) {
  Rng rng(derive_seed(cfg.seed, kInitStream));
  const std::size_t out_dim = cfg.task == TaskKind::classification ? 2 : 1;
  const std::size_t layers = variant_layers(cfg.variant);
  if (layers == 0) {
    return make_logistic(cfg.federated.window * feature_count, out_dim, cfg.task, rng);
  }
  if (cfg.variant == ModelVariant::fgru) {
    return make_stacked_gru(layers, feature_count, cfg.hidden, out_dim, cfg.task,
                            cfg.dropout, rng);
  }
  return make_stacked_lstm(layers, feature_count, cfg.hidden, out_dim, cfg.task,
                           cfg.dropout, rng);
}

namespace {

SensorDataset merge_datasets(int client_id,
                             const std::vector<const SensorDataset*>& members) {
  SensorDataset merged;
  merged.sensor_id = client_id;
  merged.category = members.front()->category;
  merged.task = members.front()->task;
  merged.feature_names = members.front()->feature_names;
  merged.feat_mean = members.front()->feat_mean;
  merged.feat_std = members.front()->feat_std;
  merged.target_mean = members.front()->target_mean;
  merged.target_std = members.front()->target_std;
  for (const SensorDataset* d : members) {
    merged.train.insert(merged.train.end(), d->train.begin(), d->train.end());
    merged.test.insert(merged.test.end(), d->test.begin(), d->test.end());
    merged.train_ts.insert(merged.train_ts.end(), d->train_ts.begin(), d->train_ts.end());
    merged.test_ts.insert(merged.test_ts.end(), d->test_ts.begin(), d->test_ts.end());
    merged.train_reading.insert(merged.train_reading.end(), d->train_reading.begin(),
                                d->train_reading.end());
    merged.test_reading.insert(merged.test_reading.end(), d->test_reading.begin(),
                               d->test_reading.end());
  }
  return merged;
}

}  // namespace

std::vector<ClientState> partition_clients(const ExperimentConfig& cfg,
                                           const std::vector<SensorDataset>& datasets,
                                           StackedModel const& model) {
  if (datasets.empty())
    throw std::invalid_argument("partition_clients: no sensor datasets");

  const std::size_t k = variant_is_centralized(cfg.variant)
                            ? 1
                            : std::min<std::size_t>(cfg.federated.clients, datasets.size());

  // A task groups sensors of the same category: client counts per category are
  // proportional to its sensor share, and each client's shard stays
  // category-homogeneous whenever k allows it.
  std::vector<std::size_t> order(datasets.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (datasets[a].category != datasets[b].category)
      return static_cast<int>(datasets[a].category) < static_cast<int>(datasets[b].category);
    return datasets[a].sensor_id < datasets[b].sensor_id;
  });

  std::vector<std::vector<const SensorDataset*>> groups(k);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    // contiguous category blocks spread evenly over the k clients
    const std::size_t client = pos * k / order.size();
    groups[client].push_back(&datasets[order[pos]]);
  }

  std::vector<ClientState> clients;
  clients.reserve(k);
  for (std::size_t c = 0; c < k; ++c) {
    ClientState state;
    state.sensor_id = static_cast<int>(c);
    state.dataset = std::make_shared<const SensorDataset>(
        merge_datasets(static_cast<int>(c), groups[c]));
    state.model = model;
    clients.push_back(std::move(state));
  }
  return clients;
}

namespace {

std::vector<std::string> curve_header() {
  return {"round",     "train_loss", "eval_loss",      "precision", "recall",
          "f1",        "balanced_accuracy", "auc",     "macro_precision",
          "macro_recall", "macro_f1", "mae",           "macro_mae", "duration_ms",
          "cpu_ms"};
}

std::vector<std::string> curve_row(const RoundReport& r) {
  const RoundMetrics& m = r.metrics;
  return {std::to_string(r.round),    format_double(r.train_loss),
          format_double(r.eval_loss), format_double(m.precision),
          format_double(m.recall),    format_double(m.f1),
          format_double(m.balanced_accuracy), format_double(m.auc),
          format_double(m.macro_precision),   format_double(m.macro_recall),
          format_double(m.macro_f1),  format_double(m.mae),
          format_double(m.macro_mae), format_double(r.duration_ms),
          format_double(r.cpu_ms)};
}

}  // namespace

RunArtifact run_experiment_on(const ExperimentConfig& cfg,
                              const std::vector<SensorDataset>& datasets) {
  {
    const auto problems = validate_config(cfg);
    if (!problems.empty()) {
      std::ostringstream os;
      os << "invalid experiment config:";
      for (const auto& p : problems) os << "\n  - " << p;
      throw std::invalid_argument(os.str());
    }
  }
  if (datasets.empty())
    throw std::invalid_argument("run_experiment: no sensor datasets for this task");

  const std::size_t feature_count = datasets.front().feature_names.size();
  StackedModel model = build_model(cfg, feature_count);
  std::vector<ClientState> states = partition_clients(cfg, datasets, model);

  FederatedConfig fed = cfg.federated;
  fed.seed = derive_seed(cfg.seed, kFedStream);
  fed.clients = states.size();
  if (fed.per_round == 0 || fed.per_round > states.size()) fed.per_round = states.size();
  if (fed.workers == 0)
    fed.workers = std::max(1u, std::thread::hardware_concurrency());

  std::vector<SimClient> sims;
  sims.reserve(states.size());
  for (auto& s : states) sims.emplace_back(std::move(s), fed);
  std::vector<FederatedClient*> ptrs;
  for (auto& s : sims) ptrs.push_back(&s);

  const bool writing = !cfg.out_dir.empty();
  fs::path out(cfg.out_dir);
  if (writing) {
    fs::create_directories(out);
    if (cfg.write_checkpoints) fs::create_directories(out / "checkpoints");
    json snapshot = config_to_json(cfg);
    snapshot["resolved"] = {{"clients", fed.clients},
                            {"per_round", fed.per_round},
                            {"workers", fed.workers},
                            {"feature_count", feature_count},
                            {"federated_seed", fed.seed}};
    write_text_file((out / "config.json").string(), snapshot.dump(2) + "\n");
    // start the round log fresh
    write_text_file((out / "rounds.jsonl").string(), "");
  }

  std::vector<std::vector<std::string>> curve_rows;
  RoundSink sink;
  if (writing) {
    sink = [&](const RoundReport& r, const ModelParams& params) {
      json rec{{"round", r.round},
               {"participants", r.participants},
               {"train_loss", r.train_loss},
               {"eval_loss", r.eval_loss},
               {"metrics", metrics_to_json(r.metrics)},
               {"duration_ms", r.duration_ms},
               {"cpu_ms", r.cpu_ms}};
      append_line((out / "rounds.jsonl").string(), rec.dump());
      curve_rows.push_back(curve_row(r));
      if (cfg.write_checkpoints) {
        char name[32];
        std::snprintf(name, sizeof(name), "round_%04zu.bin", r.round);
        write_params_blob((out / "checkpoints" / name).string(), params);
      }
    };
  }

  const ModelParams initial = params_flatten(model);
  FederatedRun run = run_federated(fed, ptrs, cfg.task, initial, sink);

  RunArtifact artifact;
  artifact.config = cfg;
  artifact.rounds = run.reports;
  artifact.rounds_executed = run.reports.size();
  artifact.final_params = run.final_params;
  if (!run.reports.empty()) {
    artifact.final_metrics = run.reports.back().metrics;
    artifact.final_eval_loss = run.reports.back().eval_loss;
  }

  std::vector<double> losses;
  losses.reserve(run.reports.size());
  for (const auto& r : run.reports) losses.push_back(r.eval_loss);
  artifact.convergence_round = convergence_round(losses, cfg.convergence_band);
  for (const auto& r : run.reports) {
    artifact.total_parallel_ms += r.duration_ms;
    artifact.total_cpu_ms += r.cpu_ms;
    if (r.round <= artifact.convergence_round)
      artifact.convergence_parallel_ms += r.duration_ms;
  }

  if (writing) {
    write_csv((out / "curve.csv").string(), curve_header(), curve_rows);
    write_params_blob((out / "final_params.bin").string(), artifact.final_params);

    if (cfg.task == TaskKind::classification) {
      std::vector<EvalOutput> evals;
      evals.reserve(sims.size());
      for (auto& s : sims) evals.push_back(s.evaluate(artifact.final_params));
      std::sort(evals.begin(), evals.end(),
                [](const EvalOutput& a, const EvalOutput& b) {
                  return a.sensor_id < b.sensor_id;
                });
      std::vector<Vector> score_list, target_list;
      for (auto& e : evals) {
        score_list.push_back(Vector(e.scores.begin(), e.scores.end()));
        target_list.push_back(Vector(e.targets.begin(), e.targets.end()));
      }
      const Vector scores = concat_predictions(score_list);
      const Vector targets = concat_predictions(target_list);
      std::vector<std::vector<std::string>> roc_rows;
      bool both_classes = false;
      for (double t : targets) both_classes |= t != 0.0;
      bool any_negative = false;
      for (double t : targets) any_negative |= t == 0.0;
      if (both_classes && any_negative) {
        auto [curve, auc] = roc_auc(targets, scores);
        (void)auc;
        for (const auto& p : curve.points) {
          roc_rows.push_back({format_double(p.fpr), format_double(p.tpr),
                              format_double(p.threshold)});
        }
      }
      write_csv((out / "roc_points.csv").string(), {"fpr", "tpr", "threshold"}, roc_rows);
    }

    json metrics{{"final", metrics_to_json(artifact.final_metrics)},
                 {"final_eval_loss", artifact.final_eval_loss},
                 {"rounds_executed", artifact.rounds_executed},
                 {"convergence_round", artifact.convergence_round},
                 {"timing",
                  {{"total_parallel_ms", artifact.total_parallel_ms},
                   {"total_cpu_ms", artifact.total_cpu_ms},
                   {"convergence_parallel_ms", artifact.convergence_parallel_ms}}}};
    write_text_file((out / "metrics.json").string(), metrics.dump(2) + "\n");
  }
  return artifact;
}

RunArtifact run_experiment(const ExperimentConfig& cfg) {
  const auto problems = validate_config(cfg);
  if (!problems.empty()) {
    std::ostringstream os;
    os << "invalid experiment config:";
    for (const auto& p : problems) os << "\n  - " << p;
    throw std::invalid_argument(os.str());
  }

  std::vector<EventRecord> events;
  std::vector<WeatherRecord> weather;
  if (!cfg.data_dir.empty()) {
    events = read_events_csv((fs::path(cfg.data_dir) / "events.csv").string());
    weather = read_weather_csv((fs::path(cfg.data_dir) / "weather.csv").string());
  } else {
    GeneratorConfig gen = cfg.generator;
    gen.seed = derive_seed(cfg.seed, kGenStream);
    weather = generate_weather(gen);
    events = generate_events(gen, weather);
  }

  DatasetOptions opts;
  opts.task = cfg.task;
  opts.window = cfg.federated.window;
  opts.max_windows_per_sensor = cfg.max_windows_per_sensor;
  const auto datasets = build_sensor_datasets(events, weather, opts);
  return run_experiment_on(cfg, datasets);
}

void generate_dataset_files(const ExperimentConfig& cfg, const std::string& out_dir) {
  const auto problems = validate_config(cfg);
  if (!problems.empty()) {
    std::ostringstream os;
    os << "invalid config:";
    for (const auto& p : problems) os << "\n  - " << p;
    throw std::invalid_argument(os.str());
  }

  GeneratorConfig gen = cfg.generator;
  gen.seed = derive_seed(cfg.seed, kGenStream);
  const auto weather = generate_weather(gen);
  const auto events = generate_events(gen, weather);
  const auto buckets = aggregate_energy(events, gen.energy_period_s);

  fs::path out(out_dir);
  fs::create_directories(out);
  write_events_csv((out / "events.csv").string(), events);
  write_weather_csv((out / "weather.csv").string(), weather);
  write_energy_csv((out / "energy.csv").string(), buckets);

  DatasetOptions opts;
  opts.task = cfg.task;
  opts.window = cfg.federated.window;
  opts.max_windows_per_sensor = cfg.max_windows_per_sensor;
  const auto datasets = build_sensor_datasets(events, weather, opts);

  std::size_t anomalous = 0;
  for (const auto& e : events) anomalous += static_cast<std::size_t>(e.anomaly_label);

  json manifest{{"config", config_to_json(cfg)},
                {"generator_seed", gen.seed},
                {"counts",
                 {{"sensors", gen.sensor_count},
                  {"events", events.size()},
                  {"anomalous_events", anomalous},
                  {"weather_records", weather.size()},
                  {"energy_buckets", buckets.size()}}},
                {"splits", json::array()}};
  for (const auto& d : datasets) {
    manifest["splits"].push_back({{"sensor_id", d.sensor_id},
                                  {"category", category_name(d.category)},
                                  {"windows", d.train.size() + d.test.size()},
                                  {"train", d.train.size()},
                                  {"test", d.test.size()}});
  }
  if (!datasets.empty())
    manifest["feature_names"] = datasets.front().feature_names;
  write_text_file((out / "dataset_manifest.json").string(), manifest.dump(2) + "\n");
}

namespace {

const std::vector<std::string> kComparisonHeader = {
    "variant", "precision", "recall", "f1", "balanced_accuracy", "mae"};

}  // namespace

ComparisonTable compare_models(const ExperimentConfig& base,
                               const std::vector<ModelVariant>& variants) {
  if (variants.empty()) throw std::invalid_argument("compare_models: no variants");

  ComparisonTable table;
  for (ModelVariant v : variants) {
    ComparisonRow row;
    row.variant = variant_name(v);

    ExperimentConfig cls = base;
    cls.variant = v;
    cls.task = TaskKind::classification;
    if (!base.out_dir.empty())
      cls.out_dir = (fs::path(base.out_dir) / (row.variant + "_classification")).string();
    const RunArtifact ca = run_experiment(cls);
    row.precision = ca.final_metrics.precision;
    row.recall = ca.final_metrics.recall;
    row.f1 = ca.final_metrics.f1;
    row.balanced_accuracy = ca.final_metrics.balanced_accuracy;

    ExperimentConfig reg = base;
    reg.variant = v;
    reg.task = TaskKind::regression;
    if (!base.out_dir.empty())
      reg.out_dir = (fs::path(base.out_dir) / (row.variant + "_regression")).string();
    const RunArtifact ra = run_experiment(reg);
    row.mae = ra.final_metrics.mae;

    table.rows.push_back(row);
  }

  auto best_by = [&](auto key, bool maximize) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
      const double a = key(table.rows[i]);
      const double b = key(table.rows[best]);
      if (maximize ? a > b : a < b) best = i;
    }
    return table.rows[best].variant;
  };
  table.best_precision = best_by([](const ComparisonRow& r) { return r.precision; }, true);
  table.best_recall = best_by([](const ComparisonRow& r) { return r.recall; }, true);
  table.best_f1 = best_by([](const ComparisonRow& r) { return r.f1; }, true);
  table.best_balanced_accuracy =
      best_by([](const ComparisonRow& r) { return r.balanced_accuracy; }, true);
  table.best_mae = best_by([](const ComparisonRow& r) { return r.mae; }, false);

  if (!base.out_dir.empty()) {
    fs::create_directories(base.out_dir);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : table.rows) {
      rows.push_back({r.variant, format_double(r.precision), format_double(r.recall),
                      format_double(r.f1), format_double(r.balanced_accuracy),
                      format_double(r.mae)});
    }
    write_csv((fs::path(base.out_dir) / "comparison.csv").string(), kComparisonHeader,
              rows);
    json j{{"best",
            {{"precision", table.best_precision},
             {"recall", table.best_recall},
             {"f1", table.best_f1},
             {"balanced_accuracy", table.best_balanced_accuracy},
             {"mae", table.best_mae}}},
           {"rows", json::array()}};
    for (const auto& r : table.rows) {
      j["rows"].push_back({{"variant", r.variant},
                           {"precision", r.precision},
                           {"recall", r.recall},
                           {"f1", r.f1},
                           {"balanced_accuracy",
                            std::isnan(r.balanced_accuracy) ? json(nullptr)
                                                            : json(r.balanced_accuracy)},
                           {"mae", r.mae}});
    }
    write_text_file((fs::path(base.out_dir) / "comparison.json").string(),
                    j.dump(2) + "\n");
  }
  return table;
}

ComparisonTable comparison_from_csv(const std::string& path) {
  const auto rows = read_csv(path, kComparisonHeader);
  ComparisonTable table;
  for (const auto& r : rows) {
    ComparisonRow row;
    row.variant = r[0];
    row.precision = parse_double(r[1], path);
    row.recall = parse_double(r[2], path);
    row.f1 = parse_double(r[3], path);
    row.balanced_accuracy = parse_double(r[4], path);
    row.mae = parse_double(r[5], path);
    table.rows.push_back(row);
  }
  return table;
}

std::vector<ConvergenceRecord> convergence_study(
    const ExperimentConfig& base, const std::vector<std::size_t>& k_values,
    const std::vector<ModelVariant>& variants) {
  if (k_values.empty()) throw std::invalid_argument("convergence_study: no K values");
  for (std::size_t k : k_values) {
    if (k < 1) throw std::invalid_argument("convergence_study: K must be >= 1");
    if (k > base.generator.sensor_count) {
      std::ostringstream os;
      os << "convergence_study: K=" << k << " exceeds sensor count "
         << base.generator.sensor_count;
      throw std::invalid_argument(os.str());
    }
  }

  std::vector<ConvergenceRecord> records;
  for (std::size_t k : k_values) {
    for (ModelVariant v : variants) {
      ExperimentConfig cfg = base;
      cfg.task = TaskKind::classification;
      cfg.variant = v;
      cfg.federated.clients = k;
      cfg.federated.per_round = 0;
      if (!base.out_dir.empty()) {
        std::ostringstream dir;
        dir << "k" << k << "_" << variant_name(v);
        cfg.out_dir = (fs::path(base.out_dir) / dir.str()).string();
      }
      const RunArtifact art = run_experiment(cfg);
      ConvergenceRecord rec;
      rec.clients = k;
      rec.variant = variant_name(v);
      rec.rounds_to_convergence = art.convergence_round;
      rec.convergence_time_ms = art.convergence_parallel_ms;
      rec.rounds_executed = art.rounds_executed;
      rec.final_eval_loss = art.final_eval_loss;
      records.push_back(rec);
    }
  }

  if (!base.out_dir.empty()) {
    fs::create_directories(base.out_dir);
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : records) {
      rows.push_back({std::to_string(r.clients), r.variant,
                      std::to_string(r.rounds_to_convergence),
                      format_double(r.convergence_time_ms),
                      std::to_string(r.rounds_executed),
                      format_double(r.final_eval_loss)});
    }
    write_csv((fs::path(base.out_dir) / "convergence.csv").string(),
              {"clients", "variant", "rounds_to_convergence", "convergence_time_ms",
               "rounds_executed", "final_eval_loss"},
              rows);
  }
  return records;
}

void emit_trace(const StackedModel& model, const SensorDataset& dataset,
                std::size_t horizon, const std::string& path) {
  if (horizon > dataset.test.size()) {
    std::ostringstream os;
    os << "emit_trace: horizon " << horizon << " exceeds held-out range "
       << dataset.test.size();
    throw std::invalid_argument(os.str());
  }
  Rng unused(0);
  std::vector<std::vector<std::string>> rows;
  rows.reserve(horizon);
  if (dataset.task == TaskKind::classification) {
    for (std::size_t i = 0; i < horizon; ++i) {
      auto [pred, cache] = stacked_forward(model, dataset.test[i].window, false, unused);
      rows.push_back({format_timestamp(dataset.test_ts[i]),
                      format_double(dataset.test_reading[i]), format_double(pred[1]),
                      format_double(dataset.test[i].target)});
    }
    write_csv(path, {"timestamp", "reading", "anomaly_score", "label"}, rows);
  } else {
    for (std::size_t i = 0; i < horizon; ++i) {
      auto [pred, cache] = stacked_forward(model, dataset.test[i].window, false, unused);
      const double actual =
          dataset.test[i].target * dataset.target_std + dataset.target_mean;
      const double predicted = pred[0] * dataset.target_std + dataset.target_mean;
      rows.push_back({format_timestamp(dataset.test_ts[i]), format_double(actual),
                      format_double(predicted)});
    }
    write_csv(path, {"timestamp", "actual_kwh", "predicted_kwh"}, rows);
  }
}

std::string run_trace(const ExperimentConfig& cfg, std::size_t horizon,
                      std::optional<int> sensor_id) {
  std::vector<EventRecord> events;
  std::vector<WeatherRecord> weather;
  if (!cfg.data_dir.empty()) {
    events = read_events_csv((fs::path(cfg.data_dir) / "events.csv").string());
    weather = read_weather_csv((fs::path(cfg.data_dir) / "weather.csv").string());
  } else {
    GeneratorConfig gen = cfg.generator;
    gen.seed = derive_seed(cfg.seed, kGenStream);
    weather = generate_weather(gen);
    events = generate_events(gen, weather);
  }
  DatasetOptions opts;
  opts.task = cfg.task;
  opts.window = cfg.federated.window;
  opts.max_windows_per_sensor = cfg.max_windows_per_sensor;
  const auto datasets = build_sensor_datasets(events, weather, opts);
  if (datasets.empty()) throw std::invalid_argument("run_trace: no sensor datasets");

  const SensorDataset* target = &datasets.front();
  if (sensor_id) {
    target = nullptr;
    for (const auto& d : datasets) {
      if (d.sensor_id == *sensor_id) {
        target = &d;
        break;
      }
    }
    if (!target) {
      std::ostringstream os;
      os << "run_trace: no dataset for sensor " << *sensor_id;
      throw std::invalid_argument(os.str());
    }
  }

  const RunArtifact art = run_experiment_on(cfg, datasets);
  StackedModel model = build_model(cfg, datasets.front().feature_names.size());
  params_load(model, art.final_params);

  fs::path out(cfg.out_dir.empty() ? "." : cfg.out_dir);
  fs::create_directories(out);
  const std::string path = (out / "trace.csv").string();
  emit_trace(model, *target, horizon, path);
  return path;
}

}  // namespace fslstm
