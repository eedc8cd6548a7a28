// fsl — command-line driver for the fslstm shared library.
//
// Subcommands: generate, train, compare, ablation, convergence, trace.
// Flags mirror the experiment configuration; a --config JSON file, when
// given, overrides flag values. FSLSTM_OUT_ROOT, when set, prefixes
// relative output directories.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "fslstm/fslstm.h"

namespace {

using nlohmann::json;

struct CommonFlags {
  std::string preset = "desk";
  std::string config_file;
  std::string out_dir;
  std::string data_dir;
  std::string variant;
  std::string task;
  std::uint64_t seed = 0;
  std::size_t hidden = 0;
  double dropout = -1.0;
  std::size_t max_windows = 0;
  // federated
  std::size_t clients = 0;
  std::size_t rounds = 0;
  std::size_t per_round = 0;
  std::size_t epochs = 0;
  std::size_t batch = 0;
  double lr = 0.0;
  std::size_t window = 0;
  std::size_t workers = 0;
  double tol = -1.0;
  std::size_t patience = 0;
  double threshold = -1.0;
  double clip = -1.0;
  // generator
  std::size_t sensors = 0;
  int days = 0;
  std::size_t events = 0;
  double rate = -1.0;
  double noise = -1.0;
  bool no_checkpoints = false;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--preset", f.preset, "configuration preset: desk or paper");
  cmd->add_option("--config", f.config_file,
                  "JSON config file; its values override the flags");
  cmd->add_option("--out", f.out_dir, "output directory");
  cmd->add_option("--data", f.data_dir, "load events.csv/weather.csv from this directory");
  cmd->add_option("--variant", f.variant,
                  "model: lr | lstm | flr | fgru | flstm1 | flstm2 | fslstm");
  cmd->add_option("--task", f.task, "classification | regression");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--hidden", f.hidden, "hidden units per recurrent layer");
  cmd->add_option("--dropout", f.dropout, "regular/recurrent dropout rate");
  cmd->add_option("--max-windows", f.max_windows, "cap windows per sensor (0 = all)");
  cmd->add_option("--clients,-k", f.clients, "number of federated clients K");
  cmd->add_option("--rounds,-r", f.rounds, "federated rounds R");
  cmd->add_option("--per-round,-m", f.per_round, "sensors per round m (0 = all)");
  cmd->add_option("--epochs,-e", f.epochs, "local epochs E");
  cmd->add_option("--batch,-b", f.batch, "local minibatch size B");
  cmd->add_option("--lr", f.lr, "learning rate");
  cmd->add_option("--window,-t", f.window, "window length T");
  cmd->add_option("--workers", f.workers, "client worker threads (0 = hardware)");
  cmd->add_option("--tol", f.tol, "early-stop improvement tolerance");
  cmd->add_option("--patience", f.patience, "early-stop patience in rounds (0 = off)");
  cmd->add_option("--threshold", f.threshold, "decision threshold for point metrics");
  cmd->add_option("--clip", f.clip, "max gradient norm (0 = off)");
  cmd->add_option("--sensors", f.sensors, "generator: sensor count");
  cmd->add_option("--days", f.days, "generator: span in days");
  cmd->add_option("--events", f.events, "generator: total event target");
  cmd->add_option("--rate", f.rate, "generator: anomaly rate");
  cmd->add_option("--noise", f.noise, "generator: noise amplitude scale");
  cmd->add_flag("--no-checkpoints", f.no_checkpoints, "skip per-round checkpoint blobs");
}

std::string apply_out_root(const std::string& out_dir) {
  if (out_dir.empty() || out_dir.front() == '/') return out_dir;
  const char* root = std::getenv("FSLSTM_OUT_ROOT");
  if (!root || !*root) return out_dir;
  return std::string(root) + "/" + out_dir;
}

json build_config_json(const CLI::App* cmd, const CommonFlags& f,
                       const std::string& default_out) {
  json cfg;
  cfg["preset"] = f.preset;
  auto set_if = [&](const char* flag, auto&& assign) {
    if (cmd->count(flag) > 0) assign();
  };

  std::string out_dir = default_out;
  set_if("--out", [&] { out_dir = f.out_dir; });
  cfg["out_dir"] = apply_out_root(out_dir);

  set_if("--data", [&] { cfg["data_dir"] = f.data_dir; });
  set_if("--variant", [&] { cfg["variant"] = f.variant; });
  set_if("--task", [&] { cfg["task"] = f.task; });
  set_if("--seed", [&] { cfg["seed"] = f.seed; });
  set_if("--hidden", [&] { cfg["hidden"] = f.hidden; });
  set_if("--dropout", [&] { cfg["dropout"] = f.dropout; });
  set_if("--max-windows", [&] { cfg["max_windows_per_sensor"] = f.max_windows; });
  set_if("--no-checkpoints", [&] { cfg["write_checkpoints"] = false; });

  json fed = json::object();
  set_if("--clients", [&] { fed["clients"] = f.clients; });
  set_if("--rounds", [&] { fed["rounds"] = f.rounds; });
  set_if("--per-round", [&] { fed["per_round"] = f.per_round; });
  set_if("--epochs", [&] { fed["local_epochs"] = f.epochs; });
  set_if("--batch", [&] { fed["batch_size"] = f.batch; });
  set_if("--lr", [&] { fed["learning_rate"] = f.lr; });
  set_if("--window", [&] { fed["window"] = f.window; });
  set_if("--workers", [&] { fed["workers"] = f.workers; });
  set_if("--tol", [&] { fed["early_stop_tol"] = f.tol; });
  set_if("--patience", [&] { fed["early_stop_patience"] = f.patience; });
  set_if("--threshold", [&] { fed["eval_threshold"] = f.threshold; });
  set_if("--clip", [&] { fed["max_grad_norm"] = f.clip; });
  if (!fed.empty()) cfg["federated"] = fed;

  json gen = json::object();
  set_if("--sensors", [&] { gen["sensors"] = f.sensors; });
  set_if("--days", [&] { gen["span_days"] = f.days; });
  set_if("--events", [&] { gen["event_target"] = f.events; });
  set_if("--rate", [&] { gen["anomaly_rate"] = f.rate; });
  set_if("--noise", [&] { gen["noise"] = f.noise; });
  if (!gen.empty()) cfg["generator"] = gen;

  if (!f.config_file.empty()) {
    std::ifstream in(f.config_file);
    if (!in) throw std::runtime_error("cannot open config file '" + f.config_file + "'");
    json file_json = json::parse(in);
    cfg.merge_patch(file_json);  // config file overrides flags
    if (cfg.contains("out_dir")) cfg["out_dir"] = apply_out_root(cfg["out_dir"]);
  }
  return cfg;
}

int report_failure(const char* what) {
  std::cerr << "error: " << what << ": " << fsl_last_error() << "\n";
  return 1;
}

int run_generate(const CLI::App* cmd, const CommonFlags& f) {
  const json cfg = build_config_json(cmd, f, "runs/dataset");
  const std::string out = cfg["out_dir"].get<std::string>();
  if (fsl_generate(cfg.dump().c_str(), out.c_str()) != FSL_OK)
    return report_failure("generate");
  std::cout << "dataset written to " << out << "\n";
  return 0;
}

int run_train(const CLI::App* cmd, const CommonFlags& f) {
  const json cfg = build_config_json(cmd, f, "runs/train");
  fsl_experiment* exp = nullptr;
  if (fsl_experiment_create(cfg.dump().c_str(), &exp) != FSL_OK)
    return report_failure("train");
  char* summary = nullptr;
  const fsl_status rc = fsl_experiment_run(exp, nullptr, &summary);
  fsl_experiment_destroy(exp);
  if (rc != FSL_OK) return report_failure("train");
  std::cout << summary << "\n";
  fsl_string_free(summary);
  std::cout << "artifacts in " << cfg["out_dir"].get<std::string>() << "\n";
  return 0;
}

int run_compare(const CLI::App* cmd, const CommonFlags& f, const std::string& variants,
                const std::string& default_out, const char* label) {
  const json cfg = build_config_json(cmd, f, default_out);
  char* table = nullptr;
  if (fsl_compare(cfg.dump().c_str(), variants.c_str(), nullptr, &table) != FSL_OK)
    return report_failure(label);
  std::cout << table << "\n";
  fsl_string_free(table);
  std::cout << "table in " << cfg["out_dir"].get<std::string>() << "/comparison.csv\n";
  return 0;
}

int run_convergence(const CLI::App* cmd, const CommonFlags& f, const std::string& ks,
                    const std::string& variants) {
  const json cfg = build_config_json(cmd, f, "runs/convergence");
  char* records = nullptr;
  if (fsl_convergence(cfg.dump().c_str(), ks.c_str(), variants.c_str(), nullptr,
                      &records) != FSL_OK)
    return report_failure("convergence");
  std::cout << records << "\n";
  fsl_string_free(records);
  std::cout << "records in " << cfg["out_dir"].get<std::string>() << "/convergence.csv\n";
  return 0;
}

int run_trace(const CLI::App* cmd, const CommonFlags& f, std::size_t horizon,
              int sensor) {
  const json cfg = build_config_json(cmd, f, "runs/trace");
  if (fsl_trace(cfg.dump().c_str(), horizon, sensor, nullptr) != FSL_OK)
    return report_failure("trace");
  std::cout << "trace in " << cfg["out_dir"].get<std::string>() << "/trace.csv\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "fslstm: federated recurrent-model training simulator for smart-building "
      "sensor data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fsl_version()));

  CommonFlags fgen, ftrain, fcmp, fabl, fconv, ftr;

  CLI::App* generate = app.add_subcommand("generate", "write a synthetic dataset");
  add_common_flags(generate, fgen);

  CLI::App* train = app.add_subcommand("train", "run a single experiment");
  add_common_flags(train, ftrain);

  CLI::App* compare = app.add_subcommand("compare", "model comparison table");
  add_common_flags(compare, fcmp);
  std::string cmp_variants = "lr,lstm,flr,fgru,fslstm";
  compare->add_option("--variants", cmp_variants, "comma-separated model variants");

  CLI::App* ablation = app.add_subcommand("ablation", "depth ablation table");
  add_common_flags(ablation, fabl);

  CLI::App* convergence =
      app.add_subcommand("convergence", "convergence vs client count study");
  add_common_flags(convergence, fconv);
  std::string k_list = "1,5,10,20";
  std::string conv_variants = "fslstm,fgru,lstm";
  convergence->add_option("--k-list", k_list, "comma-separated client counts");
  convergence->add_option("--variants", conv_variants, "comma-separated model variants");

  CLI::App* trace = app.add_subcommand("trace", "per-timestep prediction trace");
  add_common_flags(trace, ftr);
  std::size_t horizon = 96;
  int sensor = -1;
  trace->add_option("--horizon", horizon, "number of held-out steps to emit");
  trace->add_option("--sensor", sensor, "sensor id (-1 = first dataset)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return run_generate(generate, fgen);
    if (train->parsed()) return run_train(train, ftrain);
    if (compare->parsed())
      return run_compare(compare, fcmp, cmp_variants, "runs/compare", "compare");
    if (ablation->parsed())
      return run_compare(ablation, fabl, "flstm1,flstm2,fslstm", "runs/ablation",
                         "ablation");
    if (convergence->parsed())
      return run_convergence(convergence, fconv, k_list, conv_variants);
    if (trace->parsed()) return run_trace(trace, ftr, horizon, sensor);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
