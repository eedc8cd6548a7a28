#include "fslstm/fslstm.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <optional>
#include <exception>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "harness.hpp"
#include "io.hpp"

namespace {

thread_local std::string t_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

fsl_status fail(fsl_status code, const std::string& message) {
  t_last_error = message;
  return code;
}

// every entry point funnels through here so exceptions map to status codes
template <typename Fn>
fsl_status guarded(Fn&& fn) {
  try {
    t_last_error.clear();
    fn();
    return FSL_OK;
  } catch (const std::invalid_argument& e) {
    return fail(FSL_ERR_INVALID_ARGUMENT, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(FSL_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::ios_base::failure& e) {
    return fail(FSL_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(FSL_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(FSL_ERR_RUNTIME, "unknown error");
  }
}

fslstm::ExperimentConfig parse_config(const char* config_json) {
  if (!config_json) throw std::invalid_argument("config_json is NULL");
  return fslstm::config_from_json(nlohmann::json::parse(config_json));
}

std::vector<std::string> split_list(const char* csv, const char* what) {
  if (!csv || !*csv) throw std::invalid_argument(std::string(what) + " list is empty");
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw std::invalid_argument(std::string(what) + " list is empty");
  return out;
}

nlohmann::json summary_json(const fslstm::RunArtifact& art) {
  auto num = [](double v) {
    return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v);
  };
  const fslstm::RoundMetrics& m = art.final_metrics;
  return nlohmann::json{
      {"final",
       {{"precision", m.precision},
        {"recall", m.recall},
        {"f1", m.f1},
        {"balanced_accuracy", num(m.balanced_accuracy)},
        {"auc", num(m.auc)},
        {"macro_f1", m.macro_f1},
        {"mae", m.mae},
        {"macro_mae", m.macro_mae}}},
      {"final_eval_loss", art.final_eval_loss},
      {"rounds_executed", art.rounds_executed},
      {"convergence_round", art.convergence_round},
      {"timing",
       {{"total_parallel_ms", art.total_parallel_ms},
        {"total_cpu_ms", art.total_cpu_ms},
        {"convergence_parallel_ms", art.convergence_parallel_ms}}}};
}

}  // namespace

struct fsl_experiment {
  fslstm::ExperimentConfig config;
};

extern "C" {

const char* fsl_version(void) { return "1.0.0"; }

const char* fsl_last_error(void) { return t_last_error.c_str(); }

void fsl_string_free(char* s) { std::free(s); }

fsl_status fsl_default_config(const char* preset, char** config_json_out) {
  return guarded([&] {
    if (!preset) throw std::invalid_argument("preset is NULL");
    if (!config_json_out) throw std::invalid_argument("config_json_out is NULL");
    const auto cfg = fslstm::preset_config(preset);
    *config_json_out = dup_string(fslstm::config_to_json(cfg).dump(2));
  });
}

fsl_status fsl_generate(const char* config_json, const char* out_dir) {
  return guarded([&] {
    if (!out_dir) throw std::invalid_argument("out_dir is NULL");
    fslstm::generate_dataset_files(parse_config(config_json), out_dir);
  });
}

fsl_status fsl_experiment_create(const char* config_json, fsl_experiment** out) {
  return guarded([&] {
    if (!out) throw std::invalid_argument("out is NULL");
    auto cfg = parse_config(config_json);
    const auto problems = fslstm::validate_config(cfg);
    if (!problems.empty()) {
      std::ostringstream os;
      os << "invalid experiment config:";
      for (const auto& p : problems) os << "\n  - " << p;
      throw std::invalid_argument(os.str());
    }
    *out = new fsl_experiment{std::move(cfg)};
  });
}

fsl_status fsl_experiment_run(fsl_experiment* exp, const char* out_dir,
                              char** summary_json_out) {
  return guarded([&] {
    if (!exp) throw std::invalid_argument("experiment handle is NULL");
    fslstm::ExperimentConfig cfg = exp->config;
    if (out_dir) cfg.out_dir = out_dir;
    const auto art = fslstm::run_experiment(cfg);
    if (summary_json_out) *summary_json_out = dup_string(summary_json(art).dump(2));
  });
}

void fsl_experiment_destroy(fsl_experiment* exp) { delete exp; }

fsl_status fsl_compare(const char* config_json, const char* variants,
                       const char* out_dir, char** table_json_out) {
  return guarded([&] {
    auto cfg = parse_config(config_json);
    if (out_dir) cfg.out_dir = out_dir;
    std::vector<fslstm::ModelVariant> list;
    for (const auto& name : split_list(variants, "variants"))
      list.push_back(fslstm::variant_from_name(name));
    const auto table = fslstm::compare_models(cfg, list);
    if (table_json_out) {
      nlohmann::json j{{"rows", nlohmann::json::array()},
                       {"best",
                        {{"precision", table.best_precision},
                         {"recall", table.best_recall},
                         {"f1", table.best_f1},
                         {"balanced_accuracy", table.best_balanced_accuracy},
                         {"mae", table.best_mae}}}};
      for (const auto& r : table.rows) {
        j["rows"].push_back({{"variant", r.variant},
                             {"precision", r.precision},
                             {"recall", r.recall},
                             {"f1", r.f1},
                             {"balanced_accuracy",
                              std::isnan(r.balanced_accuracy)
                                  ? nlohmann::json(nullptr)
                                  : nlohmann::json(r.balanced_accuracy)},
                             {"mae", r.mae}});
      }
      *table_json_out = dup_string(j.dump(2));
    }
  });
}

fsl_status fsl_convergence(const char* config_json, const char* k_values,
                           const char* variants, const char* out_dir,
                           char** records_json_out) {
  return guarded([&] {
    auto cfg = parse_config(config_json);
    if (out_dir) cfg.out_dir = out_dir;
    std::vector<std::size_t> ks;
    for (const auto& s : split_list(k_values, "k_values"))
      ks.push_back(static_cast<std::size_t>(fslstm::parse_int(s, "k_values")));
    std::vector<fslstm::ModelVariant> list;
    for (const auto& name : split_list(variants, "variants"))
      list.push_back(fslstm::variant_from_name(name));
    const auto records = fslstm::convergence_study(cfg, ks, list);
    if (records_json_out) {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& r : records) {
        j.push_back({{"clients", r.clients},
                     {"variant", r.variant},
                     {"rounds_to_convergence", r.rounds_to_convergence},
                     {"convergence_time_ms", r.convergence_time_ms},
                     {"rounds_executed", r.rounds_executed},
                     {"final_eval_loss", r.final_eval_loss}});
      }
      *records_json_out = dup_string(j.dump(2));
    }
  });
}

fsl_status fsl_trace(const char* config_json, size_t horizon, int sensor_id,
                     const char* out_dir) {
  return guarded([&] {
    auto cfg = parse_config(config_json);
    if (out_dir) cfg.out_dir = out_dir;
    std::optional<int> sensor;
    if (sensor_id >= 0) sensor = sensor_id;
    fslstm::run_trace(cfg, horizon, sensor);
  });
}

}  // extern "C"
