// Exercises the shared-library C surface the way an external caller would:
// status codes, thread-local error messages, opaque experiment handles and
// artifact files on disk.

#include <cassert>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>

#include "fslstm/fslstm.h"

namespace fs = std::filesystem;

namespace {

int failures = 0;

void expect(bool ok, const char* what) {
  if (!ok) {
    std::fprintf(stderr, "FAILED: %s (last error: %s)\n", what, fsl_last_error());
    ++failures;
  }
}

const char* kTinyConfig = R"({
  "preset": "desk",
  "seed": 5,
  "hidden": 8,
  "max_windows_per_sensor": 30,
  "write_checkpoints": false,
  "generator": {"sensors": 6, "span_days": 5, "event_target": 1440},
  "federated": {"clients": 3, "rounds": 3, "window": 6, "batch_size": 16,
                 "learning_rate": 0.5, "early_stop_patience": 0}
})";

}  // namespace

int main() {
  expect(fsl_version() != nullptr && std::strlen(fsl_version()) > 0, "version string");
  expect(std::strlen(fsl_last_error()) == 0, "no error before any call");

  // preset defaults round-trip
  char* defaults = nullptr;
  expect(fsl_default_config("desk", &defaults) == FSL_OK, "default config fetch");
  expect(defaults != nullptr && std::strstr(defaults, "\"preset\"") != nullptr,
         "default config content");
  fsl_string_free(defaults);
  expect(fsl_default_config("nope", &defaults) == FSL_ERR_INVALID_ARGUMENT,
         "unknown preset status");
  expect(std::strlen(fsl_last_error()) > 0, "unknown preset message");

  // argument validation
  expect(fsl_experiment_create(nullptr, nullptr) == FSL_ERR_INVALID_ARGUMENT,
         "null args rejected");
  fsl_experiment* exp = nullptr;
  expect(fsl_experiment_create("{not json", &exp) == FSL_ERR_INVALID_ARGUMENT,
         "malformed json rejected");
  expect(fsl_experiment_create(R"({"federated": {"rounds": 0}})", &exp) ==
             FSL_ERR_INVALID_ARGUMENT,
         "invalid config rejected");
  expect(std::strstr(fsl_last_error(), "rounds") != nullptr,
         "invalid config message names the field");

  // dataset generation
  const fs::path gen_dir = fs::temp_directory_path() / "fslstm_capi_gen";
  fs::remove_all(gen_dir);
  expect(fsl_generate(kTinyConfig, gen_dir.string().c_str()) == FSL_OK, "generate");
  expect(fs::exists(gen_dir / "events.csv"), "events.csv written");
  expect(fs::exists(gen_dir / "dataset_manifest.json"), "manifest written");

  // experiment handle lifecycle
  const fs::path run_dir = fs::temp_directory_path() / "fslstm_capi_run";
  fs::remove_all(run_dir);
  expect(fsl_experiment_create(kTinyConfig, &exp) == FSL_OK, "experiment create");
  char* summary = nullptr;
  expect(fsl_experiment_run(exp, run_dir.string().c_str(), &summary) == FSL_OK,
         "experiment run");
  expect(summary != nullptr && std::strstr(summary, "rounds_executed") != nullptr,
         "summary content");
  fsl_string_free(summary);
  fsl_experiment_destroy(exp);
  expect(fs::exists(run_dir / "metrics.json"), "metrics.json written");
  expect(fs::exists(run_dir / "curve.csv"), "curve.csv written");

  // comparison over two cheap variants
  const fs::path cmp_dir = fs::temp_directory_path() / "fslstm_capi_cmp";
  fs::remove_all(cmp_dir);
  char* table = nullptr;
  expect(fsl_compare(kTinyConfig, "lr,flr", cmp_dir.string().c_str(), &table) == FSL_OK,
         "compare");
  expect(table != nullptr && std::strstr(table, "\"best\"") != nullptr, "table content");
  fsl_string_free(table);
  expect(fs::exists(cmp_dir / "comparison.csv"), "comparison.csv written");
  expect(fsl_compare(kTinyConfig, "", nullptr, nullptr) == FSL_ERR_INVALID_ARGUMENT,
         "empty variant list rejected");

  // trace horizon out of range surfaces as invalid argument
  const fs::path trace_dir = fs::temp_directory_path() / "fslstm_capi_trace";
  fs::remove_all(trace_dir);
  expect(fsl_trace(kTinyConfig, 100000, -1, trace_dir.string().c_str()) ==
             FSL_ERR_INVALID_ARGUMENT,
         "oversized horizon rejected");
  expect(std::strstr(fsl_last_error(), "horizon") != nullptr, "horizon message");
  expect(fsl_trace(kTinyConfig, 5, -1, trace_dir.string().c_str()) == FSL_OK, "trace");
  expect(fs::exists(trace_dir / "trace.csv"), "trace.csv written");

  fs::remove_all(gen_dir);
  fs::remove_all(run_dir);
  fs::remove_all(cmp_dir);
  fs::remove_all(trace_dir);

  if (failures == 0) {
    std::printf("c api: all checks passed\n");
    return 0;
  }
  std::fprintf(stderr, "c api: %d check(s) failed\n", failures);
  return 1;
}
