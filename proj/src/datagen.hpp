#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "model.hpp"

namespace fslstm {

enum class SensorCategory { light, hvac_thermostat, occupancy, water_leakage, access };

inline constexpr std::array<SensorCategory, 5> kAllCategories = {
    SensorCategory::light, SensorCategory::hvac_thermostat, SensorCategory::occupancy,
    SensorCategory::water_leakage, SensorCategory::access};

const char* category_name(SensorCategory c);
SensorCategory category_from_name(const std::string& name);

struct EventRecord {
  std::int64_t timestamp = 0;  // UTC seconds
  int sensor_id = -1;
  SensorCategory category = SensorCategory::light;
  double reading = 0.0;  // lux, degC, occupancy flag, moisture level, access flag
  double energy_kwh = 0.0;
  int anomaly_label = 0;  // 0 normal, 1 anomalous
};

struct WeatherRecord {
  std::int64_t timestamp = 0;
  double temperature_c = 0.0;
  double pressure_hpa = 0.0;
  double humidity_pct = 0.0;
  double precipitation_mm = 0.0;
  double solar_wm2 = 0.0;
  double wind_ms = 0.0;
};

struct GeneratorConfig {
  std::size_t sensor_count = 180;
  // lights, hvac thermostats, occupancy, water leakage, access
  std::array<double, 5> category_weights = {0.40, 0.20, 0.20, 0.10, 0.10};
  int start_year = 2019, start_month = 5, start_day = 1;
  int span_days = 123;  // May through August
  std::size_t event_target = 100000;
  double anomaly_rate = 0.05;  // fraction of anomalous steps per sensor
  std::int64_t energy_period_s = 900;
  double noise = 1.0;  // noise amplitude scale; 0 gives the noiseless processes
  std::uint64_t seed = 7;

  std::int64_t start_timestamp() const;
  std::int64_t span_seconds() const { return static_cast<std::int64_t>(span_days) * 86400; }
  // regular per-sensor cadence derived from the event target
  std::int64_t event_interval() const;
  std::size_t steps_per_sensor() const;
};

// Hourly records: per-day seasonal level plus a diurnal cosine peaking at
// solar noon, with seeded noise on every channel. Humidity is clamped to
// [0, 100]; precipitation, solar radiation and wind stay non-negative.
std::vector<WeatherRecord> generate_weather(const GeneratorConfig& cfg);

// Per-category base processes (lights follow occupancy and daylight,
// thermostats track a scheduled setpoint against outdoor temperature,
// occupancy and access follow a weekday office schedule, leakage sits near
// zero) with injected anomaly segments: stuck-on lights, thermostat
// temperature drop with excessive energy draw, leakage spikes, off-hours
// access/occupancy. Records inside a segment are labeled 1.
std::vector<EventRecord> generate_events(const GeneratorConfig& cfg,
                                         const std::vector<WeatherRecord>& weather);

struct EnergyBucket {
  std::int64_t timestamp = 0;  // aligned period start
  int sensor_id = -1;
  double kwh = 0.0;
};

// Per-sensor energy summed over aligned periods; total energy is conserved.
std::vector<EnergyBucket> aggregate_energy(const std::vector<EventRecord>& events,
                                           std::int64_t period_s);

// One sensor's windowed supervised dataset. Windows are T x F feature
// matrices; the target belongs to the step immediately after the window
// (anomaly label for classification, energy for regression).
struct SensorDataset {
  int sensor_id = -1;
  SensorCategory category = SensorCategory::light;
  TaskKind task = TaskKind::classification;
  std::vector<Sample> train, test;
  std::vector<std::int64_t> train_ts, test_ts;      // target-step timestamps
  std::vector<double> train_reading, test_reading;  // raw target-step reading
  std::vector<std::string> feature_names;
  Vector feat_mean, feat_std;  // train-split statistics
  double target_mean = 0.0, target_std = 1.0;  // regression target scaling
};

struct DatasetOptions {
  TaskKind task = TaskKind::classification;
  std::size_t window = 32;  // T
  double train_fraction = 0.8;
  // 0 keeps every stride-1 window; otherwise an evenly spaced chronological
  // subsample per sensor (desk-scale runtime control).
  std::size_t max_windows_per_sensor = 0;
};

// Joins weather features onto event steps (nearest earlier hourly record),
// slides windows of length T with stride 1, z-scores features with train-split
// statistics (std floored at 1e-8) and splits 80/20 chronologically per
// sensor. Sensors with fewer than T+1 records are excluded with a warning on
// stderr. Regression datasets cover HVAC thermostat sensors (their energy
// series is the regression target).
std::vector<SensorDataset> build_sensor_datasets(const std::vector<EventRecord>& events,
                                                 const std::vector<WeatherRecord>& weather,
                                                 const DatasetOptions& opts);

// --- dataset files ---

void write_events_csv(const std::string& path, const std::vector<EventRecord>& events);
std::vector<EventRecord> read_events_csv(const std::string& path);
void write_weather_csv(const std::string& path, const std::vector<WeatherRecord>& recs);
std::vector<WeatherRecord> read_weather_csv(const std::string& path);
void write_energy_csv(const std::string& path, const std::vector<EnergyBucket>& buckets);
std::vector<EnergyBucket> read_energy_csv(const std::string& path);

}  // namespace fslstm
