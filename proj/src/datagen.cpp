#include "datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>

#include "io.hpp"
#include "rng.hpp"

namespace fslstm {

namespace {

constexpr double kPi = 3.141592653589793;

// seed stream tags
constexpr std::uint64_t kWeatherStream = 0x7ea0;
constexpr std::uint64_t kReadingStream = 0x5e00;
constexpr std::uint64_t kAnomalyStream = 0xa000;

double clamp(double v, double lo, double hi) { return v < lo ? lo : (v > hi ? hi : v); }

}  // namespace

const char* category_name(SensorCategory c) {
  switch (c) {
    case SensorCategory::light: return "light";
    case SensorCategory::hvac_thermostat: return "hvac_thermostat";
    case SensorCategory::occupancy: return "occupancy";
    case SensorCategory::water_leakage: return "water_leakage";
    case SensorCategory::access: return "access";
  }
  return "unknown";
}

SensorCategory category_from_name(const std::string& name) {
  for (SensorCategory c : kAllCategories) {
    if (name == category_name(c)) return c;
  }
  throw std::invalid_argument("unknown sensor category '" + name + "'");
}

std::int64_t GeneratorConfig::start_timestamp() const {
  return make_timestamp(start_year, start_month, start_day);
}

std::int64_t GeneratorConfig::event_interval() const {
  const std::size_t steps = steps_per_sensor();
  return std::max<std::int64_t>(1, span_seconds() / static_cast<std::int64_t>(steps));
}

std::size_t GeneratorConfig::steps_per_sensor() const {
  if (sensor_count == 0) throw std::invalid_argument("generator: sensor_count is 0");
  return std::max<std::size_t>(4, event_target / sensor_count);
}

std::vector<WeatherRecord> generate_weather(const GeneratorConfig& cfg) {
  if (cfg.span_days < 1) throw std::invalid_argument("generator: span must be >= 1 day");
  Rng rng(derive_seed(cfg.seed, kWeatherStream));
  const std::int64_t start = cfg.start_timestamp();
  const double s = cfg.noise;

  std::vector<WeatherRecord> out;
  out.reserve(static_cast<std::size_t>(cfg.span_days) * 24);
  std::int64_t shower_left = 0;

  for (std::int64_t k = 0; k < static_cast<std::int64_t>(cfg.span_days) * 24; ++k) {
    WeatherRecord w;
    w.timestamp = start + k * 3600;
    const double day = static_cast<double>(k / 24);
    const int hour = static_cast<int>(k % 24);

    // seasonal level is constant within a day; the diurnal cosine peaks at
    // solar noon, so with zero noise the 12:00 sample is each day's maximum
    const double seasonal = 16.0 + 9.0 * std::sin(kPi * (day + 0.5) / cfg.span_days);
    const double diurnal = 6.0 * std::cos(2.0 * kPi * (hour - 12) / 24.0);
    w.temperature_c = seasonal + diurnal + s * rng.normal(0.0, 0.8);

    w.pressure_hpa = 1013.0 + 5.0 * std::sin(2.0 * kPi * day / 9.3 + 1.1) +
                     s * rng.normal(0.0, 1.5);
    w.humidity_pct =
        clamp(65.0 - 1.8 * (w.temperature_c - 20.0) + s * rng.normal(0.0, 6.0), 0.0, 100.0);

    const double sun = std::cos(2.0 * kPi * (hour - 12) / 24.0);
    const double solar_noise = s * rng.normal(0.0, 20.0);
    w.solar_wm2 = sun > 0.0 ? std::max(0.0, 880.0 * sun + solar_noise) : 0.0;

    const double shower_roll = rng.uniform();
    if (shower_left == 0 && shower_roll < 0.02) shower_left = 1 + static_cast<std::int64_t>(rng.below(6));
    const double rain_draw = rng.exponential(2.0);
    if (shower_left > 0) {
      w.precipitation_mm = s * rain_draw;
      --shower_left;
    } else {
      w.precipitation_mm = 0.0;
    }

    w.wind_ms = std::max(0.0, 2.8 + 1.5 * std::sin(2.0 * kPi * hour / 24.0 + 0.9) +
                                  s * rng.normal(0.0, 1.1));
    out.push_back(w);
  }
  return out;
}

namespace {

// exact largest-remainder allocation of sensors to categories
std::vector<SensorCategory> assign_categories(const GeneratorConfig& cfg) {
  double wsum = 0.0;
  for (double w : cfg.category_weights) wsum += w;
  if (std::fabs(wsum - 1.0) > 1e-9)
    throw std::invalid_argument("generator: category weights must sum to 1");

  const std::size_t n = cfg.sensor_count;
  std::array<std::size_t, 5> counts{};
  std::array<double, 5> remainders{};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < 5; ++c) {
    const double exact = cfg.category_weights[c] * static_cast<double>(n);
    counts[c] = static_cast<std::size_t>(exact);
    remainders[c] = exact - static_cast<double>(counts[c]);
    assigned += counts[c];
  }
  while (assigned < n) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < 5; ++c)
      if (remainders[c] > remainders[best]) best = c;
    ++counts[best];
    remainders[best] = -1.0;
    ++assigned;
  }

  std::vector<SensorCategory> out;
  out.reserve(n);
  for (std::size_t c = 0; c < 5; ++c)
    for (std::size_t i = 0; i < counts[c]; ++i) out.push_back(kAllCategories[c]);
  return out;
}

double occupancy_prob(std::int64_t ts) {
  const bool weekday = day_of_week(ts) < 5;
  const int hour = static_cast<int>((ts % 86400) / 3600);
  if (!weekday) return 0.06;
  if (hour >= 8 && hour < 18) return 0.92;
  if (hour >= 7 && hour < 20) return 0.35;
  return 0.04;
}

double access_prob(std::int64_t ts) {
  const bool weekday = day_of_week(ts) < 5;
  const int hour = static_cast<int>((ts % 86400) / 3600);
  if (!weekday) return 0.015;
  if (hour >= 7 && hour < 10) return 0.50;   // arrivals
  if (hour >= 16 && hour < 19) return 0.45;  // departures
  if (hour >= 10 && hour < 16) return 0.12;
  return 0.01;
}

double mean_segment_length(SensorCategory c) {
  switch (c) {
    case SensorCategory::light: return 10.0;
    case SensorCategory::hvac_thermostat: return 12.0;
    case SensorCategory::occupancy: return 8.0;
    case SensorCategory::water_leakage: return 5.0;
    case SensorCategory::access: return 4.0;
  }
  return 8.0;
}

// Stuck-at faults of activity-style sensors are only observable outside
// office hours; their segments start there.
bool off_hours_start(std::int64_t ts) {
  const int hour = static_cast<int>((ts % 86400) / 3600);
  return day_of_week(ts) >= 5 || hour >= 17 || hour < 7;
}

struct AnomalyPlan {
  std::vector<std::int32_t> segment_pos;  // -1 normal, else index within segment
  std::vector<double> magnitude;          // per-step segment magnitude parameter
};

AnomalyPlan plan_anomalies(SensorCategory cat, std::size_t steps, double rate, Rng& rng,
                           std::int64_t start_ts, std::int64_t interval) {
  AnomalyPlan plan;
  plan.segment_pos.assign(steps, -1);
  plan.magnitude.assign(steps, 0.0);
  if (rate <= 0.0 || steps == 0) return plan;

  const bool constrain_start = cat == SensorCategory::light ||
                               cat == SensorCategory::occupancy ||
                               cat == SensorCategory::access;

  const double mean_len = mean_segment_length(cat);
  const double exact = rate * static_cast<double>(steps) / mean_len;
  std::size_t n_segments = static_cast<std::size_t>(exact);
  if (rng.uniform() < exact - static_cast<double>(n_segments)) ++n_segments;

  for (std::size_t seg = 0; seg < n_segments; ++seg) {
    const std::size_t len = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(mean_len * (0.75 + 0.5 * rng.uniform()))));
    if (len >= steps) continue;
    const double mag = rng.uniform();
    bool placed = false;
    for (int attempt = 0; attempt < 128 && !placed; ++attempt) {
      const std::size_t start = static_cast<std::size_t>(rng.below(steps - len + 1));
      if (constrain_start &&
          !off_hours_start(start_ts + static_cast<std::int64_t>(start) * interval))
        continue;
      bool overlap = false;
      for (std::size_t i = start; i < start + len; ++i) {
        if (plan.segment_pos[i] >= 0) {
          overlap = true;
          break;
        }
      }
      if (overlap) continue;
      for (std::size_t i = start; i < start + len; ++i) {
        plan.segment_pos[i] = static_cast<std::int32_t>(i - start);
        plan.magnitude[i] = mag;
      }
      placed = true;
    }
  }
  return plan;
}

// Legitimate night lighting (cleaning crew): some evenings a lamp runs for a
// few hours, labeled normal. Deterministic in (seed, sensor, day).
bool cleaning_active(std::uint64_t seed, std::size_t sensor, std::int64_t ts) {
  const std::int64_t day = ts / 86400;
  const std::uint64_t h = derive_seed(
      seed, 0xc1ea, (static_cast<std::uint64_t>(sensor) << 32) ^
                        static_cast<std::uint64_t>(day));
  if (h % 100 >= 10) return false;  // one night in ten
  const int start_hour = 19 + static_cast<int>((h >> 8) % 3);  // 19..21
  const int duration = 2 + static_cast<int>((h >> 16) % 2);    // 2..3 hours
  const int hour = static_cast<int>((ts % 86400) / 3600);
  return hour >= start_hour && hour < start_hour + duration;
}

}  // namespace

std::vector<EventRecord> generate_events(const GeneratorConfig& cfg,
                                         const std::vector<WeatherRecord>& weather) {
  if (weather.empty()) throw std::invalid_argument("generate_events: no weather records");
  if (cfg.anomaly_rate < 0.0 || cfg.anomaly_rate >= 0.5)
    throw std::invalid_argument("generate_events: anomaly rate must be in [0, 0.5)");

  const std::vector<SensorCategory> categories = assign_categories(cfg);
  const std::int64_t start = cfg.start_timestamp();
  const std::int64_t interval = cfg.event_interval();
  const std::size_t steps = cfg.steps_per_sensor();
  const double s = cfg.noise;

  auto weather_at = [&](std::int64_t ts) -> const WeatherRecord& {
    // nearest earlier hourly record
    std::int64_t idx = (ts - weather.front().timestamp) / 3600;
    idx = std::max<std::int64_t>(0, std::min<std::int64_t>(idx, weather.size() - 1));
    return weather[static_cast<std::size_t>(idx)];
  };

  std::vector<EventRecord> all;
  all.reserve(cfg.sensor_count * steps);

  for (std::size_t sensor = 0; sensor < cfg.sensor_count; ++sensor) {
    const SensorCategory cat = categories[sensor];
    Rng rng(derive_seed(cfg.seed, kReadingStream, sensor));
    Rng anomaly_rng(derive_seed(cfg.seed, kAnomalyStream, sensor));
    const AnomalyPlan plan =
        plan_anomalies(cat, steps, cfg.anomaly_rate, anomaly_rng, start, interval);

    for (std::size_t t = 0; t < steps; ++t) {
      EventRecord e;
      e.timestamp = start + static_cast<std::int64_t>(t) * interval;
      e.sensor_id = static_cast<int>(sensor);
      e.category = cat;
      const WeatherRecord& w = weather_at(e.timestamp);
      const bool anomalous = plan.segment_pos[t] >= 0;
      const double seg_pos = anomalous ? static_cast<double>(plan.segment_pos[t]) : 0.0;
      const double seg_mag = anomalous ? plan.magnitude[t] : 0.0;
      e.anomaly_label = anomalous ? 1 : 0;

      switch (cat) {
        case SensorCategory::light: {
          const double daylight = clamp(w.solar_wm2 / 900.0, 0.0, 1.0);
          const bool occupied = rng.bernoulli(occupancy_prob(e.timestamp));
          const bool on_normally = (occupied && rng.bernoulli(1.0 - 0.75 * daylight)) ||
                                   cleaning_active(cfg.seed, sensor, e.timestamp);
          const bool lamp_on = anomalous || on_normally;  // stuck-on fault
          const double lamp = lamp_on ? 430.0 + s * rng.normal(0.0, 20.0) : 0.0;
          e.reading = std::max(0.0, lamp + daylight * 450.0 + s * rng.normal(0.0, 8.0));
          e.energy_kwh = lamp_on ? 0.11 + 0.01 * s * std::fabs(rng.normal()) : 0.004;
          break;
        }
        case SensorCategory::hvac_thermostat: {
          const bool office_hours =
              day_of_week(e.timestamp) < 5 &&
              (e.timestamp % 86400) / 3600 >= 8 && (e.timestamp % 86400) / 3600 < 18;
          const double setpoint = office_hours ? 22.5 : 26.0;
          double reading =
              setpoint + 0.12 * (w.temperature_c - setpoint) + s * rng.normal(0.0, 0.3);
          const double load = std::max(0.0, w.temperature_c - setpoint);
          double energy = 0.05 + 0.05 * std::pow(load, 1.4) * (office_hours ? 1.0 : 0.55) +
                          0.02 * s * std::fabs(rng.normal());
          if (anomalous) {
            // temperature drop ramping in, with excessive energy draw
            const double depth = 4.0 + 5.0 * seg_mag;
            reading -= depth * std::min(1.0, (seg_pos + 1.0) / 4.0);
            energy = energy * 2.5 + 0.05;
          }
          e.reading = reading;
          e.energy_kwh = energy;
          break;
        }
        case SensorCategory::occupancy: {
          const bool occupied =
              anomalous || rng.bernoulli(occupancy_prob(e.timestamp));  // stuck occupied
          e.reading = occupied ? 1.0 : 0.0;
          e.energy_kwh = (occupied ? 0.03 : 0.001) + 0.005 * s * std::fabs(rng.normal());
          break;
        }
        case SensorCategory::water_leakage: {
          if (anomalous) {
            e.reading = 35.0 + 30.0 * seg_mag + s * rng.normal(0.0, 2.0);  // running water
            e.energy_kwh = 0.01;
          } else {
            e.reading = 0.4 + s * std::fabs(rng.normal(0.0, 0.5));
            e.energy_kwh = 0.002;
          }
          break;
        }
        case SensorCategory::access: {
          const bool active = anomalous || rng.bernoulli(access_prob(e.timestamp));
          e.reading = active ? 1.0 : 0.0;
          e.energy_kwh = 0.0005 + (active ? 0.012 : 0.0);
          break;
        }
      }
      e.energy_kwh = std::max(0.0, e.energy_kwh);
      all.push_back(e);
    }
  }

  std::stable_sort(all.begin(), all.end(), [](const EventRecord& a, const EventRecord& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.sensor_id < b.sensor_id;
  });
  return all;
}

std::vector<EnergyBucket> aggregate_energy(const std::vector<EventRecord>& events,
                                           std::int64_t period_s) {
  if (period_s <= 0) throw std::invalid_argument("aggregate_energy: period must be > 0");
  std::map<std::pair<int, std::int64_t>, double> buckets;
  for (const auto& e : events) {
    std::int64_t aligned = e.timestamp / period_s;
    if (e.timestamp < 0 && e.timestamp % period_s != 0) --aligned;
    buckets[{e.sensor_id, aligned * period_s}] += e.energy_kwh;
  }
  std::vector<EnergyBucket> out;
  out.reserve(buckets.size());
  for (const auto& [key, kwh] : buckets) out.push_back({key.second, key.first, kwh});
  std::sort(out.begin(), out.end(), [](const EnergyBucket& a, const EnergyBucket& b) {
    if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
    return a.sensor_id < b.sensor_id;
  });
  return out;
}

namespace {

// Sensor channels (measurements plus calendar/category context the sensor
// knows about itself) followed by the six weather channels. Measurements and
// weather are z-scored per sensor; bounded indicator channels pass through.
const std::vector<std::string> kFeatureNames = {
    "reading",       "energy_kwh",     "hour_sin",        "hour_cos",
    "is_weekend",    "cat_light",      "cat_hvac",        "cat_occupancy",
    "cat_water",     "cat_access",     "temperature_c",   "pressure_hpa",
    "humidity_pct",  "precipitation_mm", "solar_radiation_wm2", "wind_speed_ms"};

bool feature_is_normalized(std::size_t f) { return f < 2 || f >= 10; }

}  // namespace

std::vector<SensorDataset> build_sensor_datasets(const std::vector<EventRecord>& events,
                                                 const std::vector<WeatherRecord>& weather,
                                                 const DatasetOptions& opts) {
  if (events.empty()) throw std::invalid_argument("build_sensor_datasets: no events");
  if (weather.empty()) throw std::invalid_argument("build_sensor_datasets: no weather");
  if (opts.window == 0) throw std::invalid_argument("build_sensor_datasets: window is 0");

  auto weather_at = [&](std::int64_t ts) -> const WeatherRecord& {
    std::int64_t idx = (ts - weather.front().timestamp) / 3600;
    idx = std::max<std::int64_t>(0, std::min<std::int64_t>(idx, weather.size() - 1));
    return weather[static_cast<std::size_t>(idx)];
  };

  std::map<int, std::vector<const EventRecord*>> by_sensor;
  for (const auto& e : events) by_sensor[e.sensor_id].push_back(&e);

  const std::size_t T = opts.window;
  const std::size_t F = kFeatureNames.size();

  std::vector<SensorDataset> out;
  for (auto& [sensor_id, recs] : by_sensor) {
    const SensorCategory cat = recs.front()->category;
    if (opts.task == TaskKind::regression && cat != SensorCategory::hvac_thermostat)
      continue;  // the energy-usage task covers HVAC consumption
    if (recs.size() < T + 1) {
      std::fprintf(stderr,
                   "datagen: sensor %d has %zu records, fewer than window+1=%zu; excluded\n",
                   sensor_id, recs.size(), T + 1);
      continue;
    }

    // feature rows per step
    const std::size_t steps = recs.size();
    Matrix rows(steps, F);
    for (std::size_t t = 0; t < steps; ++t) {
      const EventRecord& e = *recs[t];
      const WeatherRecord& w = weather_at(e.timestamp);
      const double sec_of_day = static_cast<double>(e.timestamp % 86400);
      const double angle = 2.0 * kPi * sec_of_day / 86400.0;
      rows(t, 0) = e.reading;
      rows(t, 1) = e.energy_kwh;
      rows(t, 2) = std::sin(angle);
      rows(t, 3) = std::cos(angle);
      rows(t, 4) = day_of_week(e.timestamp) >= 5 ? 1.0 : 0.0;
      for (std::size_t c = 0; c < 5; ++c)
        rows(t, 5 + c) = e.category == kAllCategories[c] ? 1.0 : 0.0;
      rows(t, 10) = w.temperature_c;
      rows(t, 11) = w.pressure_hpa;
      rows(t, 12) = w.humidity_pct;
      rows(t, 13) = w.precipitation_mm;
      rows(t, 14) = w.solar_wm2;
      rows(t, 15) = w.wind_ms;
    }

    const std::size_t window_count = steps - T;  // target is the step after the window
    std::vector<std::size_t> window_starts;
    if (opts.max_windows_per_sensor > 0 && window_count > opts.max_windows_per_sensor) {
      const std::size_t cap = opts.max_windows_per_sensor;
      window_starts.reserve(cap);
      for (std::size_t j = 0; j < cap; ++j) window_starts.push_back(j * window_count / cap);
    } else {
      window_starts.resize(window_count);
      for (std::size_t j = 0; j < window_count; ++j) window_starts[j] = j;
    }

    SensorDataset ds;
    ds.sensor_id = sensor_id;
    ds.category = cat;
    ds.task = opts.task;
    ds.feature_names = kFeatureNames;

    const std::size_t w = window_starts.size();
    const std::size_t n_train = static_cast<std::size_t>(
        opts.train_fraction * static_cast<double>(w));

    // z-score statistics from the training span only
    Vector mean(F, 0.0), sq(F, 0.0);
    std::size_t stat_rows = 0;
    for (std::size_t j = 0; j < n_train; ++j) {
      for (std::size_t t = window_starts[j]; t < window_starts[j] + T; ++t) {
        for (std::size_t f = 0; f < F; ++f) {
          mean[f] += rows(t, f);
          sq[f] += rows(t, f) * rows(t, f);
        }
        ++stat_rows;
      }
    }
    Vector stdev(F, 1.0);
    if (stat_rows > 0) {
      for (std::size_t f = 0; f < F; ++f) {
        mean[f] /= static_cast<double>(stat_rows);
        const double var = sq[f] / static_cast<double>(stat_rows) - mean[f] * mean[f];
        stdev[f] = std::max(1e-8, std::sqrt(std::max(0.0, var)));
        if (!feature_is_normalized(f)) {
          mean[f] = 0.0;
          stdev[f] = 1.0;
        }
      }
    }
    ds.feat_mean = mean;
    ds.feat_std = stdev;

    if (opts.task == TaskKind::regression && n_train > 0) {
      double tmean = 0.0, tsq = 0.0;
      for (std::size_t j = 0; j < n_train; ++j) {
        const double v = rows(window_starts[j] + T, 1);
        tmean += v;
        tsq += v * v;
      }
      tmean /= static_cast<double>(n_train);
      const double var = tsq / static_cast<double>(n_train) - tmean * tmean;
      ds.target_mean = tmean;
      ds.target_std = std::max(1e-8, std::sqrt(std::max(0.0, var)));
    }

    for (std::size_t j = 0; j < w; ++j) {
      const std::size_t start = window_starts[j];
      Sample sample;
      sample.window = Matrix(T, F);
      for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t f = 0; f < F; ++f) {
          sample.window(t, f) = (rows(start + t, f) - mean[f]) / stdev[f];
        }
      }
      const EventRecord& target_rec = *recs[start + T];
      if (opts.task == TaskKind::classification) {
        sample.target = static_cast<double>(target_rec.anomaly_label);
      } else {
        sample.target = (target_rec.energy_kwh - ds.target_mean) / ds.target_std;
      }
      const bool is_train = j < n_train;
      auto& samples = is_train ? ds.train : ds.test;
      auto& ts_list = is_train ? ds.train_ts : ds.test_ts;
      auto& readings = is_train ? ds.train_reading : ds.test_reading;
      samples.push_back(std::move(sample));
      ts_list.push_back(target_rec.timestamp);
      readings.push_back(target_rec.reading);
    }
    out.push_back(std::move(ds));
  }
  return out;
}

// --- dataset files ---

namespace {

const std::vector<std::string> kEventsHeader = {"timestamp", "sensor_id",  "category",
                                                "reading",   "energy_kwh", "anomaly_label"};
const std::vector<std::string> kWeatherHeader = {
    "timestamp",        "temperature_c",       "pressure_hpa", "humidity_pct",
    "precipitation_mm", "solar_radiation_wm2", "wind_speed_ms"};
const std::vector<std::string> kEnergyHeader = {"timestamp", "sensor_id", "energy_kwh"};

}  // namespace

void write_events_csv(const std::string& path, const std::vector<EventRecord>& events) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(events.size());
  for (const auto& e : events) {
    rows.push_back({format_timestamp(e.timestamp), std::to_string(e.sensor_id),
                    category_name(e.category), format_double(e.reading),
                    format_double(e.energy_kwh), std::to_string(e.anomaly_label)});
  }
  write_csv(path, kEventsHeader, rows);
}

std::vector<EventRecord> read_events_csv(const std::string& path) {
  const auto rows = read_csv(path, kEventsHeader);
  std::vector<EventRecord> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    EventRecord e;
    e.timestamp = parse_timestamp(r[0]);
    e.sensor_id = static_cast<int>(parse_int(r[1], path));
    e.category = category_from_name(r[2]);
    e.reading = parse_double(r[3], path);
    e.energy_kwh = parse_double(r[4], path);
    e.anomaly_label = static_cast<int>(parse_int(r[5], path));
    out.push_back(e);
  }
  return out;
}

void write_weather_csv(const std::string& path, const std::vector<WeatherRecord>& recs) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(recs.size());
  for (const auto& w : recs) {
    rows.push_back({format_timestamp(w.timestamp), format_double(w.temperature_c),
                    format_double(w.pressure_hpa), format_double(w.humidity_pct),
                    format_double(w.precipitation_mm), format_double(w.solar_wm2),
                    format_double(w.wind_ms)});
  }
  write_csv(path, kWeatherHeader, rows);
}

std::vector<WeatherRecord> read_weather_csv(const std::string& path) {
  const auto rows = read_csv(path, kWeatherHeader);
  std::vector<WeatherRecord> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    WeatherRecord w;
    w.timestamp = parse_timestamp(r[0]);
    w.temperature_c = parse_double(r[1], path);
    w.pressure_hpa = parse_double(r[2], path);
    w.humidity_pct = parse_double(r[3], path);
    w.precipitation_mm = parse_double(r[4], path);
    w.solar_wm2 = parse_double(r[5], path);
    w.wind_ms = parse_double(r[6], path);
    out.push_back(w);
  }
  return out;
}

void write_energy_csv(const std::string& path, const std::vector<EnergyBucket>& buckets) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(buckets.size());
  for (const auto& b : buckets) {
    rows.push_back({format_timestamp(b.timestamp), std::to_string(b.sensor_id),
                    format_double(b.kwh)});
  }
  write_csv(path, kEnergyHeader, rows);
}

std::vector<EnergyBucket> read_energy_csv(const std::string& path) {
  const auto rows = read_csv(path, kEnergyHeader);
  std::vector<EnergyBucket> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    EnergyBucket b;
    b.timestamp = parse_timestamp(r[0]);
    b.sensor_id = static_cast<int>(parse_int(r[1], path));
    b.kwh = parse_double(r[2], path);
    out.push_back(b);
  }
  return out;
}

}  // namespace fslstm
