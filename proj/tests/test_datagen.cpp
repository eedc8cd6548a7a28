#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <set>

#include "datagen.hpp"
#include "io.hpp"

using namespace fslstm;

namespace {

GeneratorConfig small_config(std::uint64_t seed = 7) {
  GeneratorConfig cfg;
  cfg.sensor_count = 10;
  cfg.span_days = 10;
  cfg.event_target = 10 * 480;  // 30-minute cadence
  cfg.anomaly_rate = 0.05;
  cfg.seed = seed;
  return cfg;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("timestamp round trip and day-of-week") {
  const std::int64_t ts = make_timestamp(2019, 5, 1, 13, 45, 10);
  CHECK(format_timestamp(ts) == "2019-05-01T13:45:10Z");
  CHECK(parse_timestamp("2019-05-01T13:45:10Z") == ts);
  CHECK(day_of_week(make_timestamp(2019, 5, 1)) == 2);  // a Wednesday
  CHECK(day_of_week(make_timestamp(2019, 5, 4)) == 5);  // a Saturday
  CHECK_THROWS(parse_timestamp("2019-05-01 13:45:10"));
}

TEST_CASE("weather: zero noise gives an exact diurnal shape") {
  GeneratorConfig cfg = small_config();
  cfg.noise = 0.0;
  const auto weather = generate_weather(cfg);
  REQUIRE(weather.size() == static_cast<std::size_t>(cfg.span_days) * 24);

  for (int day = 0; day < cfg.span_days; ++day) {
    double max_temp = -1e9;
    int max_hour = -1;
    for (int h = 0; h < 24; ++h) {
      const auto& w = weather[static_cast<std::size_t>(day * 24 + h)];
      if (w.temperature_c > max_temp) {
        max_temp = w.temperature_c;
        max_hour = h;
      }
      CHECK(w.precipitation_mm == 0.0);
    }
    CHECK(max_hour == 12);  // solar noon is the day's maximum
  }
}

TEST_CASE("weather invariants over a large sample") {
  GeneratorConfig cfg = small_config(11);
  cfg.span_days = 41667;  // ~1e6 hourly records
  const auto weather = generate_weather(cfg);
  CHECK(weather.size() >= 1000000);
  for (const auto& w : weather) {
    CHECK(w.humidity_pct >= 0.0);
    CHECK(w.humidity_pct <= 100.0);
    CHECK(w.precipitation_mm >= 0.0);
    CHECK(w.solar_wm2 >= 0.0);
    CHECK(w.wind_ms >= 0.0);
  }
}

TEST_CASE("weather determinism under the seed") {
  const GeneratorConfig cfg = small_config(21);
  const auto a = generate_weather(cfg);
  const auto b = generate_weather(cfg);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].temperature_c == b[i].temperature_c);
    CHECK(a[i].precipitation_mm == b[i].precipitation_mm);
  }
}

TEST_CASE("events: zero anomaly rate gives all-normal labels") {
  GeneratorConfig cfg = small_config(31);
  cfg.anomaly_rate = 0.0;
  const auto weather = generate_weather(cfg);
  const auto events = generate_events(cfg, weather);
  CHECK(!events.empty());
  for (const auto& e : events) CHECK(e.anomaly_label == 0);
}

TEST_CASE("events: leakage spikes exceed the 99th percentile of baseline") {
  GeneratorConfig cfg = small_config(41);
  cfg.category_weights = {0.0, 0.0, 0.0, 1.0, 0.0};  // water leakage only
  const auto weather = generate_weather(cfg);
  const auto events = generate_events(cfg, weather);

  std::vector<double> baseline, anomalous;
  for (const auto& e : events) {
    (e.anomaly_label ? anomalous : baseline).push_back(e.reading);
  }
  REQUIRE(!anomalous.empty());
  std::sort(baseline.begin(), baseline.end());
  const double p99 = baseline[static_cast<std::size_t>(0.99 * baseline.size())];
  for (double r : anomalous) CHECK(r > p99);
}

TEST_CASE("events: label prevalence lands near the configured rate") {
  GeneratorConfig cfg;  // default scale: 180 sensors, 1e5 events
  cfg.event_target = 100000;
  cfg.anomaly_rate = 0.05;
  cfg.seed = 51;
  const auto weather = generate_weather(cfg);
  const auto events = generate_events(cfg, weather);
  std::size_t anomalous = 0;
  for (const auto& e : events) anomalous += static_cast<std::size_t>(e.anomaly_label);
  const double prevalence =
      static_cast<double>(anomalous) / static_cast<double>(events.size());
  CHECK(prevalence > 0.05 * 0.8);
  CHECK(prevalence < 0.05 * 1.2);
}

TEST_CASE("events: per-sensor timestamps strictly increase and labels map to mutations") {
  GeneratorConfig cfg = small_config(61);
  const auto weather = generate_weather(cfg);
  const auto events = generate_events(cfg, weather);
  std::map<int, std::int64_t> last_ts;
  for (const auto& e : events) {
    auto it = last_ts.find(e.sensor_id);
    if (it != last_ts.end()) CHECK(e.timestamp > it->second);
    last_ts[e.sensor_id] = e.timestamp;
    CHECK(e.energy_kwh >= 0.0);
  }
  CHECK(last_ts.size() == cfg.sensor_count);
}

TEST_CASE("events determinism under the seed") {
  const GeneratorConfig cfg = small_config(71);
  const auto weather = generate_weather(cfg);
  const auto a = generate_events(cfg, weather);
  const auto b = generate_events(cfg, weather);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].timestamp == b[i].timestamp);
    CHECK(a[i].reading == b[i].reading);
    CHECK(a[i].energy_kwh == b[i].energy_kwh);
    CHECK(a[i].anomaly_label == b[i].anomaly_label);
  }
}

TEST_CASE("aggregate_energy examples and conservation") {
  std::vector<EventRecord> events;
  EventRecord e;
  e.sensor_id = 3;
  e.timestamp = 1000;
  e.energy_kwh = 2.0;
  events.push_back(e);
  auto buckets = aggregate_energy(events, 900);
  REQUIRE(buckets.size() == 1);
  CHECK(buckets[0].kwh == doctest::Approx(2.0));
  CHECK(buckets[0].timestamp == 900);
  CHECK(buckets[0].sensor_id == 3);

  // four 1-kWh events per 15-minute bucket
  events.clear();
  for (int i = 0; i < 8; ++i) {
    EventRecord r;
    r.sensor_id = 0;
    r.timestamp = i * 225;  // four events per 900 s
    r.energy_kwh = 1.0;
    events.push_back(r);
  }
  buckets = aggregate_energy(events, 900);
  REQUIRE(buckets.size() == 2);
  CHECK(buckets[0].kwh == doctest::Approx(4.0));
  CHECK(buckets[1].kwh == doctest::Approx(4.0));

  CHECK_THROWS_AS(aggregate_energy(events, 0), std::invalid_argument);

  // random stream conserves energy for every period setting
  GeneratorConfig cfg = small_config(81);
  const auto weather = generate_weather(cfg);
  const auto generated = generate_events(cfg, weather);
  double total = 0.0;
  for (const auto& ev : generated) total += ev.energy_kwh;
  for (std::int64_t period : {300, 900, 3600, 86400}) {
    const auto bk = aggregate_energy(generated, period);
    double sum = 0.0;
    for (const auto& b : bk) sum += b.kwh;
    CHECK(sum == doctest::Approx(total).epsilon(1e-9));
  }
}

TEST_CASE("dataset windows: count, split sizes and ordering") {
  GeneratorConfig cfg = small_config(91);
  const auto weather = generate_weather(cfg);
  const auto events = generate_events(cfg, weather);

  DatasetOptions opts;
  opts.task = TaskKind::classification;
  opts.window = 8;
  const auto datasets = build_sensor_datasets(events, weather, opts);
  REQUIRE(datasets.size() == cfg.sensor_count);

  const std::size_t steps = cfg.steps_per_sensor();
  for (const auto& ds : datasets) {
    const std::size_t windows = ds.train.size() + ds.test.size();
    CHECK(windows == steps - opts.window);  // record count n gives n - T windows
    CHECK(ds.train.size() == static_cast<std::size_t>(0.8 * static_cast<double>(windows)));
    // the supervised targets never leak across the boundary
    if (!ds.train_ts.empty() && !ds.test_ts.empty())
      CHECK(*std::max_element(ds.train_ts.begin(), ds.train_ts.end()) <
            *std::min_element(ds.test_ts.begin(), ds.test_ts.end()));
    for (const auto& s : ds.train) {
      CHECK(s.window.rows == opts.window);
      CHECK(s.window.cols == ds.feature_names.size());
      CHECK((s.target == 0.0 || s.target == 1.0));
    }
  }
}

TEST_CASE("dataset windows: normalization uses train statistics") {
  GeneratorConfig cfg = small_config(101);
  const auto weather = generate_weather(cfg);
  const auto events = generate_events(cfg, weather);
  DatasetOptions opts;
  opts.task = TaskKind::classification;
  opts.window = 8;
  const auto datasets = build_sensor_datasets(events, weather, opts);
  // z-scored measurement channels: train rows should be ~standardized
  const auto& ds = datasets.front();
  double sum = 0.0, count = 0.0;
  for (const auto& s : ds.train)
    for (std::size_t t = 0; t < s.window.rows; ++t) {
      sum += s.window(t, 0);
      count += 1.0;
    }
  CHECK(std::fabs(sum / count) < 0.2);  // near zero mean on the train span
}

TEST_CASE("constant measurement channel normalizes to zeros with floored std") {
  // constant reading: std collapses to the 1e-8 floor, channel becomes zeros
  std::vector<EventRecord> events;
  std::vector<WeatherRecord> weather;
  WeatherRecord w;
  w.timestamp = 0;
  weather.push_back(w);
  for (int t = 0; t < 30; ++t) {
    EventRecord e;
    e.timestamp = t * 60;
    e.sensor_id = 0;
    e.category = SensorCategory::light;
    e.reading = 5.5;  // constant
    e.energy_kwh = 5.5;
    events.push_back(e);
  }
  DatasetOptions opts;
  opts.window = 4;
  const auto datasets = build_sensor_datasets(events, weather, opts);
  REQUIRE(datasets.size() == 1);
  CHECK(datasets[0].feat_std[0] == doctest::Approx(1e-8));
  for (const auto& s : datasets[0].train)
    for (std::size_t t = 0; t < s.window.rows; ++t)
      CHECK(s.window(t, 0) == 0.0);
}

TEST_CASE("sensors with fewer than window+1 records are excluded") {
  std::vector<EventRecord> events;
  std::vector<WeatherRecord> weather;
  WeatherRecord w;
  weather.push_back(w);
  for (int t = 0; t < 5; ++t) {
    EventRecord e;
    e.timestamp = t * 60;
    e.sensor_id = 0;
    events.push_back(e);
  }
  DatasetOptions opts;
  opts.window = 8;  // needs 9 records, only 5 present
  const auto datasets = build_sensor_datasets(events, weather, opts);
  CHECK(datasets.empty());
}

TEST_CASE("window cap subsamples chronologically") {
  GeneratorConfig cfg = small_config(111);
  const auto weather = generate_weather(cfg);
  const auto events = generate_events(cfg, weather);
  DatasetOptions opts;
  opts.window = 8;
  opts.max_windows_per_sensor = 50;
  const auto datasets = build_sensor_datasets(events, weather, opts);
  for (const auto& ds : datasets) {
    CHECK(ds.train.size() + ds.test.size() == 50);
    for (std::size_t i = 1; i < ds.train_ts.size(); ++i)
      CHECK(ds.train_ts[i] > ds.train_ts[i - 1]);
  }
}

TEST_CASE("regression datasets cover thermostats with normalized targets") {
  GeneratorConfig cfg = small_config(121);
  const auto weather = generate_weather(cfg);
  const auto events = generate_events(cfg, weather);
  DatasetOptions opts;
  opts.task = TaskKind::regression;
  opts.window = 8;
  const auto datasets = build_sensor_datasets(events, weather, opts);
  CHECK(!datasets.empty());
  for (const auto& ds : datasets) {
    CHECK(ds.category == SensorCategory::hvac_thermostat);
    CHECK(ds.target_std > 0.0);
  }
}

TEST_CASE("csv round trip preserves every field") {
  GeneratorConfig cfg = small_config(131);
  cfg.sensor_count = 4;
  cfg.event_target = 4 * 250;
  const auto weather = generate_weather(cfg);
  const auto events = generate_events(cfg, weather);
  const auto buckets = aggregate_energy(events, cfg.energy_period_s);

  const std::string ep = temp_path("fslstm_events_rt.csv");
  const std::string wp = temp_path("fslstm_weather_rt.csv");
  const std::string gp = temp_path("fslstm_energy_rt.csv");
  write_events_csv(ep, events);
  write_weather_csv(wp, weather);
  write_energy_csv(gp, buckets);

  const auto events2 = read_events_csv(ep);
  REQUIRE(events2.size() == events.size());
  for (std::size_t i = 0; i < events.size(); ++i) {
    CHECK(events2[i].timestamp == events[i].timestamp);
    CHECK(events2[i].sensor_id == events[i].sensor_id);
    CHECK(events2[i].category == events[i].category);
    CHECK(events2[i].reading == events[i].reading);
    CHECK(events2[i].energy_kwh == events[i].energy_kwh);
    CHECK(events2[i].anomaly_label == events[i].anomaly_label);
  }
  const auto weather2 = read_weather_csv(wp);
  REQUIRE(weather2.size() == weather.size());
  for (std::size_t i = 0; i < weather.size(); ++i) {
    CHECK(weather2[i].temperature_c == weather[i].temperature_c);
    CHECK(weather2[i].solar_wm2 == weather[i].solar_wm2);
  }
  const auto buckets2 = read_energy_csv(gp);
  REQUIRE(buckets2.size() == buckets.size());
  for (std::size_t i = 0; i < buckets.size(); ++i)
    CHECK(buckets2[i].kwh == buckets[i].kwh);

  std::remove(ep.c_str());
  std::remove(wp.c_str());
  std::remove(gp.c_str());
}

TEST_CASE("csv errors: missing column and malformed row with line number") {
  const std::string path = temp_path("fslstm_bad.csv");
  write_text_file(path, "timestamp,sensor_id\n2019-05-01T00:00:00Z,1\n");
  CHECK_THROWS_WITH_AS(read_events_csv(path), doctest::Contains("category"),
                       std::runtime_error);

  write_text_file(path,
                  "timestamp,sensor_id,category,reading,energy_kwh,anomaly_label\n"
                  "2019-05-01T00:00:00Z,1,light,3.5,0.1,0\n"
                  "2019-05-01T00:15:00Z,1,light,3.5\n");
  CHECK_THROWS_WITH_AS(read_events_csv(path), doctest::Contains(":3"),
                       std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("empty csv file yields an empty dataset") {
  const std::string path = temp_path("fslstm_empty.csv");
  write_text_file(path, "");
  CHECK(read_events_csv(path).empty());
  std::remove(path.c_str());
}

TEST_CASE("params blob round trip") {
  ModelParams p;
  p.tensors.push_back({"a.W", {2, 3}, {1.0, -2.5, 0.25, 1e-300, 3.14159, -0.0}});
  p.tensors.push_back({"a.b", {3}, {0.5, 0.5, 123456.789}});
  const std::string path = temp_path("fslstm_params.bin");
  write_params_blob(path, p);
  const ModelParams q = read_params_blob(path);
  REQUIRE(q.tensors.size() == 2);
  CHECK(q.same_manifest(p));
  CHECK(q.tensors[0].values == p.tensors[0].values);
  CHECK(q.tensors[1].values == p.tensors[1].values);
  std::remove(path.c_str());
}
