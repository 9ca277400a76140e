#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>
#include <random>
#include <thread>

#include "shellforge/asset/client.hpp"
#include "shellforge/asset/signals.hpp"
#include "shellforge/asset/simulator.hpp"
#include "shellforge/asset/sync.hpp"
#include "shellforge/fixtures/fixtures.hpp"
#include "shellforge/util/error.hpp"
#include "support.hpp"

using namespace shellforge;
using namespace shellforge::asset;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::IoError;
}

model::EndpointDescriptor endpoint_for(const Simulator& sim, bool parameterized) {
  model::EndpointDescriptor ep;
  ep.host = "127.0.0.1";
  ep.port = sim.port();
  ep.parameterized = parameterized;
  ep.variables = {{"temp", model::ValueType::Double},
                  {"rpm", model::ValueType::Double},
                  {"jobs", model::ValueType::Double},
                  {"cooling", model::ValueType::Double}};
  return ep;
}

// Brute-force query evaluation straight off the closed-form generators.
SampleSet oracle_query(const QuerySpec& q) {
  std::vector<double> grid;
  for (int64_t i = 0;; ++i) {
    double t = q.from + static_cast<double>(i) * q.step;
    if (t > q.to) break;
    grid.push_back(t);
  }
  std::vector<double> kept;
  for (double t : grid) {
    if (q.filter) {
      double v = testsupport::oracle_signal(q.filter->var, t);
      bool pass = false;
      switch (q.filter->cmp) {
        case engine::Comparison::Lt: pass = v < q.filter->literal; break;
        case engine::Comparison::Le: pass = v <= q.filter->literal; break;
        case engine::Comparison::Eq: pass = v == q.filter->literal; break;
        case engine::Comparison::Ge: pass = v >= q.filter->literal; break;
        case engine::Comparison::Gt: pass = v > q.filter->literal; break;
      }
      if (!pass) continue;
    }
    kept.push_back(t);
  }
  SampleSet out;
  if (q.agg == Aggregation::None) {
    for (double t : kept) {
      for (const auto& var : q.vars) {
        out.samples.push_back(Sample{var, testsupport::oracle_signal(var, t), t});
      }
    }
    return out;
  }
  for (const auto& var : q.vars) {
    if (kept.empty()) continue;
    double acc = 0;
    bool first = true;
    for (double t : kept) {
      double v = testsupport::oracle_signal(var, t);
      if (q.agg == Aggregation::Mean) acc += v;
      else if (first) acc = v;
      else if (q.agg == Aggregation::Min) acc = std::min(acc, v);
      else acc = std::max(acc, v);
      first = false;
    }
    if (q.agg == Aggregation::Mean) acc /= static_cast<double>(kept.size());
    out.samples.push_back(Sample{var, acc, kept.back()});
  }
  return out;
}

}  // namespace

TEST_CASE("sim_signal anchors") {
  CHECK(sim_signal("temp", 0) == 20.0);
  CHECK(sim_signal("temp", 15) == 25.0);
  CHECK(sim_signal("rpm", 3) == 1150.0);
  CHECK(sim_signal("jobs", 29) == 0.0);
  CHECK(sim_signal("jobs", 31) == 1.0);
  CHECK(code_of([] { sim_signal("nope", 0); }) == ErrorCode::UnknownVariable);
  // Agreement with the independently written oracle on a grid.
  for (int i = 0; i <= 600; ++i) {
    double t = 0.5 * i;
    CHECK(sim_signal("temp", t) == testsupport::oracle_temp(t));
    CHECK(sim_signal("rpm", t) == testsupport::oracle_rpm(t));
    CHECK(sim_signal("jobs", t) == testsupport::oracle_jobs(t));
  }
}

TEST_CASE("simulator: line protocol get/set") {
  Simulator sim(SimConfig{0, 0, 1.0});
  sim.start();
  AssetSession session = AssetSession::connect("127.0.0.1", sim.port());

  Sample s = session.fetch_at("temp", 15);
  CHECK(s.value == 25.0);
  CHECK(s.ts == 15.0);

  CHECK(code_of([&] { session.fetch_simple("nope"); }) ==
        ErrorCode::UnknownVariable);

  CHECK(session.fetch_simple("cooling").value == 0.0);
  session.send_set("cooling", 1);
  CHECK(session.fetch_simple("cooling").value == 1.0);
  CHECK(sim.cooling() == 1.0);
  // Signal variables reject writes.
  CHECK(code_of([&] { session.send_set("temp", 99); }) ==
        ErrorCode::ProtocolError);

  sim.stop();
  CHECK(code_of([&] { session.fetch_simple("temp"); }) ==
        ErrorCode::Disconnected);
}

TEST_CASE("simulator: occupied port raises PortInUse") {
  Simulator first(SimConfig{0, 0, 1.0});
  first.start();
  Simulator second(SimConfig{first.port(), 0, 1.0});
  CHECK(code_of([&] { second.start(); }) == ErrorCode::PortInUse);
}

TEST_CASE("query: specification anchors against the oracle") {
  Simulator sim(SimConfig{0, 0, 1.0});
  sim.start();
  AssetSession session = AssetSession::connect("127.0.0.1", sim.port());
  model::EndpointDescriptor param = endpoint_for(sim, true);
  model::EndpointDescriptor fixed = endpoint_for(sim, false);

  QuerySpec mean_q;
  mean_q.vars = {"temp"};
  mean_q.from = 0;
  mean_q.to = 60;
  mean_q.step = 15;
  mean_q.agg = Aggregation::Mean;
  SampleSet got = session.query(mean_q, param);
  REQUIRE(got.samples.size() == 1);
  CHECK(got.samples[0].value == 20.0);
  CHECK(got == oracle_query(mean_q));

  QuerySpec max_q = mean_q;
  max_q.filter = QueryFilter{"temp", engine::Comparison::Gt, 22.0};
  max_q.agg = Aggregation::Max;
  got = session.query(max_q, param);
  REQUIRE(got.samples.size() == 1);
  CHECK(got.samples[0].value == 25.0);
  CHECK(got == oracle_query(max_q));

  CHECK(code_of([&] { session.query(mean_q, fixed); }) ==
        ErrorCode::NotParameterized);
  // The fixed endpoint still answers single-variable fetches.
  CHECK(session.fetch_at("temp", 15).value == 25.0);

  QuerySpec bad = mean_q;
  bad.step = 0;
  CHECK(code_of([&] { session.query(bad, param); }) == ErrorCode::InvalidQuery);
  bad = mean_q;
  bad.from = 10;
  bad.to = 5;
  CHECK(code_of([&] { session.query(bad, param); }) == ErrorCode::InvalidQuery);
  bad = mean_q;
  bad.vars = {"volts"};
  CHECK(code_of([&] { session.query(bad, param); }) == ErrorCode::InvalidQuery);
}

TEST_CASE("query: randomized specs match brute-force evaluation exactly") {
  Simulator sim(SimConfig{0, 0, 1.0});
  sim.start();
  AssetSession session = AssetSession::connect("127.0.0.1", sim.port());
  model::EndpointDescriptor param = endpoint_for(sim, true);

  std::mt19937 rng(101);
  const char* var_names[] = {"temp", "rpm", "jobs"};
  for (int iter = 0; iter < 60; ++iter) {
    QuerySpec q;
    size_t n_vars = 1 + rng() % 3;
    for (size_t v = 0; v < n_vars; ++v) q.vars.push_back(var_names[rng() % 3]);
    q.from = std::uniform_real_distribution<double>(0, 120)(rng);
    q.to = q.from + std::uniform_real_distribution<double>(0, 60)(rng);
    q.step = std::uniform_real_distribution<double>(0.5, 15)(rng);
    if (rng() % 2) {
      q.filter = QueryFilter{var_names[rng() % 3],
                             static_cast<engine::Comparison>(rng() % 5),
                             std::uniform_real_distribution<double>(0, 30)(rng)};
    }
    q.agg = static_cast<Aggregation>(rng() % 4);
    SampleSet got = session.query(q, param);
    SampleSet want = oracle_query(q);
    REQUIRE(got.samples.size() == want.samples.size());
    for (size_t i = 0; i < got.samples.size(); ++i) {
      CHECK(got.samples[i].var == want.samples[i].var);
      CHECK(got.samples[i].value == want.samples[i].value);  // exact doubles
      CHECK(got.samples[i].ts == want.samples[i].ts);
    }
    // ts stays non-decreasing within a set.
    for (size_t i = 1; i < got.samples.size(); ++i) {
      CHECK(got.samples[i - 1].ts <= got.samples[i].ts);
    }
  }
}

TEST_CASE("sync: shadow keeps mapped properties on the generator") {
  Simulator sim(SimConfig{0, 0, 20.0});  // 20 simulated seconds per second
  sim.start();
  fixtures::FixtureOptions opts;
  opts.sim_port = sim.port();
  opts.poll_interval_s = 0.03;
  model::AasPackage pkg = fixtures::make_level_package(1, opts);

  std::mutex mu;
  std::map<std::string, double> store;
  auto handle = start_sync(pkg, *pkg.sync_config,
                           classify::RuntimeStrategy::ServerHosted,
                           [&](const std::string& path, double value, double) {
                             std::lock_guard<std::mutex> lock(mu);
                             store[path] = value;
                           });
  for (int i = 0; i < 100 && handle->polls_completed() < 5; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  handle->stop();
  REQUIRE(handle->polls_completed() >= 5);

  // Every logged poll equals the generator at its polled sim time, and the
  // final store value matches the last poll of each mapped variable.
  auto log = handle->poll_log();
  REQUIRE(!log.empty());
  std::map<std::string, double> last;
  for (const auto& rec : log) {
    CHECK(rec.value == testsupport::oracle_signal(rec.var, rec.sim_t));
    last[rec.var] = rec.value;
  }
  std::lock_guard<std::mutex> lock(mu);
  CHECK(store.at("Telemetry.temp") == last.at("temp"));
  CHECK(store.at("Telemetry.rpm") == last.at("rpm"));
  // Freshness: polls are spaced by roughly the interval; the newest poll is
  // within two intervals (in sim time) of the simulator clock.
  double newest = log.back().sim_t;
  CHECK(sim.sim_now() - newest <= 2 * opts.poll_interval_s * 20.0 + 1.0);
}

TEST_CASE("sync: twin rule engages cooling only after the trigger held") {
  Simulator sim(SimConfig{0, 0, 20.0});
  sim.start();
  fixtures::FixtureOptions opts;
  opts.sim_port = sim.port();
  opts.poll_interval_s = 0.03;
  model::AasPackage pkg = fixtures::make_level_package(2, opts);

  auto handle = start_sync(pkg, *pkg.sync_config,
                           classify::RuntimeStrategy::ServerHosted,
                           [](const std::string&, double, double) {});
  bool cooled = false;
  for (int i = 0; i < 400 && !cooled; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
    cooled = sim.cooling() == 1.0;
  }
  handle->stop();
  REQUIRE(cooled);

  // Soundness: a firing exists, and recomputing the windowed mean over the
  // last four logged polls of temp at the firing time exceeds the threshold.
  auto fires = handle->fire_log();
  REQUIRE(!fires.empty());
  auto log = handle->poll_log();
  std::vector<double> temps;
  for (const auto& rec : log) {
    if (rec.var != "temp") continue;
    temps.push_back(rec.value);
    if (rec.sim_t == fires.front().sim_t && temps.size() >= 4) {
      double mean = testsupport::oracle_mean(
          {temps.end() - 4, temps.end()});
      CHECK(mean > 24.0);
      CHECK(mean == fires.front().observed);
    }
  }
  // The generator only exceeds the threshold inside the arcsine window, so
  // the firing time must fall in it (mod one 60 s period).
  auto crossing = testsupport::oracle_temp_crossing(24.0);
  double phase = std::fmod(fires.front().sim_t, 60.0);
  CHECK(phase >= crossing.rise);
  CHECK(phase <= crossing.fall + 4 * opts.poll_interval_s * 20.0);
}

TEST_CASE("sync: passive strategy and unreachable endpoints") {
  fixtures::FixtureOptions opts;
  opts.sim_port = 9;  // discard port: nothing listens
  model::AasPackage pkg = fixtures::make_level_package(1, opts);
  CHECK(code_of([&] {
          start_sync(pkg, *pkg.sync_config, classify::RuntimeStrategy::Passive,
                     {});
        }) == ErrorCode::StrategyForbidsSync);
  CHECK(code_of([&] {
          start_sync(pkg, *pkg.sync_config,
                     classify::RuntimeStrategy::ServerHosted, {});
        }) == ErrorCode::EndpointUnreachable);
}
