#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "lsa/error.hpp"
#include "lsa/metrics.hpp"

using namespace lsa;
using namespace lsa::metrics;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("lsa_test_metrics_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

MetricsRecord sample_record(std::int64_t t) {
  sched::Scheduler s(sched::ScheduleConfig{}, 3);
  GoalStorage g(3);
  Rng rng(static_cast<std::uint64_t>(t));
  for (int i = 0; i < 10; ++i) g.insert(Observation::Constant(2, i), i % 2);
  s.refresh(0, g.proportions());
  for (int i = 0; i < 20; ++i) s.record_outcome(s.draw_instruction(rng), i % 3 == 0);
  g.sample_composed_batch(std::vector<int>{3, 3, 2}, rng);
  return snapshot_record(t, s, g, std::nullopt);
}

}  // namespace

TEST(SampleRichness, Values) {
  EXPECT_EQ(sample_richness(120, 60), 2.0);
  EXPECT_FALSE(sample_richness(5, 0).has_value());
  EXPECT_FALSE(sample_richness(0, 0).has_value());
}

TEST(Sei, DigitizedPairIsExactly490) {
  const std::vector<CurvePoint> a3c{{1.0e6, 30.0}, {1.96e6, 45.0}, {2.0e6, 45.0}};
  const std::vector<CurvePoint> lsa{{0.2e6, 40.0}, {0.40e6, 45.0}, {2.0e6, 45.0}};
  const auto v = sei(a3c, lsa);
  ASSERT_TRUE(v.has_value());
  EXPECT_EQ(*v, 490.0);
}

TEST(Sei, IdenticalCurvesGive100AndFlatBaselineIsUndefined) {
  const std::vector<CurvePoint> c{{10, 0.1}, {20, 0.4}, {30, 0.3}};
  EXPECT_EQ(sei(c, c), 100.0);
  const std::vector<CurvePoint> flat{{10, 0.0}, {20, 0.0}};
  EXPECT_FALSE(sei(flat, c).has_value());
}

TEST(CumulativeRatio, UniformWhenEmpty) {
  EXPECT_EQ(cumulative_ratio(std::vector<std::int64_t>{0, 0}), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(cumulative_ratio(std::vector<std::int64_t>{1, 3}), (std::vector<double>{0.25, 0.75}));
}

TEST(SnapshotRecord, FieldsAreConsistent) {
  const auto r = sample_record(50);
  EXPECT_EQ(r.update, 50);
  // Target 2 has no entries, so its quota of 2 is split over targets 0 and 1.
  EXPECT_EQ(r.k, (std::vector<std::int64_t>{4, 4, 0}));
  EXPECT_EQ(r.M, (std::vector<std::int64_t>{5, 5, 0}));
  EXPECT_DOUBLE_EQ(r.d[0], 0.5);
  EXPECT_DOUBLE_EQ(r.d[2], 0.0);
  EXPECT_EQ(r.richness[0], 5.0 / 4.0);
  EXPECT_FALSE(r.richness[2].has_value());
  for (const auto* v : {&r.d, &r.B, &r.A, &r.query_cum, &r.sample_cum}) {
    double s = 0.0;
    for (double x : *v) s += x;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Evaluate, OraclePolicySucceedsEverywhere) {
  auto c = fixtures::tiny_env();
  c.time_limit = 100;
  const auto s = evaluate_policy(c, 500, 1, [&c](const env::EpisodeState& st, const Observation&, Rng&) {
    return env::oracle_action(c, st);
  });
  EXPECT_EQ(s.overall, 1.0);
  EXPECT_EQ(s.total_episodes, 500);
  int total = 0;
  for (int e : s.episodes) total += e;
  EXPECT_EQ(total, 500);
}

TEST(Evaluate, RandomPolicyOnCalibratedMapShowsGap) {
  env::EnvConfig c;
  c.hard_min_dist = 7;  // calibrated value for the default 15x15 map
  const auto s = evaluate_policy(c, 40'000, 2, [](const env::EpisodeState&, const Observation&, Rng& rng) {
    return env::random_action(rng);
  });
  const double normal = (s.per_target[0] * s.episodes[0] + s.per_target[1] * s.episodes[1]) /
                        (s.episodes[0] + s.episodes[1]);
  const double hard = (s.per_target[2] * s.episodes[2] + s.per_target[3] * s.episodes[3]) /
                      (s.episodes[2] + s.episodes[3]);
  EXPECT_GT(hard, 0.0);
  EXPECT_GE(normal, 10.0 * hard);
}

TEST(Evaluate, DeterministicAndReadOnly) {
  const auto p = fixtures::noisy_params(3);
  const auto before = p.values();
  const auto a = evaluate(p, fixtures::tiny_env(), 200, 9);
  const auto b = evaluate(p, fixtures::tiny_env(), 200, 9);
  EXPECT_EQ(a, b);
  EXPECT_EQ(p.values(), before);
}

TEST(ValueProbe, ClampsToAvailableEntriesAndIsReadOnly) {
  const auto p = fixtures::noisy_params(4);
  GoalStorage g(3);
  Rng rng(1);
  std::vector<Observation> stored;
  for (int i = 0; i < 3; ++i) {
    stored.push_back(fixtures::random_obs(rng, p.shape().obs_size));
    g.insert(stored.back(), 1);
  }
  const auto hash = g.content_hash();
  const auto before = p.values();
  const auto probe = value_probe(p, g, 10);
  EXPECT_FALSE(probe[0].has_value());
  ASSERT_TRUE(probe[1].has_value());
  double mean = 0.0;
  for (const auto& o : stored) mean += learn::forward(p, o, 1).value;
  EXPECT_NEAR(*probe[1], mean / 3.0, 1e-12);
  EXPECT_EQ(g.content_hash(), hash);
  EXPECT_EQ(p.values(), before);
}

TEST(ValueProbe, ZeroValueHeadGivesZero) {
  auto p = learn::ParamSet::initialize(fixtures::tiny_shape(), 1);
  GoalStorage g(3);
  Rng rng(1);
  for (int x = 0; x < 3; ++x) g.insert(fixtures::random_obs(rng, p.shape().obs_size), x);
  for (const auto& v : value_probe(p, g)) EXPECT_EQ(v, 0.0);
}

TEST(Export, EmptyCsvIsHeaderOnly) {
  const auto dir = temp_dir("empty");
  export_records({}, dir / "m.csv", Format::Csv);
  std::ifstream in(dir / "m.csv");
  std::stringstream text;
  text << in.rdbuf();
  EXPECT_EQ(text.str(), std::string(kCsvHeader) + "\n");
}

TEST(Export, JsonlRoundTrip) {
  const auto dir = temp_dir("roundtrip");
  std::vector<MetricsRecord> records{sample_record(50), sample_record(100)};
  records[1].wallclock_s = 1.25;
  export_records(records, dir / "m.jsonl", Format::Jsonl);
  EXPECT_EQ(read_jsonl(dir / "m.jsonl"), records);
}

TEST(Export, CsvRowsAndUndefinedCells) {
  const auto dir = temp_dir("csv");
  const auto r = sample_record(50);
  export_records(std::vector<MetricsRecord>{r}, dir / "m.csv", Format::Csv);
  std::ifstream in(dir / "m.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, kCsvHeader);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 12);
    EXPECT_EQ(line.back(), ',');  // wallclock undefined -> empty final cell
    EXPECT_EQ(line.rfind("50,", 0), 0u);
  }
  EXPECT_EQ(rows, 3);
}

TEST(Export, UnwritablePathReportsPath) {
  try {
    export_records({}, "/nonexistent-dir/x.csv", Format::Csv);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/x.csv"), std::string::npos);
  }
  EXPECT_THROW(parse_format("xml"), UsageError);
}
