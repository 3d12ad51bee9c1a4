#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dtlearn/harness.hpp"

using namespace dtl;

namespace {

ExperimentConfig small_det() {
  ExperimentConfig cfg;
  cfg.algos = {Algo::Det};
  cfg.n_grid = {16};
  cfg.d_grid = {2};
  cfg.trials = 5;
  cfg.seed = 7;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Harness, SingleDetCell) {
  auto res = run_experiment(small_det());
  ASSERT_EQ(res.records.size(), 5u);
  ASSERT_EQ(res.table.cells.size(), 1u);
  const auto& c = res.table.cells[0];
  EXPECT_EQ(c.successes, 5);
  EXPECT_FALSE(c.capacity);
  EXPECT_TRUE(c.meets_threshold);
  EXPECT_EQ(c.ref_violations, 0);
  EXPECT_GT(c.ref_find_relevant, 0);
  EXPECT_LT(c.ref_var_id, 0);
  for (const auto& r : res.records) {
    EXPECT_EQ(r.phases.total(), r.raw_queries);
    EXPECT_LE(r.dedup_queries, r.raw_queries);
  }
  EXPECT_TRUE(res.all_cells_pass());
}

TEST(Harness, SameSeedSameBytes) {
  auto cfg = small_det();
  cfg.algos = {Algo::Det, Algo::Km};
  cfg.n_grid = {8, 16};
  cfg.trials = 2;
  auto a = run_experiment(cfg);
  cfg.threads = 2;
  auto b = run_experiment(cfg);
  EXPECT_EQ(records_to_csv(a.records), records_to_csv(b.records));
  std::ostringstream ta, tb;
  write_table(ta, a.table);
  write_table(tb, b.table);
  EXPECT_EQ(ta.str(), tb.str());
  cfg.seed = 8;
  EXPECT_NE(records_to_csv(run_experiment(cfg).records), records_to_csv(a.records));
}

TEST(Harness, SharedInstancesAcrossAlgorithms) {
  auto t1 = instance_tree(3, 32, 2, 4);
  auto t2 = instance_tree(3, 32, 2, 4);
  EXPECT_EQ(dt_to_mp(t1), dt_to_mp(t2));
  EXPECT_NE(trial_seed(3, "det:n=32,d=2", 4), trial_seed(3, "rand:n=32,d=2", 4));
}

TEST(Harness, ConfigValidation) {
  EXPECT_THROW(parse_config(R"({"algos":["det"],"n":[8],"d":[4],"trials":1})"),
               ValidationError);
  EXPECT_THROW(parse_config(R"({"algos":["det"],"n":[],"d":[1]})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"algos":["det"],"n":[8],"d":[1],"trials":0})"),
               ValidationError);
  EXPECT_THROW(parse_config(R"({"algos":["nope"],"n":[8],"d":[1]})"), ValidationError);
  EXPECT_THROW(parse_config(R"({"algos":["det"],"n":[8],"d":[1],"budget":{"km":0}})"),
               ValidationError);
  EXPECT_THROW(parse_config(R"({"algos":["det"],"n":[8],"d":[1],"extra":1})"),
               ValidationError);
  EXPECT_THROW(parse_config("{"), ValidationError);
  auto cfg = parse_config(
      R"({"algos":["det","rand"],"n":[16,32],"d":[1,2],"trials":3,"seed":9,
          "budget":{"design":1000},"thresholds":{"rand":0.5}})");
  EXPECT_EQ(cfg.algos.size(), 2u);
  EXPECT_EQ(cfg.trials, 3);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.budget.design, 1000u);
  EXPECT_DOUBLE_EQ(cfg.success_threshold.at(Algo::Rand), 0.5);
}

TEST(Harness, BudgetMarksCapacity) {
  auto cfg = small_det();
  cfg.trials = 1;
  cfg.budget.design = 1;
  auto res = run_experiment(cfg);
  EXPECT_TRUE(res.table.cells[0].capacity);
  EXPECT_TRUE(res.table.cells[0].meets_threshold);
}

TEST(Harness, CsvRoundTripAndAggregate) {
  auto cfg = small_det();
  cfg.algos = {Algo::Det, Algo::Km};
  cfg.trials = 3;
  auto res = run_experiment(cfg);
  const std::string csv = records_to_csv(res.records);
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "algo,n,d,seed,trial,success,raw_queries,dedup_queries,phase_design,"
            "phase_binary,phase_interp,phase_km,phase_var_id,runtime_ms");
  auto parsed = records_from_csv(csv);
  EXPECT_EQ(records_to_csv(parsed), csv);
  EXPECT_EQ(fnv1a(csv), res.table.records_checksum);
  auto cells = aggregate(parsed);
  ASSERT_EQ(cells.size(), res.table.cells.size());
  for (std::size_t k = 0; k < cells.size(); ++k) {
    EXPECT_EQ(cells[k].successes, res.table.cells[k].successes);
    EXPECT_EQ(cells[k].max_raw, res.table.cells[k].max_raw);
    EXPECT_DOUBLE_EQ(cells[k].mean_dedup, res.table.cells[k].mean_dedup);
  }
  EXPECT_THROW(records_from_csv("bad\n"), FormatError);
  EXPECT_THROW(records_from_csv(csv.substr(0, csv.find('\n') + 1) + "det,1,2\n"), FormatError);
}

TEST(Harness, OutputsAndPlots) {
  const auto dir = std::filesystem::temp_directory_path() / "dtlearn_harness_test";
  std::filesystem::remove_all(dir);
  auto cfg = small_det();
  cfg.trials = 2;
  cfg.csv_path = (dir / "r.csv").string();
  cfg.table_path = (dir / "t.txt").string();
  cfg.plot_dir = (dir / "plots").string();
  auto res = run_experiment(cfg);
  write_outputs(cfg, res);
  EXPECT_EQ(slurp(cfg.csv_path), records_to_csv(res.records));
  EXPECT_TRUE(std::filesystem::exists(cfg.csv_path + ".timing"));
  EXPECT_NE(slurp(cfg.table_path).find("not reproduced"), std::string::npos);
  // Single-cell input still yields both charts.
  const auto n_svg = slurp((dir / "plots" / "queries_vs_n.svg").string());
  EXPECT_NE(n_svg.find("<polyline"), std::string::npos);
  EXPECT_NE(n_svg.find("det"), std::string::npos);
  EXPECT_EQ(n_svg.find("nan"), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir / "plots" / "queries_vs_d.svg"));

  auto recs = res.records;
  recs[0].success = false;
  auto paths = emit_plots(recs, (dir / "fail").string());
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_NE(slurp(paths[0]).find("fail 1/2"), std::string::npos);
  EXPECT_THROW(emit_plots({}, (dir / "none").string()), ValidationError);
  std::filesystem::remove_all(dir);
}
