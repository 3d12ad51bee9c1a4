#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "dtlearn/learners.hpp"

namespace dtl {

// Per-run phase ceilings; a run exceeding any of them marks its cell
// "capacity" instead of failed.
struct PhaseBudget {
  uint64_t design = UINT64_MAX;
  uint64_t binary = UINT64_MAX;
  uint64_t interp = UINT64_MAX;
  uint64_t km = UINT64_MAX;
  uint64_t var_id = UINT64_MAX;
};

struct ExperimentConfig {
  std::vector<Algo> algos;
  std::vector<int> n_grid;
  std::vector<int> d_grid;
  int trials = 1;
  double delta = 1.0 / 16;
  uint64_t seed = 1;
  int threads = 1;
  // Wall time goes into runtime_ms only when set; otherwise the CSV carries
  // 0 there and the times go to a sidecar, keeping records byte-stable.
  bool record_runtime = false;
  std::string csv_path;
  std::string table_path;
  std::string plot_dir;
  PhaseBudget budget;
  std::map<Algo, double> success_threshold{{Algo::Det, 1.0}, {Algo::Rand, 0.7},
                                           {Algo::Km, 0.9}};
};

// JSON mirror of ExperimentConfig; throws ValidationError on bad fields.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
// Grids non-empty, trials >= 1, budgets positive, every cell has 2^d <= n.
void validate_config(const ExperimentConfig& cfg);

struct Record {
  std::string algo;
  int n = 0;
  int d = 0;
  uint64_t seed = 0;
  int trial = 0;
  bool success = false;
  uint64_t raw_queries = 0;
  uint64_t dedup_queries = 0;
  PhaseCounts phases;
  double runtime_ms = 0;
};

struct CellSummary {
  std::string algo;
  int n = 0;
  int d = 0;
  int trials = 0;
  int successes = 0;
  bool capacity = false;
  double mean_raw = 0;
  uint64_t max_raw = 0;
  double mean_dedup = 0;
  uint64_t max_dedup = 0;
  // Reference expressions from realized design sizes, worst run of the cell;
  // -1 when the algorithm has no such phase.
  double ref_find_relevant = -1;  // 2|S| + V(f) ceil(log n)
  double ref_learn_mp = -1;       // |Z| * zero-test invocations
  double ref_var_id = -1;         // V(f) ceil(log n)
  int ref_violations = 0;         // runs whose measured phase exceeds its reference
  bool meets_threshold = false;
};

struct BoundTable {
  std::vector<CellSummary> cells;
  uint64_t records_checksum = 0;  // FNV-1a of the CSV text
};

struct ExperimentResult {
  std::vector<Record> records;
  BoundTable table;
  std::vector<double> wall_ms;  // per record, same order
  bool all_cells_pass() const;
};

// Target trees depend on (n, d, trial) only, so algorithms share instances;
// the learner seed additionally mixes in the algorithm.
uint64_t trial_seed(uint64_t seed, const std::string& cell, int trial);
DecisionTree instance_tree(uint64_t seed, int n, int d, int trial);

ExperimentResult run_experiment(const ExperimentConfig& cfg);
// Writes csv_path (+ ".timing" sidecar), table_path and plots when set.
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& res);

std::string records_to_csv(const std::vector<Record>& records);
std::vector<Record> records_from_csv(const std::string& text);
uint64_t fnv1a(const std::string& bytes);

// Recomputes the per-cell aggregates (without reference columns) from raw
// records; used to check a stored table against its CSV.
std::vector<CellSummary> aggregate(const std::vector<Record>& records);
void write_table(std::ostream& out, const BoundTable& table);

// queries_vs_n.svg and queries_vs_d.svg in dir; returns the paths written.
std::vector<std::string> emit_plots(const std::vector<Record>& records,
                                    const std::string& dir);

}  // namespace dtl
