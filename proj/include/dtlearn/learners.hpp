#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "dtlearn/core.hpp"
#include "dtlearn/fourier.hpp"
#include "dtlearn/mp.hpp"
#include "dtlearn/relevance.hpp"

namespace dtl {

enum class HypothesisForm { Mp, Dft };

// Learned function over local variables 1..N, where local k stands for
// original variable names[k-1]. Exactly one of mp / dft is meaningful.
struct Hypothesis {
  HypothesisForm form = HypothesisForm::Mp;
  int n = 0;
  std::vector<int> names;
  MultivariatePoly mp;
  SparseDFT dft;

  int local_arity() const { return static_cast<int>(names.size()); }
  bool eval(const Assignment& x) const;
  // Canonical polynomial over the original n variables. Exact; needs at most
  // 20 distinct names.
  MultivariatePoly to_mp() const;
};

struct PhaseCounts {
  uint64_t design = 0;
  uint64_t binary = 0;
  uint64_t interp = 0;
  uint64_t km = 0;
  uint64_t var_id = 0;
  uint64_t total() const { return design + binary + interp + km + var_id; }
};

struct RunReport {
  std::string algo;
  int n = 0;
  int d = 0;
  uint64_t seed = 0;
  bool success = false;
  uint64_t raw_queries = 0;
  uint64_t dedup_queries = 0;
  PhaseCounts phases;
  double wall_ms = 0;
  // Learner-specific measurements: relevant count, design sizes, KM level
  // maxima, estimator anomalies.
  std::vector<std::pair<std::string, double>> extra;

  void note(std::string key, double value) { extra.emplace_back(std::move(key), value); }
};

// "key: value" lines.
void write_report(std::ostream& out, const RunReport& r);

struct LearnResult {
  Hypothesis h;
  RunReport report;
};

// Find-Relevant, then Learn-MP on the relevant coordinates with every other
// coordinate held at zero.
LearnResult deterministic_learn(MembershipOracle& f, int n, int d);

struct ReductionOptions {
  double delta = 1.0 / 16;
  uint64_t seed = 1;
  // Re-evaluates every projected query on its translated n-bit point.
  bool check_translation = false;
};

// Projection onto m = 8 * 4^d variables, KM on the projected function, then a
// nonadaptive search to name each relevant projected variable.
LearnResult randomized_reduction_learn(MembershipOracle& f, int n, int d,
                                       const ReductionOptions& opts = {});

// KM with the sampled estimator run directly on the n-variable target.
LearnResult km_direct_learn(MembershipOracle& f, int n, int d, double delta,
                            uint64_t seed);

// Runs a learner on g for coordinate i while asking every query a also at
// a with y_i replaced by y_1 (y_1 by y_2 when i = 1); a disagreement is a
// witness. Variables never caught in `repeats` runs are declared irrelevant.
using BaseLearner = std::function<void(Oracle&, Rng&)>;
RelevantSet witnesses_via_equivalence(Oracle& g, const BaseLearner& learner,
                                      int repeats, Rng& rng);
// Sampled-KM base learner for targets of depth d.
BaseLearner km_base_learner(int d, double delta);

bool verify_hypothesis(const Hypothesis& h, const DecisionTree& target);

enum class Algo { Det, Rand, Km };
Algo parse_algo(const std::string& name);
std::string algo_name(Algo a);

}  // namespace dtl
